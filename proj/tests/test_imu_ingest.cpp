#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "stash/imu_ingest.hpp"
#include "test_util.hpp"

using namespace stash;
using testutil::error_of;

namespace {

SensorStream ramp(std::size_t n, Timestamp step) {
    SensorStream s;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(i);
        s.samples.push_back({static_cast<Timestamp>(i) * step, {v, 2 * v, 9.81}, {0, 0, -v / 10}});
    }
    s.rate_hz = 1e9 / static_cast<double>(step);
    return s;
}

} // namespace

TEST(Recording, CsvRoundTrip) {
    const SensorStream s = ramp(50, 20'000'000);
    std::stringstream buf;
    write_recording(s, buf, RecordingFormat::Csv);
    const SensorStream back = parse_recording(buf, RecordingFormat::Csv);
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(back.samples[i], s.samples[i]);
    EXPECT_NEAR(back.rate_hz, 50.0, 1e-9);
}

TEST(Recording, JsonlRoundTripThroughFile) {
    testutil::TempDir dir("ingest");
    const SensorStream s = ramp(10, 10'000'000);
    const auto path = dir / "walk.jsonl";
    save_recording(s, path, format_for(path));
    EXPECT_EQ(format_for(path), RecordingFormat::Jsonl);
    const SensorStream back = load_recording(path, RecordingFormat::Jsonl);
    EXPECT_EQ(back.samples, s.samples);
}

TEST(Recording, MalformedRowsReportLine) {
    std::istringstream bad("t_ns,ax,ay,az,gx,gy,gz\n0,1,2,3,4,5,6\n5,1,2,x,4,5,6\n");
    try {
        parse_recording(bad, RecordingFormat::Csv);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_EQ(e.line(), 3u);
    }
    std::istringstream short_row("0,1,2,3\n");
    EXPECT_EQ(error_of([&] { parse_recording(short_row, RecordingFormat::Csv); }), ErrorCode::ParseError);
    std::istringstream non_finite("0,1,2,3,4,5,nan\n");
    EXPECT_EQ(error_of([&] { parse_recording(non_finite, RecordingFormat::Csv); }), ErrorCode::ParseError);
    std::istringstream bad_json("{\"t_ns\":0,\"ax\":1}\n");
    EXPECT_EQ(error_of([&] { parse_recording(bad_json, RecordingFormat::Jsonl); }), ErrorCode::ParseError);
}

TEST(Recording, RejectsNonIncreasingTimestamps) {
    std::istringstream in("10,0,0,0,0,0,0\n10,0,0,0,0,0,0\n");
    EXPECT_EQ(error_of([&] { parse_recording(in, RecordingFormat::Csv); }), ErrorCode::OrderError);
}

TEST(Recording, MissingFileIsIoError) {
    EXPECT_EQ(error_of([] { load_recording("/nonexistent/x.csv", RecordingFormat::Csv); }), ErrorCode::IoError);
}

TEST(Resample, ExactGridAndLinearInterpolation) {
    // Irregular input, 0..1 s, accel.x = 10 * t.
    SensorStream s;
    for (Timestamp t : {0LL, 7'000'000LL, 31'000'000LL, 400'000'000LL, 730'000'000LL, 1'000'000'000LL})
        s.samples.push_back({t, {10.0 * ns_to_seconds(t), 0, 0}, {}});
    const SensorStream r = resample(s, 20.0);
    ASSERT_EQ(r.size(), 21u);
    EXPECT_EQ(r.rate_hz, 20.0);
    for (std::size_t k = 0; k < r.size(); ++k) {
        EXPECT_EQ(r.samples[k].t, static_cast<Timestamp>(k) * 50'000'000);
        EXPECT_NEAR(r.samples[k].accel.x, 10.0 * ns_to_seconds(r.samples[k].t), 1e-9);
    }
}

TEST(Resample, DoesNotExtrapolatePastLastSample) {
    const SensorStream s = ramp(4, 30'000'000); // ends at 90 ms
    const SensorStream r = resample(s, 20.0);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_LE(r.samples.back().t, s.samples.back().t);
}

TEST(Resample, InvalidInputs) {
    EXPECT_EQ(error_of([] { resample(SensorStream{}, 20.0); }), ErrorCode::EmptyStream);
    EXPECT_EQ(error_of([] { resample(ramp(3, 1000), 0.0); }), ErrorCode::InvalidArgument);
}

TEST(Gravity, ConvergesToStaticReading) {
    SensorStream s;
    for (int i = 0; i < 400; ++i) s.samples.push_back({i * 50'000'000LL, {0.1, -0.2, 9.81}, {}});
    const auto g = estimate_gravity(s);
    ASSERT_EQ(g.size(), s.size());
    EXPECT_NEAR(g.gravity.back().z, 9.81, 1e-9);
    EXPECT_EQ(g.stable.back(), 1);
    const auto lin = linear_acceleration(s, g);
    EXPECT_NEAR(lin.back().norm(), 0.0, 1e-9);
}

TEST(Gravity, OrientationStepMarksUnstableWindow) {
    GravityConfig cfg;
    SensorStream s;
    for (int i = 0; i < 400; ++i) {
        const Vec3 a = i < 100 ? Vec3{0, 0, 9.81} : Vec3{9.81, 0, 0};
        s.samples.push_back({i * 50'000'000LL, a, {}});
    }
    const auto g = estimate_gravity(s, cfg);
    EXPECT_EQ(g.stable[50], 1);
    EXPECT_EQ(g.stable[110], 0);
    EXPECT_EQ(g.stable.back(), 1);
    EXPECT_NEAR(g.gravity.back().x, 9.81, 1e-3);
}

TEST(Gravity, Errors) {
    EXPECT_EQ(error_of([] { estimate_gravity(SensorStream{}); }), ErrorCode::EmptyStream);
    GravityConfig bad;
    bad.time_constant_s = 0;
    EXPECT_EQ(error_of([&] { estimate_gravity(ramp(3, 1000), bad); }), ErrorCode::InvalidArgument);
    GravityEstimate short_est;
    EXPECT_EQ(error_of([&] { linear_acceleration(ramp(3, 1000), short_est); }), ErrorCode::LengthMismatch);
}

TEST(RingBuffer, OverwritesOldestWhenFull) {
    RingBuffer<int> rb(3);
    for (int i = 1; i <= 5; ++i) rb.push(i);
    EXPECT_EQ(rb.size(), 3u);
    EXPECT_EQ(rb.overwritten(), 2u);
    EXPECT_EQ(rb.snapshot(), (std::vector<int>{3, 4, 5}));
    EXPECT_EQ(rb.at(0), 3);
    EXPECT_EQ(error_of([&] { rb.at(3); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_of([] { RingBuffer<int>(0); }), ErrorCode::InvalidArgument);
}

TEST(RingBuffer, ConcurrentReadersSeeConsistentSnapshots) {
    RingBuffer<int> rb(64);
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::thread reader([&] {
        while (!done) {
            const auto snap = rb.snapshot();
            for (std::size_t i = 1; i < snap.size(); ++i)
                if (snap[i] != snap[i - 1] + 1) ++bad;
        }
    });
    for (int i = 0; i < 100000; ++i) rb.push(i);
    done = true;
    reader.join();
    EXPECT_EQ(bad.load(), 0);
}

TEST(ImuRingBuffer, WindowReconstructsTimestamps) {
    RingBufferSpec spec{1.0, 32};
    ImuRingBuffer<> buf(spec, 20.0);
    EXPECT_EQ(buf.capacity(), 20u);
    EXPECT_EQ(buf.period(), 50'000'000);
    for (int i = 0; i < 30; ++i) buf.push({i * 50'000'000LL, {static_cast<double>(i), 0, 0}, {}});
    const auto all = buf.window(0, 10 * kNanosPerSecond);
    ASSERT_EQ(all.size(), 20u);
    EXPECT_EQ(all.front().t, 10 * 50'000'000LL);
    EXPECT_FLOAT_EQ(static_cast<float>(all.front().accel.x), 10.0f);
    const auto part = buf.window(20 * 50'000'000LL, 22 * 50'000'000LL);
    ASSERT_EQ(part.size(), 3u);
    EXPECT_EQ(part[2].t, 22 * 50'000'000LL);
}

TEST(ImuRingBuffer, RejectsOffGridPushAndOtherPrecisions) {
    ImuRingBuffer<> buf(RingBufferSpec{1.0, 32}, 20.0);
    buf.push({0, {}, {}});
    EXPECT_EQ(error_of([&] { buf.push({60'000'000, {}, {}}); }), ErrorCode::OrderError);
    EXPECT_EQ(error_of([] { ImuRingBuffer<>(RingBufferSpec{1.0, 64}, 20.0); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_of([] { RingBufferSpec{60.0, 32}.validate(120.0); }), ErrorCode::InvalidArgument);
}

TEST(ImuRingBuffer, HourAtTwentyHertzFitsInUnderFiveMegabytes) {
    oracle::AllocationCounter counter;
    {
        ImuRingBuffer<oracle::CountingAllocator<PackedImu>> buf(RingBufferSpec{}, 20.0,
                                                                 oracle::CountingAllocator<PackedImu>(&counter));
        for (int i = 0; i < 1000; ++i) buf.push({i * 50'000'000LL, {}, {}});
        EXPECT_EQ(buf.capacity(), 72000u);
    }
    EXPECT_EQ(counter.peak.load(), 72000u * sizeof(PackedImu));
    EXPECT_LT(counter.peak.load(), 5u * 1024 * 1024);
    EXPECT_EQ(counter.live.load(), 0u);
}
