#include "stash/imu_ingest.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "text_util.hpp"

namespace stash {

namespace {

constexpr std::string_view kCsvHeader = "t_ns,ax,ay,az,gx,gy,gz";
constexpr std::array<const char*, 6> kAxisKeys = {"ax", "ay", "az", "gx", "gy", "gz"};

ImuSample from_values(Timestamp t, const std::array<double, 6>& v) {
    return ImuSample{t, Vec3{v[0], v[1], v[2]}, Vec3{v[3], v[4], v[5]}};
}

ImuSample parse_csv_row(std::string_view line, std::size_t line_no) {
    const auto fields = detail::split(line, ',');
    if (fields.size() != 7)
        fail(ErrorCode::ParseError, "expected 7 comma-separated fields, got " + std::to_string(fields.size()),
             line_no);
    Timestamp t = 0;
    if (!detail::parse_int(fields[0], t)) fail(ErrorCode::ParseError, "bad timestamp", line_no);
    std::array<double, 6> v{};
    for (std::size_t i = 0; i < 6; ++i) {
        if (!detail::parse_double(fields[i + 1], v[i]))
            fail(ErrorCode::ParseError, "bad number in column " + std::to_string(i + 2), line_no);
        if (!std::isfinite(v[i])) fail(ErrorCode::ParseError, "non-finite value", line_no);
    }
    return from_values(t, v);
}

ImuSample parse_jsonl_row(std::string_view line, std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, e.what(), line_no);
    }
    if (!j.is_object() || !j.contains("t_ns") || !j["t_ns"].is_number_integer())
        fail(ErrorCode::ParseError, "missing integer t_ns", line_no);
    std::array<double, 6> v{};
    for (std::size_t i = 0; i < 6; ++i) {
        const auto it = j.find(kAxisKeys[i]);
        // nlohmann serializes NaN as null; treat it as the invariant violation it is.
        if (it == j.end() || !it->is_number())
            fail(ErrorCode::ParseError, std::string("missing or non-numeric ") + kAxisKeys[i], line_no);
        v[i] = it->get<double>();
        if (!std::isfinite(v[i])) fail(ErrorCode::ParseError, "non-finite value", line_no);
    }
    return from_values(j["t_ns"].get<Timestamp>(), v);
}

} // namespace

RecordingFormat format_for(const std::filesystem::path& path) {
    return path.extension() == ".jsonl" ? RecordingFormat::Jsonl : RecordingFormat::Csv;
}

SensorStream parse_recording(std::istream& in, RecordingFormat format) {
    SensorStream stream;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        if (format == RecordingFormat::Csv && stream.samples.empty() && trimmed == kCsvHeader) continue;
        const ImuSample s = format == RecordingFormat::Csv ? parse_csv_row(trimmed, line_no)
                                                           : parse_jsonl_row(trimmed, line_no);
        if (!stream.samples.empty() && s.t <= stream.samples.back().t)
            fail(ErrorCode::OrderError, "timestamp does not increase", line_no);
        stream.samples.push_back(s);
    }
    if (stream.samples.size() >= 2)
        stream.rate_hz = static_cast<double>(stream.samples.size() - 1) / stream.duration_s();
    return stream;
}

SensorStream load_recording(const std::filesystem::path& path, RecordingFormat format) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    return parse_recording(in, format);
}

void write_recording(const SensorStream& stream, std::ostream& out, RecordingFormat format) {
    if (format == RecordingFormat::Csv) {
        out << kCsvHeader << '\n';
        for (const auto& s : stream.samples) {
            out << s.t;
            for (double v : {s.accel.x, s.accel.y, s.accel.z, s.gyro.x, s.gyro.y, s.gyro.z})
                out << ',' << detail::format_double(v);
            out << '\n';
        }
        return;
    }
    for (const auto& s : stream.samples) {
        out << "{\"t_ns\":" << s.t;
        const std::array<double, 6> v = {s.accel.x, s.accel.y, s.accel.z, s.gyro.x, s.gyro.y, s.gyro.z};
        for (std::size_t i = 0; i < 6; ++i) out << ",\"" << kAxisKeys[i] << "\":" << detail::format_double(v[i]);
        out << "}\n";
    }
}

void save_recording(const SensorStream& stream, const std::filesystem::path& path, RecordingFormat format) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    write_recording(stream, out, format);
}

SensorStream resample(const SensorStream& stream, double target_hz) {
    if (!(target_hz > 0.0)) fail(ErrorCode::InvalidArgument, "target rate must be positive");
    if (stream.empty()) fail(ErrorCode::EmptyStream, "cannot resample an empty stream");

    const auto& in = stream.samples;
    const Timestamp t0 = in.front().t;
    const Timestamp t_last = in.back().t;
    const double period_ns = 1e9 / target_hz;

    SensorStream out;
    out.rate_hz = target_hz;
    std::size_t j = 0;
    for (std::int64_t k = 0;; ++k) {
        const Timestamp t = t0 + static_cast<Timestamp>(std::llround(static_cast<double>(k) * period_ns));
        if (t > t_last) break;
        while (j + 1 < in.size() && in[j + 1].t <= t) ++j;
        if (in[j].t == t || j + 1 == in.size()) {
            ImuSample s = in[j];
            s.t = t;
            out.samples.push_back(s);
            continue;
        }
        const auto& a = in[j];
        const auto& b = in[j + 1];
        const double w = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
        out.samples.push_back(ImuSample{t, a.accel + w * (b.accel - a.accel), a.gyro + w * (b.gyro - a.gyro)});
    }
    return out;
}

GravityEstimate estimate_gravity(const SensorStream& stream, const GravityConfig& config) {
    if (stream.empty()) fail(ErrorCode::EmptyStream, "cannot estimate gravity of an empty stream");
    if (!(config.time_constant_s > 0.0) || !(config.fast_time_constant_s > 0.0))
        fail(ErrorCode::InvalidArgument, "filter time constants must be positive");

    const auto& in = stream.samples;
    GravityEstimate est;
    est.gravity.reserve(in.size());
    est.stable.reserve(in.size());

    const double cos_step = std::cos(deg_to_rad(config.step_threshold_deg));
    const Timestamp settle = seconds_to_ns(config.settle_window_s);
    Vec3 slow = in.front().accel;
    Vec3 fast = in.front().accel;
    Timestamp unstable_until = in.front().t;

    for (std::size_t i = 0; i < in.size(); ++i) {
        if (i > 0) {
            const double dt = ns_to_seconds(in[i].t - in[i - 1].t);
            const double a_slow = 1.0 - std::exp(-dt / config.time_constant_s);
            const double a_fast = 1.0 - std::exp(-dt / config.fast_time_constant_s);
            slow += a_slow * (in[i].accel - slow);
            fast += a_fast * (in[i].accel - fast);
        }
        const double ns = slow.norm();
        const double nf = fast.norm();
        const bool step = ns > 0.0 && nf > 0.0 && slow.dot(fast) / (ns * nf) < cos_step;
        if (step) unstable_until = in[i].t + settle;
        est.gravity.push_back(slow);
        est.stable.push_back(in[i].t >= unstable_until ? 1 : 0);
    }
    return est;
}

std::vector<Vec3> linear_acceleration(const SensorStream& stream, const GravityEstimate& gravity) {
    if (stream.size() != gravity.size())
        fail(ErrorCode::LengthMismatch, "accelerometer and gravity streams differ in length");
    std::vector<Vec3> out;
    out.reserve(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) out.push_back(stream.samples[i].accel - gravity.gravity[i]);
    return out;
}

void RingBufferSpec::validate(double longest_path_s) const {
    if (capacity_duration_s < longest_path_s)
        fail(ErrorCode::InvalidArgument, "buffer shorter than the longest reference path");
}

PackedImu pack(const ImuSample& s) {
    return PackedImu{static_cast<float>(s.accel.x), static_cast<float>(s.accel.y), static_cast<float>(s.accel.z),
                     static_cast<float>(s.gyro.x),  static_cast<float>(s.gyro.y),  static_cast<float>(s.gyro.z)};
}

ImuSample unpack(const PackedImu& p, Timestamp t) {
    return ImuSample{t, Vec3{p.ax, p.ay, p.az}, Vec3{p.gx, p.gy, p.gz}};
}

} // namespace stash
