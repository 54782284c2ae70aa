#include "stash/synthetic_imu.hpp"

#include <cmath>
#include <numbers>

#include "stash/error.hpp"

namespace stash {

namespace {

/// Raised-cosine rate pulse with unit area over [0, duration].
double pulse(double t, double duration) {
    if (t < 0.0 || t > duration) return 0.0;
    return (1.0 - std::cos(2.0 * std::numbers::pi * t / duration)) / duration;
}

struct Segment {
    double start_s;
    double end_s;
    bool moving;
    double angle_deg; // non-zero for turns
};

} // namespace

SyntheticRecording synthesize_recording(std::span<const RouteEvent> events, const ImuSynthConfig& config,
                                        std::uint64_t seed) {
    if (!(config.rate_hz > 0.0)) fail(ErrorCode::InvalidArgument, "sample rate must be positive");
    std::vector<Segment> segments;
    double t = 0.0;
    if (config.lead_in_s > 0.0) {
        segments.push_back({0.0, config.lead_in_s, false, 0.0});
        t = config.lead_in_s;
    }
    for (const auto& ev : events) {
        const double len = 5.0 * ev.blocks;
        segments.push_back({t, t + len, ev.kind != RouteEvent::Kind::Stop,
                            ev.kind == RouteEvent::Kind::Turn ? ev.angle_deg : 0.0});
        t += len;
    }
    const double total_s = t;

    Rng rng(seed);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    SyntheticRecording rec;
    rec.stream.rate_hz = config.rate_hz;
    const auto n = static_cast<std::size_t>(std::floor(total_s * config.rate_hz));
    rec.stream.samples.reserve(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ts = static_cast<double>(i) / config.rate_hz;
        while (seg + 1 < segments.size() && ts >= segments[seg].end_s) ++seg;
        const Segment& s = segments[seg];

        ImuSample sample;
        sample.t = seconds_to_ns(ts);
        double yaw_dps = 0.0;
        if (s.moving) {
            const double w = 2.0 * std::numbers::pi * config.step_hz * ts + phase;
            sample.accel = {config.lateral_amp * std::sin(w / 2.0) + rng.normal(0.0, config.accel_noise_moving),
                            0.3 * config.lateral_amp * std::cos(w) + rng.normal(0.0, config.accel_noise_moving),
                            config.gravity + config.vertical_amp * std::sin(w) +
                                rng.normal(0.0, config.accel_noise_moving)};
            yaw_dps = config.gyro_wobble_dps * std::sin(w / 2.0);
            sample.gyro = {rng.normal(0.0, config.gyro_noise_moving) + 0.2 * std::sin(w),
                           rng.normal(0.0, config.gyro_noise_moving) + 0.15 * std::cos(w),
                           rng.normal(0.0, config.gyro_noise_moving)};
        } else {
            sample.accel = {rng.normal(0.0, config.accel_noise_still), rng.normal(0.0, config.accel_noise_still),
                            config.gravity + rng.normal(0.0, config.accel_noise_still)};
            sample.gyro = {rng.normal(0.0, config.gyro_noise_still), rng.normal(0.0, config.gyro_noise_still),
                           rng.normal(0.0, config.gyro_noise_still)};
        }
        if (s.angle_deg != 0.0) {
            const double duration = std::max(config.min_turn_s, std::abs(s.angle_deg) / config.turn_rate_dps);
            const double mid = (s.start_s + s.end_s) / 2.0;
            yaw_dps += s.angle_deg * pulse(ts - (mid - duration / 2.0), duration);
        }
        // Rotation about the downward axis; z points up, so a right turn is negative z.
        sample.gyro.z -= deg_to_rad(yaw_dps);
        rec.stream.samples.push_back(sample);
    }

    const auto seconds = static_cast<std::size_t>(std::floor(total_s));
    seg = 0;
    for (std::size_t k = 0; k < seconds; ++k) {
        const double mid = static_cast<double>(k) + 0.5;
        while (seg + 1 < segments.size() && mid >= segments[seg].end_s) ++seg;
        rec.second_labels.push_back(segments[seg].moving ? Motion::Moving : Motion::Still);
    }
    return rec;
}

YawRateStream synthesize_yaw_profile(std::span<const double> angles_deg, double rate_hz, double noise_dps,
                                     double turn_duration_s, double spacing_s, std::uint64_t seed) {
    if (!(rate_hz > 0.0) || !(turn_duration_s > 0.0) || !(spacing_s > turn_duration_s))
        fail(ErrorCode::InvalidArgument, "invalid yaw profile parameters");
    Rng rng(seed);
    YawRateStream out;
    const double total = spacing_s * static_cast<double>(angles_deg.size() + 1);
    const auto n = static_cast<std::size_t>(std::floor(total * rate_hz));
    for (std::size_t i = 0; i < n; ++i) {
        const double ts = static_cast<double>(i) / rate_hz;
        double rate = rng.normal(0.0, noise_dps);
        for (std::size_t k = 0; k < angles_deg.size(); ++k) {
            const double start = spacing_s * static_cast<double>(k + 1) - turn_duration_s / 2.0;
            rate += angles_deg[k] * pulse(ts - start, turn_duration_s);
        }
        out.t.push_back(seconds_to_ns(ts));
        out.rate_dps.push_back(rate);
        out.reliable.push_back(1);
    }
    return out;
}

} // namespace stash
