#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stash/common.hpp"
#include "stash/imu_ingest.hpp"

namespace stash {

struct TurnDetectorConfig {
    /// Rolling heading std that opens a turn (degrees).
    double sigma1_deg = 3.0;
    /// Rolling heading std that bounds a turn's extent (degrees).
    double sigma2_deg = 1.0;
    double window_s = 2.0;
    double granularity_deg = 15.0;
    /// Yaw rates below this (deg/s) are attenuated as drift.
    double highpass_floor_dps = 8.6;
    /// Rolling std of the yaw rate (rad/s) below which the gyro counts as stationary.
    double flatten_std = 0.01;
    /// Exclude samples whose gravity estimate is unstable.
    bool stability_gate = true;

    /// Throws InvalidArgument unless sigma2 < sigma1 and granularity > 0.
    void validate() const;
};

/// Angular rate about the ground (downward gravity) axis, degrees per second.
/// Positive rates are clockwise seen from above, i.e. right turns.
struct YawRateStream {
    std::vector<Timestamp> t;
    std::vector<double> rate_dps;
    std::vector<std::uint8_t> reliable;

    std::size_t size() const { return t.size(); }
};

struct HeadingTrace {
    std::vector<Timestamp> t;
    std::vector<double> alpha_deg;
    std::vector<double> rolling_std_deg;

    std::size_t size() const { return t.size(); }
};

enum class TurnDirection : char { Left = 'L', Right = 'R' };

struct TurnEvent {
    Timestamp t_begin = 0;
    Timestamp t_end = 0;
    double angle_deg = 0.0;
    int count = 0;

    TurnDirection direction() const { return angle_deg < 0 ? TurnDirection::Left : TurnDirection::Right; }
    /// `count` copies of 'L' or 'R'.
    std::string symbols() const;
};

/// Projects each gyro sample onto the downward unit of the gravity estimate.
/// Samples whose gravity is unstable are marked unreliable.
YawRateStream project_to_ground(const SensorStream& stream, const GravityEstimate& gravity);

/// Multiplier applied to a yaw rate below the high-pass floor:
/// exp(|rate|/floor - 1), which is 1 at the floor and 1/e at zero.
double drift_attenuation(double rate_dps, double floor_dps);

/// Zeroes stationary stretches (rolling std under `flatten_std`) and attenuates
/// sub-floor rates as drift.
YawRateStream condition_gyro(const YawRateStream& yaw, const TurnDetectorConfig& config);

/// Rectangle-rule integration from alpha(t0) = 0 with a trailing rolling std.
/// Unreliable samples contribute no rotation when the stability gate is on.
HeadingTrace integrate_heading(const YawRateStream& yaw, const TurnDetectorConfig& config = {});

std::vector<TurnEvent> detect_turns(const HeadingTrace& trace, const TurnDetectorConfig& config = {});

/// project -> condition -> integrate -> detect.
std::vector<TurnEvent> detect_turns(const SensorStream& resampled, const GravityEstimate& gravity,
                                    const TurnDetectorConfig& config = {});

/// One JSON object per line with t_begin_ns, t_end_ns, angle_deg, count and
/// direction ("L"/"R").
std::string turns_to_jsonl(const std::vector<TurnEvent>& turns);
/// Throws ParseError (with line number) on malformed lines.
std::vector<TurnEvent> parse_turns_jsonl(const std::string& text);

/// Population standard deviation over the trailing window ending at each index;
/// the window holds samples with t_i - t_j < window.
std::vector<double> rolling_std(const std::vector<Timestamp>& t, const std::vector<double>& values,
                                Timestamp window);

} // namespace stash
