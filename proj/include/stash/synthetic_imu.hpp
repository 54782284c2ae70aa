#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stash/imu_ingest.hpp"
#include "stash/movement_classifier.hpp"
#include "stash/path_model.hpp"
#include "stash/turn_detector.hpp"

namespace stash {

/// Walking-like IMU traces for routes, used for demos, training data and
/// end-to-end tests. The device is held level-ish with z up; accelerometer
/// readings include the +g reaction.
struct ImuSynthConfig {
    double rate_hz = 50.0;
    double gravity = 9.81;
    /// Stationary lead-in before the route starts, seconds.
    double lead_in_s = 5.0;
    double step_hz = 1.9;
    double vertical_amp = 1.6;      ///< m/s^2 bounce while walking
    double lateral_amp = 0.6;       ///< m/s^2 sway while walking
    double accel_noise_moving = 0.35;
    double accel_noise_still = 0.02;
    double gyro_wobble_dps = 6.0;   ///< yaw oscillation amplitude while walking
    double gyro_noise_moving = 0.05; ///< rad/s
    double gyro_noise_still = 0.002; ///< rad/s
    double turn_rate_dps = 60.0;
    double min_turn_s = 1.0;
};

struct SyntheticRecording {
    SensorStream stream;
    /// Ground truth per whole second since the stream start.
    std::vector<Motion> second_labels;
};

SyntheticRecording synthesize_recording(std::span<const RouteEvent> events, const ImuSynthConfig& config,
                                        std::uint64_t seed);

/// Yaw rate profile (deg/s) with turns of the given angles, each centred in a
/// `spacing_s` slot, plus Gaussian noise. Positive angles turn right.
YawRateStream synthesize_yaw_profile(std::span<const double> angles_deg, double rate_hz, double noise_dps,
                                     double turn_duration_s, double spacing_s, std::uint64_t seed);

} // namespace stash
