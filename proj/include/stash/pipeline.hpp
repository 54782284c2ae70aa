#pragma once

#include <cstdint>
#include <vector>

#include "stash/imu_ingest.hpp"
#include "stash/movement_classifier.hpp"
#include "stash/synthetic_imu.hpp"
#include "stash/trajectory.hpp"
#include "stash/turn_detector.hpp"

namespace stash {

struct PipelineConfig {
    double resample_hz = 20.0;
    GravityConfig gravity;
    TurnDetectorConfig turns;
};

struct PipelineResult {
    SensorStream resampled;
    GravityEstimate gravity;
    std::vector<MovementLabel> labels;
    std::vector<Primitive> movement;
    std::vector<TurnEvent> turns;
    /// Merged M/S/L/R stream.
    PrimitiveSequence sequence;
};

/// resample -> gravity -> movement labels and turns -> merged primitives.
PipelineResult extract_primitives(const SensorStream& raw, const MovementClassifier& classifier,
                                  const PipelineConfig& config = {});

struct TrainingSetOptions {
    int recordings = 6;
    RouteLength length{3.0, 5.0};
    double stop_probability = 0.35;
    ImuSynthConfig imu;
};

/// Movement classifier trained on synthetic walks with scripted stops.
TrainResult train_synthetic_classifier(std::uint64_t seed, const PipelineConfig& config = {},
                                       const TrainOptions& train = {}, const TrainingSetOptions& data = {});

MovementClassifier default_classifier(std::uint64_t seed = 7);

} // namespace stash
