#include "stash/pipeline.hpp"

#include "stash/error.hpp"

namespace stash {

PipelineResult extract_primitives(const SensorStream& raw, const MovementClassifier& classifier,
                                  const PipelineConfig& config) {
    PipelineResult out;
    out.resampled = resample(raw, config.resample_hz);
    out.gravity = estimate_gravity(out.resampled, config.gravity);
    out.labels = classifier.label_seconds(out.resampled, out.gravity);
    out.movement = aggregate_5s(out.labels);
    out.turns = detect_turns(out.resampled, out.gravity, config.turns);
    out.sequence = merge_streams(out.movement, out.turns);
    return out;
}

namespace {

/// Route events with extra stops sprinkled between segments, so both classes
/// are well represented.
std::vector<RouteEvent> training_route(const TrainingSetOptions& data, Rng& rng) {
    std::vector<RouteEvent> out;
    for (const auto& ev : random_route(data.length, rng)) {
        out.push_back(ev);
        if (ev.kind == RouteEvent::Kind::Straight && rng.bernoulli(data.stop_probability))
            out.push_back({RouteEvent::Kind::Stop, 1 + static_cast<int>(rng.below(4)), 0.0});
    }
    return out;
}

} // namespace

TrainResult train_synthetic_classifier(std::uint64_t seed, const PipelineConfig& config, const TrainOptions& train,
                                       const TrainingSetOptions& data) {
    if (data.recordings < 1) fail(ErrorCode::InvalidArgument, "training needs at least one recording");
    Rng rng(seed);
    FeatureConfig features;
    std::vector<FeatureVector> x;
    std::vector<Motion> y;
    for (int r = 0; r < data.recordings; ++r) {
        const auto events = training_route(data, rng);
        const auto rec = synthesize_recording(events, data.imu, rng.next());
        const auto resampled = resample(rec.stream, config.resample_hz);
        const auto gravity = estimate_gravity(resampled, config.gravity);
        const auto fv = extract_features(resampled, gravity, features);
        const std::size_t n = std::min(fv.size(), rec.second_labels.size());
        x.insert(x.end(), fv.begin(), fv.begin() + static_cast<std::ptrdiff_t>(n));
        y.insert(y.end(), rec.second_labels.begin(), rec.second_labels.begin() + static_cast<std::ptrdiff_t>(n));
    }
    TrainOptions options = train;
    options.seed = mix_seed(seed, options.seed);
    return train_logreg(x, y, features.names, options);
}

MovementClassifier default_classifier(std::uint64_t seed) {
    MovementClassifier c;
    c.model = train_synthetic_classifier(seed).model;
    return c;
}

} // namespace stash
