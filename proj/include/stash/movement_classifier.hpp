#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stash/imu_ingest.hpp"
#include "stash/trajectory.hpp"

namespace stash {

enum class Motion : std::uint8_t { Still = 0, Moving = 1 };

inline Symbol to_symbol(Motion m) { return m == Motion::Moving ? Symbol::Move : Symbol::Still; }

struct MovementLabel {
    Timestamp t = 0;
    Motion label = Motion::Still;

    friend bool operator==(const MovementLabel&, const MovementLabel&) = default;
};

// ---------------------------------------------------------------------------
// Features

/// Every feature the extractor knows, by name. Magnitudes of the 3D
/// accelerometer, gyroscope and gravity vectors unless the name says otherwise;
/// `_long` features use the 5 s window, the rest the 1 s window.
const std::vector<std::string>& all_feature_names();

/// The ten features used by default: the three dominant LR features
/// (ACC_3_std_diff_long, ACC_3_std_diff, GYRO_peak_to_peak_long) plus the
/// seven next-most-important ones from the random-forest ranking.
const std::vector<std::string>& default_feature_names();

struct FeatureConfig {
    std::vector<std::string> names = default_feature_names();
    double short_window_s = 1.0;
    double long_window_s = 5.0;
};

using FeatureVector = std::vector<double>;

/// One feature vector per whole second of input, computed over trailing windows
/// ending at that second's last sample. The long window is clipped at the
/// stream start. Throws InsufficientData if less than one second is available.
std::vector<FeatureVector> extract_features(const SensorStream& resampled, const GravityEstimate& gravity,
                                            const FeatureConfig& config = {});

namespace stats {
double mean(std::span<const double> x);
double variance(std::span<const double> x);
double stddev(std::span<const double> x);
/// Linear-interpolated percentile, q in [0, 100].
double percentile(std::span<const double> x, double q);
double peak_to_peak(std::span<const double> x);
std::vector<double> diff(std::span<const double> x);
} // namespace stats

// ---------------------------------------------------------------------------
// Logistic regression

struct LogRegModel {
    std::vector<std::string> feature_names;
    std::vector<double> weights;
    double bias = 0.0;
    /// Standardization applied before the linear score.
    std::vector<double> mean;
    std::vector<double> scale;
    double noise_level = 0.1;
    bool trained = false;

    /// sigmoid(w . z + b) on standardized features. Throws UntrainedModel.
    double probability(const FeatureVector& x) const;
};

struct TrainOptions {
    /// Std of the input noise, in units of each feature's std.
    double noise_level = 0.1;
    int epochs = 400;
    double learning_rate = 0.5;
    double l2 = 1e-4;
    int folds = 5;
    std::uint64_t seed = 7;
};

struct CrossValidation {
    double accuracy = 0.0;
    double moving_recall = 0.0;
    double still_recall = 0.0;
    int folds = 0;
};

struct TrainResult {
    LogRegModel model;
    CrossValidation cv;
};

/// Gradient-descent fit with noise injection, reported through stratified
/// k-fold cross-validation; the returned model is refit on all data.
/// Throws DegenerateLabels unless both classes are present.
TrainResult train_logreg(const std::vector<FeatureVector>& features, const std::vector<Motion>& labels,
                         const std::vector<std::string>& feature_names, const TrainOptions& options = {});

/// Threshold 0.5; a probability of exactly 0.5 is Moving.
std::vector<Motion> predict_sequence(const LogRegModel& model, const std::vector<FeatureVector>& features);

// ---------------------------------------------------------------------------
// HMM smoothing

struct HmmParams {
    double emit_moving = 0.98;     ///< P(obs = M | state = M)
    double emit_still = 0.92;      ///< P(obs = S | state = S)
    double stay_moving = 0.99;     ///< P(M -> M)
    double stay_still = 0.99;      ///< P(S -> S)
    double initial_moving = 0.5;

    void validate() const;
    /// log P(obs | state), log P(to | from), log P(state at t0).
    double log_emission(Motion state, Motion obs) const;
    double log_transition(Motion from, Motion to) const;
    double log_initial(Motion state) const;
};

/// Most likely hidden state sequence, computed in the log domain. At each step
/// a predecessor other than the current state wins only if strictly better;
/// a final tie resolves to Moving.
std::vector<Motion> viterbi_smooth(std::span<const Motion> observations, const HmmParams& params = {});

/// Majority vote per consecutive block of `block` labels (the final partial
/// block votes over its own length); ties go to Moving.
std::vector<Motion> aggregate_blocks(std::span<const Motion> labels, std::size_t block = 5);

/// `aggregate_blocks` with timestamps: one M/S primitive per block, stamped
/// with the block's first label time.
std::vector<Primitive> aggregate_5s(std::span<const MovementLabel> labels);

// ---------------------------------------------------------------------------
// End-to-end

struct MovementClassifier {
    LogRegModel model;
    HmmParams hmm;
    FeatureConfig features;

    /// Smoothed per-second labels for a resampled stream.
    std::vector<MovementLabel> label_seconds(const SensorStream& resampled, const GravityEstimate& gravity) const;
    /// One M/S primitive per 5 s.
    std::vector<Primitive> classify(const SensorStream& resampled, const GravityEstimate& gravity) const;
};

void save_classifier(const MovementClassifier& classifier, const std::filesystem::path& path);
MovementClassifier load_classifier(const std::filesystem::path& path);
std::string classifier_to_json(const MovementClassifier& classifier);
MovementClassifier classifier_from_json(const std::string& text);

} // namespace stash
