#include "stash/movement_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace stash {

// ---------------------------------------------------------------------------
// stats

namespace stats {

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return acc / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

double percentile(std::span<const double> x, double q) {
    if (x.empty()) return 0.0;
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double peak_to_peak(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return *hi - *lo;
}

std::vector<double> diff(std::span<const double> x) {
    std::vector<double> out;
    if (x.size() < 2) return out;
    out.reserve(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i) out.push_back(x[i] - x[i - 1]);
    return out;
}

} // namespace stats

// ---------------------------------------------------------------------------
// features

namespace {

struct Windows {
    std::span<const double> acc, acc_long;
    std::span<const double> gyro, gyro_long;
    std::span<const double> grav_long;
    std::array<std::span<const double>, 3> axes, axes_long;
    double rate_hz;
};

using FeatureFn = std::function<double(const Windows&)>;

double diff_std(std::span<const double> x) {
    const auto d = stats::diff(x);
    return stats::stddev(d);
}

double axes_diff_std(const std::array<std::span<const double>, 3>& axes) {
    return diff_std(axes[0]) + diff_std(axes[1]) + diff_std(axes[2]);
}

/// Lag (seconds) and value of the strongest normalized autocorrelation with a
/// lag between 0.1 s and 2 s.
std::pair<double, double> autocorrelation_peak(std::span<const double> x, double rate_hz) {
    const std::size_t min_lag = static_cast<std::size_t>(std::ceil(0.1 * rate_hz - 1e-9));
    const std::size_t max_lag = std::min(static_cast<std::size_t>(std::llround(2.0 * rate_hz)),
                                         x.size() > 0 ? x.size() - 1 : 0);
    const double m = stats::mean(x);
    double denom = 0.0;
    for (double v : x) denom += (v - m) * (v - m);
    if (denom <= 0.0 || min_lag > max_lag) return {0.0, 0.0};
    double best_val = -std::numeric_limits<double>::infinity();
    std::size_t best_lag = min_lag;
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
        double num = 0.0;
        for (std::size_t i = 0; i + lag < x.size(); ++i) num += (x[i] - m) * (x[i + lag] - m);
        const double ac = num / denom;
        if (ac > best_val) {
            best_val = ac;
            best_lag = lag;
        }
    }
    return {static_cast<double>(best_lag) / rate_hz, best_val};
}

const std::vector<std::pair<std::string, FeatureFn>>& feature_table() {
    using stats::percentile;
    static const std::vector<std::pair<std::string, FeatureFn>> table = {
        {"AC_time", [](const Windows& w) { return autocorrelation_peak(w.acc_long, w.rate_hz).first; }},
        {"AC_val", [](const Windows& w) { return autocorrelation_peak(w.acc_long, w.rate_hz).second; }},
        {"ACC_var", [](const Windows& w) { return stats::variance(w.acc); }},
        {"ACC_p90", [](const Windows& w) { return percentile(w.acc, 90); }},
        {"ACC_var_long", [](const Windows& w) { return stats::variance(w.acc_long); }},
        {"ACC_p90_long", [](const Windows& w) { return percentile(w.acc_long, 90); }},
        {"GYRO_var", [](const Windows& w) { return stats::variance(w.gyro); }},
        {"GYRO_p90", [](const Windows& w) { return percentile(w.gyro, 90); }},
        {"GYRO_var_long", [](const Windows& w) { return stats::variance(w.gyro_long); }},
        {"GYRO_p90_long", [](const Windows& w) { return percentile(w.gyro_long, 90); }},
        {"GRAV_std_long", [](const Windows& w) { return stats::stddev(w.grav_long); }},
        {"ACC_median", [](const Windows& w) { return percentile(w.acc, 50); }},
        {"ACC_mean_long", [](const Windows& w) { return stats::mean(w.acc_long); }},
        {"GYRO_median", [](const Windows& w) { return percentile(w.gyro, 50); }},
        {"GYRO_mean_long", [](const Windows& w) { return stats::mean(w.gyro_long); }},
        {"GYRO_p10", [](const Windows& w) { return percentile(w.gyro, 10); }},
        {"GYRO_p10_long", [](const Windows& w) { return percentile(w.gyro_long, 10); }},
        {"ACC_p10", [](const Windows& w) { return percentile(w.acc, 10); }},
        {"ACC_p10_long", [](const Windows& w) { return percentile(w.acc_long, 10); }},
        {"GYRO_min", [](const Windows& w) { return percentile(w.gyro, 0); }},
        {"GYRO_max", [](const Windows& w) { return percentile(w.gyro, 100); }},
        {"GYRO_min_long", [](const Windows& w) { return percentile(w.gyro_long, 0); }},
        {"GYRO_max_long", [](const Windows& w) { return percentile(w.gyro_long, 100); }},
        {"GYRO_peak_to_peak", [](const Windows& w) { return stats::peak_to_peak(w.gyro); }},
        {"GYRO_peak_to_peak_long", [](const Windows& w) { return stats::peak_to_peak(w.gyro_long); }},
        {"GRAV_min_long", [](const Windows& w) { return percentile(w.grav_long, 0); }},
        {"GRAV_max_long", [](const Windows& w) { return percentile(w.grav_long, 100); }},
        {"GRAV_peak_to_peak_long", [](const Windows& w) { return stats::peak_to_peak(w.grav_long); }},
        {"GRAV_p5_long", [](const Windows& w) { return percentile(w.grav_long, 5); }},
        {"GRAV_p95_long", [](const Windows& w) { return percentile(w.grav_long, 95); }},
        {"GRAV_interpercentile_range_long",
         [](const Windows& w) { return percentile(w.grav_long, 95) - percentile(w.grav_long, 5); }},
        {"ACC_std_diff", [](const Windows& w) { return diff_std(w.acc); }},
        {"ACC_std_diff_long", [](const Windows& w) { return diff_std(w.acc_long); }},
        {"ACC_3_std_diff", [](const Windows& w) { return axes_diff_std(w.axes); }},
        {"ACC_3_std_diff_long", [](const Windows& w) { return axes_diff_std(w.axes_long); }},
    };
    return table;
}

const FeatureFn& feature_fn(const std::string& name) {
    for (const auto& [n, fn] : feature_table())
        if (n == name) return fn;
    fail(ErrorCode::InvalidArgument, "unknown feature " + name);
}

double effective_rate(const SensorStream& s) {
    if (s.rate_hz > 0.0) return s.rate_hz;
    if (s.size() >= 2) return static_cast<double>(s.size() - 1) / s.duration_s();
    return 0.0;
}

} // namespace

const std::vector<std::string>& all_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [n, fn] : feature_table()) out.push_back(n);
        return out;
    }();
    return names;
}

const std::vector<std::string>& default_feature_names() {
    static const std::vector<std::string> names = {
        "ACC_3_std_diff_long", "ACC_3_std_diff", "GYRO_peak_to_peak_long", "GYRO_peak_to_peak", "ACC_std_diff_long",
        "GYRO_max_long",       "GYRO_max",       "AC_time",                "ACC_p90_long",      "ACC_mean_long",
    };
    return names;
}

std::vector<FeatureVector> extract_features(const SensorStream& resampled, const GravityEstimate& gravity,
                                            const FeatureConfig& config) {
    if (resampled.size() != gravity.size())
        fail(ErrorCode::LengthMismatch, "sensor and gravity streams differ in length");
    const double rate = effective_rate(resampled);
    const auto per_second = static_cast<std::size_t>(std::llround(rate * config.short_window_s));
    const auto long_len = static_cast<std::size_t>(std::llround(rate * config.long_window_s));
    if (per_second == 0 || resampled.size() < per_second)
        fail(ErrorCode::InsufficientData, "feature extraction needs at least one second of samples");

    std::vector<const FeatureFn*> fns;
    for (const auto& name : config.names) fns.push_back(&feature_fn(name));

    const std::size_t n = resampled.size();
    std::vector<double> acc(n), gyro(n), grav(n);
    std::array<std::vector<double>, 3> axes;
    for (auto& a : axes) a.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = resampled.samples[i];
        acc[i] = s.accel.norm();
        gyro[i] = s.gyro.norm();
        grav[i] = gravity.gravity[i].norm();
        axes[0][i] = s.accel.x;
        axes[1][i] = s.accel.y;
        axes[2][i] = s.accel.z;
    }

    auto window = [](const std::vector<double>& v, std::size_t first, std::size_t last) {
        return std::span<const double>(v.data() + first, last - first + 1);
    };

    std::vector<FeatureVector> out;
    const std::size_t seconds = n / per_second;
    out.reserve(seconds);
    for (std::size_t k = 0; k < seconds; ++k) {
        const std::size_t last = (k + 1) * per_second - 1;
        const std::size_t first_short = last + 1 - per_second;
        const std::size_t first_long = last + 1 >= long_len ? last + 1 - long_len : 0;
        Windows w;
        w.rate_hz = rate;
        w.acc = window(acc, first_short, last);
        w.acc_long = window(acc, first_long, last);
        w.gyro = window(gyro, first_short, last);
        w.gyro_long = window(gyro, first_long, last);
        w.grav_long = window(grav, first_long, last);
        for (std::size_t a = 0; a < 3; ++a) {
            w.axes[a] = window(axes[a], first_short, last);
            w.axes_long[a] = window(axes[a], first_long, last);
        }
        FeatureVector fv;
        fv.reserve(fns.size());
        for (const auto* fn : fns) fv.push_back((*fn)(w));
        out.push_back(std::move(fv));
    }
    return out;
}

// ---------------------------------------------------------------------------
// logistic regression

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double linear_score(const LogRegModel& m, const FeatureVector& x) {
    double z = m.bias;
    for (std::size_t j = 0; j < x.size(); ++j) z += m.weights[j] * (x[j] - m.mean[j]) / m.scale[j];
    return z;
}

LogRegModel fit(const std::vector<FeatureVector>& x, const std::vector<Motion>& y,
                const std::vector<std::string>& names, const TrainOptions& opt, Rng rng) {
    const std::size_t n = x.size();
    const std::size_t d = names.size();
    LogRegModel m;
    m.feature_names = names;
    m.noise_level = opt.noise_level;
    m.mean.assign(d, 0.0);
    m.scale.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = x[i][j];
        m.mean[j] = stats::mean(col);
        const double s = stats::stddev(col);
        m.scale[j] = s > 0.0 ? s : 1.0;
    }
    std::vector<std::vector<double>> z(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) z[i][j] = (x[i][j] - m.mean[j]) / m.scale[j];

    m.weights.assign(d, 0.0);
    m.bias = 0.0;
    std::vector<double> grad(d);
    std::vector<double> noisy(d);
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = m.bias;
            for (std::size_t j = 0; j < d; ++j) {
                noisy[j] = z[i][j] + (opt.noise_level > 0.0 ? rng.normal(0.0, opt.noise_level) : 0.0);
                s += m.weights[j] * noisy[j];
            }
            const double err = sigmoid(s) - (y[i] == Motion::Moving ? 1.0 : 0.0);
            for (std::size_t j = 0; j < d; ++j) grad[j] += err * noisy[j];
            grad_b += err;
        }
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j)
            m.weights[j] -= opt.learning_rate * (grad[j] * inv + opt.l2 * m.weights[j]);
        m.bias -= opt.learning_rate * grad_b * inv;
    }
    m.trained = true;
    return m;
}

} // namespace

double LogRegModel::probability(const FeatureVector& x) const {
    if (!trained) fail(ErrorCode::UntrainedModel, "logistic regression model has not been trained");
    if (x.size() != weights.size()) fail(ErrorCode::LengthMismatch, "feature vector dimension mismatch");
    return sigmoid(linear_score(*this, x));
}

TrainResult train_logreg(const std::vector<FeatureVector>& features, const std::vector<Motion>& labels,
                         const std::vector<std::string>& feature_names, const TrainOptions& options) {
    if (features.size() != labels.size()) fail(ErrorCode::LengthMismatch, "features and labels differ in count");
    for (const auto& f : features)
        if (f.size() != feature_names.size()) fail(ErrorCode::LengthMismatch, "feature vector dimension mismatch");

    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    if (by_class[0].empty() || by_class[1].empty())
        fail(ErrorCode::DegenerateLabels, "training data must contain both moving and still labels");

    Rng rng(options.seed);
    const int folds = std::max(2, options.folds);
    std::vector<int> fold_of(labels.size());
    for (auto& members : by_class) {
        // Fisher-Yates, then deal round-robin so every fold keeps the class ratio.
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
        for (std::size_t i = 0; i < members.size(); ++i) fold_of[members[i]] = static_cast<int>(i % folds);
    }

    std::array<std::array<std::size_t, 2>, 2> confusion{}; // [truth][predicted]
    for (int f = 0; f < folds; ++f) {
        std::vector<FeatureVector> train_x;
        std::vector<Motion> train_y;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (fold_of[i] == f) {
                test.push_back(i);
            } else {
                train_x.push_back(features[i]);
                train_y.push_back(labels[i]);
            }
        }
        if (test.empty() || train_x.empty()) continue;
        const auto model = fit(train_x, train_y, feature_names, options, rng.split(static_cast<std::uint64_t>(f)));
        for (std::size_t i : test) {
            const Motion predicted = model.probability(features[i]) >= 0.5 ? Motion::Moving : Motion::Still;
            ++confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predicted)];
        }
    }

    TrainResult result;
    const double total = static_cast<double>(labels.size());
    result.cv.folds = folds;
    result.cv.accuracy = static_cast<double>(confusion[0][0] + confusion[1][1]) / total;
    result.cv.moving_recall = static_cast<double>(confusion[1][1]) / static_cast<double>(by_class[1].size());
    result.cv.still_recall = static_cast<double>(confusion[0][0]) / static_cast<double>(by_class[0].size());
    result.model = fit(features, labels, feature_names, options, rng.split(0xf1f1));
    return result;
}

std::vector<Motion> predict_sequence(const LogRegModel& model, const std::vector<FeatureVector>& features) {
    if (!model.trained) fail(ErrorCode::UntrainedModel, "logistic regression model has not been trained");
    std::vector<Motion> out;
    out.reserve(features.size());
    for (const auto& f : features) out.push_back(model.probability(f) >= 0.5 ? Motion::Moving : Motion::Still);
    return out;
}

// ---------------------------------------------------------------------------
// HMM

void HmmParams::validate() const {
    for (double p : {emit_moving, emit_still, stay_moving, stay_still, initial_moving})
        if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidArgument, "HMM probabilities must lie in [0, 1]");
}

double HmmParams::log_emission(Motion state, Motion obs) const {
    const double p_correct = state == Motion::Moving ? emit_moving : emit_still;
    return std::log(state == obs ? p_correct : 1.0 - p_correct);
}

double HmmParams::log_transition(Motion from, Motion to) const {
    const double p_stay = from == Motion::Moving ? stay_moving : stay_still;
    return std::log(from == to ? p_stay : 1.0 - p_stay);
}

double HmmParams::log_initial(Motion state) const {
    return std::log(state == Motion::Moving ? initial_moving : 1.0 - initial_moving);
}

std::vector<Motion> viterbi_smooth(std::span<const Motion> observations, const HmmParams& params) {
    params.validate();
    const std::size_t T = observations.size();
    if (T == 0) return {};
    constexpr std::array<Motion, 2> states = {Motion::Still, Motion::Moving};

    std::array<double, 2> delta{};
    for (Motion s : states)
        delta[static_cast<std::size_t>(s)] = params.log_initial(s) + params.log_emission(s, observations[0]);

    std::vector<std::array<std::uint8_t, 2>> back(T);
    for (std::size_t t = 1; t < T; ++t) {
        std::array<double, 2> next{};
        for (Motion j : states) {
            const auto ji = static_cast<std::size_t>(j);
            const auto oi = 1 - ji;
            const double stay = delta[ji] + params.log_transition(j, j);
            const double move = delta[oi] + params.log_transition(static_cast<Motion>(oi), j);
            if (move > stay) {
                next[ji] = move;
                back[t][ji] = static_cast<std::uint8_t>(oi);
            } else {
                next[ji] = stay;
                back[t][ji] = static_cast<std::uint8_t>(ji);
            }
            next[ji] += params.log_emission(j, observations[t]);
        }
        delta = next;
    }

    std::vector<Motion> path(T);
    std::size_t state = delta[1] >= delta[0] ? 1 : 0;
    for (std::size_t t = T; t-- > 0;) {
        path[t] = static_cast<Motion>(state);
        if (t > 0) state = back[t][state];
    }
    return path;
}

std::vector<Motion> aggregate_blocks(std::span<const Motion> labels, std::size_t block) {
    if (block == 0) fail(ErrorCode::InvalidArgument, "block length must be positive");
    std::vector<Motion> out;
    out.reserve((labels.size() + block - 1) / block);
    for (std::size_t start = 0; start < labels.size(); start += block) {
        const std::size_t stop = std::min(labels.size(), start + block);
        std::size_t moving = 0;
        for (std::size_t i = start; i < stop; ++i) moving += labels[i] == Motion::Moving ? 1 : 0;
        out.push_back(2 * moving >= stop - start ? Motion::Moving : Motion::Still);
    }
    return out;
}

std::vector<Primitive> aggregate_5s(std::span<const MovementLabel> labels) {
    std::vector<Motion> raw;
    raw.reserve(labels.size());
    for (const auto& l : labels) raw.push_back(l.label);
    const auto votes = aggregate_blocks(raw, 5);
    std::vector<Primitive> out;
    out.reserve(votes.size());
    for (std::size_t b = 0; b < votes.size(); ++b) out.push_back({to_symbol(votes[b]), labels[b * 5].t});
    return out;
}

// ---------------------------------------------------------------------------
// classifier

std::vector<MovementLabel> MovementClassifier::label_seconds(const SensorStream& resampled,
                                                             const GravityEstimate& gravity) const {
    const auto feats = extract_features(resampled, gravity, features);
    const auto raw = predict_sequence(model, feats);
    const auto smooth = viterbi_smooth(raw, hmm);
    const double rate = effective_rate(resampled);
    const auto per_second = static_cast<std::size_t>(std::llround(rate * features.short_window_s));
    std::vector<MovementLabel> out;
    out.reserve(smooth.size());
    for (std::size_t k = 0; k < smooth.size(); ++k) out.push_back({resampled.samples[k * per_second].t, smooth[k]});
    return out;
}

std::vector<Primitive> MovementClassifier::classify(const SensorStream& resampled,
                                                    const GravityEstimate& gravity) const {
    return aggregate_5s(label_seconds(resampled, gravity));
}

std::string classifier_to_json(const MovementClassifier& c) {
    nlohmann::json j;
    j["format"] = "stash-movement-model";
    j["version"] = 1;
    j["features"] = c.model.feature_names;
    j["weights"] = c.model.weights;
    j["bias"] = c.model.bias;
    j["mean"] = c.model.mean;
    j["scale"] = c.model.scale;
    j["noise_level"] = c.model.noise_level;
    j["trained"] = c.model.trained;
    j["short_window_s"] = c.features.short_window_s;
    j["long_window_s"] = c.features.long_window_s;
    j["hmm"] = {{"emit_moving", c.hmm.emit_moving},   {"emit_still", c.hmm.emit_still},
                {"stay_moving", c.hmm.stay_moving},   {"stay_still", c.hmm.stay_still},
                {"initial_moving", c.hmm.initial_moving}};
    return j.dump(2);
}

MovementClassifier classifier_from_json(const std::string& text) {
    MovementClassifier c;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format") != "stash-movement-model") fail(ErrorCode::CorruptFile, "not a movement model file");
        if (j.at("version") != 1) fail(ErrorCode::VersionMismatch, "unsupported movement model version");
        c.model.feature_names = j.at("features").get<std::vector<std::string>>();
        c.model.weights = j.at("weights").get<std::vector<double>>();
        c.model.bias = j.at("bias").get<double>();
        c.model.mean = j.at("mean").get<std::vector<double>>();
        c.model.scale = j.at("scale").get<std::vector<double>>();
        c.model.noise_level = j.at("noise_level").get<double>();
        c.model.trained = j.at("trained").get<bool>();
        c.features.names = c.model.feature_names;
        c.features.short_window_s = j.at("short_window_s").get<double>();
        c.features.long_window_s = j.at("long_window_s").get<double>();
        const auto& h = j.at("hmm");
        c.hmm.emit_moving = h.at("emit_moving").get<double>();
        c.hmm.emit_still = h.at("emit_still").get<double>();
        c.hmm.stay_moving = h.at("stay_moving").get<double>();
        c.hmm.stay_still = h.at("stay_still").get<double>();
        c.hmm.initial_moving = h.at("initial_moving").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptFile, e.what());
    }
    const std::size_t d = c.model.feature_names.size();
    if (c.model.weights.size() != d || c.model.mean.size() != d || c.model.scale.size() != d)
        fail(ErrorCode::CorruptFile, "model arrays disagree in dimension");
    for (const auto& name : c.model.feature_names) (void)feature_fn(name);
    c.hmm.validate();
    return c;
}

void save_classifier(const MovementClassifier& classifier, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << classifier_to_json(classifier) << '\n';
}

MovementClassifier load_classifier(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return classifier_from_json(buf.str());
}

} // namespace stash
