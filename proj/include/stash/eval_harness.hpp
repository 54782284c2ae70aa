#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stash/alignment.hpp"
#include "stash/path_model.hpp"
#include "stash/threshold_manager.hpp"

namespace stash {

struct Rates {
    double far = 0.0;
    double frr = 0.0;
};

/// FAR = share of between-scores above the threshold, FRR = share of
/// within-scores at or below it. Throws EmptyScores.
Rates far_frr(std::span<const int> within, std::span<const int> between, double threshold);

struct EerPoint {
    int threshold = 0;
    double far = 0.0;
    double frr = 0.0;
    /// (FAR + FRR) / 2 at the threshold minimizing |FAR - FRR|.
    double eer = 0.0;
};

/// Scans integer thresholds; the first minimizer of |FAR - FRR| wins.
EerPoint equal_error_rate(std::span<const int> within, std::span<const int> between);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r = 0.0;
};

/// Ordinary least squares. Throws DegenerateDesign with fewer than two
/// distinct x values.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct PooledScores {
    double length_min = 0.0;
    std::vector<int> within;
    std::vector<int> between;
};

struct CoefficientFit {
    ThresholdRow row;
    double r = 0.0;
};

/// For each alpha, regress the local threshold of every pooled length on the
/// length. Throws DegenerateDesign unless at least two distinct lengths are given.
std::vector<CoefficientFit> fit_initial_coefficients(std::span<const PooledScores> pooled,
                                                     std::span<const double> alphas);

// ---------------------------------------------------------------------------
// Corpus evaluation

/// Every instance of every route, S-stripped and trimmed to the last `length_min`
/// minutes, with the full pairwise score matrix.
struct ScoreTable {
    double length_min = 0.0;
    std::vector<std::size_t> route_of;                    ///< route of each flattened instance
    std::vector<std::vector<std::size_t>> members;         ///< flattened indices per route
    std::vector<std::vector<Symbol>> sequences;
    ScoreMatrix scores;

    /// Within: same-route pairs. Between: cross-route pairs. Routes in
    /// `exclude` are skipped entirely.
    PooledScores pooled(std::optional<std::size_t> exclude = std::nullopt) const;
};

ScoreTable build_score_table(const Corpus& corpus, double length_min, const ScoringScheme& scheme = {});

struct RouteResult {
    std::size_t route = 0;
    double axis_value = 0.0;
    std::string scheme;
    double threshold = 0.0;
    double far = 0.0;
    double frr = 0.0;
    std::size_t genuine_trials = 0;
    std::size_t impostor_trials = 0;
};

struct SummaryRow {
    double axis_value = 0.0;
    std::string scheme;
    std::size_t routes = 0;
    double far_mean = 0.0, far_std = 0.0;
    double frr_mean = 0.0, frr_std = 0.0;
    double far_median = 0.0, frr_median = 0.0;
};

struct EvalReport {
    std::string axis;
    std::vector<RouteResult> rows;
    std::vector<LinearFit> fits; ///< leave-one-route-out threshold fits, when computed

    /// One row per (axis value, scheme), in first-appearance order.
    std::vector<SummaryRow> summary() const;
};

struct LoroOptions {
    double alpha = kDefaultAlpha;
    std::vector<double> fit_lengths = {1, 2, 3, 4, 5, 6};
    double eval_length_min = 2.0;
};

/// For each held-out route, fit the affine threshold on the other routes'
/// pooled scores and evaluate it on the held-out one. Throws TooFewRoutes.
EvalReport leave_one_route_out(const Corpus& corpus, const LoroOptions& options = {});

enum class SweepAxis { Length, Instances, Alpha, Scheme };

std::optional<SweepAxis> sweep_axis_from_string(std::string_view name);
std::string_view to_string(SweepAxis axis);

struct SweepOptions {
    double alpha = kDefaultAlpha;
    double length_min = 2.0;
    std::vector<double> lengths = {1, 2, 3, 4, 5, 6};
    std::vector<double> alphas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int max_instances = 5;
    std::size_t combination_cap = 500;
    int between_samples = 200;
    std::uint64_t seed = 42;
};

/// Length: initial thresholds per length. Alpha: leave-one-route-out per alpha.
/// Instances: n = 1..max_instances training instances with the initial, local
/// and mixed schemes. Scheme: the three schemes at n = max_instances.
/// Throws InsufficientInstances when a route has no instance left for testing.
EvalReport sweep(const Corpus& corpus, SweepAxis axis, const SweepOptions& options = {});

/// Per-row CSV at `path` and the per-axis-value summary next to it
/// (`<stem>_summary.csv`). Returns the summary path. Throws IoError.
std::filesystem::path emit_report(const EvalReport& report, const std::filesystem::path& path);

std::string report_rows_csv(const EvalReport& report);
std::string report_summary_csv(const EvalReport& report);
/// Parses the per-row CSV back (for round-trip checks and tooling).
std::vector<RouteResult> parse_report_rows(const std::string& csv);

} // namespace stash
