#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace stash {

inline constexpr double kDefaultAlpha = 0.5;

struct ThresholdRow {
    double alpha = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
};

/// Per-alpha affine coefficients for the length-based initial threshold.
class InitialThresholdTable {
public:
    InitialThresholdTable() = default;
    /// Rows must have distinct alphas; they are sorted on construction.
    explicit InitialThresholdTable(std::vector<ThresholdRow> rows);

    /// The built-in table (alpha 0.1 to 0.9).
    static const InitialThresholdTable& builtin();
    /// `alpha,slope,intercept` CSV; `#` comments and a header line allowed.
    static InitialThresholdTable load(const std::filesystem::path& path);

    const std::vector<ThresholdRow>& rows() const { return rows_; }
    /// Exact row or linear interpolation between neighbours. Throws UnknownAlpha
    /// outside the tabulated range.
    ThresholdRow coefficients(double alpha) const;

private:
    std::vector<ThresholdRow> rows_;
};

/// round(slope * L + intercept), L in minutes. Throws UnknownAlpha, InvalidArgument (L <= 0).
int initial_threshold(double length_min, double alpha = kDefaultAlpha,
                      const InitialThresholdTable& table = InitialThresholdTable::builtin());

/// Integer threshold minimizing alpha * FRR + (1 - alpha) * FAR, where a score
/// is accepted iff it is strictly greater than the threshold. Among minimizers
/// the midpoint (rounded down) of the longest contiguous run wins; the first
/// such run on ties. Throws EmptyScores.
int local_threshold(std::span<const int> within, std::span<const int> between, double alpha = kDefaultAlpha);

/// Combined error alpha * FRR(t) + (1 - alpha) * FAR(t).
double combined_error(std::span<const int> within, std::span<const int> between, double t, double alpha);

struct Ratio {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Ratio&, const Ratio&) = default;
};

/// lambda(n) = (n - 1) / n as an exact fraction. Throws InvalidCount for n < 1.
Ratio confidence_ratio(std::int64_t n);
double confidence_factor(std::int64_t n);

/// lambda * d_l + (1 - lambda) * d_i, kept real-valued; d_i when d_l is absent.
double mixed_threshold(double d_i, std::optional<double> d_l, std::int64_t n);

struct ThresholdState {
    double d_i = 0.0;
    std::optional<double> d_l;
    std::int64_t n = 1;
    double lambda = 0.0;
    double d = 0.0;

    /// Recompute lambda and d from d_i, d_l and n.
    void refresh();
    static ThresholdState initial(double d_i);

    friend bool operator==(const ThresholdState&, const ThresholdState&) = default;
};

} // namespace stash
