#include "stash/threshold_manager.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "stash/error.hpp"
#include "text_util.hpp"

namespace stash {

InitialThresholdTable::InitialThresholdTable(std::vector<ThresholdRow> rows) : rows_(std::move(rows)) {
    std::sort(rows_.begin(), rows_.end(), [](const auto& a, const auto& b) { return a.alpha < b.alpha; });
    for (std::size_t i = 1; i < rows_.size(); ++i)
        if (rows_[i].alpha == rows_[i - 1].alpha) fail(ErrorCode::InvalidArgument, "duplicate alpha in threshold table");
}

const InitialThresholdTable& InitialThresholdTable::builtin() {
    static const InitialThresholdTable table({
        {0.1, 10.171, 1.400},
        {0.2, 10.314, -0.600},
        {0.3, 10.143, -1.000},
        {0.4, 9.543, -0.067},
        {0.5, 9.686, -1.400},
        {0.6, 9.914, -2.533},
        {0.7, 9.771, -3.533},
        {0.8, 8.600, -1.600},
        {0.9, 7.914, -2.200},
    });
    return table;
}

InitialThresholdTable InitialThresholdTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<ThresholdRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#' || t.rfind("alpha", 0) == 0) continue;
        const auto f = detail::split(t, ',');
        ThresholdRow row;
        if (f.size() != 3 || !detail::parse_double(f[0], row.alpha) || !detail::parse_double(f[1], row.slope) ||
            !detail::parse_double(f[2], row.intercept))
            fail(ErrorCode::ParseError, "expected `alpha,slope,intercept`", line_no);
        rows.push_back(row);
    }
    if (rows.empty()) fail(ErrorCode::ParseError, "threshold table has no rows");
    return InitialThresholdTable(std::move(rows));
}

ThresholdRow InitialThresholdTable::coefficients(double alpha) const {
    constexpr double eps = 1e-9;
    if (rows_.empty() || !(alpha >= rows_.front().alpha - eps && alpha <= rows_.back().alpha + eps))
        fail(ErrorCode::UnknownAlpha, "alpha " + detail::format_double(alpha) + " is outside the threshold table");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (std::abs(rows_[i].alpha - alpha) <= eps) return rows_[i];
        if (i + 1 < rows_.size() && alpha < rows_[i + 1].alpha) {
            const auto& lo = rows_[i];
            const auto& hi = rows_[i + 1];
            const double w = (alpha - lo.alpha) / (hi.alpha - lo.alpha);
            return {alpha, lo.slope + w * (hi.slope - lo.slope), lo.intercept + w * (hi.intercept - lo.intercept)};
        }
    }
    return rows_.back();
}

int initial_threshold(double length_min, double alpha, const InitialThresholdTable& table) {
    if (!(length_min > 0.0)) fail(ErrorCode::InvalidArgument, "path length must be positive");
    const auto row = table.coefficients(alpha);
    return static_cast<int>(std::lround(row.slope * length_min + row.intercept));
}

namespace {

double fraction_le(std::span<const int> sorted, double t) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), t,
                                     [](double v, int s) { return v < static_cast<double>(s); });
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

} // namespace

double combined_error(std::span<const int> within, std::span<const int> between, double t, double alpha) {
    if (within.empty() || between.empty()) fail(ErrorCode::EmptyScores, "score sets must be non-empty");
    std::vector<int> w(within.begin(), within.end()), b(between.begin(), between.end());
    std::sort(w.begin(), w.end());
    std::sort(b.begin(), b.end());
    return alpha * fraction_le(w, t) + (1.0 - alpha) * (1.0 - fraction_le(b, t));
}

int local_threshold(std::span<const int> within, std::span<const int> between, double alpha) {
    if (within.empty() || between.empty()) fail(ErrorCode::EmptyScores, "score sets must be non-empty");
    std::vector<int> w(within.begin(), within.end()), b(between.begin(), between.end());
    std::sort(w.begin(), w.end());
    std::sort(b.begin(), b.end());
    const int lo = std::min(w.front(), b.front()) - 1;
    const int hi = std::max(w.back(), b.back());

    // Beyond [lo, hi] the error is constant and equal to the value at an end,
    // so scanning this range finds every distinct level.
    std::vector<double> err;
    err.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (int t = lo; t <= hi; ++t)
        err.push_back(alpha * fraction_le(w, t) + (1.0 - alpha) * (1.0 - fraction_le(b, t)));
    const double best = *std::min_element(err.begin(), err.end());

    constexpr double tol = 1e-12;
    int run_start = 0, best_start = 0, best_len = 0;
    int len = 0;
    for (int i = 0; i < static_cast<int>(err.size()); ++i) {
        if (err[static_cast<std::size_t>(i)] <= best + tol) {
            if (len == 0) run_start = i;
            ++len;
            if (len > best_len) {
                best_len = len;
                best_start = run_start;
            }
        } else {
            len = 0;
        }
    }
    const int first = lo + best_start;
    const int last = first + best_len - 1;
    return static_cast<int>(std::floor((static_cast<double>(first) + last) / 2.0));
}

Ratio confidence_ratio(std::int64_t n) {
    if (n < 1) fail(ErrorCode::InvalidCount, "instance count must be at least 1");
    return {n - 1, n};
}

double confidence_factor(std::int64_t n) { return confidence_ratio(n).value(); }

double mixed_threshold(double d_i, std::optional<double> d_l, std::int64_t n) {
    const double lambda = confidence_factor(n);
    if (!d_l) return d_i;
    const double d = lambda * *d_l + (1.0 - lambda) * d_i;
    return std::clamp(d, std::min(d_i, *d_l), std::max(d_i, *d_l));
}

void ThresholdState::refresh() {
    lambda = confidence_factor(n);
    d = mixed_threshold(d_i, d_l, n);
}

ThresholdState ThresholdState::initial(double d_i) {
    ThresholdState s;
    s.d_i = d_i;
    s.refresh();
    return s;
}

} // namespace stash
