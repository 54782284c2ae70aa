#include "stash/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "stash/error.hpp"
#include "stash/path_repository.hpp"
#include "text_util.hpp"

namespace stash {

Rates far_frr(std::span<const int> within, std::span<const int> between, double threshold) {
    if (within.empty() || between.empty()) fail(ErrorCode::EmptyScores, "score sets must be non-empty");
    const auto accepted = std::count_if(between.begin(), between.end(), [&](int s) { return s > threshold; });
    const auto rejected = std::count_if(within.begin(), within.end(), [&](int s) { return s <= threshold; });
    return {static_cast<double>(accepted) / static_cast<double>(between.size()),
            static_cast<double>(rejected) / static_cast<double>(within.size())};
}

EerPoint equal_error_rate(std::span<const int> within, std::span<const int> between) {
    if (within.empty() || between.empty()) fail(ErrorCode::EmptyScores, "score sets must be non-empty");
    const int lo = std::min(*std::min_element(within.begin(), within.end()),
                            *std::min_element(between.begin(), between.end())) - 1;
    const int hi = std::max(*std::max_element(within.begin(), within.end()),
                            *std::max_element(between.begin(), between.end()));
    EerPoint best;
    double best_gap = 2.0;
    for (int t = lo; t <= hi; ++t) {
        const auto r = far_frr(within, between, t);
        const double gap = std::abs(r.far - r.frr);
        if (gap < best_gap) {
            best_gap = gap;
            best = {t, r.far, r.frr, (r.far + r.frr) / 2.0};
        }
    }
    return best;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(ErrorCode::LengthMismatch, "regression inputs differ in length");
    const double n = static_cast<double>(x.size());
    if (x.size() < 2) fail(ErrorCode::DegenerateDesign, "regression needs at least two points");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) fail(ErrorCode::DegenerateDesign, "regression needs at least two distinct x values");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    // A perfectly flat response is fit exactly; call that r = 1.
    fit.r = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 1.0;
    return fit;
}

std::vector<CoefficientFit> fit_initial_coefficients(std::span<const PooledScores> pooled,
                                                     std::span<const double> alphas) {
    std::vector<double> lengths;
    for (const auto& p : pooled) lengths.push_back(p.length_min);
    std::vector<CoefficientFit> out;
    for (double alpha : alphas) {
        std::vector<double> d;
        for (const auto& p : pooled) d.push_back(local_threshold(p.within, p.between, alpha));
        const auto fit = fit_line(lengths, d);
        out.push_back({{alpha, fit.slope, fit.intercept}, fit.r});
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
    const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

} // namespace

PooledScores ScoreTable::pooled(std::optional<std::size_t> exclude) const {
    PooledScores p;
    p.length_min = length_min;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        if (exclude && route_of[i] == *exclude) continue;
        for (std::size_t j = i + 1; j < sequences.size(); ++j) {
            if (exclude && route_of[j] == *exclude) continue;
            (route_of[i] == route_of[j] ? p.within : p.between).push_back(scores[i][j]);
        }
    }
    return p;
}

ScoreTable build_score_table(const Corpus& corpus, double length_min, const ScoringScheme& scheme) {
    ScoreTable table;
    table.length_min = length_min;
    table.members.resize(corpus.routes.size());
    for (std::size_t r = 0; r < corpus.routes.size(); ++r) {
        for (const auto& inst : corpus.routes[r].instances) {
            table.members[r].push_back(table.sequences.size());
            table.route_of.push_back(r);
            table.sequences.push_back(strip_stationary(trim_to_duration(inst, length_min * 60.0)).symbols());
        }
    }
    const std::size_t n = table.sequences.size();
    table.scores.assign(n, std::vector<int>(n, 0));
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j) table.scores[i][j] = nw_score(table.sequences[i], table.sequences[j], scheme);
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) table.scores[i][j] = table.scores[j][i];
    return table;
}

namespace {

/// Genuine trials: same-route pairs; impostor trials: this route's instances
/// against every other route's.
RouteResult evaluate_route(const ScoreTable& table, std::size_t route, double threshold) {
    RouteResult res;
    res.route = route;
    res.threshold = threshold;
    std::size_t fr = 0, fa = 0;
    const auto& mine = table.members[route];
    for (std::size_t a = 0; a < mine.size(); ++a)
        for (std::size_t b = a + 1; b < mine.size(); ++b) {
            ++res.genuine_trials;
            fr += table.scores[mine[a]][mine[b]] <= threshold ? 1 : 0;
        }
    for (std::size_t i : mine)
        for (std::size_t j = 0; j < table.sequences.size(); ++j) {
            if (table.route_of[j] == route) continue;
            ++res.impostor_trials;
            fa += table.scores[i][j] > threshold ? 1 : 0;
        }
    res.frr = res.genuine_trials ? static_cast<double>(fr) / static_cast<double>(res.genuine_trials) : 0.0;
    res.far = res.impostor_trials ? static_cast<double>(fa) / static_cast<double>(res.impostor_trials) : 0.0;
    return res;
}

void loro_into(EvalReport& report, const std::vector<ScoreTable>& fit_tables, const ScoreTable& eval_table,
               std::size_t n_routes, double alpha, double eval_length, double axis_value) {
    std::vector<RouteResult> rows(n_routes);
    std::vector<LinearFit> fits(n_routes);
    parallel_for(n_routes, [&](std::size_t h) {
        std::vector<double> x, y;
        for (const auto& t : fit_tables) {
            const auto p = t.pooled(h);
            x.push_back(t.length_min);
            y.push_back(local_threshold(p.within, p.between, alpha));
        }
        fits[h] = fit_line(x, y);
        const double threshold = static_cast<double>(std::lround(fits[h].slope * eval_length + fits[h].intercept));
        rows[h] = evaluate_route(eval_table, h, threshold);
        rows[h].axis_value = axis_value;
        rows[h].scheme = "initial";
    });
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    report.fits.insert(report.fits.end(), fits.begin(), fits.end());
}

std::vector<ScoreTable> tables_for(const Corpus& corpus, const std::vector<double>& lengths) {
    std::vector<ScoreTable> out;
    for (double l : lengths) out.push_back(build_score_table(corpus, l));
    return out;
}

const ScoreTable& table_at(const std::vector<ScoreTable>& tables, double length, std::optional<ScoreTable>& extra,
                           const Corpus& corpus) {
    for (const auto& t : tables)
        if (t.length_min == length) return t;
    extra = build_score_table(corpus, length);
    return *extra;
}

} // namespace

EvalReport leave_one_route_out(const Corpus& corpus, const LoroOptions& options) {
    if (corpus.routes.size() < 2) fail(ErrorCode::TooFewRoutes, "leave-one-route-out needs at least two routes");
    EvalReport report;
    report.axis = "alpha";
    const auto tables = tables_for(corpus, options.fit_lengths);
    std::optional<ScoreTable> extra;
    const auto& eval_table = table_at(tables, options.eval_length_min, extra, corpus);
    loro_into(report, tables, eval_table, corpus.routes.size(), options.alpha, options.eval_length_min,
              options.alpha);
    return report;
}

std::optional<SweepAxis> sweep_axis_from_string(std::string_view name) {
    if (name == "length") return SweepAxis::Length;
    if (name == "instances") return SweepAxis::Instances;
    if (name == "alpha") return SweepAxis::Alpha;
    if (name == "scheme") return SweepAxis::Scheme;
    return std::nullopt;
}

std::string_view to_string(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::Length: return "length";
    case SweepAxis::Instances: return "instances";
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::Scheme: return "scheme";
    }
    return "?";
}

namespace {

std::vector<std::vector<std::size_t>> combinations(std::size_t k, std::size_t n, std::size_t cap, Rng& rng) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> pick(n);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
        out.push_back(pick);
        std::size_t i = n;
        while (i > 0 && pick[i - 1] == k - n + i - 1) --i;
        if (i == 0) break;
        ++pick[i - 1];
        for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
    }
    if (out.size() > cap) {
        for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.below(i)]);
        out.resize(cap);
        std::sort(out.begin(), out.end());
    }
    return out;
}

void instance_sweep(EvalReport& report, const Corpus& corpus, const SweepOptions& options,
                    const std::vector<int>& counts) {
    const auto table = build_score_table(corpus, options.length_min);
    const std::size_t n_routes = corpus.routes.size();
    for (const auto& m : table.members)
        if (m.size() < static_cast<std::size_t>(*std::max_element(counts.begin(), counts.end())) + 1)
            fail(ErrorCode::InsufficientInstances, "every route needs more instances than the largest training set");

    // Impostor paths for the local threshold come from a chain fitted on the
    // whole corpus; scores are cached per potential medoid.
    const auto chain = fit_markov(std::span<const std::vector<Symbol>>(table.sequences));
    std::vector<std::vector<int>> markov_scores(table.sequences.size());
    parallel_for(table.sequences.size(), [&](std::size_t i) {
        const std::size_t r = table.route_of[i];
        const auto local = static_cast<std::uint64_t>(
            std::find(table.members[r].begin(), table.members[r].end(), i) - table.members[r].begin());
        Rng rng(mix_seed(mix_seed(options.seed, r), local));
        auto& scores = markov_scores[i];
        for (int k = 0; k < options.between_samples; ++k)
            scores.push_back(nw_score(table.sequences[i], sample_path(chain, table.sequences[i].size(), rng)));
    });

    const double d_i = initial_threshold(options.length_min, options.alpha);
    static const std::array<std::string, 3> schemes = {"initial", "local", "mixed"};
    for (int n : counts) {
        std::vector<std::array<RouteResult, 3>> results(n_routes);
        parallel_for(n_routes, [&](std::size_t r) {
            const auto& mine = table.members[r];
            Rng rng(mix_seed(mix_seed(options.seed, 0xC0B0u + r), static_cast<std::uint64_t>(n)));
            const auto combos = combinations(mine.size(), static_cast<std::size_t>(n), options.combination_cap, rng);
            std::array<std::size_t, 3> fr{}, fa{};
            std::size_t genuine = 0, impostor = 0;
            std::array<double, 3> threshold_sum{};
            for (const auto& combo : combos) {
                ScoreMatrix sub(combo.size(), std::vector<int>(combo.size()));
                for (std::size_t a = 0; a < combo.size(); ++a)
                    for (std::size_t b = 0; b < combo.size(); ++b) sub[a][b] = table.scores[mine[combo[a]]][mine[combo[b]]];
                const std::size_t medoid = mine[combo[select_medoid(sub)]];

                std::optional<double> d_l;
                if (combo.size() >= 2) {
                    std::vector<int> within;
                    for (std::size_t a = 0; a < combo.size(); ++a)
                        for (std::size_t b = a + 1; b < combo.size(); ++b) within.push_back(sub[a][b]);
                    d_l = local_threshold(within, markov_scores[medoid], options.alpha);
                }
                const std::array<double, 3> thresholds = {d_i, d_l.value_or(d_i),
                                                          mixed_threshold(d_i, d_l, static_cast<std::int64_t>(n))};
                for (std::size_t s = 0; s < 3; ++s) threshold_sum[s] += thresholds[s];

                for (std::size_t i = 0; i < mine.size(); ++i) {
                    if (std::find(combo.begin(), combo.end(), i) != combo.end()) continue;
                    ++genuine;
                    for (std::size_t s = 0; s < 3; ++s) fr[s] += table.scores[medoid][mine[i]] <= thresholds[s];
                }
                for (std::size_t j = 0; j < table.sequences.size(); ++j) {
                    if (table.route_of[j] == r) continue;
                    ++impostor;
                    for (std::size_t s = 0; s < 3; ++s) fa[s] += table.scores[medoid][j] > thresholds[s];
                }
            }
            for (std::size_t s = 0; s < 3; ++s) {
                auto& res = results[r][s];
                res.route = r;
                res.axis_value = n;
                res.scheme = schemes[s];
                res.threshold = threshold_sum[s] / static_cast<double>(combos.size());
                res.genuine_trials = genuine;
                res.impostor_trials = impostor;
                res.frr = static_cast<double>(fr[s]) / static_cast<double>(genuine);
                res.far = static_cast<double>(fa[s]) / static_cast<double>(impostor);
            }
        });
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t r = 0; r < n_routes; ++r) report.rows.push_back(results[r][s]);
    }
}

} // namespace

EvalReport sweep(const Corpus& corpus, SweepAxis axis, const SweepOptions& options) {
    if (corpus.routes.empty()) fail(ErrorCode::TooFewRoutes, "corpus has no routes");
    EvalReport report;
    report.axis = std::string(to_string(axis));
    switch (axis) {
    case SweepAxis::Length:
        for (double l : options.lengths) {
            const auto table = build_score_table(corpus, l);
            const double threshold = initial_threshold(l, options.alpha);
            for (std::size_t r = 0; r < corpus.routes.size(); ++r) {
                auto res = evaluate_route(table, r, threshold);
                res.axis_value = l;
                res.scheme = "initial";
                report.rows.push_back(res);
            }
        }
        break;
    case SweepAxis::Alpha: {
        if (corpus.routes.size() < 2) fail(ErrorCode::TooFewRoutes, "alpha sweep needs at least two routes");
        const auto tables = tables_for(corpus, options.lengths);
        std::optional<ScoreTable> extra;
        const auto& eval_table = table_at(tables, options.length_min, extra, corpus);
        for (double a : options.alphas)
            loro_into(report, tables, eval_table, corpus.routes.size(), a, options.length_min, a);
        break;
    }
    case SweepAxis::Instances: {
        std::vector<int> counts;
        for (int n = 1; n <= options.max_instances; ++n) counts.push_back(n);
        instance_sweep(report, corpus, options, counts);
        break;
    }
    case SweepAxis::Scheme:
        instance_sweep(report, corpus, options, {options.max_instances});
        break;
    }
    return report;
}

std::vector<SummaryRow> EvalReport::summary() const {
    std::vector<std::pair<double, std::string>> keys;
    std::map<std::pair<double, std::string>, std::vector<const RouteResult*>> groups;
    for (const auto& row : rows) {
        const auto key = std::make_pair(row.axis_value, row.scheme);
        if (!groups.count(key)) keys.push_back(key);
        groups[key].push_back(&row);
    }
    std::vector<SummaryRow> out;
    for (const auto& key : keys) {
        const auto& g = groups[key];
        std::vector<double> far, frr;
        for (const auto* r : g) {
            far.push_back(r->far);
            frr.push_back(r->frr);
        }
        auto mean_std = [](const std::vector<double>& v) {
            const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            double var = 0.0;
            for (double x : v) var += (x - m) * (x - m);
            return std::make_pair(m, std::sqrt(var / static_cast<double>(v.size())));
        };
        SummaryRow s;
        s.axis_value = key.first;
        s.scheme = key.second;
        s.routes = g.size();
        std::tie(s.far_mean, s.far_std) = mean_std(far);
        std::tie(s.frr_mean, s.frr_std) = mean_std(frr);
        s.far_median = median(far);
        s.frr_median = median(frr);
        out.push_back(s);
    }
    return out;
}

namespace {

constexpr const char* kRowHeader = "axis,axis_value,scheme,route,threshold,far,frr,genuine_trials,impostor_trials";
constexpr const char* kSummaryHeader =
    "axis,axis_value,scheme,routes,far_mean,far_std,frr_mean,frr_std,far_median,frr_median";

} // namespace

std::string report_rows_csv(const EvalReport& report) {
    using detail::format_double;
    std::ostringstream out;
    out << kRowHeader << '\n';
    for (const auto& r : report.rows)
        out << report.axis << ',' << format_double(r.axis_value) << ',' << r.scheme << ',' << r.route << ','
            << format_double(r.threshold) << ',' << format_double(r.far) << ',' << format_double(r.frr) << ','
            << r.genuine_trials << ',' << r.impostor_trials << '\n';
    return out.str();
}

std::string report_summary_csv(const EvalReport& report) {
    using detail::format_double;
    std::ostringstream out;
    out << kSummaryHeader << '\n';
    for (const auto& s : report.summary())
        out << report.axis << ',' << format_double(s.axis_value) << ',' << s.scheme << ',' << s.routes << ','
            << format_double(s.far_mean) << ',' << format_double(s.far_std) << ',' << format_double(s.frr_mean) << ','
            << format_double(s.frr_std) << ',' << format_double(s.far_median) << ','
            << format_double(s.frr_median) << '\n';
    return out.str();
}

std::vector<RouteResult> parse_report_rows(const std::string& csv) {
    std::vector<RouteResult> out;
    std::istringstream in(csv);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != kRowHeader) fail(ErrorCode::ParseError, "unexpected report header", line_no);
            continue;
        }
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split(line, ',');
        RouteResult r;
        if (f.size() != 9 || !detail::parse_double(f[1], r.axis_value) || !detail::parse_int(f[3], r.route) ||
            !detail::parse_double(f[4], r.threshold) || !detail::parse_double(f[5], r.far) ||
            !detail::parse_double(f[6], r.frr) || !detail::parse_int(f[7], r.genuine_trials) ||
            !detail::parse_int(f[8], r.impostor_trials))
            fail(ErrorCode::ParseError, "malformed report row", line_no);
        r.scheme = std::string(f[2]);
        out.push_back(r);
    }
    return out;
}

std::filesystem::path emit_report(const EvalReport& report, const std::filesystem::path& path) {
    auto write = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        if (!out) fail(ErrorCode::IoError, "cannot write " + p.string());
        out << text;
        if (!out) fail(ErrorCode::IoError, "write failed for " + p.string());
    };
    auto summary_path = path;
    summary_path.replace_filename(path.stem().string() + "_summary.csv");
    write(path, report_rows_csv(report));
    write(summary_path, report_summary_csv(report));
    return summary_path;
}

} // namespace stash
