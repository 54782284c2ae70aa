#include "stash/turn_detector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace stash {

void TurnDetectorConfig::validate() const {
    if (!(sigma2_deg < sigma1_deg)) fail(ErrorCode::InvalidArgument, "sigma2 must be smaller than sigma1");
    if (!(granularity_deg > 0.0)) fail(ErrorCode::InvalidArgument, "turn granularity must be positive");
    if (!(window_s > 0.0)) fail(ErrorCode::InvalidArgument, "rolling window must be positive");
    if (!(highpass_floor_dps > 0.0)) fail(ErrorCode::InvalidArgument, "high-pass floor must be positive");
}

std::string TurnEvent::symbols() const {
    return std::string(static_cast<std::size_t>(count), static_cast<char>(direction()));
}

std::vector<double> rolling_std(const std::vector<Timestamp>& t, const std::vector<double>& values,
                                Timestamp window) {
    std::vector<double> out(values.size(), 0.0);
    std::size_t start = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        while (t[i] - t[start] >= window) ++start;
        const double n = static_cast<double>(i - start + 1);
        double mean = 0.0;
        for (std::size_t j = start; j <= i; ++j) mean += values[j];
        mean /= n;
        double var = 0.0;
        for (std::size_t j = start; j <= i; ++j) var += (values[j] - mean) * (values[j] - mean);
        out[i] = std::sqrt(var / n);
    }
    return out;
}

YawRateStream project_to_ground(const SensorStream& stream, const GravityEstimate& gravity) {
    if (stream.size() != gravity.size())
        fail(ErrorCode::LengthMismatch, "gyroscope and gravity streams differ in length");
    YawRateStream out;
    out.t.reserve(stream.size());
    out.rate_dps.reserve(stream.size());
    out.reliable.reserve(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const Vec3& g = gravity.gravity[i];
        const double gn = g.norm();
        out.t.push_back(stream.samples[i].t);
        if (gn == 0.0) {
            out.rate_dps.push_back(0.0);
            out.reliable.push_back(0);
            continue;
        }
        const Vec3 down = g * (-1.0 / gn);
        out.rate_dps.push_back(rad_to_deg(stream.samples[i].gyro.dot(down)));
        out.reliable.push_back(gravity.stable[i]);
    }
    return out;
}

double drift_attenuation(double rate_dps, double floor_dps) {
    const double r = std::abs(rate_dps);
    if (r >= floor_dps) return 1.0;
    return std::exp(r / floor_dps - 1.0);
}

YawRateStream condition_gyro(const YawRateStream& yaw, const TurnDetectorConfig& config) {
    config.validate();
    YawRateStream out = yaw;
    const auto spread = rolling_std(yaw.t, yaw.rate_dps, seconds_to_ns(config.window_s));
    const double flatten_dps = rad_to_deg(config.flatten_std);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (spread[i] < flatten_dps) {
            out.rate_dps[i] = 0.0;
            continue;
        }
        out.rate_dps[i] *= drift_attenuation(out.rate_dps[i], config.highpass_floor_dps);
    }
    return out;
}

HeadingTrace integrate_heading(const YawRateStream& yaw, const TurnDetectorConfig& config) {
    if (yaw.size() == 0) fail(ErrorCode::EmptyStream, "cannot integrate an empty yaw-rate stream");
    HeadingTrace trace;
    trace.t = yaw.t;
    trace.alpha_deg.assign(yaw.size(), 0.0);
    for (std::size_t i = 1; i < yaw.size(); ++i) {
        const bool use = !config.stability_gate || yaw.reliable.empty() || yaw.reliable[i] != 0;
        const double dt = ns_to_seconds(yaw.t[i] - yaw.t[i - 1]);
        trace.alpha_deg[i] = trace.alpha_deg[i - 1] + (use ? yaw.rate_dps[i] * dt : 0.0);
    }
    trace.rolling_std_deg = rolling_std(trace.t, trace.alpha_deg, seconds_to_ns(config.window_s));
    return trace;
}

namespace {

struct Run {
    std::size_t first;
    std::size_t last;
};

template <typename Pred>
std::vector<Run> runs_where(std::size_t from, std::size_t to, Pred pred) {
    std::vector<Run> runs;
    std::size_t i = from;
    while (i <= to) {
        if (!pred(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 <= to && pred(j + 1)) ++j;
        runs.push_back({i, j});
        i = j + 1;
    }
    return runs;
}

} // namespace

std::vector<TurnEvent> detect_turns(const HeadingTrace& trace, const TurnDetectorConfig& config) {
    config.validate();
    std::vector<TurnEvent> events;
    if (trace.size() == 0) return events;

    const auto& sd = trace.rolling_std_deg;
    const Timestamp window = seconds_to_ns(config.window_s);
    const auto extents = runs_where(0, trace.size() - 1, [&](std::size_t i) { return sd[i] > config.sigma2_deg; });

    std::size_t previous_end = 0;
    for (const Run& extent : extents) {
        const auto cores =
            runs_where(extent.first, extent.last, [&](std::size_t i) { return sd[i] > config.sigma1_deg; });
        if (cores.empty()) continue;

        // Split an extent holding several cores at the rolling-std minimum between them.
        std::vector<std::size_t> cuts;
        for (std::size_t c = 0; c + 1 < cores.size(); ++c) {
            std::size_t best = cores[c].last + 1;
            for (std::size_t i = best; i < cores[c + 1].first; ++i)
                if (sd[i] < sd[best]) best = i;
            cuts.push_back(best);
        }

        // The trailing window lags the heading, so the turn starts up to one
        // window before the std first rises; anchor there.
        std::size_t begin = extent.first;
        while (begin > previous_end && trace.t[extent.first] - trace.t[begin - 1] <= window) --begin;

        for (std::size_t piece = 0; piece <= cuts.size(); ++piece) {
            const std::size_t end = piece < cuts.size() ? cuts[piece] : extent.last;
            if (end > begin) {
                TurnEvent ev;
                ev.t_begin = trace.t[begin];
                ev.t_end = trace.t[end];
                ev.angle_deg = trace.alpha_deg[end] - trace.alpha_deg[begin];
                ev.count = static_cast<int>(std::abs(std::round(ev.angle_deg / config.granularity_deg)));
                if (ev.count > 0) events.push_back(ev);
            }
            begin = end;
        }
        previous_end = extent.last;
    }
    return events;
}

std::vector<TurnEvent> detect_turns(const SensorStream& resampled, const GravityEstimate& gravity,
                                    const TurnDetectorConfig& config) {
    const auto yaw = condition_gyro(project_to_ground(resampled, gravity), config);
    return detect_turns(integrate_heading(yaw, config), config);
}

std::string turns_to_jsonl(const std::vector<TurnEvent>& turns) {
    std::string out;
    for (const auto& t : turns) {
        nlohmann::json j;
        j["t_begin_ns"] = t.t_begin;
        j["t_end_ns"] = t.t_end;
        j["angle_deg"] = t.angle_deg;
        j["count"] = t.count;
        j["direction"] = std::string(1, static_cast<char>(t.direction()));
        out += j.dump() + '\n';
    }
    return out;
}

std::vector<TurnEvent> parse_turns_jsonl(const std::string& text) {
    std::vector<TurnEvent> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        TurnEvent ev;
        try {
            const auto j = nlohmann::json::parse(line);
            ev.t_begin = j.at("t_begin_ns").get<Timestamp>();
            ev.t_end = j.at("t_end_ns").get<Timestamp>();
            ev.angle_deg = j.at("angle_deg").get<double>();
            ev.count = j.at("count").get<int>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::ParseError, e.what(), line_no);
        }
        if (ev.t_end < ev.t_begin || ev.count < 0) fail(ErrorCode::ParseError, "inconsistent turn event", line_no);
        if (!out.empty() && ev.t_begin < out.back().t_begin)
            fail(ErrorCode::ParseError, "turn events out of order", line_no);
        out.push_back(ev);
    }
    return out;
}

} // namespace stash
