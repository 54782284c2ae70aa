#include "stash/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "stash/error.hpp"

namespace stash {

namespace {

using Setter = std::function<void(const toml::node&, const std::string&)>;

[[noreturn]] void bad_type(const std::string& key, const char* expected) {
    fail(ErrorCode::ConfigError, "key '" + key + "' must be " + expected);
}

Setter real(double& target) {
    return [&target](const toml::node& n, const std::string& key) {
        if (auto v = n.value<double>()) target = *v;
        else bad_type(key, "a number");
    };
}

Setter integer(int& target) {
    return [&target](const toml::node& n, const std::string& key) {
        if (!n.is_integer()) bad_type(key, "an integer");
        target = static_cast<int>(*n.value<std::int64_t>());
    };
}

Setter flag(bool& target) {
    return [&target](const toml::node& n, const std::string& key) {
        if (!n.is_boolean()) bad_type(key, "a boolean");
        target = *n.value<bool>();
    };
}

void apply(const toml::table& table, const std::map<std::string, Setter>& setters, const std::string& prefix) {
    for (const auto& [k, node] : table) {
        const std::string key = prefix + std::string(k.str());
        const auto it = setters.find(std::string(k.str()));
        if (it == setters.end()) fail(ErrorCode::ConfigError, "unknown key '" + key + "'");
        it->second(node, key);
    }
}

} // namespace

Config parse_config(const std::string& toml_text, const std::string& source) {
    toml::table root;
    try {
        root = toml::parse(toml_text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e.description() << " (" << e.source().begin << ")";
        fail(ErrorCode::ConfigError, msg.str());
    }

    Config cfg;
    auto& det = cfg.pipeline.turns;
    auto& grav = cfg.pipeline.gravity;
    auto section = [](std::map<std::string, Setter> setters) {
        return Setter([s = std::move(setters)](const toml::node& n, const std::string& key) {
            const auto* t = n.as_table();
            if (!t) bad_type(key, "a table");
            apply(*t, s, key + ".");
        });
    };

    std::map<std::string, Setter> top = {
        {"seed",
         [&](const toml::node& n, const std::string& key) {
             if (!n.is_integer() || *n.value<std::int64_t>() < 0) bad_type(key, "a non-negative integer");
             cfg.seed = static_cast<std::uint64_t>(*n.value<std::int64_t>());
         }},
        {"alpha", real(cfg.alpha)},
        {"max_attempts", integer(cfg.max_attempts)},
        {"path_length_min", real(cfg.path_length_min)},
        {"sampling", section({{"resample_hz", real(cfg.pipeline.resample_hz)}})},
        {"gravity", section({{"time_constant_s", real(grav.time_constant_s)},
                             {"settle_window_s", real(grav.settle_window_s)},
                             {"step_threshold_deg", real(grav.step_threshold_deg)},
                             {"fast_time_constant_s", real(grav.fast_time_constant_s)}})},
        {"detector", section({{"sigma1_deg", real(det.sigma1_deg)},
                              {"sigma2_deg", real(det.sigma2_deg)},
                              {"window_s", real(det.window_s)},
                              {"granularity_deg", real(det.granularity_deg)},
                              {"highpass_floor_dps", real(det.highpass_floor_dps)},
                              {"flatten_std", real(det.flatten_std)},
                              {"stability_gate", flag(det.stability_gate)}})},
        {"hmm", section({{"emit_moving", real(cfg.hmm.emit_moving)},
                         {"emit_still", real(cfg.hmm.emit_still)},
                         {"stay_moving", real(cfg.hmm.stay_moving)},
                         {"stay_still", real(cfg.hmm.stay_still)},
                         {"initial_moving", real(cfg.hmm.initial_moving)}})},
        {"scoring", section({{"match", integer(cfg.scoring.match)},
                             {"mismatch", integer(cfg.scoring.mismatch)},
                             {"gap", integer(cfg.scoring.gap)}})},
        {"noise", section({{"p_drop", real(cfg.noise.p_drop)},
                           {"p_insert", real(cfg.noise.p_insert)},
                           {"turn_jitter_deg", real(cfg.noise.turn_jitter_deg)}})},
        {"repository", section({{"between_samples", integer(cfg.between_samples)}})},
    };
    apply(root, top, "");

    if (cfg.max_attempts < 1) fail(ErrorCode::ConfigError, "max_attempts must be at least 1");
    if (!(cfg.path_length_min > 0.0)) fail(ErrorCode::ConfigError, "path_length_min must be positive");
    if (cfg.between_samples < 1) fail(ErrorCode::ConfigError, "between_samples must be at least 1");
    try {
        InitialThresholdTable::builtin().coefficients(cfg.alpha);
        det.validate();
        cfg.hmm.validate();
        cfg.noise.validate();
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, e.what());
    }
    return cfg;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::string default_config_toml() {
    const Config c;
    const auto& d = c.pipeline.turns;
    const auto& g = c.pipeline.gravity;
    std::ostringstream out;
    out << "seed = " << c.seed << "\nalpha = " << c.alpha << "\nmax_attempts = " << c.max_attempts
        << "\npath_length_min = " << c.path_length_min << "\n\n[sampling]\nresample_hz = " << c.pipeline.resample_hz
        << "\n\n[gravity]\ntime_constant_s = " << g.time_constant_s << "\nsettle_window_s = " << g.settle_window_s
        << "\nstep_threshold_deg = " << g.step_threshold_deg << "\nfast_time_constant_s = " << g.fast_time_constant_s
        << "\n\n[detector]\nsigma1_deg = " << d.sigma1_deg << "\nsigma2_deg = " << d.sigma2_deg
        << "\nwindow_s = " << d.window_s << "\ngranularity_deg = " << d.granularity_deg
        << "\nhighpass_floor_dps = " << d.highpass_floor_dps << "\nflatten_std = " << d.flatten_std
        << "\nstability_gate = " << (d.stability_gate ? "true" : "false") << "\n\n[hmm]\nemit_moving = "
        << c.hmm.emit_moving << "\nemit_still = " << c.hmm.emit_still << "\nstay_moving = " << c.hmm.stay_moving
        << "\nstay_still = " << c.hmm.stay_still << "\ninitial_moving = " << c.hmm.initial_moving
        << "\n\n[scoring]\nmatch = " << c.scoring.match << "\nmismatch = " << c.scoring.mismatch
        << "\ngap = " << c.scoring.gap << "\n\n[noise]\np_drop = " << c.noise.p_drop
        << "\np_insert = " << c.noise.p_insert << "\nturn_jitter_deg = " << c.noise.turn_jitter_deg
        << "\n\n[repository]\nbetween_samples = " << c.between_samples << "\n";
    return out.str();
}

} // namespace stash
