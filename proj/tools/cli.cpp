#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <optional>

#include <CLI11.hpp>

#include "stash/alignment.hpp"
#include "stash/auth_protocol.hpp"
#include "stash/config.hpp"
#include "stash/error.hpp"
#include "stash/eval_harness.hpp"
#include "stash/imu_ingest.hpp"
#include "stash/path_model.hpp"
#include "stash/path_repository.hpp"
#include "stash/pipeline.hpp"
#include "stash/synthetic_imu.hpp"

namespace stash::cli {

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    std::string out;
};

struct Context {
    Config config;
    std::uint64_t seed = 42;
    std::string out;
    std::ostream& os;
};

MovementClassifier classifier_for(const std::string& model_path, const Context& ctx) {
    MovementClassifier c = model_path.empty() ? default_classifier(ctx.seed) : load_classifier(model_path);
    c.hmm = ctx.config.hmm;
    return c;
}

void write_or_print(const PrimitiveSequence& seq, const Context& ctx) {
    if (ctx.out.empty()) serialize(seq, ctx.os);
    else save_sequence(seq, ctx.out);
}

void write_text(const std::string& text, const Context& ctx) {
    if (ctx.out.empty()) {
        ctx.os << text;
        return;
    }
    std::ofstream file(ctx.out);
    if (!file) fail(ErrorCode::IoError, "cannot write " + ctx.out);
    file << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Trajectory-gated transparent authentication toolkit", "stash"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "TOML configuration file");
    g.seed_opt = app.add_option("--seed", g.seed, "Seed for every random choice");
    app.add_option("--out", g.out, "Output path");
    app.fallthrough();

    // ingest
    std::string ingest_in;
    double ingest_hz = 0.0;
    auto* ingest = app.add_subcommand("ingest", "Load a recording, resample it and write it out");
    ingest->add_option("recording", ingest_in, "CSV or JSONL recording")->required();
    ingest->add_option("--rate,--hz", ingest_hz, "Target rate in Hz (default from config)");

    // classify
    std::string classify_in, model_path;
    auto* classify = app.add_subcommand("classify", "Per-5 s moving/stationary primitives");
    classify->add_option("recording", classify_in)->required();
    classify->add_option("--model", model_path, "Movement model JSON (default: trained on synthetic walks)");

    // turns
    std::string turns_in;
    auto* turns = app.add_subcommand("turns", "Detect and quantize turns");
    turns->add_option("recording", turns_in)->required();

    // seq
    auto* seq = app.add_subcommand("seq", "Primitive sequence tools");
    seq->require_subcommand(1);
    std::string seq_extract_in, seq_model, seq_strip_in, seq_trim_in, seq_show_in, merge_movement, merge_turns;
    double trim_len = 0.0;
    auto* seq_extract = seq->add_subcommand("extract", "Full pipeline: recording to merged primitives");
    seq_extract->add_option("recording", seq_extract_in)->required();
    seq_extract->add_option("--model", seq_model);
    auto* seq_merge = seq->add_subcommand("merge", "Combine M/S blocks with turn events");
    seq_merge->add_option("movement", merge_movement, "M/S sequence from `classify`")->required();
    seq_merge->add_option("turns", merge_turns, "Turn events (JSONL) from `turns`")->required();
    auto* seq_strip = seq->add_subcommand("strip", "Drop stationary primitives");
    seq_strip->add_option("sequence", seq_strip_in)->required();
    auto* seq_trim = seq->add_subcommand("trim", "Keep the last L minutes");
    seq_trim->add_option("sequence", seq_trim_in)->required();
    seq_trim->add_option("--length-min", trim_len, "Length in minutes (default from config)");
    auto* seq_show = seq->add_subcommand("show", "Print symbols and duration");
    seq_show->add_option("sequence", seq_show_in)->required();

    // compare
    std::string cmp_a, cmp_b;
    auto* compare = app.add_subcommand("compare", "Needleman-Wunsch similarity of two sequences");
    compare->add_option("a", cmp_a)->required();
    compare->add_option("b", cmp_b)->required();

    // synth
    int synth_routes = 20, synth_instances = 8;
    double synth_min = 6.0, synth_max = 12.0;
    std::string synth_recording;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    synth->add_option("--routes", synth_routes);
    synth->add_option("--instances", synth_instances);
    synth->add_option("--min-minutes", synth_min);
    synth->add_option("--max-minutes", synth_max);
    synth->add_option("--recording", synth_recording, "Also write an IMU recording of the first route");

    // enroll
    std::string repo_path = "repository.json", verifier_id, enroll_seq;
    double enroll_len = 0.0;
    auto* enroll_cmd = app.add_subcommand("enroll", "Add a sequence as a new reference path");
    enroll_cmd->add_option("sequence", enroll_seq)->required();
    enroll_cmd->add_option("--repo", repo_path);
    enroll_cmd->add_option("--verifier", verifier_id)->required();
    enroll_cmd->add_option("--length-min", enroll_len);

    // verify
    std::string verify_seq;
    bool verify_confirm = false;
    std::optional<Timestamp> verify_now;
    auto* verify = app.add_subcommand("verify", "Run the proximity gate on a live sequence");
    verify->add_option("sequence", verify_seq)->required();
    verify->add_option("--repo", repo_path);
    verify->add_option("--verifier", verifier_id)->required();
    verify->add_option("--now-ns", verify_now, "Gate time (default: last primitive)");
    verify->add_flag("--confirm", verify_confirm, "On failure, confirm explicitly and add the sequence");

    // simulate
    std::string scenario_name = "benign", transport_name = "inproc";
    int latency_ms = 0, sessions = 1;
    auto* simulate = app.add_subcommand("simulate", "Simulate an authentication session");
    simulate->add_option("--scenario", scenario_name)->check(CLI::IsMember({"benign", "relay", "relay-nogate"}));
    simulate->add_option("--transport", transport_name)->check(CLI::IsMember({"inproc", "tcp"}));
    simulate->add_option("--latency-ms", latency_ms);
    simulate->add_option("--sessions", sessions);

    // eval
    std::string corpus_dir, sweep_name = "length";
    std::optional<double> eval_alpha;
    auto* eval = app.add_subcommand("eval", "Evaluate a corpus");
    eval->add_option("--corpus", corpus_dir)->required();
    eval->add_option("--sweep", sweep_name)->check(CLI::IsMember({"length", "instances", "alpha", "scheme", "loro"}));
    eval->add_option("--alpha", eval_alpha);

    // repo
    auto* repo = app.add_subcommand("repo", "Repository tools");
    repo->require_subcommand(1);
    auto* repo_show = repo->add_subcommand("show", "Summarize the repository");
    repo_show->add_option("--repo", repo_path);

    // train
    int train_recordings = 6;
    auto* train = app.add_subcommand("train", "Train the movement classifier on synthetic walks");
    train->add_option("--recordings", train_recordings);

    // config
    auto* config_cmd = app.add_subcommand("config", "Print the default configuration");

    std::vector<const char*> argv{"stash"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        Context ctx{g.config_path.empty() ? Config{} : load_config(g.config_path), 42, g.out, out};
        ctx.seed = g.seed_opt->count() ? g.seed : ctx.config.seed;
        const auto& cfg = ctx.config;

        if (*ingest) {
            auto rec = resample(load_recording(ingest_in, format_for(ingest_in)),
                                ingest_hz > 0 ? ingest_hz : cfg.pipeline.resample_hz);
            if (ctx.out.empty()) write_recording(rec, out, RecordingFormat::Csv);
            else save_recording(rec, ctx.out, format_for(ctx.out));
            err << "samples: " << rec.size() << ", duration: " << rec.duration_s() << " s\n";
        } else if (*classify) {
            const auto rec = resample(load_recording(classify_in, format_for(classify_in)), cfg.pipeline.resample_hz);
            const auto grav = estimate_gravity(rec, cfg.pipeline.gravity);
            write_or_print(PrimitiveSequence(classifier_for(model_path, ctx).classify(rec, grav)), ctx);
        } else if (*turns) {
            const auto rec = resample(load_recording(turns_in, format_for(turns_in)), cfg.pipeline.resample_hz);
            const auto grav = estimate_gravity(rec, cfg.pipeline.gravity);
            write_text(turns_to_jsonl(detect_turns(rec, grav, cfg.pipeline.turns)), ctx);
        } else if (*seq_extract) {
            const auto raw = load_recording(seq_extract_in, format_for(seq_extract_in));
            write_or_print(extract_primitives(raw, classifier_for(seq_model, ctx), cfg.pipeline).sequence, ctx);
        } else if (*seq_merge) {
            const auto movement = load_sequence(merge_movement);
            write_or_print(merge_streams(movement.primitives(), parse_turns_jsonl(read_text(merge_turns))), ctx);
        } else if (*seq_strip) {
            write_or_print(strip_stationary(load_sequence(seq_strip_in)), ctx);
        } else if (*seq_trim) {
            const double len = trim_len > 0 ? trim_len : cfg.path_length_min;
            write_or_print(trim_to_duration(load_sequence(seq_trim_in), len * 60.0), ctx);
        } else if (*seq_show) {
            const auto s = load_sequence(seq_show_in);
            out << s.text() << '\n' << s.size() << " primitives over " << s.duration_s() << " s\n";
        } else if (*compare) {
            const auto a = strip_stationary(load_sequence(cmp_a));
            const auto b = strip_stationary(load_sequence(cmp_b));
            out << needleman_wunsch(a, b, cfg.scoring).value << '\n';
        } else if (*synth) {
            if (ctx.out.empty()) fail(ErrorCode::InvalidArgument, "synth needs --out <dir>");
            const auto corpus =
                synthesize_corpus(synth_routes, synth_instances, {synth_min, synth_max}, cfg.noise, ctx.seed);
            save_corpus(corpus, ctx.out);
            out << "wrote " << corpus.routes.size() << " routes x " << synth_instances << " instances to " << ctx.out
                << '\n';
            if (!synth_recording.empty()) {
                const auto rec = synthesize_recording(corpus.routes.front().events, {}, mix_seed(ctx.seed, 1));
                save_recording(rec.stream, synth_recording, format_for(synth_recording));
                out << "wrote recording of route 0 (" << rec.stream.size() << " samples) to " << synth_recording
                    << '\n';
            }
        } else if (*enroll_cmd) {
            auto repository = load_repository(repo_path);
            const double len = enroll_len > 0 ? enroll_len : cfg.path_length_min;
            const auto idx = enroll(repository, verifier_id, load_sequence(enroll_seq), len, cfg.alpha);
            save_repository(repository, repo_path);
            const auto& p = repository.paths.at(verifier_id)[idx];
            out << "enrolled path " << idx << " for " << verifier_id << ": " << p.medoid().size()
                << " primitives, threshold " << p.threshold.d << '\n';
        } else if (*verify) {
            auto repository = load_repository(repo_path);
            const auto live = load_sequence(verify_seq);
            const Timestamp now = verify_now.value_or(live.empty() ? 0 : live.primitives().back().t);
            const auto decision = verify_proximity(repository.paths_for(verifier_id), static_source(live), now,
                                                   cfg.max_attempts, cfg.scoring);
            out << (decision.pass ? "PASS" : "FAIL") << " attempts=" << decision.attempts_used;
            if (decision.best_score) out << " best_score=" << *decision.best_score;
            if (decision.path_index) out << " path=" << *decision.path_index;
            out << '\n';
            if (!decision.pass && verify_confirm) {
                UpdateOptions opts;
                opts.alpha = cfg.alpha;
                opts.between_samples = cfg.between_samples;
                confirm(repository, verifier_id, decision.path_index.value_or(0), trim_window(live, 1e9, now), opts);
                save_repository(repository, repo_path);
                out << "confirmed explicitly; sequence added to the reference path\n";
            }
        } else if (*simulate) {
            const auto scenario = *scenario_from_string(scenario_name);
            ScenarioOptions opts;
            opts.transport = *transport_from_string(transport_name);
            opts.relay_latency = std::chrono::milliseconds(latency_ms);
            auto setup = make_demo_setup(ctx.seed, 4, cfg.path_length_min);
            for (int s = 0; s < std::max(1, sessions); ++s) {
                opts.session_seed = mix_seed(ctx.seed, static_cast<std::uint64_t>(s));
                const auto result = run_scenario(scenario, setup, opts);
                for (const auto& line : result.outcome.transcript) out << line << '\n';
                if (!result.relayed.empty()) out << "relay: forwarded " << result.relayed.size() << " frame(s)\n";
                out << "outcome: " << to_string(result.outcome.result)
                    << " verifier_accepted=" << (result.outcome.verifier_accepted ? "yes" : "no") << '\n';
            }
        } else if (*eval) {
            const auto corpus = load_corpus(corpus_dir);
            EvalReport report;
            if (sweep_name == "loro") {
                LoroOptions o;
                o.alpha = eval_alpha.value_or(cfg.alpha);
                o.eval_length_min = cfg.path_length_min;
                report = leave_one_route_out(corpus, o);
            } else {
                SweepOptions o;
                o.alpha = eval_alpha.value_or(cfg.alpha);
                o.length_min = cfg.path_length_min;
                o.between_samples = cfg.between_samples;
                o.seed = ctx.seed;
                report = sweep(corpus, *sweep_axis_from_string(sweep_name), o);
            }
            if (ctx.out.empty()) {
                out << report_summary_csv(report);
            } else {
                const auto summary = emit_report(report, ctx.out);
                out << report_summary_csv(report) << "wrote " << ctx.out << " and " << summary.string() << '\n';
            }
        } else if (*repo_show) {
            const auto repository = load_repository(repo_path);
            for (const auto& [id, list] : repository.paths)
                for (std::size_t i = 0; i < list.size(); ++i) {
                    const auto& p = list[i];
                    out << id << '[' << i << "] L=" << p.length_min << " min n=" << p.threshold.n
                        << " medoid=" << p.medoid_index << " d_i=" << p.threshold.d_i;
                    if (p.threshold.d_l) out << " d_l=" << *p.threshold.d_l;
                    out << " lambda=" << p.threshold.lambda << " d=" << p.threshold.d << '\n';
                }
            if (repository.paths.empty()) out << "(empty repository)\n";
        } else if (*train) {
            TrainingSetOptions data;
            data.recordings = train_recordings;
            const auto result = train_synthetic_classifier(ctx.seed, cfg.pipeline, {}, data);
            out << "cross-validated accuracy " << result.cv.accuracy << " (moving recall "
                << result.cv.moving_recall << ", stationary recall " << result.cv.still_recall << ")\n";
            MovementClassifier c;
            c.model = result.model;
            c.hmm = cfg.hmm;
            if (ctx.out.empty()) out << classifier_to_json(c) << '\n';
            else save_classifier(c, ctx.out);
        } else if (*config_cmd) {
            out << default_config_toml();
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace stash::cli
