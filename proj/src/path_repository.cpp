#include "stash/path_repository.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stash/error.hpp"

namespace stash {

int ReferencePath::score(const PrimitiveSequence& candidate, const ScoringScheme& scheme) const {
    return needleman_wunsch(medoid(), candidate, scheme).value;
}

const std::vector<ReferencePath>& Repository::paths_for(const std::string& verifier_id) const {
    const auto it = paths.find(verifier_id);
    if (it == paths.end() || it->second.empty())
        fail(ErrorCode::NoReferencePath, "no reference path enrolled for verifier " + verifier_id);
    return it->second;
}

std::size_t Repository::instance_count() const {
    std::size_t n = 0;
    for (const auto& [id, list] : paths)
        for (const auto& p : list) n += p.instances.size();
    return n;
}

PrimitiveSequence prepare_instance(const PrimitiveSequence& seq, double length_min) {
    const auto stripped = strip_stationary(seq);
    if (stripped.empty()) fail(ErrorCode::EmptySequence, "sequence has no moving primitives");
    auto trimmed = trim_to_duration(stripped, length_min * 60.0);
    if (trimmed.empty()) fail(ErrorCode::EmptySequence, "sequence is empty after trimming");
    return trimmed;
}

ReferencePath make_reference_path(const std::string& verifier_id, const PrimitiveSequence& sequence,
                                  double length_min, double alpha) {
    ReferencePath path;
    path.verifier_id = verifier_id;
    path.length_min = length_min;
    path.instances.push_back(prepare_instance(sequence, length_min));
    path.medoid_index = 0;
    path.threshold = ThresholdState::initial(initial_threshold(length_min, alpha));
    return path;
}

std::size_t enroll(Repository& repo, const std::string& verifier_id, const PrimitiveSequence& sequence,
                   double length_min, double alpha) {
    auto path = make_reference_path(verifier_id, sequence, length_min, alpha);
    auto& list = repo.paths[verifier_id];
    list.push_back(std::move(path));
    return list.size() - 1;
}

std::size_t select_medoid(const ScoreMatrix& matrix) {
    std::size_t best = 0;
    long long best_sum = 0;
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        long long sum = 0;
        for (std::size_t j = 0; j < matrix[i].size(); ++j)
            if (j != i) sum += matrix[i][j];
        if (i == 0 || sum > best_sum) {
            best = i;
            best_sum = sum;
        }
    }
    return best;
}

std::uint64_t between_sample_seed(const std::string& verifier_id, std::int64_t n) {
    return mix_seed(fnv1a(verifier_id), static_cast<std::uint64_t>(n));
}

ReferencePath confirm_and_update(const ReferencePath& path, const PrimitiveSequence& candidate,
                                 const MarkovChain& chain, const UpdateOptions& options) {
    ReferencePath out = path;
    out.instances.push_back(prepare_instance(candidate, path.length_min));
    const auto n = static_cast<std::int64_t>(out.instances.size());

    const auto matrix = pairwise_matrix(out.instances);
    out.medoid_index = select_medoid(matrix);

    std::vector<int> within;
    for (std::size_t i = 0; i < matrix.size(); ++i)
        for (std::size_t j = i + 1; j < matrix.size(); ++j) within.push_back(matrix[i][j]);

    // Impostor paths come from the generative model rather than other users'
    // data, so the local threshold cannot overfit to the stored instances.
    const auto medoid = out.medoid().symbols();
    Rng rng(options.seed.value_or(between_sample_seed(path.verifier_id, n)));
    std::vector<int> between;
    between.reserve(static_cast<std::size_t>(std::max(options.between_samples, 1)));
    for (int k = 0; k < std::max(options.between_samples, 1); ++k)
        between.push_back(nw_score(medoid, sample_path(chain, medoid.size(), rng)));

    out.threshold.n = n;
    out.threshold.d_l = local_threshold(within, between, options.alpha);
    out.threshold.refresh();
    return out;
}

MarkovChain fit_repository_chain(const Repository& repo, const PrimitiveSequence* extra) {
    std::vector<std::vector<Symbol>> all;
    for (const auto& [id, list] : repo.paths)
        for (const auto& p : list)
            for (const auto& inst : p.instances) all.push_back(inst.symbols());
    if (extra) all.push_back(extra->symbols());
    return fit_markov(all);
}

void confirm(Repository& repo, const std::string& verifier_id, std::size_t path_index,
             const PrimitiveSequence& candidate, const UpdateOptions& options) {
    auto it = repo.paths.find(verifier_id);
    if (it == repo.paths.end() || path_index >= it->second.size())
        fail(ErrorCode::NoReferencePath, "no reference path " + std::to_string(path_index) + " for verifier " +
                                             verifier_id);
    const auto prepared = prepare_instance(candidate, it->second[path_index].length_min);
    const auto chain = fit_repository_chain(repo, &prepared);
    it->second[path_index] = confirm_and_update(it->second[path_index], prepared, chain, options);
}

namespace {

nlohmann::json sequence_json(const PrimitiveSequence& seq) {
    std::vector<Timestamp> t;
    t.reserve(seq.size());
    for (const auto& p : seq) t.push_back(p.t);
    return {{"symbols", seq.text()}, {"t_ns", t}};
}

PrimitiveSequence sequence_from_json(const nlohmann::json& j) {
    const auto text = j.at("symbols").get<std::string>();
    const auto t = j.at("t_ns").get<std::vector<Timestamp>>();
    if (text.size() != t.size()) fail(ErrorCode::CorruptFile, "symbol and timestamp counts differ");
    std::vector<Primitive> out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto s = symbol_from_char(text[i]);
        if (!s) fail(ErrorCode::CorruptFile, "unknown primitive symbol in repository");
        out.push_back({*s, t[i]});
    }
    try {
        return PrimitiveSequence(std::move(out));
    } catch (const Error& e) {
        fail(ErrorCode::CorruptFile, e.what());
    }
}

} // namespace

std::string repository_to_json(const Repository& repo) {
    nlohmann::json j;
    j["format"] = "stash-repository";
    j["version"] = Repository::kVersion;
    j["verifiers"] = nlohmann::json::object();
    for (const auto& [id, list] : repo.paths) {
        auto arr = nlohmann::json::array();
        for (const auto& p : list) {
            nlohmann::json jp;
            jp["length_min"] = p.length_min;
            jp["medoid_index"] = p.medoid_index;
            jp["threshold"] = {{"d_i", p.threshold.d_i},
                               {"d_l", p.threshold.d_l ? nlohmann::json(*p.threshold.d_l) : nlohmann::json()},
                               {"n", p.threshold.n},
                               {"lambda", p.threshold.lambda},
                               {"d", p.threshold.d}};
            jp["instances"] = nlohmann::json::array();
            for (const auto& inst : p.instances) jp["instances"].push_back(sequence_json(inst));
            arr.push_back(std::move(jp));
        }
        j["verifiers"][id] = std::move(arr);
    }
    return j.dump(2);
}

Repository repository_from_json(const std::string& text) {
    Repository repo;
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_object() || j.value("format", "") != "stash-repository")
            fail(ErrorCode::CorruptFile, "not a repository file");
        if (j.at("version").get<int>() != Repository::kVersion)
            fail(ErrorCode::VersionMismatch, "repository version " + j.at("version").dump() + " is not supported");
        for (const auto& [id, arr] : j.at("verifiers").items()) {
            auto& list = repo.paths[id];
            for (const auto& jp : arr) {
                ReferencePath p;
                p.verifier_id = id;
                p.length_min = jp.at("length_min").get<double>();
                p.medoid_index = jp.at("medoid_index").get<std::size_t>();
                const auto& th = jp.at("threshold");
                p.threshold.d_i = th.at("d_i").get<double>();
                if (!th.at("d_l").is_null()) p.threshold.d_l = th.at("d_l").get<double>();
                p.threshold.n = th.at("n").get<std::int64_t>();
                p.threshold.lambda = th.at("lambda").get<double>();
                p.threshold.d = th.at("d").get<double>();
                for (const auto& ji : jp.at("instances")) p.instances.push_back(sequence_from_json(ji));
                if (p.instances.empty() || p.medoid_index >= p.instances.size())
                    fail(ErrorCode::CorruptFile, "reference path medoid index out of range");
                if (p.threshold.n != static_cast<std::int64_t>(p.instances.size()))
                    fail(ErrorCode::CorruptFile, "threshold instance count disagrees with stored instances");
                list.push_back(std::move(p));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::CorruptFile, e.what());
    }
    return repo;
}

void save_repository(const Repository& repo, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << repository_to_json(repo) << '\n';
}

Repository load_repository(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return repository_from_json(buf.str());
}

} // namespace stash
