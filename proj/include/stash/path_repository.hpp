#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stash/alignment.hpp"
#include "stash/path_model.hpp"
#include "stash/threshold_manager.hpp"
#include "stash/trajectory.hpp"

namespace stash {

struct ReferencePath {
    std::string verifier_id;
    /// S-stripped, trimmed to `length_min`.
    std::vector<PrimitiveSequence> instances;
    std::size_t medoid_index = 0;
    ThresholdState threshold;
    double length_min = 2.0;

    const PrimitiveSequence& medoid() const { return instances.at(medoid_index); }
    /// Similarity of a candidate to this path: NW against the medoid only.
    int score(const PrimitiveSequence& candidate, const ScoringScheme& scheme = {}) const;

    friend bool operator==(const ReferencePath&, const ReferencePath&) = default;
};

struct Repository {
    static constexpr int kVersion = 1;
    std::map<std::string, std::vector<ReferencePath>> paths;

    const std::vector<ReferencePath>& paths_for(const std::string& verifier_id) const;
    std::size_t instance_count() const;

    friend bool operator==(const Repository&, const Repository&) = default;
};

/// Strip stationary blocks, then keep the last `length_min` minutes.
/// Throws EmptySequence if nothing is left.
PrimitiveSequence prepare_instance(const PrimitiveSequence& seq, double length_min);

/// n = 1, d = d_i = initial_threshold(L, alpha).
ReferencePath make_reference_path(const std::string& verifier_id, const PrimitiveSequence& sequence,
                                  double length_min, double alpha = kDefaultAlpha);

/// Adds a new reference path; returns its index among the verifier's paths.
std::size_t enroll(Repository& repo, const std::string& verifier_id, const PrimitiveSequence& sequence,
                   double length_min, double alpha = kDefaultAlpha);

/// argmax_i sum_{j != i} matrix[i][j]; ties go to the lowest index.
std::size_t select_medoid(const ScoreMatrix& matrix);

struct UpdateOptions {
    int between_samples = 200;
    double alpha = kDefaultAlpha;
    /// Defaults to a seed derived from the verifier id and the new instance count.
    std::optional<std::uint64_t> seed;
};

std::uint64_t between_sample_seed(const std::string& verifier_id, std::int64_t n);

/// Append a confirmed candidate, re-select the medoid and refresh the local
/// threshold from instance-pair scores against Markov-generated impostors.
ReferencePath confirm_and_update(const ReferencePath& path, const PrimitiveSequence& candidate,
                                 const MarkovChain& chain, const UpdateOptions& options = {});

/// Chain over every instance stored in the repository (plus `extra`, if any).
MarkovChain fit_repository_chain(const Repository& repo, const PrimitiveSequence* extra = nullptr);

/// Repository-level confirmation; the Markov chain is fitted on all stored instances
/// and the candidate. Throws NoReferencePath for an unknown path.
void confirm(Repository& repo, const std::string& verifier_id, std::size_t path_index,
             const PrimitiveSequence& candidate, const UpdateOptions& options = {});

std::string repository_to_json(const Repository& repo);
/// Throws VersionMismatch or CorruptFile.
Repository repository_from_json(const std::string& text);
void save_repository(const Repository& repo, const std::filesystem::path& path);
/// A missing file yields an empty repository.
Repository load_repository(const std::filesystem::path& path);

} // namespace stash
