#pragma once

// Synthetic benchmark construction for tests: manifests that reproduce the
// published per-class sample counts, plus embedding assignments (one-hot /
// random) used to exercise scoring end to end without any model.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "maxsim/types.hpp"

namespace synthetic {

// Per-action sample counts of the intra-pair benchmark (2,300 in total).
const std::vector<std::pair<std::string, int>>& intra_action_counts();

// Query counts per unified inter-pair class (1,423 in total) together with
// the distractor count (8,459) that brings the database to 9,882 samples.
struct InterPairCounts {
  std::vector<std::pair<std::string, int>> per_pair;
  int distractors = 0;
};
const InterPairCounts& inter_pair_counts();

// Intra-pair manifest with the published counts: queries only, labeled by
// action, deterministic sample ids.
maxsim::BenchmarkManifest intra_manifest();

// Inter-pair manifest with the published counts: labeled queries plus
// unlabeled distractors. `constrained` restricts the database to queries.
maxsim::BenchmarkManifest inter_manifest(bool constrained);

// Smaller manifests for fast tests: count_scale divides every class count
// (minimum 1 sample per class).
maxsim::BenchmarkManifest scaled_intra_manifest(int divisor);
maxsim::BenchmarkManifest scaled_inter_manifest(int divisor, bool constrained);

// One-hot embedding per sample keyed by its class: samples of the same
// label get identical unit vectors, distinct labels orthogonal ones.
// Distractors get a dedicated coordinate. Used for perfect-retrieval checks.
std::vector<std::vector<float>> one_hot_embeddings(
    const maxsim::BenchmarkManifest& manifest);

}  // namespace synthetic
