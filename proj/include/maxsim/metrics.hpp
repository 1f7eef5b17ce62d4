#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maxsim/jsonl.hpp"
#include "maxsim/simkernel.hpp"
#include "maxsim/types.hpp"

namespace maxsim {

// ---------------------------------------------------------------------------
// Ranking and average precision

/// Permutation of [0, n): positions ordered by descending score, exact ties
/// by ascending id. Empty-set sentinels sort last by plain ordering.
std::vector<int> rank(const std::vector<float>& scores,
                      const std::vector<std::string>& ids);

/// Uninterpolated AP: mean over relevant ranks k of precision@k. Returns
/// nullopt when nothing is relevant (the query is excluded from means and
/// counted separately).
std::optional<double> average_precision(const std::vector<bool>& ranked_relevance);

// ---------------------------------------------------------------------------
// Reports

struct QueryScore {
  std::string query_id;
  std::string group;  // unified pair-class or opposite-pair id
  std::optional<double> ap;  // fraction in [0,1]; nullopt when R = 0
};

struct EvaluationReport {
  Protocol protocol = Protocol::kInterPair;
  bool constrained = false;
  /// mAP / Pair-mAP / accuracy as a percentage in [0, 100].
  double overall_pct = 0;
  /// Inter-pair: mean AP per unified class. Intra-pair: mAP_p per pair.
  std::map<std::string, double> per_group_pct;
  int scored_queries = 0;
  int skipped_queries = 0;  // R = 0, reported but never averaged
  std::vector<QueryScore> per_query;
  std::string config_fingerprint;

  Json to_json() const;
  /// Flat per-query CSV (query_id, group, ap) for external plotting.
  std::string per_query_csv() const;
};

/// Percentage with one decimal, as the tables report it.
std::string format_pct(double pct);

// ---------------------------------------------------------------------------
// Protocol evaluations

/// One-versus-all retrieval over unified pair classes. Database per query:
/// every sample (or every query under constrained evaluation) except the
/// query itself; relevant = same pair class. Overall = sample-level mAP.
EvaluationReport inter_pair_map(const BenchmarkManifest& manifest,
                                const SimilarityMatrix& matrix,
                                bool constrained);

/// Opposite-pair retrieval (the Pair-mAP protocol): per query the database
/// is its own pair's samples minus itself, relevant = same action, and the
/// overall value is the unweighted mean of the per-pair mAPs.
EvaluationReport pair_map(const BenchmarkManifest& manifest,
                          const SimilarityMatrix& matrix);

/// Exact-match percentage.
double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& gold);

// ---------------------------------------------------------------------------
// Random baseline

struct BaselineResult {
  double mean_pct = 0;
  double stderr_pct = 0;
  int trials = 0;
  std::vector<double> per_trial_pct;
};

/// Monte-Carlo expectation of the manifest's protocol metric under i.i.d.
/// uniform scores. `protocol` must match the manifest and is taken
/// explicitly so call sites state what they are estimating.
BaselineResult random_baseline(const BenchmarkManifest& manifest,
                               Protocol protocol, int trials,
                               std::uint64_t seed = 20240817);

// ---------------------------------------------------------------------------
// Relevance layout shared by evaluators and the baseline simulation

struct QueryTask {
  int sample_index = 0;  // into manifest.samples
  std::string group;
  std::vector<int> db;           // sample indices, ascending (= id order)
  std::vector<std::uint8_t> relevant;  // parallel to db
  int r = 0;                     // number of relevant entries
};

/// Materializes the per-query database and relevance sets for a manifest.
std::vector<QueryTask> relevance_tasks(const BenchmarkManifest& manifest,
                                       bool constrained);

}  // namespace maxsim
