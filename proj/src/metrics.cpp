#include "maxsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <unordered_map>

namespace maxsim {

std::vector<int> rank(const std::vector<float>& scores,
                      const std::vector<std::string>& ids) {
  if (scores.size() != ids.size()) {
    throw Error(ErrorCode::kInconsistentInputs,
                "rank: " + std::to_string(scores.size()) + " scores for " +
                    std::to_string(ids.size()) + " ids");
  }
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  return order;
}

std::optional<double> average_precision(
    const std::vector<bool>& ranked_relevance) {
  int hits = 0;
  double sum = 0;
  for (size_t k = 0; k < ranked_relevance.size(); ++k) {
    if (!ranked_relevance[k]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  if (hits == 0) return std::nullopt;
  return sum / hits;
}

std::string format_pct(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", pct);
  return buf;
}

Json EvaluationReport::to_json() const {
  Json j;
  j["protocol"] = to_string(protocol);
  j["constrained"] = constrained;
  const char* metric = protocol == Protocol::kInterPair      ? "mAP"
                       : protocol == Protocol::kIntraPair    ? "pair_mAP"
                                                             : "accuracy";
  j["metric"] = metric;
  j["overall_pct"] = overall_pct;
  j["overall_display"] = format_pct(overall_pct);
  Json groups = Json::object();
  for (const auto& [g, v] : per_group_pct) {
    groups[g] = Json::object({{"pct", v}, {"display", format_pct(v)}});
  }
  j["per_group"] = groups;
  j["scored_queries"] = scored_queries;
  j["skipped_queries"] = skipped_queries;
  j["config_fingerprint"] = config_fingerprint;
  return j;
}

std::string EvaluationReport::per_query_csv() const {
  std::string out = "query_id,group,ap\n";
  char buf[64];
  for (const auto& q : per_query) {
    out += q.query_id;
    out += ',';
    out += q.group;
    out += ',';
    if (q.ap) {
      std::snprintf(buf, sizeof(buf), "%.17g", *q.ap);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::vector<QueryTask> relevance_tasks(const BenchmarkManifest& manifest,
                                       bool constrained) {
  const auto& samples = manifest.samples;
  std::vector<QueryTask> tasks;

  if (manifest.protocol == Protocol::kInterPair) {
    std::vector<int> db_pool;
    for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
      if (!constrained || samples[i].role == Role::kQuery) db_pool.push_back(i);
    }
    for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
      if (samples[i].role != Role::kQuery) continue;
      if (!samples[i].pair_id) {
        throw Error(ErrorCode::kInconsistentInputs,
                    "query " + samples[i].sample_id + " has no pair class");
      }
      QueryTask t;
      t.sample_index = i;
      t.group = *samples[i].pair_id;
      t.db.reserve(db_pool.size() - 1);
      for (int j : db_pool) {
        if (j == i) continue;  // a query never ranks itself
        t.db.push_back(j);
        bool rel = samples[j].pair_id && *samples[j].pair_id == t.group;
        t.relevant.push_back(rel ? 1 : 0);
        t.r += rel ? 1 : 0;
      }
      tasks.push_back(std::move(t));
    }
    return tasks;
  }

  if (manifest.protocol == Protocol::kIntraPair) {
    std::unordered_map<std::string, std::vector<int>> by_pair;
    for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
      if (!samples[i].pair_id || !samples[i].action) {
        throw Error(ErrorCode::kInconsistentInputs,
                    "sample " + samples[i].sample_id +
                        " lacks the action label this protocol ranks by");
      }
      by_pair[*samples[i].pair_id].push_back(i);
    }
    for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
      QueryTask t;
      t.sample_index = i;
      t.group = *samples[i].pair_id;
      const auto& members = by_pair[t.group];
      t.db.reserve(members.size() - 1);
      for (int j : members) {
        if (j == i) continue;
        t.db.push_back(j);
        bool rel = *samples[j].action == *samples[i].action;
        t.relevant.push_back(rel ? 1 : 0);
        t.r += rel ? 1 : 0;
      }
      tasks.push_back(std::move(t));
    }
    return tasks;
  }

  throw Error(ErrorCode::kInconsistentInputs,
              "relevance tasks exist only for retrieval protocols");
}

namespace {

// AP for one query given scores aligned with task.db (which is ascending by
// sample_id, so index order realizes the documented tie-break).
std::optional<double> task_ap(const QueryTask& task,
                              const std::vector<float>& scores) {
  if (task.r == 0) return std::nullopt;
  std::vector<int> order(task.db.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  int hits = 0;
  double sum = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (!task.relevant[order[k]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / task.r;
}

struct MatrixIndex {
  std::unordered_map<std::string, int> row, col;
};

MatrixIndex index_matrix(const SimilarityMatrix& matrix) {
  MatrixIndex idx;
  for (int i = 0; i < static_cast<int>(matrix.query_ids.size()); ++i) {
    idx.row[matrix.query_ids[i]] = i;
  }
  for (int j = 0; j < static_cast<int>(matrix.db_ids.size()); ++j) {
    idx.col[matrix.db_ids[j]] = j;
  }
  return idx;
}

int require_row(const MatrixIndex& idx, const std::string& id) {
  auto it = idx.row.find(id);
  if (it == idx.row.end()) {
    throw Error(ErrorCode::kInconsistentInputs,
                "similarity matrix has no query row for " + id);
  }
  return it->second;
}

int require_col(const MatrixIndex& idx, const std::string& id) {
  auto it = idx.col.find(id);
  if (it == idx.col.end()) {
    throw Error(ErrorCode::kInconsistentInputs,
                "similarity matrix has no database column for " + id);
  }
  return it->second;
}

// Shared drive: score every task with `scores_for`, collect per-group means.
struct Scored {
  std::vector<QueryScore> per_query;
  std::map<std::string, std::pair<double, int>> group_sum;  // sum, count
  double total = 0;
  int scored = 0;
  int skipped = 0;
};

template <typename ScoreFn>
Scored score_tasks(const BenchmarkManifest& manifest,
                   const std::vector<QueryTask>& tasks, ScoreFn&& scores_for) {
  Scored s;
  std::vector<float> scores;
  for (const auto& task : tasks) {
    scores.clear();
    scores_for(task, scores);
    auto ap = task_ap(task, scores);
    s.per_query.push_back(
        {manifest.samples[task.sample_index].sample_id, task.group, ap});
    if (!ap) {
      ++s.skipped;
      continue;
    }
    ++s.scored;
    s.total += *ap;
    auto& [sum, count] = s.group_sum[task.group];
    sum += *ap;
    ++count;
  }
  return s;
}

}  // namespace

EvaluationReport inter_pair_map(const BenchmarkManifest& manifest,
                                const SimilarityMatrix& matrix,
                                bool constrained) {
  if (manifest.protocol != Protocol::kInterPair) {
    throw Error(ErrorCode::kInconsistentInputs,
                "inter-pair evaluation needs an inter-pair manifest");
  }
  auto idx = index_matrix(matrix);
  auto tasks = relevance_tasks(manifest, constrained);

  // Resolve matrix coordinates once per sample.
  std::vector<int> col_of(manifest.samples.size(), -1);
  for (const auto& task : tasks) {
    for (int j : task.db) {
      if (col_of[j] == -1) {
        col_of[j] = require_col(idx, manifest.samples[j].sample_id);
      }
    }
  }

  EvaluationReport report;
  report.protocol = Protocol::kInterPair;
  report.constrained = constrained;
  auto scored = score_tasks(
      manifest, tasks, [&](const QueryTask& task, std::vector<float>& scores) {
        int row =
            require_row(idx, manifest.samples[task.sample_index].sample_id);
        scores.reserve(task.db.size());
        for (int j : task.db) {
          scores.push_back(matrix.values(row, col_of[j]));
        }
      });

  report.per_query = std::move(scored.per_query);
  report.scored_queries = scored.scored;
  report.skipped_queries = scored.skipped;
  for (const auto& [g, sc] : scored.group_sum) {
    report.per_group_pct[g] = 100.0 * sc.first / sc.second;
  }
  if (scored.scored == 0) {
    throw Error(ErrorCode::kNoData, "no scorable queries in the manifest");
  }
  report.overall_pct = 100.0 * scored.total / scored.scored;
  return report;
}

EvaluationReport pair_map(const BenchmarkManifest& manifest,
                          const SimilarityMatrix& matrix) {
  if (manifest.protocol != Protocol::kIntraPair) {
    throw Error(ErrorCode::kInconsistentInputs,
                "pair-mAP evaluation needs an intra-pair manifest");
  }
  auto idx = index_matrix(matrix);
  auto tasks = relevance_tasks(manifest, /*constrained=*/false);

  std::vector<int> col_of(manifest.samples.size(), -1);
  for (const auto& task : tasks) {
    for (int j : task.db) {
      if (col_of[j] == -1) {
        col_of[j] = require_col(idx, manifest.samples[j].sample_id);
      }
    }
  }

  EvaluationReport report;
  report.protocol = Protocol::kIntraPair;
  auto scored = score_tasks(
      manifest, tasks, [&](const QueryTask& task, std::vector<float>& scores) {
        int row =
            require_row(idx, manifest.samples[task.sample_index].sample_id);
        scores.reserve(task.db.size());
        for (int j : task.db) {
          scores.push_back(matrix.values(row, col_of[j]));
        }
      });

  report.per_query = std::move(scored.per_query);
  report.scored_queries = scored.scored;
  report.skipped_queries = scored.skipped;
  if (scored.group_sum.empty()) {
    throw Error(ErrorCode::kNoData, "no scorable queries in the manifest");
  }
  double pair_sum = 0;
  for (const auto& [pair, sc] : scored.group_sum) {
    double map_p = 100.0 * sc.first / sc.second;
    report.per_group_pct[pair] = map_p;
    pair_sum += map_p;
  }
  report.overall_pct = pair_sum / static_cast<double>(scored.group_sum.size());
  return report;
}

double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& gold) {
  if (predictions.size() != gold.size()) {
    throw Error(ErrorCode::kInconsistentInputs,
                "accuracy: " + std::to_string(predictions.size()) +
                    " predictions vs " + std::to_string(gold.size()) +
                    " gold labels");
  }
  if (predictions.empty()) {
    throw Error(ErrorCode::kNoData, "accuracy of an empty prediction list");
  }
  int correct = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    correct += predictions[i] == gold[i] ? 1 : 0;
  }
  return 100.0 * correct / static_cast<double>(predictions.size());
}

BaselineResult random_baseline(const BenchmarkManifest& manifest,
                               Protocol protocol, int trials,
                               std::uint64_t seed) {
  if (protocol != manifest.protocol) {
    throw Error(ErrorCode::kInconsistentInputs,
                "baseline protocol disagrees with the manifest");
  }
  if (trials < 1) {
    throw Error(ErrorCode::kInconsistentInputs, "baseline needs >= 1 trial");
  }
  auto tasks = relevance_tasks(manifest, manifest.constrained);

  std::mt19937_64 rng(seed);
  auto uniform01 = [&] {
    return static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };

  BaselineResult result;
  result.trials = trials;
  std::vector<float> scores;
  for (int trial = 0; trial < trials; ++trial) {
    double total = 0;
    int scored = 0;
    std::map<std::string, std::pair<double, int>> group_sum;
    for (const auto& task : tasks) {
      scores.resize(task.db.size());
      for (auto& v : scores) v = uniform01();
      auto ap = task_ap(task, scores);
      if (!ap) continue;
      ++scored;
      total += *ap;
      auto& [sum, count] = group_sum[task.group];
      sum += *ap;
      ++count;
    }
    double metric_pct = 0;
    if (manifest.protocol == Protocol::kIntraPair) {
      double pair_sum = 0;
      for (const auto& [pair, sc] : group_sum) {
        pair_sum += 100.0 * sc.first / sc.second;
      }
      metric_pct = group_sum.empty()
                       ? 0
                       : pair_sum / static_cast<double>(group_sum.size());
    } else {
      metric_pct = scored == 0 ? 0 : 100.0 * total / scored;
    }
    result.per_trial_pct.push_back(metric_pct);
  }

  double mean = std::accumulate(result.per_trial_pct.begin(),
                                result.per_trial_pct.end(), 0.0) /
                trials;
  result.mean_pct = mean;
  if (trials > 1) {
    double var = 0;
    for (double v : result.per_trial_pct) var += (v - mean) * (v - mean);
    var /= (trials - 1);
    result.stderr_pct = std::sqrt(var / trials);
  }
  return result;
}

}  // namespace maxsim
