#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maxsim/describer.hpp"
#include "maxsim/endpoints.hpp"
#include "maxsim/jsonl.hpp"
#include "maxsim/metrics.hpp"
#include "maxsim/types.hpp"

namespace maxsim {

// ---------------------------------------------------------------------------
// Run configuration

/// How one description becomes an embedding set: per-sentence vectors scored
/// by max similarity (the default), or a single whole-response vector.
enum class SplitMode { kSplitMax, kWholeText };

std::string_view to_string(SplitMode mode);
SplitMode split_mode_from_string(std::string_view text);

struct RunConfig {
  std::filesystem::path manifest_path;
  PromptStrategy strategy = PromptStrategy::kTaskAware;
  DatasetKey dataset = DatasetKey::kSovaBench;
  std::optional<std::string> custom_instruction;
  std::string model_id = "mock-vlm";
  std::string embedder_id = "mock-encoder";
  /// Endpoint base URLs; mock:// schemes run fully offline.
  std::string api_base = "mock://chat";
  std::string embed_base = "mock://embed/384";
  std::string api_key;
  std::string embed_key;
  double fps = 1.0;
  int max_frames = 32;
  int max_output_tokens = 512;
  SplitMode split = SplitMode::kSplitMax;
  bool constrained = false;
  std::filesystem::path cache_dir = "cache";
  std::filesystem::path out_dir = "out";
  int workers = 1;
};

/// Parses a config JSON object; unknown keys are rejected so typos cannot
/// silently fall back to defaults.
RunConfig run_config_from_json(const Json& body);
RunConfig load_run_config(const std::filesystem::path& path);
Json config_to_json(const RunConfig& config);

/// MAXSIM_API_BASE / MAXSIM_API_KEY / MAXSIM_EMBED_BASE / MAXSIM_EMBED_KEY
/// override the corresponding config fields when set and non-empty.
void apply_environment(RunConfig& config);

/// fps > 0, max_frames >= 1, workers >= 1, manifest file present.
void validate_config(const RunConfig& config);

/// The canonical serialized form the fingerprint digests: every field that
/// shapes an artifact, with the manifest replaced by a digest of its bytes.
/// Cache/output directories, worker counts, and API keys are excluded, so
/// relocating artifacts or changing parallelism never invalidates them.
Json canonical_config_json(const RunConfig& config);
std::string config_fingerprint(const RunConfig& config);

// ---------------------------------------------------------------------------
// Artifact layout (all under config.out_dir)

std::filesystem::path descriptions_path(const RunConfig& config);
std::filesystem::path run_log_path(const RunConfig& config);
std::filesystem::path matrix_path(const RunConfig& config);
std::filesystem::path report_path(const RunConfig& config);
std::filesystem::path per_query_csv_path(const RunConfig& config);
std::filesystem::path run_info_path(const RunConfig& config);

// ---------------------------------------------------------------------------
// Endpoints

struct PipelineEndpoints {
  std::unique_ptr<ChatEndpoint> chat;
  std::unique_ptr<EmbedEndpoint> embed;
};

PipelineEndpoints make_endpoints(const RunConfig& config);

// ---------------------------------------------------------------------------
// Stages
//
// Every stage writes its artifact plus a `<artifact>.fp` sidecar holding the
// stage fingerprint (a digest of the stage's inputs). A rerun whose inputs
// are unchanged sees a matching sidecar, skips the work, and leaves the
// artifact bytes untouched; each stage function returns true when it did so.

/// Samples frames, resolves the prompt, and describes every manifest sample
/// (in manifest order, `workers` at a time) into descriptions.jsonl. Chat
/// replies are served from the response cache when present, so reruns make
/// zero endpoint calls. Wall-clock timings go to run_log.jsonl (rewritten
/// only when descriptions are actually produced).
bool describe_stage(const RunConfig& config, const BenchmarkManifest& manifest,
                    ChatEndpoint& chat);

/// Embeds every unique sentence of descriptions.jsonl through the embedding
/// cache in batched requests. Idempotent by construction: warm entries are
/// never refetched. Returns the number of sentences newly embedded.
std::size_t embed_stage(const RunConfig& config, EmbedEndpoint& embed);

/// Assembles per-sample embedding sets (split or whole-text mode) and
/// computes the query-by-database similarity matrix. Retrieval protocols
/// only; classification manifests are rejected with kConfigError.
bool simmatrix_stage(const RunConfig& config,
                     const BenchmarkManifest& manifest, EmbedEndpoint& embed);

/// Scores the stored similarity matrix under the manifest's protocol and
/// writes report.json + per_query.csv.
bool evaluate_stage(const RunConfig& config, const BenchmarkManifest& manifest,
                    EvaluationReport* out = nullptr);

/// Classification runs score descriptions directly against each sample's
/// choice sentences (no similarity matrix artifact).
bool classify_stage(const RunConfig& config, const BenchmarkManifest& manifest,
                    EmbedEndpoint& embed, EvaluationReport* out = nullptr);

// ---------------------------------------------------------------------------
// End-to-end run

struct StageStatus {
  std::string stage;
  bool skipped = false;
};

struct RunOutcome {
  EvaluationReport report;
  std::vector<StageStatus> stages;
};

/// describe -> embed -> similarity -> evaluate (or describe -> embed ->
/// classify), idempotently; also writes run_info.json with stage statuses
/// and, when the describe stage actually ran, the measured throughput.
RunOutcome run(const RunConfig& config, ChatEndpoint& chat,
               EmbedEndpoint& embed);
RunOutcome run(const RunConfig& config);

// ---------------------------------------------------------------------------
// Ablations

/// Exactly one sweep axis must be set. Embedder entries are "id" or
/// "id=base_url" when the sweep point needs its own endpoint.
struct SweepSpec {
  std::optional<std::vector<double>> fps;
  std::optional<std::vector<std::string>> embedders;
  bool split_mode = false;
};

struct AblationRow {
  std::string label;
  RunConfig config;
  EvaluationReport report;
};

/// One run per sweep point under out_dir/<label>/, all sharing the base
/// cache directory so unchanged inputs are never recomputed: the split
/// sweep reuses every description, the embedder sweep reuses descriptions
/// but keeps per-embedder vector caches, and the fps sweep regenerates
/// descriptions (different frames) per point. Writes ablation.json and
/// ablation.csv summaries under the base out_dir.
std::vector<AblationRow> ablate(const RunConfig& base, const SweepSpec& sweep);

}  // namespace maxsim
