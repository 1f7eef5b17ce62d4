#include "maxsim/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "maxsim/digest.hpp"
#include "maxsim/embedder.hpp"
#include "maxsim/manifest.hpp"
#include "maxsim/simkernel.hpp"
#include "maxsim/textproc.hpp"

namespace maxsim {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Split mode

std::string_view to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::kSplitMax: return "SPLIT_MAX";
    case SplitMode::kWholeText: return "WHOLE_TEXT";
  }
  throw Error(ErrorCode::kInconsistentInputs, "unknown split mode");
}

SplitMode split_mode_from_string(std::string_view text) {
  if (text == "SPLIT_MAX") return SplitMode::kSplitMax;
  if (text == "WHOLE_TEXT") return SplitMode::kWholeText;
  throw Error(ErrorCode::kParseError,
              "not a split mode: " + std::string(text));
}

// ---------------------------------------------------------------------------
// Configuration

RunConfig run_config_from_json(const Json& body) {
  if (!body.is_object()) {
    throw Error(ErrorCode::kConfigError, "config must be a JSON object");
  }
  RunConfig config;
  for (const auto& [key, value] : body.items()) {
    try {
      if (key == "manifest") {
        config.manifest_path = value.get<std::string>();
      } else if (key == "strategy") {
        config.strategy = prompt_strategy_from_string(value.get<std::string>());
      } else if (key == "dataset") {
        config.dataset = dataset_key_from_string(value.get<std::string>());
      } else if (key == "custom_instruction") {
        config.custom_instruction = value.get<std::string>();
      } else if (key == "model_id") {
        config.model_id = value.get<std::string>();
      } else if (key == "embedder_id") {
        config.embedder_id = value.get<std::string>();
      } else if (key == "api_base") {
        config.api_base = value.get<std::string>();
      } else if (key == "embed_base") {
        config.embed_base = value.get<std::string>();
      } else if (key == "api_key") {
        config.api_key = value.get<std::string>();
      } else if (key == "embed_key") {
        config.embed_key = value.get<std::string>();
      } else if (key == "fps") {
        config.fps = value.get<double>();
      } else if (key == "max_frames") {
        config.max_frames = value.get<int>();
      } else if (key == "max_output_tokens") {
        config.max_output_tokens = value.get<int>();
      } else if (key == "split") {
        config.split = split_mode_from_string(value.get<std::string>());
      } else if (key == "constrained") {
        config.constrained = value.get<bool>();
      } else if (key == "cache_dir") {
        config.cache_dir = value.get<std::string>();
      } else if (key == "out_dir") {
        config.out_dir = value.get<std::string>();
      } else if (key == "workers") {
        config.workers = value.get<int>();
      } else {
        throw Error(ErrorCode::kConfigError, "unknown config key: " + key);
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kConfigError,
                  "config key '" + key + "': " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParseError) {
        throw Error(ErrorCode::kConfigError,
                    "config key '" + key + "': " + e.what());
      }
      throw;
    }
  }
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  Json body = Json::parse(read_file(path), nullptr, false);
  if (body.is_discarded()) {
    throw Error(ErrorCode::kConfigError,
                "config file is not valid JSON: " + path.string());
  }
  return run_config_from_json(body);
}

Json config_to_json(const RunConfig& config) {
  Json body;
  body["manifest"] = config.manifest_path.string();
  body["strategy"] = to_string(config.strategy);
  body["dataset"] = to_string(config.dataset);
  if (config.custom_instruction) {
    body["custom_instruction"] = *config.custom_instruction;
  }
  body["model_id"] = config.model_id;
  body["embedder_id"] = config.embedder_id;
  body["api_base"] = config.api_base;
  body["embed_base"] = config.embed_base;
  body["fps"] = config.fps;
  body["max_frames"] = config.max_frames;
  body["max_output_tokens"] = config.max_output_tokens;
  body["split"] = to_string(config.split);
  body["constrained"] = config.constrained;
  body["cache_dir"] = config.cache_dir.string();
  body["out_dir"] = config.out_dir.string();
  body["workers"] = config.workers;
  return body;
}

void apply_environment(RunConfig& config) {
  auto override_from = [](const char* name, std::string& field) {
    const char* value = std::getenv(name);
    if (value && *value) field = value;
  };
  override_from("MAXSIM_API_BASE", config.api_base);
  override_from("MAXSIM_API_KEY", config.api_key);
  override_from("MAXSIM_EMBED_BASE", config.embed_base);
  override_from("MAXSIM_EMBED_KEY", config.embed_key);
}

void validate_config(const RunConfig& config) {
  if (!(config.fps > 0)) {
    throw Error(ErrorCode::kConfigError, "fps must be positive");
  }
  if (config.max_frames < 1) {
    throw Error(ErrorCode::kConfigError, "max_frames must be at least 1");
  }
  if (config.max_output_tokens < 1) {
    throw Error(ErrorCode::kConfigError,
                "max_output_tokens must be at least 1");
  }
  if (config.workers < 1) {
    throw Error(ErrorCode::kConfigError, "workers must be at least 1");
  }
  if (config.manifest_path.empty()) {
    throw Error(ErrorCode::kConfigError, "config names no manifest");
  }
  if (!fs::exists(config.manifest_path)) {
    throw Error(ErrorCode::kConfigError,
                "manifest not found: " + config.manifest_path.string());
  }
}

namespace {

std::string file_digest(const fs::path& path) {
  return sha256_hex(read_file(path));
}

std::string format_fps(double fps) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", fps);
  return buf;
}

}  // namespace

Json canonical_config_json(const RunConfig& config) {
  Json body;
  body["manifest_digest"] = file_digest(config.manifest_path);
  body["strategy"] = to_string(config.strategy);
  body["dataset"] = to_string(config.dataset);
  body["custom_instruction"] =
      config.custom_instruction ? Json(*config.custom_instruction)
                                : Json(nullptr);
  body["model_id"] = config.model_id;
  body["embedder_id"] = config.embedder_id;
  body["api_base"] = config.api_base;
  body["embed_base"] = config.embed_base;
  body["fps"] = format_fps(config.fps);
  body["max_frames"] = config.max_frames;
  body["max_output_tokens"] = config.max_output_tokens;
  body["split"] = to_string(config.split);
  body["constrained"] = config.constrained;
  return body;
}

std::string config_fingerprint(const RunConfig& config) {
  return sha256_hex(canonical_config_json(config).dump());
}

// ---------------------------------------------------------------------------
// Artifact layout

fs::path descriptions_path(const RunConfig& config) {
  return config.out_dir / "descriptions.jsonl";
}
fs::path run_log_path(const RunConfig& config) {
  return config.out_dir / "run_log.jsonl";
}
fs::path matrix_path(const RunConfig& config) {
  return config.out_dir / "similarity.matrix";
}
fs::path report_path(const RunConfig& config) {
  return config.out_dir / "report.json";
}
fs::path per_query_csv_path(const RunConfig& config) {
  return config.out_dir / "per_query.csv";
}
fs::path run_info_path(const RunConfig& config) {
  return config.out_dir / "run_info.json";
}

PipelineEndpoints make_endpoints(const RunConfig& config) {
  PipelineEndpoints endpoints;
  endpoints.chat =
      make_chat_endpoint(config.api_base, config.api_key, config.model_id);
  endpoints.embed = make_embed_endpoint(config.embed_base, config.embed_key,
                                        config.embedder_id);
  return endpoints;
}

// ---------------------------------------------------------------------------
// Fingerprint sidecars

namespace {

fs::path sidecar_path(const fs::path& artifact) {
  return fs::path(artifact.string() + ".fp");
}

bool artifact_current(const fs::path& artifact, const std::string& fp) {
  if (!fs::exists(artifact) || !fs::exists(sidecar_path(artifact))) {
    return false;
  }
  std::string stored = read_file(sidecar_path(artifact));
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) {
    stored.pop_back();
  }
  return stored == fp;
}

void write_sidecar(const fs::path& artifact, const std::string& fp) {
  write_file(sidecar_path(artifact), fp + "\n");
}

std::string describe_fingerprint(const RunConfig& config) {
  Sha256 digest;
  digest.field("describe-stage");
  digest.field(file_digest(config.manifest_path));
  digest.field(config.model_id);
  digest.field(config.api_base);
  digest.field(to_string(config.strategy));
  digest.field(to_string(config.dataset));
  digest.field(config.custom_instruction.value_or(""));
  digest.field(format_fps(config.fps));
  digest.field_u64(static_cast<std::uint64_t>(config.max_frames));
  digest.field_u64(static_cast<std::uint64_t>(config.max_output_tokens));
  return digest.hex();
}

/// Frames plus prompt media kind for one sample. Images are a single frame
/// at their span start; videos follow the fps sampling rule.
MediaInput media_for_sample(const SampleRecord& sample,
                            const RunConfig& config) {
  if (sample.kind == MediaKind::kImage) {
    TimeSpan instant{0.0, 0.5 / config.fps};
    auto media = sample_frames(sample.media, instant, config.fps, 1);
    media.kind = MediaKind::kImage;
    return media;
  }
  if (!sample.span) {
    throw Error(ErrorCode::kIncompleteSpec,
                sample.sample_id + ": video sample without a time span");
  }
  return sample_frames(sample.media, *sample.span, config.fps,
                       config.max_frames);
}

struct DescribedSample {
  DescriptionRecord record;
  RunLogEntry timing;
};

}  // namespace

bool describe_stage(const RunConfig& config, const BenchmarkManifest& manifest,
                    ChatEndpoint& chat) {
  fs::create_directories(config.out_dir);
  const std::string fp = describe_fingerprint(config);
  const fs::path out = descriptions_path(config);
  if (artifact_current(out, fp)) return true;

  ResponseCache cache(config.cache_dir / "responses" /
                      sanitize_id(config.model_id));
  DecodeParams decode;
  decode.max_output_tokens = config.max_output_tokens;

  const auto& samples = manifest.samples;
  std::vector<DescribedSample> described(samples.size());
  const auto stage_start = std::chrono::steady_clock::now();
  auto elapsed_s = [&stage_start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         stage_start)
        .count();
  };

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= samples.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        const SampleRecord& sample = samples[i];
        auto media = media_for_sample(sample, config);
        auto prompt = resolve_prompt(config.dataset, config.strategy,
                                     media.kind, config.custom_instruction);
        double started = elapsed_s();
        auto record = describe(media, prompt, decode, chat, &cache);
        double finished = elapsed_s();
        record.sample_id = sample.sample_id;
        described[i] = {std::move(record),
                        {sample.sample_id, started, finished}};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int thread_count = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(config.workers),
                            std::max<std::size_t>(samples.size(), 1)));
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (auto& thread : threads) thread.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::string lines;
  std::string log_lines;
  for (const auto& item : described) {
    Json row;
    row["sample_id"] = item.record.sample_id;
    row["model_id"] = item.record.model_id;
    row["prompt_fingerprint"] = item.record.prompt_fingerprint;
    row["text"] = item.record.text;
    row["latency_ms"] = item.record.latency_ms;
    row["refused"] = item.record.refused;
    lines += row.dump();
    lines += '\n';

    Json log_row;
    log_row["sample_id"] = item.timing.sample_id;
    log_row["started_s"] = item.timing.started_s;
    log_row["finished_s"] = item.timing.finished_s;
    log_lines += log_row.dump();
    log_lines += '\n';
  }
  write_file(out, lines);
  write_file(run_log_path(config), log_lines);
  write_sidecar(out, fp);
  return false;
}

// ---------------------------------------------------------------------------
// Embedding assembly

namespace {

struct DescribedText {
  std::string sample_id;
  std::string text;
};

std::vector<DescribedText> load_descriptions(const RunConfig& config) {
  std::vector<DescribedText> rows;
  for_each_jsonl_file(descriptions_path(config),
                      [&](const Json& row, std::size_t) {
                        rows.push_back({row.at("sample_id").get<std::string>(),
                                        row.at("text").get<std::string>()});
                      });
  return rows;
}

bool blank(const std::string& text) {
  return text.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::vector<std::string> sentence_units(const std::string& text,
                                        SplitMode mode) {
  if (mode == SplitMode::kSplitMax) return split_sentences(text);
  if (blank(text)) return {};
  return {text};
}

/// Embeds every unique sentence (descriptions plus any extra whole texts)
/// in large batches, then assembles per-sample sets from the warm cache.
/// Returns sets in the order of `rows`.
std::vector<EmbeddingSet> assemble_sets(
    const RunConfig& config, const std::vector<DescribedText>& rows,
    const std::vector<std::string>& extra_texts, EmbedEndpoint& embed,
    EmbedCache& cache, std::size_t* newly_embedded) {
  std::vector<std::string> pending;
  std::unordered_set<std::string> seen;
  auto enqueue = [&](const std::string& sentence) {
    if (seen.insert(sentence).second) pending.push_back(sentence);
  };
  for (const auto& row : rows) {
    for (const auto& sentence : sentence_units(row.text, config.split)) {
      enqueue(sentence);
    }
  }
  for (const auto& text : extra_texts) {
    if (!blank(text)) enqueue(text);
  }

  const std::size_t before = cache.size();
  if (!pending.empty()) {
    embed_sentences(pending, embed, &cache);
  }
  if (newly_embedded) *newly_embedded = cache.size() - before;

  std::vector<EmbeddingSet> sets;
  sets.reserve(rows.size());
  for (const auto& row : rows) {
    EmbeddingSet set =
        config.split == SplitMode::kSplitMax
            ? embed_sentences(split_sentences(row.text), embed, &cache)
            : embed_whole_text(row.text, embed, &cache);
    set.sample_id = row.sample_id;
    sets.push_back(std::move(set));
  }
  return sets;
}

EmbedCache open_embed_cache(const RunConfig& config) {
  return EmbedCache(config.cache_dir / "embed" /
                        sanitize_id(config.embedder_id),
                    config.embedder_id);
}

std::vector<std::string> choice_texts(const BenchmarkManifest& manifest) {
  std::vector<std::string> texts;
  for (const auto& [sample_id, choices] : manifest.choices) {
    for (const auto& sentence : choices.sentences) texts.push_back(sentence);
  }
  return texts;
}

}  // namespace

std::size_t embed_stage(const RunConfig& config, EmbedEndpoint& embed) {
  auto rows = load_descriptions(config);
  auto cache = open_embed_cache(config);
  std::size_t newly_embedded = 0;
  assemble_sets(config, rows, {}, embed, cache, &newly_embedded);
  return newly_embedded;
}

namespace {

std::string simmatrix_fingerprint(const RunConfig& config) {
  Sha256 digest;
  digest.field("simmatrix-stage");
  digest.field(file_digest(descriptions_path(config)));
  digest.field(file_digest(config.manifest_path));
  digest.field(config.embedder_id);
  digest.field(config.embed_base);
  digest.field(to_string(config.split));
  return digest.hex();
}

}  // namespace

bool simmatrix_stage(const RunConfig& config,
                     const BenchmarkManifest& manifest, EmbedEndpoint& embed) {
  if (manifest.protocol == Protocol::kClassification) {
    throw Error(ErrorCode::kConfigError,
                "classification runs score choices directly and build no "
                "similarity matrix");
  }
  fs::create_directories(config.out_dir);
  const std::string fp = simmatrix_fingerprint(config);
  const fs::path out = matrix_path(config);
  if (artifact_current(out, fp)) return true;

  auto rows = load_descriptions(config);
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < rows.size(); ++i) by_id[rows[i].sample_id] = i;
  for (const auto& sample : manifest.samples) {
    if (!by_id.count(sample.sample_id)) {
      throw Error(ErrorCode::kInconsistentInputs,
                  "descriptions do not cover sample " + sample.sample_id +
                      "; rerun the describe stage");
    }
  }

  auto cache = open_embed_cache(config);
  auto sets = assemble_sets(config, rows, {}, embed, cache, nullptr);

  // Database: every manifest sample, in manifest (= sample_id) order.
  std::vector<EmbeddingSet> db;
  db.reserve(manifest.samples.size());
  for (const auto& sample : manifest.samples) {
    db.push_back(sets[by_id.at(sample.sample_id)]);
  }
  // Queries: labeled query samples (all samples under the intra protocol).
  std::vector<EmbeddingSet> queries;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    if (manifest.samples[i].role == Role::kQuery) queries.push_back(db[i]);
  }

  auto matrix = similarity_matrix(queries, db, config.workers);
  save_matrix(matrix, out);
  write_sidecar(out, fp);
  return false;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

std::string evaluate_fingerprint(const RunConfig& config) {
  Sha256 digest;
  digest.field("evaluate-stage");
  digest.field(file_digest(matrix_path(config)));
  digest.field(file_digest(config.manifest_path));
  digest.field(config.constrained ? "constrained" : "full");
  digest.field(config_fingerprint(config));
  return digest.hex();
}

std::string classify_fingerprint(const RunConfig& config) {
  Sha256 digest;
  digest.field("classify-stage");
  digest.field(file_digest(descriptions_path(config)));
  digest.field(file_digest(config.manifest_path));
  digest.field(config.embedder_id);
  digest.field(config.embed_base);
  digest.field(to_string(config.split));
  digest.field(config_fingerprint(config));
  return digest.hex();
}

void write_report(const RunConfig& config, const EvaluationReport& report,
                  const std::string& fp) {
  write_file(report_path(config), report.to_json().dump(2) + "\n");
  write_file(per_query_csv_path(config), report.per_query_csv());
  write_sidecar(report_path(config), fp);
}

}  // namespace

bool evaluate_stage(const RunConfig& config, const BenchmarkManifest& manifest,
                    EvaluationReport* out) {
  if (manifest.protocol == Protocol::kClassification) {
    throw Error(ErrorCode::kConfigError,
                "classification manifests are scored by the classify stage");
  }
  fs::create_directories(config.out_dir);
  const std::string fp = evaluate_fingerprint(config);

  auto matrix = load_matrix(matrix_path(config));
  EvaluationReport report =
      manifest.protocol == Protocol::kInterPair
          ? inter_pair_map(manifest, matrix, config.constrained)
          : pair_map(manifest, matrix);
  report.config_fingerprint = config_fingerprint(config);
  if (out) *out = report;

  if (artifact_current(report_path(config), fp)) return true;
  write_report(config, report, fp);
  return false;
}

bool classify_stage(const RunConfig& config, const BenchmarkManifest& manifest,
                    EmbedEndpoint& embed, EvaluationReport* out) {
  if (manifest.protocol != Protocol::kClassification) {
    throw Error(ErrorCode::kConfigError,
                "the classify stage needs a classification manifest");
  }
  fs::create_directories(config.out_dir);
  const std::string fp = classify_fingerprint(config);

  auto rows = load_descriptions(config);
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < rows.size(); ++i) by_id[rows[i].sample_id] = i;

  auto cache = open_embed_cache(config);
  auto sets = assemble_sets(config, rows, choice_texts(manifest), embed,
                            cache, nullptr);

  EvaluationReport report;
  report.protocol = Protocol::kClassification;
  report.constrained = false;
  report.config_fingerprint = config_fingerprint(config);

  std::vector<int> predictions;
  std::vector<int> gold;
  std::map<std::string, std::pair<int, int>> per_group;  // correct, total
  for (const auto& sample : manifest.samples) {
    auto row_it = by_id.find(sample.sample_id);
    if (row_it == by_id.end()) {
      throw Error(ErrorCode::kInconsistentInputs,
                  "descriptions do not cover sample " + sample.sample_id +
                      "; rerun the describe stage");
    }
    auto choice_it = manifest.choices.find(sample.sample_id);
    if (choice_it == manifest.choices.end()) {
      throw Error(ErrorCode::kInconsistentInputs,
                  "no choice sentences for sample " + sample.sample_id);
    }
    const ChoiceSet& choices = choice_it->second;

    std::vector<EmbeddingSet> choice_sets;
    choice_sets.reserve(choices.sentences.size());
    for (const auto& sentence : choices.sentences) {
      choice_sets.push_back(embed_whole_text(sentence, embed, &cache));
    }
    const int predicted =
        classify(sets[row_it->second], choice_sets).index;
    predictions.push_back(predicted);
    gold.push_back(choices.correct);

    const bool correct = predicted == choices.correct;
    const std::string group = sample.action.value_or("all");
    auto& bucket = per_group[group];
    bucket.first += correct ? 1 : 0;
    bucket.second += 1;
    report.per_query.push_back(
        {sample.sample_id, group, correct ? 1.0 : 0.0});
  }

  report.overall_pct = accuracy(predictions, gold);
  for (const auto& [group, bucket] : per_group) {
    report.per_group_pct[group] = 100.0 * bucket.first / bucket.second;
  }
  report.scored_queries = static_cast<int>(predictions.size());
  report.skipped_queries = 0;
  if (out) *out = report;

  if (artifact_current(report_path(config), fp)) return true;
  write_report(config, report, fp);
  return false;
}

// ---------------------------------------------------------------------------
// End-to-end run

namespace {

std::string now_utc_iso8601() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<double> throughput_from_log(const RunConfig& config) {
  try {
    std::vector<RunLogEntry> log;
    for_each_jsonl_file(run_log_path(config),
                        [&](const Json& row, std::size_t) {
                          log.push_back(
                              {row.at("sample_id").get<std::string>(),
                               row.at("started_s").get<double>(),
                               row.at("finished_s").get<double>()});
                        });
    return measure_throughput(log);
  } catch (const Error&) {
    return std::nullopt;  // missing, empty, or zero-span log
  }
}

}  // namespace

RunOutcome run(const RunConfig& config, ChatEndpoint& chat,
               EmbedEndpoint& embed) {
  validate_config(config);
  const std::string started_at = now_utc_iso8601();
  BenchmarkManifest manifest = read_manifest(config.manifest_path);

  RunOutcome outcome;
  const bool described_skipped = describe_stage(config, manifest, chat);
  outcome.stages.push_back({"describe", described_skipped});

  const std::size_t newly_embedded = embed_stage(config, embed);
  outcome.stages.push_back({"embed", newly_embedded == 0});

  if (manifest.protocol == Protocol::kClassification) {
    const bool skipped =
        classify_stage(config, manifest, embed, &outcome.report);
    outcome.stages.push_back({"classify", skipped});
  } else {
    const bool matrix_skipped = simmatrix_stage(config, manifest, embed);
    outcome.stages.push_back({"simmatrix", matrix_skipped});
    const bool report_skipped =
        evaluate_stage(config, manifest, &outcome.report);
    outcome.stages.push_back({"evaluate", report_skipped});
  }

  // Execution telemetry lives apart from the deterministic artifacts: the
  // report stays byte-stable while timings vary run to run.
  Json info;
  info["started_at"] = started_at;
  info["finished_at"] = now_utc_iso8601();
  info["config_fingerprint"] = config_fingerprint(config);
  info["protocol"] = to_string(manifest.protocol);
  info["samples"] = manifest.samples.size();
  info["stages"] = Json::array();
  for (const auto& stage : outcome.stages) {
    Json row;
    row["stage"] = stage.stage;
    row["skipped"] = stage.skipped;
    info["stages"].push_back(row);
  }
  if (!described_skipped) {
    if (auto throughput = throughput_from_log(config)) {
      info["throughput_ips"] = *throughput;
    }
  }
  write_file(run_info_path(config), info.dump(2) + "\n");
  return outcome;
}

RunOutcome run(const RunConfig& config) {
  auto endpoints = make_endpoints(config);
  return run(config, *endpoints.chat, *endpoints.embed);
}

// ---------------------------------------------------------------------------
// Ablations

namespace {

std::string fps_label(double fps) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", fps);
  std::string text = buf;
  for (char& c : text) {
    if (c == '.') c = 'p';
  }
  return "fps_" + text;
}

}  // namespace

std::vector<AblationRow> ablate(const RunConfig& base, const SweepSpec& sweep) {
  const int axes = (sweep.fps ? 1 : 0) + (sweep.embedders ? 1 : 0) +
                   (sweep.split_mode ? 1 : 0);
  if (axes != 1) {
    throw Error(ErrorCode::kConfigError,
                "an ablation sweeps exactly one axis (fps, embedder, or "
                "split mode)");
  }

  std::vector<std::pair<std::string, RunConfig>> points;
  if (sweep.fps) {
    if (sweep.fps->empty()) {
      throw Error(ErrorCode::kConfigError, "empty fps sweep");
    }
    for (double fps : *sweep.fps) {
      RunConfig point = base;
      point.fps = fps;
      points.emplace_back(fps_label(fps), point);
    }
  } else if (sweep.embedders) {
    if (sweep.embedders->empty()) {
      throw Error(ErrorCode::kConfigError, "empty embedder sweep");
    }
    for (const auto& entry : *sweep.embedders) {
      RunConfig point = base;
      auto eq = entry.find('=');
      if (eq == std::string::npos) {
        point.embedder_id = entry;
      } else {
        point.embedder_id = entry.substr(0, eq);
        point.embed_base = entry.substr(eq + 1);
      }
      if (point.embedder_id.empty()) {
        throw Error(ErrorCode::kConfigError,
                    "embedder sweep entry without an id: " + entry);
      }
      points.emplace_back("embedder_" + sanitize_id(point.embedder_id),
                          point);
    }
  } else {
    for (SplitMode mode : {SplitMode::kSplitMax, SplitMode::kWholeText}) {
      RunConfig point = base;
      point.split = mode;
      points.emplace_back(
          mode == SplitMode::kSplitMax ? "split_max" : "whole_text", point);
    }
  }

  std::vector<AblationRow> rows;
  Json summary = Json::array();
  std::string csv = "label,overall_pct,scored_queries,skipped_queries\n";
  for (auto& [label, point] : points) {
    point.out_dir = base.out_dir / label;
    auto outcome = run(point);

    AblationRow row;
    row.label = label;
    row.config = point;
    row.report = outcome.report;
    rows.push_back(row);

    Json entry;
    entry["label"] = label;
    entry["config_fingerprint"] = row.report.config_fingerprint;
    entry["overall_pct"] = row.report.overall_pct;
    entry["overall_display"] = format_pct(row.report.overall_pct);
    entry["per_group_pct"] = Json::object();
    for (const auto& [group, pct] : row.report.per_group_pct) {
      entry["per_group_pct"][group] = pct;
    }
    summary.push_back(entry);

    csv += label + "," + format_pct(row.report.overall_pct) + "," +
           std::to_string(row.report.scored_queries) + "," +
           std::to_string(row.report.skipped_queries) + "\n";
  }
  fs::create_directories(base.out_dir);
  write_file(base.out_dir / "ablation.json", summary.dump(2) + "\n");
  write_file(base.out_dir / "ablation.csv", csv);
  return rows;
}

}  // namespace maxsim
