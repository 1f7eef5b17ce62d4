// maxsim — describe media with a chat model, embed the sentences, score
// retrieval or classification protocols, and report the metrics.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "maxsim/describer.hpp"
#include "maxsim/manifest.hpp"
#include "maxsim/metrics.hpp"
#include "maxsim/pipeline.hpp"

namespace fs = std::filesystem;
using namespace maxsim;

namespace {

struct CliFlags {
  std::string config_path;
  std::string manifest;
  std::string cache_dir;
  std::string out_dir;
  int workers = 0;
  bool workers_set = false;
  double fps = 0;
  bool fps_set = false;
  std::string strategy;
  std::string split;
  bool constrained = false;
};

/// Precedence: config file < environment < command line.
RunConfig resolve_config(const CliFlags& flags) {
  RunConfig config;
  if (!flags.config_path.empty()) {
    config = load_run_config(flags.config_path);
  }
  apply_environment(config);
  if (!flags.manifest.empty()) config.manifest_path = flags.manifest;
  if (!flags.cache_dir.empty()) config.cache_dir = flags.cache_dir;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (flags.workers_set) config.workers = flags.workers;
  if (flags.fps_set) config.fps = flags.fps;
  if (flags.strategy == "general") {
    config.strategy = PromptStrategy::kGeneral;
  } else if (flags.strategy == "task-aware") {
    config.strategy = PromptStrategy::kTaskAware;
  }
  if (flags.split == "split-max") {
    config.split = SplitMode::kSplitMax;
  } else if (flags.split == "whole-text") {
    config.split = SplitMode::kWholeText;
  }
  if (flags.constrained) config.constrained = true;
  return config;
}

void print_report(const EvaluationReport& report) {
  const char* metric = report.protocol == Protocol::kInterPair ? "mAP"
                       : report.protocol == Protocol::kIntraPair
                           ? "pair_mAP"
                           : "accuracy";
  std::cout << metric << ": " << format_pct(report.overall_pct) << "\n";
  for (const auto& [group, pct] : report.per_group_pct) {
    std::cout << "  " << group << ": " << format_pct(pct) << "\n";
  }
  std::cout << "scored_queries: " << report.scored_queries
            << "\nskipped_queries: " << report.skipped_queries << "\n";
}

int cmd_build_manifest(const CliFlags& flags, const std::string& annotations,
                       const std::string& protocol_name) {
  RunConfig config = resolve_config(flags);
  if (config.manifest_path.empty()) {
    throw Error(ErrorCode::kConfigError,
                "build-manifest needs --manifest (or a config with one) as "
                "the output path");
  }

  std::vector<SampleRecord> queries;
  std::vector<SampleRecord> distractors;
  int dropped_excluded = 0;
  int dropped_unlabeled = 0;
  const bool intra = protocol_name == "intra";
  for (const auto& annotation : load_annotations(annotations)) {
    SampleRecord sample = compute_clip_spec(annotation, annotation.fps);
    if (!sample.action) {
      if (intra) {
        ++dropped_unlabeled;  // the intra protocol holds labeled queries only
      } else {
        distractors.push_back(std::move(sample));
      }
      continue;
    }
    if (!intra &&
        require_action(*sample.action).pair_id == kExcludedInterPairId) {
      ++dropped_excluded;  // forward/reverse co-occurs with other motion
      continue;
    }
    queries.push_back(std::move(sample));
  }

  BenchmarkManifest manifest =
      intra ? build_intra_pair_manifest(std::move(queries))
            : build_inter_pair_manifest(std::move(queries),
                                        std::move(distractors));
  write_manifest(manifest, config.manifest_path);

  auto stats = manifest_stats(manifest);
  std::cout << "manifest: " << config.manifest_path.string() << "\n"
            << "protocol: " << to_string(manifest.protocol) << "\n"
            << "samples: " << stats.total_samples
            << " (queries " << stats.queries << ", distractors "
            << stats.distractors << ")\n";
  if (dropped_excluded > 0) {
    std::cerr << "note: dropped " << dropped_excluded
              << " forward/reverse samples (excluded from inter-pair "
                 "evaluation)\n";
  }
  if (dropped_unlabeled > 0) {
    std::cerr << "note: dropped " << dropped_unlabeled
              << " class-less samples (intra-pair manifests hold labeled "
                 "queries only)\n";
  }
  return 0;
}

int cmd_plan_extract(const CliFlags& flags) {
  RunConfig config = resolve_config(flags);
  validate_config(config);
  auto manifest = read_manifest(config.manifest_path);
  auto plan = emit_extraction_plan(manifest, config.out_dir / "media");
  fs::create_directories(config.out_dir);
  const fs::path out = config.out_dir / "extraction_plan.jsonl";
  write_extraction_plan(plan, out);
  std::cout << "extraction plan: " << out.string() << " (" << plan.rows.size()
            << " rows)\n";
  return 0;
}

int cmd_describe(const CliFlags& flags) {
  RunConfig config = resolve_config(flags);
  validate_config(config);
  auto manifest = read_manifest(config.manifest_path);
  auto endpoints = make_endpoints(config);
  const bool skipped = describe_stage(config, manifest, *endpoints.chat);
  std::cout << "descriptions: " << descriptions_path(config).string()
            << (skipped ? " (up to date)" : " (written)") << "\n";
  return 0;
}

int cmd_embed(const CliFlags& flags) {
  RunConfig config = resolve_config(flags);
  validate_config(config);
  auto endpoints = make_endpoints(config);
  const std::size_t newly = embed_stage(config, *endpoints.embed);
  std::cout << "embedding cache: " << newly << " sentences newly embedded\n";
  return 0;
}

int cmd_simmatrix(const CliFlags& flags) {
  RunConfig config = resolve_config(flags);
  validate_config(config);
  auto manifest = read_manifest(config.manifest_path);
  auto endpoints = make_endpoints(config);
  const bool skipped = simmatrix_stage(config, manifest, *endpoints.embed);
  std::cout << "similarity matrix: " << matrix_path(config).string()
            << (skipped ? " (up to date)" : " (written)") << "\n";
  return 0;
}

int cmd_evaluate(const CliFlags& flags) {
  RunConfig config = resolve_config(flags);
  validate_config(config);
  auto manifest = read_manifest(config.manifest_path);
  EvaluationReport report;
  if (manifest.protocol == Protocol::kClassification) {
    auto endpoints = make_endpoints(config);
    classify_stage(config, manifest, *endpoints.embed, &report);
  } else {
    evaluate_stage(config, manifest, &report);
  }
  print_report(report);
  std::cout << "report: " << report_path(config).string() << "\n";
  return 0;
}

int cmd_run(const CliFlags& flags) {
  RunConfig config = resolve_config(flags);
  auto outcome = run(config);
  for (const auto& stage : outcome.stages) {
    std::cout << stage.stage << ": " << (stage.skipped ? "skipped" : "ran")
              << "\n";
  }
  print_report(outcome.report);
  std::cout << "report: " << report_path(config).string() << "\n";
  return 0;
}

int cmd_ablate(const CliFlags& flags, const std::string& axis,
               const std::vector<std::string>& values) {
  RunConfig config = resolve_config(flags);
  SweepSpec sweep;
  if (axis == "fps") {
    std::vector<double> fps_values;
    for (const auto& value : values) {
      try {
        std::size_t used = 0;
        double fps = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        fps_values.push_back(fps);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kConfigError,
                    "not an fps value: " + value);
      }
    }
    sweep.fps = std::move(fps_values);
  } else if (axis == "embedder") {
    sweep.embedders = values;
  } else {  // "split" (restricted by the option definition)
    if (!values.empty()) {
      throw Error(ErrorCode::kConfigError,
                  "the split-mode sweep takes no --values");
    }
    sweep.split_mode = true;
  }

  auto rows = ablate(config, sweep);
  std::printf("%-24s %10s %8s %8s\n", "label", "overall", "scored",
              "skipped");
  for (const auto& row : rows) {
    std::printf("%-24s %10s %8d %8d\n", row.label.c_str(),
                format_pct(row.report.overall_pct).c_str(),
                row.report.scored_queries, row.report.skipped_queries);
  }
  std::cout << "summary: " << (config.out_dir / "ablation.csv").string()
            << "\n";
  return 0;
}

int cmd_stats(const CliFlags& flags) {
  RunConfig config = resolve_config(flags);
  if (config.manifest_path.empty() || !fs::exists(config.manifest_path)) {
    throw Error(ErrorCode::kConfigError,
                "stats needs an existing manifest (--manifest or config)");
  }
  auto manifest = read_manifest(config.manifest_path);
  std::cout << manifest_stats(manifest).to_json().dump(2) << "\n";
  return 0;
}

int cmd_throughput(const CliFlags& flags) {
  RunConfig config = resolve_config(flags);
  std::vector<RunLogEntry> log;
  for_each_jsonl_file(run_log_path(config), [&](const Json& row, std::size_t) {
    log.push_back({row.at("sample_id").get<std::string>(),
                   row.at("started_s").get<double>(),
                   row.at("finished_s").get<double>()});
  });
  std::printf("instances_per_second: %.4f\n", measure_throughput(log));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Turn media into model descriptions, embed them sentence by "
      "sentence, and score retrieval or classification protocols by "
      "max-pairwise-cosine similarity."};
  app.require_subcommand(1);
  app.fallthrough();

  CliFlags flags;
  app.add_option("--config", flags.config_path, "Run config JSON file");
  app.add_option("--manifest", flags.manifest,
                 "Benchmark manifest path (overrides the config)");
  app.add_option("--cache-dir", flags.cache_dir,
                 "Cache directory for responses and embeddings");
  app.add_option("--out-dir", flags.out_dir, "Artifact output directory");
  app.add_option("--workers", flags.workers, "Worker threads for stages")
      ->each([&flags](const std::string&) { flags.workers_set = true; });
  app.add_option("--fps", flags.fps, "Frame sampling rate")
      ->each([&flags](const std::string&) { flags.fps_set = true; });
  app.add_option("--strategy", flags.strategy, "Prompting strategy")
      ->check(CLI::IsMember({"general", "task-aware"}));
  app.add_option("--split", flags.split, "Embedding granularity")
      ->check(CLI::IsMember({"split-max", "whole-text"}));
  app.add_flag("--constrained", flags.constrained,
               "Restrict the retrieval database to query samples");

  std::string annotations;
  std::string protocol_name;
  auto* build = app.add_subcommand(
      "build-manifest", "Build a benchmark manifest from activity "
                        "annotations (JSONL, one activity per line)");
  build->add_option("--annotations", annotations, "Annotation JSONL file")
      ->required();
  build->add_option("--protocol", protocol_name, "Evaluation protocol")
      ->required()
      ->check(CLI::IsMember({"inter", "intra"}));

  auto* plan = app.add_subcommand(
      "plan-extract", "Emit the declarative crop/clip extraction plan");
  auto* describe_cmd = app.add_subcommand(
      "describe", "Describe every manifest sample with the chat model");
  auto* embed_cmd = app.add_subcommand(
      "embed", "Embed every description sentence into the vector cache");
  auto* simmatrix_cmd = app.add_subcommand(
      "simmatrix", "Compute the query-by-database similarity matrix");
  auto* evaluate_cmd = app.add_subcommand(
      "evaluate", "Score the stored similarities under the manifest "
                  "protocol");
  auto* run_cmd = app.add_subcommand(
      "run", "Full pipeline: describe, embed, similarity, evaluate");

  std::string sweep_axis;
  std::vector<std::string> sweep_values;
  auto* ablate_cmd =
      app.add_subcommand("ablate", "Sweep one design factor and tabulate "
                                   "the resulting metrics");
  ablate_cmd->add_option("--sweep", sweep_axis, "Sweep axis")
      ->required()
      ->check(CLI::IsMember({"fps", "embedder", "split"}));
  ablate_cmd->add_option(
      "--values", sweep_values,
      "Comma-separated sweep points (fps numbers, or embedder ids as "
      "id[=base_url])")
      ->delimiter(',');

  auto* stats_cmd =
      app.add_subcommand("stats", "Print manifest statistics as JSON");
  auto* throughput_cmd = app.add_subcommand(
      "throughput", "Instances per second from the last describe run log");

  try {
    app.parse(argc, argv);
    if (build->parsed()) {
      return cmd_build_manifest(flags, annotations, protocol_name);
    }
    if (plan->parsed()) return cmd_plan_extract(flags);
    if (describe_cmd->parsed()) return cmd_describe(flags);
    if (embed_cmd->parsed()) return cmd_embed(flags);
    if (simmatrix_cmd->parsed()) return cmd_simmatrix(flags);
    if (evaluate_cmd->parsed()) return cmd_evaluate(flags);
    if (run_cmd->parsed()) return cmd_run(flags);
    if (ablate_cmd->parsed()) {
      return cmd_ablate(flags, sweep_axis, sweep_values);
    }
    if (stats_cmd->parsed()) return cmd_stats(flags);
    if (throughput_cmd->parsed()) return cmd_throughput(flags);
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
