#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maxsim/jsonl.hpp"
#include "maxsim/types.hpp"

namespace maxsim {

// ---------------------------------------------------------------------------
// Clip specification

/// Fraction of ROI width/height added on each side before rounding.
inline constexpr double kDefaultCropPadding = 0.05;

/// Turns one activity annotation into a sample: the crop is the union of all
/// actor boxes inside [start_frame, end_frame], padded outward and clamped at
/// zero (the extractor clamps against source dimensions it alone knows), and
/// the span converts frames to seconds. Empty action labels become
/// distractors.
SampleRecord compute_clip_spec(const ActivityAnnotation& annotation,
                               double fps_of_source,
                               double padding = kDefaultCropPadding);

// ---------------------------------------------------------------------------
// Manifest builders

/// Queries must carry actions from the six retained pairs (the
/// forward/reverse pair always co-occurs with other vehicle motion and is
/// excluded); distractors must be class-less. Zero distractors marks the
/// manifest constrained-equivalent.
BenchmarkManifest build_inter_pair_manifest(std::vector<SampleRecord> queries,
                                            std::vector<SampleRecord> distractors);

/// Every sample must be a labeled query; all 7 pairs participate.
BenchmarkManifest build_intra_pair_manifest(std::vector<SampleRecord> queries);

// ---------------------------------------------------------------------------
// Statistics

struct StatsReport {
  int total_samples = 0;
  int queries = 0;
  int distractors = 0;
  std::map<std::string, int> per_class;
  std::map<std::string, int> per_pair;
  // Duration seconds, lower edges: [0,2,5,10,20,40]; last bucket unbounded.
  std::vector<int> duration_histogram;
  // Crop long side in pixels, lower edges: [0,64,128,256,512]; last unbounded.
  std::vector<int> crop_resolution_histogram;

  Json to_json() const;
};

StatsReport manifest_stats(const BenchmarkManifest& manifest);

// ---------------------------------------------------------------------------
// Extraction plan

struct PlanRow {
  std::string sample_id;
  std::string source;
  std::optional<PixelBox> crop;
  std::optional<TimeSpan> span;
  std::string output;
};

struct ExtractionPlan {
  std::vector<PlanRow> rows;  // sorted by (source, sample_id)
};

/// Declarative work list for an external frame/clip extractor; no media is
/// read or written here. Output paths live under out_dir and are unique.
ExtractionPlan emit_extraction_plan(const BenchmarkManifest& manifest,
                                    const std::filesystem::path& out_dir);

/// Filesystem-safe name derived from a sample id.
std::string sanitize_id(std::string_view sample_id);

// ---------------------------------------------------------------------------
// Serialization

/// One activity per line; throws kParseError / kUnknownAction on bad rows.
ActivityAnnotation parse_annotation(const Json& row);
std::vector<ActivityAnnotation> load_annotations(const std::filesystem::path& path);

Json sample_to_json(const SampleRecord& sample);
SampleRecord sample_from_json(const Json& row);

/// Samples as JSONL plus a `<path>.meta.json` sidecar carrying protocol and
/// constrained flag; classification choices go to `<path>.choices.jsonl`.
void write_manifest(const BenchmarkManifest& manifest,
                    const std::filesystem::path& path);
BenchmarkManifest read_manifest(const std::filesystem::path& path);

void write_extraction_plan(const ExtractionPlan& plan,
                           const std::filesystem::path& path);
ExtractionPlan read_extraction_plan(const std::filesystem::path& path);

}  // namespace maxsim
