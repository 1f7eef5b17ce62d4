#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "maxsim/endpoints.hpp"
#include "maxsim/types.hpp"

namespace maxsim {

// ---------------------------------------------------------------------------
// Prompts

enum class PromptStrategy { kGeneral, kTaskAware };
enum class DatasetKey {
  kSpatialBench,
  kVsr,
  kWhatsUp,
  kCountBench,
  kVisual7wCount,
  kSovaBench,
  kCustom,
};

std::string_view to_string(PromptStrategy strategy);
std::string_view to_string(DatasetKey key);
PromptStrategy prompt_strategy_from_string(std::string_view text);
DatasetKey dataset_key_from_string(std::string_view text);

struct PromptConfig {
  PromptStrategy strategy = PromptStrategy::kGeneral;
  DatasetKey dataset_key = DatasetKey::kCustom;
  std::string instruction;
  std::optional<std::string> system_prompt;
};

/// The per-dataset instruction catalog. GENERAL always resolves to
/// "Describe the image" / "Describe the video" by media kind; TASK_AWARE
/// returns the dataset's published instruction (and, for the vehicle-action
/// benchmark, its system prompt). CUSTOM requires `custom_instruction`.
PromptConfig resolve_prompt(
    DatasetKey dataset_key, PromptStrategy strategy, MediaKind kind,
    const std::optional<std::string>& custom_instruction = std::nullopt);

// ---------------------------------------------------------------------------
// Decode and media

/// Decoding is greedy in every evaluation run; the only knob is length.
struct DecodeParams {
  int max_output_tokens = 512;
};

struct MediaInput {
  MediaKind kind = MediaKind::kVideo;
  std::vector<EncodedFrame> frames;  // timestamps non-decreasing, >= 1 frame
};

/// Frames at span.start_s + k/fps for k = 0, 1, ... strictly below
/// span.end_s; at least the first frame is always emitted, and overlong
/// candidate lists are uniformly subsampled down to max_frames.
///
/// References under the synthetic:// scheme yield deterministic payload
/// bytes (no decoder involved); file paths are decoded via the system
/// `ffmpeg` binary when available. Unreadable media raises kMediaError.
MediaInput sample_frames(const std::string& media_ref, const TimeSpan& span,
                         double fps, int max_frames);

/// The timestamp rule of sample_frames without any media access.
std::vector<double> frame_timestamps(const TimeSpan& span, double fps,
                                     int max_frames);

// ---------------------------------------------------------------------------
// Descriptions

struct DescriptionRecord {
  std::string sample_id;
  std::string model_id;
  std::string prompt_fingerprint;
  std::string text;
  std::int64_t latency_ms = 0;
  bool refused = false;
  /// Wall-clock creation time (informational; never serialized into
  /// description files, which must be byte-stable across reruns).
  std::string created_at;
};

/// Digest of everything that shapes a description besides the media:
/// strategy, dataset, instruction, system prompt, and decode parameters.
std::string prompt_fingerprint(const PromptConfig& prompt,
                               const DecodeParams& decode);

/// Append-only store of chat replies keyed by a digest of the full request
/// (model, prompt, decode, frame bytes). Replays are byte-identical,
/// including the recorded latency, so reruns reproduce description files
/// exactly. Safe under concurrent insertion.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);
  ~ResponseCache();
  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  struct Entry {
    std::string text;
    std::int64_t latency_ms = 0;
    bool refused = false;
  };

  std::optional<Entry> lookup(const std::string& key);
  void insert(const std::string& key, const Entry& entry);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Entry> entries_;
  struct Stream;
  std::unique_ptr<Stream> stream_;
};

/// Request digest used by the response cache.
std::string response_key(const std::string& model_id, const MediaInput& media,
                         const PromptConfig& prompt,
                         const DecodeParams& decode);

/// One description: cache lookup, else endpoint call with bounded-backoff
/// retries. Refusals are recorded as empty text with `refused` set rather
/// than failing the run. The record's sample_id is left to the caller.
DescriptionRecord describe(const MediaInput& media, const PromptConfig& prompt,
                           const DecodeParams& decode, ChatEndpoint& endpoint,
                           ResponseCache* cache,
                           const RetryPolicy& retry = {});

// ---------------------------------------------------------------------------
// Throughput

struct RunLogEntry {
  std::string sample_id;
  double started_s = 0;
  double finished_s = 0;
};

/// Completed samples divided by the wall-clock span of the run
/// (latest finish minus earliest start). Empty log raises kNoData.
double measure_throughput(const std::vector<RunLogEntry>& log);

}  // namespace maxsim
