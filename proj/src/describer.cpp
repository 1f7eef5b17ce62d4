#include "maxsim/describer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>

#include <unistd.h>

#include "maxsim/digest.hpp"
#include "maxsim/jsonl.hpp"

namespace maxsim {

// ---------------------------------------------------------------------------
// Enum strings

std::string_view to_string(PromptStrategy strategy) {
  switch (strategy) {
    case PromptStrategy::kGeneral: return "GENERAL";
    case PromptStrategy::kTaskAware: return "TASK_AWARE";
  }
  throw Error(ErrorCode::kInconsistentInputs, "unknown prompt strategy");
}

std::string_view to_string(DatasetKey key) {
  switch (key) {
    case DatasetKey::kSpatialBench: return "SPATIALBENCH";
    case DatasetKey::kVsr: return "VSR";
    case DatasetKey::kWhatsUp: return "WHATSUP";
    case DatasetKey::kCountBench: return "COUNTBENCH";
    case DatasetKey::kVisual7wCount: return "VISUAL7W_COUNT";
    case DatasetKey::kSovaBench: return "SOVABENCH";
    case DatasetKey::kCustom: return "CUSTOM";
  }
  throw Error(ErrorCode::kInconsistentInputs, "unknown dataset key");
}

PromptStrategy prompt_strategy_from_string(std::string_view text) {
  if (text == "GENERAL") return PromptStrategy::kGeneral;
  if (text == "TASK_AWARE") return PromptStrategy::kTaskAware;
  throw Error(ErrorCode::kParseError,
              "not a prompt strategy: " + std::string(text));
}

DatasetKey dataset_key_from_string(std::string_view text) {
  if (text == "SPATIALBENCH") return DatasetKey::kSpatialBench;
  if (text == "VSR") return DatasetKey::kVsr;
  if (text == "WHATSUP") return DatasetKey::kWhatsUp;
  if (text == "COUNTBENCH") return DatasetKey::kCountBench;
  if (text == "VISUAL7W_COUNT") return DatasetKey::kVisual7wCount;
  if (text == "SOVABENCH") return DatasetKey::kSovaBench;
  if (text == "CUSTOM") return DatasetKey::kCustom;
  throw Error(ErrorCode::kParseError,
              "not a dataset key: " + std::string(text));
}

// ---------------------------------------------------------------------------
// Prompt catalog

namespace {

constexpr std::string_view kSpatialBenchInstruction =
    "List all spatial relationships between objects (e.g., position, size, "
    "distance, or orientation) in short sentences.";
constexpr std::string_view kPairwiseSpatialInstruction =
    "List all pairwise spatial relations between objects in the image.";
constexpr std::string_view kCountInstruction =
    "Describe the image in a short caption that accurately states the number "
    "of main objects (in words) and includes a brief descriptive phrase.";
constexpr std::string_view kVehicleActionInstruction =
    "Briefly classify the actions occurring in this video.";
constexpr std::string_view kVehicleActionSystemPrompt =
    "You are an expert video analysis model specialized in action "
    "recognition. Focus on how subjects and objects change and move over "
    "time rather than on static appearances or backgrounds. Infer the "
    "actions by reasoning about motion, temporal progression, and "
    "interactions across the video frames.";

}  // namespace

PromptConfig resolve_prompt(
    DatasetKey dataset_key, PromptStrategy strategy, MediaKind kind,
    const std::optional<std::string>& custom_instruction) {
  PromptConfig config;
  config.strategy = strategy;
  config.dataset_key = dataset_key;

  if (strategy == PromptStrategy::kGeneral) {
    config.instruction =
        kind == MediaKind::kVideo ? "Describe the video" : "Describe the image";
    return config;
  }

  switch (dataset_key) {
    case DatasetKey::kSpatialBench:
      config.instruction = kSpatialBenchInstruction;
      return config;
    case DatasetKey::kVsr:
    case DatasetKey::kWhatsUp:
      config.instruction = kPairwiseSpatialInstruction;
      return config;
    case DatasetKey::kCountBench:
    case DatasetKey::kVisual7wCount:
      config.instruction = kCountInstruction;
      return config;
    case DatasetKey::kSovaBench:
      config.instruction = kVehicleActionInstruction;
      config.system_prompt = std::string(kVehicleActionSystemPrompt);
      return config;
    case DatasetKey::kCustom:
      if (!custom_instruction || custom_instruction->empty()) {
        throw Error(ErrorCode::kMissingInstruction,
                    "a custom task-aware prompt needs instruction text");
      }
      config.instruction = *custom_instruction;
      return config;
  }
  throw Error(ErrorCode::kInconsistentInputs, "unknown dataset key");
}

// ---------------------------------------------------------------------------
// Frame sampling

std::vector<double> frame_timestamps(const TimeSpan& span, double fps,
                                     int max_frames) {
  if (!(span.start_s < span.end_s)) {
    throw Error(ErrorCode::kInconsistentInputs,
                "frame sampling needs start < end, got [" +
                    std::to_string(span.start_s) + ", " +
                    std::to_string(span.end_s) + ")");
  }
  if (!(fps > 0)) {
    throw Error(ErrorCode::kConfigError, "fps must be positive");
  }
  if (max_frames < 1) {
    throw Error(ErrorCode::kConfigError, "max_frames must be at least 1");
  }

  const long double duration = static_cast<long double>(span.end_s) -
                               static_cast<long double>(span.start_s);
  auto candidates = static_cast<long long>(
      std::ceil(duration * static_cast<long double>(fps)));
  long long n = std::max(1ll, candidates);

  std::vector<long long> picks;
  if (n <= max_frames) {
    picks.resize(static_cast<std::size_t>(n));
    for (long long k = 0; k < n; ++k) picks[static_cast<std::size_t>(k)] = k;
  } else {
    // Uniform subsample over the candidate indices, endpoints included.
    const int m = max_frames;
    picks.resize(static_cast<std::size_t>(m));
    if (m == 1) {
      picks[0] = 0;
    } else {
      for (int i = 0; i < m; ++i) {
        picks[static_cast<std::size_t>(i)] = std::llround(
            static_cast<double>(i) * static_cast<double>(n - 1) / (m - 1));
      }
    }
  }

  std::vector<double> times;
  times.reserve(picks.size());
  for (long long k : picks) {
    times.push_back(span.start_s + static_cast<double>(k) / fps);
  }
  return times;
}

namespace {

EncodedFrame synthetic_frame(const std::string& media_ref, double t) {
  EncodedFrame frame;
  frame.timestamp_s = t;
  frame.mime = "application/x-synthetic";
  char stamp[32];
  std::snprintf(stamp, sizeof(stamp), "%.6f", t);
  frame.data = "frame|" + media_ref + "|" + stamp;
  return frame;
}

bool ffmpeg_available() {
  static const bool available =
      std::system("ffmpeg -version > /dev/null 2>&1") == 0;
  return available;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

EncodedFrame decoded_frame(const std::string& media_ref, double t) {
  if (!ffmpeg_available()) {
    throw Error(ErrorCode::kMediaError,
                "decoding " + media_ref + " needs the ffmpeg binary");
  }
  auto tmp = std::filesystem::temp_directory_path() /
             ("maxsim_frame_" + std::to_string(::getpid()) + "_" +
              sha256_hex(media_ref + std::to_string(t)).substr(0, 12) +
              ".jpg");
  char stamp[32];
  std::snprintf(stamp, sizeof(stamp), "%.6f", t);
  std::string command = "ffmpeg -v error -y -ss " + std::string(stamp) +
                        " -i " + shell_quote(media_ref) +
                        " -frames:v 1 -q:v 2 " + shell_quote(tmp.string()) +
                        " > /dev/null 2>&1";
  int status = std::system(command.c_str());
  if (status != 0 || !std::filesystem::exists(tmp)) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::kMediaError,
                "ffmpeg could not extract a frame at " + std::string(stamp) +
                    "s from " + media_ref);
  }
  EncodedFrame frame;
  frame.timestamp_s = t;
  frame.mime = "image/jpeg";
  frame.data = read_file(tmp);
  std::filesystem::remove(tmp);
  return frame;
}

}  // namespace

MediaInput sample_frames(const std::string& media_ref, const TimeSpan& span,
                         double fps, int max_frames) {
  auto times = frame_timestamps(span, fps, max_frames);
  MediaInput media;
  media.kind = MediaKind::kVideo;
  media.frames.reserve(times.size());

  const bool synthetic = media_ref.rfind("synthetic://", 0) == 0;
  if (!synthetic && !std::filesystem::exists(media_ref)) {
    throw Error(ErrorCode::kMediaError, "no such media: " + media_ref);
  }
  for (double t : times) {
    media.frames.push_back(synthetic ? synthetic_frame(media_ref, t)
                                     : decoded_frame(media_ref, t));
  }
  return media;
}

// ---------------------------------------------------------------------------
// Fingerprints and caching

std::string prompt_fingerprint(const PromptConfig& prompt,
                               const DecodeParams& decode) {
  Sha256 digest;
  digest.field(to_string(prompt.strategy));
  digest.field(to_string(prompt.dataset_key));
  digest.field(prompt.instruction);
  digest.field(prompt.system_prompt.value_or(""));
  digest.field_u64(static_cast<std::uint64_t>(decode.max_output_tokens));
  return digest.hex();
}

std::string response_key(const std::string& model_id, const MediaInput& media,
                         const PromptConfig& prompt,
                         const DecodeParams& decode) {
  Sha256 digest;
  digest.field(model_id);
  digest.field(prompt_fingerprint(prompt, decode));
  digest.field(to_string(media.kind));
  digest.field_u64(media.frames.size());
  for (const auto& frame : media.frames) {
    char stamp[32];
    std::snprintf(stamp, sizeof(stamp), "%.6f", frame.timestamp_s);
    digest.field(stamp);
    digest.field(frame.mime);
    digest.field(frame.data);
  }
  return digest.hex();
}

struct ResponseCache::Stream {
  std::ofstream out;
};

ResponseCache::ResponseCache(std::filesystem::path dir)
    : path_(std::move(dir)), stream_(std::make_unique<Stream>()) {
  std::filesystem::create_directories(path_);
  const auto file = path_ / "responses.jsonl";
  if (std::filesystem::exists(file)) {
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      Json record = Json::parse(line, nullptr, false);
      if (record.is_discarded() || !record.contains("key")) break;
      Entry entry;
      entry.text = record.value("text", "");
      entry.latency_ms = record.value("latency_ms", std::int64_t{0});
      entry.refused = record.value("refused", false);
      entries_[record["key"].get<std::string>()] = std::move(entry);
    }
  }
  stream_->out.open(file, std::ios::app);
  if (!stream_->out) {
    throw Error(ErrorCode::kIoError,
                "cannot open response cache at " + file.string());
  }
}

ResponseCache::~ResponseCache() = default;

std::optional<ResponseCache::Entry> ResponseCache::lookup(
    const std::string& key) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::insert(const std::string& key, const Entry& entry) {
  std::lock_guard lock(mutex_);
  if (entries_.count(key)) return;
  Json record;
  record["key"] = key;
  record["text"] = entry.text;
  record["latency_ms"] = entry.latency_ms;
  record["refused"] = entry.refused;
  stream_->out << record.dump() << '\n';
  stream_->out.flush();
  if (!stream_->out) {
    throw Error(ErrorCode::kIoError, "response cache write failed");
  }
  entries_[key] = entry;
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// describe

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

}  // namespace

DescriptionRecord describe(const MediaInput& media, const PromptConfig& prompt,
                           const DecodeParams& decode, ChatEndpoint& endpoint,
                           ResponseCache* cache, const RetryPolicy& retry) {
  if (media.frames.empty()) {
    throw Error(ErrorCode::kInconsistentInputs,
                "a description needs at least one frame");
  }
  DescriptionRecord record;
  record.model_id = endpoint.model_id();
  record.prompt_fingerprint = prompt_fingerprint(prompt, decode);
  record.created_at = now_utc_iso8601();

  const std::string key = response_key(record.model_id, media, prompt, decode);
  if (cache) {
    if (auto hit = cache->lookup(key)) {
      record.text = hit->text;
      record.latency_ms = hit->latency_ms;
      record.refused = hit->refused;
      return record;
    }
  }

  ChatRequest request;
  request.system = prompt.system_prompt;
  request.instruction = prompt.instruction;
  request.frames = media.frames;
  request.max_output_tokens = decode.max_output_tokens;

  const auto start = std::chrono::steady_clock::now();
  ChatReply reply =
      retry_with_backoff(retry, [&] { return endpoint.complete(request); });
  record.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  record.refused = reply.refused;
  record.text = reply.refused ? "" : reply.text;
  if (cache) {
    cache->insert(key, {record.text, record.latency_ms, record.refused});
  }
  return record;
}

// ---------------------------------------------------------------------------
// Throughput

double measure_throughput(const std::vector<RunLogEntry>& log) {
  if (log.empty()) {
    throw Error(ErrorCode::kNoData, "throughput of an empty run log");
  }
  double earliest = log.front().started_s;
  double latest = log.front().finished_s;
  for (const auto& entry : log) {
    earliest = std::min(earliest, entry.started_s);
    latest = std::max(latest, entry.finished_s);
  }
  const double span = latest - earliest;
  if (!(span > 0)) {
    throw Error(ErrorCode::kInconsistentInputs,
                "run log spans no wall-clock time");
  }
  return static_cast<double>(log.size()) / span;
}

}  // namespace maxsim
