#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "maxsim/embedding.hpp"
#include "maxsim/endpoints.hpp"

namespace maxsim {

/// Sentences handed to the embedding endpoint per request.
inline constexpr int kEmbedBatchSize = 64;

/// Collision-resistant key over (model_id, exact text bytes); identical
/// inputs map to the same key in every process.
std::string cache_key(const std::string& model_id, std::string_view text);

/// Persistent content-addressed store of normalized sentence vectors.
///
/// Layout inside the directory:
///   cache_manifest.json  — model_id and vector dimension of the store
///   index.jsonl          — one {key, row} line per stored vector
///   vectors.blob         — append-only rows of little-endian f32
///
/// A row becomes visible only after its blob bytes are flushed and its
/// index line is written, so readers never observe torn vectors; a crash
/// mid-append loses at most the row being written. Opening a directory
/// whose manifest names a different model or dimension fails with
/// kCacheMismatch instead of silently mixing encoders.
class EmbedCache {
 public:
  /// Opens or creates the store. `dim` 0 means "adopt the dimension from
  /// the existing manifest or from the first inserted vector".
  EmbedCache(std::filesystem::path dir, std::string model_id, int dim = 0);
  ~EmbedCache();

  EmbedCache(const EmbedCache&) = delete;
  EmbedCache& operator=(const EmbedCache&) = delete;

  const std::string& model_id() const { return model_id_; }
  const std::filesystem::path& dir() const { return dir_; }
  /// 0 until the first vector fixes it.
  int dim() const;
  std::size_t size() const;

  std::optional<std::vector<float>> lookup(const std::string& key);
  /// Stores a normalized vector; re-inserting an existing key is a no-op.
  void insert(const std::string& key, const std::vector<float>& vector);

 private:
  void load_locked();
  void set_dim_locked(int dim);

  std::filesystem::path dir_;
  std::string model_id_;
  mutable std::mutex mutex_;
  int dim_ = 0;
  std::unordered_map<std::string, std::int64_t> rows_;
  struct Streams;
  std::unique_ptr<Streams> streams_;
};

/// Embeds each sentence independently (the split+max representation):
/// one L2-normalized vector per sentence, cache consulted per sentence
/// before any endpoint call, misses fetched in batches of kEmbedBatchSize
/// with bounded-backoff retries. The returned set's sample_id is left for
/// the caller to assign.
EmbeddingSet embed_sentences(const std::vector<std::string>& sentences,
                             EmbedEndpoint& endpoint, EmbedCache* cache,
                             const RetryPolicy& retry = {});

/// The whole-text ablation: the entire response embedded as one vector.
/// Empty or whitespace-only text yields the empty set.
EmbeddingSet embed_whole_text(const std::string& text, EmbedEndpoint& endpoint,
                              EmbedCache* cache, const RetryPolicy& retry = {});

}  // namespace maxsim
