#include "maxsim/embedder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "maxsim/digest.hpp"
#include "maxsim/jsonl.hpp"

namespace maxsim {

static_assert(std::endian::native == std::endian::little,
              "the vector blob format is little-endian");

std::string cache_key(const std::string& model_id, std::string_view text) {
  Sha256 digest;
  digest.field(model_id);
  digest.field(text);
  return digest.hex();
}

// ---------------------------------------------------------------------------
// EmbedCache

namespace {
constexpr std::string_view kCacheFormat = "maxsim.embedcache.v1";
}

struct EmbedCache::Streams {
  std::ofstream blob_out;
  std::ifstream blob_in;
  std::ofstream index_out;
};

EmbedCache::EmbedCache(std::filesystem::path dir, std::string model_id,
                       int dim)
    : dir_(std::move(dir)),
      model_id_(std::move(model_id)),
      dim_(dim),
      streams_(std::make_unique<Streams>()) {
  if (dim < 0) {
    throw Error(ErrorCode::kConfigError, "negative embedding dimension");
  }
  std::lock_guard lock(mutex_);
  std::filesystem::create_directories(dir_);
  load_locked();
}

EmbedCache::~EmbedCache() = default;

int EmbedCache::dim() const {
  std::lock_guard lock(mutex_);
  return dim_;
}

std::size_t EmbedCache::size() const {
  std::lock_guard lock(mutex_);
  return rows_.size();
}

void EmbedCache::load_locked() {
  const auto manifest_path = dir_ / "cache_manifest.json";
  const auto index_path = dir_ / "index.jsonl";
  const auto blob_path = dir_ / "vectors.blob";

  if (std::filesystem::exists(manifest_path)) {
    Json manifest = Json::parse(read_file(manifest_path), nullptr, false);
    if (manifest.is_discarded()) {
      throw Error(ErrorCode::kCacheMismatch,
                  "unreadable cache manifest at " + manifest_path.string());
    }
    if (manifest.value("format", "") != kCacheFormat) {
      throw Error(ErrorCode::kCacheMismatch,
                  "unrecognized cache format in " + manifest_path.string());
    }
    const std::string stored_model = manifest.value("model_id", "");
    if (stored_model != model_id_) {
      throw Error(ErrorCode::kCacheMismatch,
                  "cache at " + dir_.string() + " was built with encoder '" +
                      stored_model + "', not '" + model_id_ + "'");
    }
    int stored_dim = manifest.value("dim", 0);
    if (dim_ != 0 && stored_dim != 0 && stored_dim != dim_) {
      throw Error(ErrorCode::kCacheMismatch,
                  "cache at " + dir_.string() + " stores " +
                      std::to_string(stored_dim) + "-dim vectors, expected " +
                      std::to_string(dim_));
    }
    if (dim_ == 0) dim_ = stored_dim;
  } else {
    Json manifest;
    manifest["format"] = kCacheFormat;
    manifest["model_id"] = model_id_;
    manifest["dim"] = dim_;
    write_file(manifest_path, manifest.dump(2) + "\n");
  }

  // Index lines are appended after their blob rows; a torn final line or a
  // row past the blob's end marks an interrupted append and is dropped.
  std::int64_t blob_floats = 0;
  if (std::filesystem::exists(blob_path)) {
    blob_floats =
        static_cast<std::int64_t>(std::filesystem::file_size(blob_path)) / 4;
  }
  if (std::filesystem::exists(index_path)) {
    std::ifstream in(index_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      Json entry = Json::parse(line, nullptr, false);
      if (entry.is_discarded() || !entry.contains("key") ||
          !entry.contains("row")) {
        break;
      }
      auto row = entry["row"].get<std::int64_t>();
      if (dim_ <= 0 || (row + 1) * dim_ > blob_floats) continue;
      rows_[entry["key"].get<std::string>()] = row;
    }
  }

  streams_->blob_out.open(blob_path, std::ios::binary | std::ios::app);
  streams_->index_out.open(index_path, std::ios::app);
  streams_->blob_in.open(blob_path, std::ios::binary);
  if (!streams_->blob_out || !streams_->index_out) {
    throw Error(ErrorCode::kIoError,
                "cannot open cache files under " + dir_.string());
  }
}

void EmbedCache::set_dim_locked(int dim) {
  dim_ = dim;
  Json manifest;
  manifest["format"] = kCacheFormat;
  manifest["model_id"] = model_id_;
  manifest["dim"] = dim_;
  write_file(dir_ / "cache_manifest.json", manifest.dump(2) + "\n");
}

std::optional<std::vector<float>> EmbedCache::lookup(const std::string& key) {
  std::lock_guard lock(mutex_);
  auto it = rows_.find(key);
  if (it == rows_.end()) return std::nullopt;
  std::vector<float> vec(static_cast<std::size_t>(dim_));
  auto& in = streams_->blob_in;
  in.clear();  // the stream may have hit EOF before rows were appended
  in.seekg(it->second * dim_ * 4);
  in.read(reinterpret_cast<char*>(vec.data()),
          static_cast<std::streamsize>(vec.size() * 4));
  if (!in) {
    throw Error(ErrorCode::kIoError,
                "cache blob truncated while reading " + key);
  }
  return vec;
}

void EmbedCache::insert(const std::string& key,
                        const std::vector<float>& vector) {
  if (vector.empty()) {
    throw Error(ErrorCode::kInconsistentInputs,
                "refusing to cache an empty vector");
  }
  std::lock_guard lock(mutex_);
  if (dim_ == 0) {
    set_dim_locked(static_cast<int>(vector.size()));
  } else if (static_cast<int>(vector.size()) != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vector of dim " + std::to_string(vector.size()) +
                    " does not fit a " + std::to_string(dim_) + "-dim cache");
  }
  if (rows_.count(key)) return;

  const auto row = static_cast<std::int64_t>(rows_.size());
  streams_->blob_out.write(reinterpret_cast<const char*>(vector.data()),
                           static_cast<std::streamsize>(vector.size() * 4));
  streams_->blob_out.flush();
  if (!streams_->blob_out) {
    throw Error(ErrorCode::kIoError, "cache blob write failed");
  }
  Json entry;
  entry["key"] = key;
  entry["row"] = row;
  streams_->index_out << entry.dump() << '\n';
  streams_->index_out.flush();
  if (!streams_->index_out) {
    throw Error(ErrorCode::kIoError, "cache index write failed");
  }
  rows_[key] = row;
}

// ---------------------------------------------------------------------------
// Embedding operations

namespace {

// L2 normalization with double accumulation; rejects zero and non-finite
// vectors, which cosine similarity cannot represent.
std::vector<float> normalized(const std::vector<float>& raw) {
  double sq = 0;
  for (float x : raw) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kInconsistentInputs,
                  "embedding endpoint returned a non-finite value");
    }
    sq += static_cast<double>(x) * static_cast<double>(x);
  }
  double norm = std::sqrt(sq);
  if (norm == 0.0 || !std::isfinite(norm)) {
    throw Error(ErrorCode::kInconsistentInputs,
                "embedding endpoint returned a zero vector");
  }
  std::vector<float> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(raw[i]) / norm);
  }
  return out;
}

}  // namespace

EmbeddingSet embed_sentences(const std::vector<std::string>& sentences,
                             EmbedEndpoint& endpoint, EmbedCache* cache,
                             const RetryPolicy& retry) {
  EmbeddingSet set;
  set.model_id = endpoint.model_id();

  int dim = cache ? cache->dim() : 0;
  const auto n = sentences.size();
  std::vector<std::vector<float>> vectors(n);

  // Cache pass: resolve what we can, dedupe the rest by key so one fetch
  // serves every position that shares the text.
  std::vector<std::string> keys(n);
  std::vector<std::string> miss_texts;
  std::vector<std::string> miss_keys;
  std::unordered_map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = cache_key(set.model_id, sentences[i]);
    if (cache) {
      if (auto hit = cache->lookup(keys[i])) {
        vectors[i] = std::move(*hit);
        continue;
      }
    }
    auto [it, fresh] = positions.try_emplace(keys[i]);
    it->second.push_back(i);
    if (fresh) {
      miss_texts.push_back(sentences[i]);
      miss_keys.push_back(keys[i]);
    }
  }

  for (std::size_t start = 0; start < miss_texts.size();
       start += kEmbedBatchSize) {
    const auto stop = std::min(miss_texts.size(),
                               start + static_cast<std::size_t>(kEmbedBatchSize));
    std::vector<std::string> batch(miss_texts.begin() + start,
                                   miss_texts.begin() + stop);
    auto raw = retry_with_backoff(retry, [&] { return endpoint.embed(batch); });
    if (raw.size() != batch.size()) {
      throw Error(ErrorCode::kInconsistentInputs,
                  "endpoint returned " + std::to_string(raw.size()) +
                      " vectors for " + std::to_string(batch.size()) +
                      " inputs");
    }
    for (std::size_t b = 0; b < raw.size(); ++b) {
      auto vec = normalized(raw[b]);
      if (dim == 0) {
        dim = static_cast<int>(vec.size());
      } else if (static_cast<int>(vec.size()) != dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "endpoint switched from " + std::to_string(dim) + " to " +
                        std::to_string(vec.size()) + " dimensions mid-run");
      }
      if (cache) cache->insert(miss_keys[start + b], vec);
      for (std::size_t pos : positions.at(miss_keys[start + b])) {
        vectors[pos] = vec;
      }
    }
  }

  if (dim == 0 && n > 0) {
    // All hits came from a cache created before its dim was known — cannot
    // happen through this API, but guard the matrix shape anyway.
    throw Error(ErrorCode::kInconsistentInputs,
                "embedding dimension is unknown after resolving all inputs");
  }
  set.vectors.resize(static_cast<Eigen::Index>(n), dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) {
      set.vectors(static_cast<Eigen::Index>(i), d) = vectors[i][d];
    }
  }
  return set;
}

EmbeddingSet embed_whole_text(const std::string& text, EmbedEndpoint& endpoint,
                              EmbedCache* cache, const RetryPolicy& retry) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    EmbeddingSet set;
    set.model_id = endpoint.model_id();
    set.vectors.resize(0, cache ? cache->dim() : 0);
    return set;
  }
  return embed_sentences({text}, endpoint, cache, retry);
}

}  // namespace maxsim
