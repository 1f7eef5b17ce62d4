#include "maxsim/simkernel.hpp"

#include <bit>
#include <cstring>
#include <thread>

#include "maxsim/jsonl.hpp"

static_assert(std::endian::native == std::endian::little,
              "matrix persistence assumes a little-endian host");

namespace maxsim {

SimilarityMatrix similarity_matrix(const std::vector<EmbeddingSet>& queries,
                                   const std::vector<EmbeddingSet>& db,
                                   int workers) {
  Eigen::Index dim = -1;
  auto check_dim = [&](const EmbeddingSet& s) {
    if (s.empty()) return;
    if (dim == -1) dim = s.dim();
    if (s.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  s.sample_id + ": embedding dim " + std::to_string(s.dim()) +
                      " != " + std::to_string(dim));
    }
  };
  for (const auto& s : queries) check_dim(s);
  for (const auto& s : db) check_dim(s);

  SimilarityMatrix out;
  out.query_ids.reserve(queries.size());
  for (const auto& s : queries) out.query_ids.push_back(s.sample_id);
  out.db_ids.reserve(db.size());
  for (const auto& s : db) out.db_ids.push_back(s.sample_id);
  out.values.resize(static_cast<Eigen::Index>(queries.size()),
                    static_cast<Eigen::Index>(db.size()));

  auto fill_rows = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      for (size_t j = 0; j < db.size(); ++j) {
        out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            static_cast<float>(set_similarity(queries[i], db[j]));
      }
    }
  };

  workers = std::max(1, workers);
  if (workers == 1 || queries.size() < 2) {
    fill_rows(0, queries.size());
    return out;
  }
  std::vector<std::thread> pool;
  size_t chunk = (queries.size() + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    size_t begin = w * chunk;
    size_t end = std::min(queries.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fill_rows, begin, end);
  }
  for (auto& t : pool) t.join();
  return out;
}

ClassifyResult classify(const EmbeddingSet& description,
                        const std::vector<EmbeddingSet>& choices) {
  if (choices.size() < 2) {
    throw Error(ErrorCode::kInconsistentInputs,
                "classification needs at least 2 choices, got " +
                    std::to_string(choices.size()));
  }
  ClassifyResult result;
  double best = kEmptySetSimilarity;
  bool any_real = false;
  for (size_t c = 0; c < choices.size(); ++c) {
    double score = set_similarity(description, choices[c]);
    if (score != kEmptySetSimilarity) any_real = true;
    if (score > best) {
      best = score;
      result.index = static_cast<int>(c);
    }
  }
  result.unscored = !any_real;
  return result;
}

void save_matrix(const SimilarityMatrix& matrix,
                 const std::filesystem::path& path) {
  Json header;
  header["format"] = "maxsim.simmatrix.v1";
  header["rows"] = matrix.values.rows();
  header["cols"] = matrix.values.cols();
  header["query_ids"] = matrix.query_ids;
  header["db_ids"] = matrix.db_ids;

  auto out = open_output(path);
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(matrix.values.data()),
            static_cast<std::streamsize>(sizeof(float) * matrix.values.size()));
  if (!out) {
    throw Error(ErrorCode::kIoError, "failed writing matrix: " + path.string());
  }
}

SimilarityMatrix load_matrix(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParseError, "empty matrix file: " + path.string());
  }
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError,
                path.string() + ": bad matrix header: " + e.what());
  }
  if (header.value("format", "") != "maxsim.simmatrix.v1") {
    throw Error(ErrorCode::kParseError,
                path.string() + ": not a similarity matrix file");
  }
  SimilarityMatrix m;
  m.query_ids = header.at("query_ids").get<std::vector<std::string>>();
  m.db_ids = header.at("db_ids").get<std::vector<std::string>>();
  auto rows = header.at("rows").get<Eigen::Index>();
  auto cols = header.at("cols").get<Eigen::Index>();
  if (rows != static_cast<Eigen::Index>(m.query_ids.size()) ||
      cols != static_cast<Eigen::Index>(m.db_ids.size())) {
    throw Error(ErrorCode::kParseError,
                path.string() + ": header shape disagrees with id lists");
  }
  m.values.resize(rows, cols);
  if (m.values.size() > 0) {
    in.read(reinterpret_cast<char*>(m.values.data()),
            static_cast<std::streamsize>(sizeof(float) * m.values.size()));
    if (in.gcount() !=
        static_cast<std::streamsize>(sizeof(float) * m.values.size())) {
      throw Error(ErrorCode::kParseError,
                  path.string() + ": truncated matrix payload");
    }
  }
  return m;
}

}  // namespace maxsim
