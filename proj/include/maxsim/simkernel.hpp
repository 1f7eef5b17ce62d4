#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "maxsim/embedding.hpp"
#include "maxsim/error.hpp"

namespace maxsim {

/// Score given to any pair where either side has no sentences; strictly
/// below the cosine range so such samples rank last under plain ordering.
inline constexpr double kEmptySetSimilarity = -2.0;

/// Cosine of two unit-norm vectors: their dot product accumulated in double,
/// clamped to [-1, 1]. Accepts any vector expressions of equal length.
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& a,
              const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cosine of vectors with dims " + std::to_string(a.size()) +
                    " and " + std::to_string(b.size()));
  }
  double dot = a.template cast<double>().cwiseProduct(b.template cast<double>()).sum();
  return std::clamp(dot, -1.0, 1.0);
}

/// Set-to-set similarity: the maximum pairwise cosine over all sentence
/// pairs of the two sets (rows of `a` against rows of `b`); the empty-set
/// sentinel when either side has no rows. Pure max over commutative dot
/// products, so exchanging the arguments gives bit-identical results.
template <typename DerivedA, typename DerivedB>
double set_similarity(const Eigen::MatrixBase<DerivedA>& a,
                      const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() == 0 || b.rows() == 0) return kEmptySetSimilarity;
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "set similarity across dims " + std::to_string(a.cols()) +
                    " and " + std::to_string(b.cols()));
  }
  double best = -1.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      best = std::max(best, cosine(a.row(i), b.row(j)));
    }
  }
  return best;
}

inline double set_similarity(const EmbeddingSet& a, const EmbeddingSet& b) {
  return set_similarity(a.vectors, b.vectors);
}

// ---------------------------------------------------------------------------
// Batch form

struct SimilarityMatrix {
  std::vector<std::string> query_ids;
  std::vector<std::string> db_ids;
  /// values(i, j) = set_similarity(query i, db j), stored as the 32-bit
  /// floats the persistence format carries.
  EmbeddingMatrix<float> values;
};

/// values[i][j] = set_similarity(queries[i], db[j]). Rows are distributed
/// over `workers` threads into preallocated storage, so scheduling never
/// changes the result.
SimilarityMatrix similarity_matrix(const std::vector<EmbeddingSet>& queries,
                                   const std::vector<EmbeddingSet>& db,
                                   int workers = 1);

// ---------------------------------------------------------------------------
// Multiple choice

struct ClassifyResult {
  int index = 0;
  /// True when the description was empty: every choice scored the sentinel
  /// and the returned index is only the documented fallback (lowest index).
  bool unscored = false;
};

/// Argmax over choices of set_similarity(description, choice); exact ties
/// resolve to the lowest index.
ClassifyResult classify(const EmbeddingSet& description,
                        const std::vector<EmbeddingSet>& choices);

// ---------------------------------------------------------------------------
// Persistence: one JSON header line (ids and shape), then row-major
// little-endian 32-bit floats.

void save_matrix(const SimilarityMatrix& matrix,
                 const std::filesystem::path& path);
SimilarityMatrix load_matrix(const std::filesystem::path& path);

}  // namespace maxsim
