#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "maxsim/error.hpp"

namespace maxsim {

/// Sentences-by-dimension matrix: row r is the embedding of sentence r.
/// Row-major so each sentence vector is contiguous, as in the on-disk blobs.
template <typename Scalar>
using EmbeddingMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// The variable-size set of unit-norm sentence vectors for one sample.
/// Zero rows encode an empty description (refused or blank response).
struct EmbeddingSet {
  std::string sample_id;
  std::string model_id;
  EmbeddingMatrix<float> vectors;

  Eigen::Index size() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }
  bool empty() const { return vectors.rows() == 0; }
};

/// L2-normalizes every row in place. Rejects zero and non-finite rows: a
/// degenerate vector from an endpoint is corrupt data, not a usable
/// embedding.
template <typename Derived>
void normalize_rows(Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (!m.row(r).allFinite()) {
      throw Error(ErrorCode::kInconsistentInputs,
                  "non-finite embedding at row " + std::to_string(r));
    }
    double norm = m.row(r).template cast<double>().norm();
    if (norm == 0) {
      throw Error(ErrorCode::kInconsistentInputs,
                  "zero-norm embedding at row " + std::to_string(r));
    }
    m.row(r) /= static_cast<typename Derived::Scalar>(norm);
  }
}

}  // namespace maxsim
