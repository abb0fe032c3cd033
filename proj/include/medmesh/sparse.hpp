#pragma once

#include <cstddef>
#include <vector>

#include "medmesh/mesh.hpp"

namespace medmesh {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Coordinate-format sparse matrix, kept sorted by (row, col).
///
/// Construction validates: indices in range, no duplicate (row, col), every
/// value finite and nonzero. Row offsets are cached so products run in CSR
/// order without a second copy of the data.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);

  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nonzeros() const { return triplets_.size(); }
  const std::vector<Triplet>& triplets() const { return triplets_; }

  /// Entries of row r as a contiguous range of triplets.
  std::span<const Triplet> row(std::size_t r) const {
    return {triplets_.data() + row_start_[r], row_start_[r + 1] - row_start_[r]};
  }

  double row_sum(std::size_t r) const;
  std::vector<int> column_counts() const;

  /// Same pattern with every value replaced by 1.
  SparseMatrix indicator() const;
  SparseMatrix transpose() const;

  Eigen::MatrixXd to_dense() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Triplet> triplets_;
  std::vector<std::size_t> row_start_{0};
};

/// Per-channel product with an edge-indexed feature map: out = x * M^T, so
/// that out's edge r = sum over c of M(r, c) * x's edge c.
FeatureMap sparse_apply(const SparseMatrix& m, const FeatureMap& x);

/// x * M, the adjoint of sparse_apply: maps m.rows() edges to m.cols() edges.
FeatureMap sparse_apply_transpose(const SparseMatrix& m, const FeatureMap& x);

}  // namespace medmesh
