#include "medmesh/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "medmesh/error.hpp"

namespace medmesh {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets)
    : rows_(rows), cols_(cols), triplets_(std::move(triplets)) {
  for (const Triplet& t : triplets_) {
    if (t.row < 0 || static_cast<std::size_t>(t.row) >= rows_ || t.col < 0 ||
        static_cast<std::size_t>(t.col) >= cols_)
      throw Error(ErrorKind::DimensionMismatch,
                  "triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                      ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_));
    if (!std::isfinite(t.value) || t.value == 0.0)
      throw Error(ErrorKind::DimensionMismatch, "triplet (" + std::to_string(t.row) + "," +
                                                    std::to_string(t.col) +
                                                    ") must be finite and nonzero");
  }
  std::sort(triplets_.begin(), triplets_.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t i = 1; i < triplets_.size(); ++i)
    if (triplets_[i].row == triplets_[i - 1].row && triplets_[i].col == triplets_[i - 1].col)
      throw Error(ErrorKind::DimensionMismatch, "duplicate triplet (" +
                                                    std::to_string(triplets_[i].row) + "," +
                                                    std::to_string(triplets_[i].col) + ")");

  row_start_.assign(rows_ + 1, 0);
  for (const Triplet& t : triplets_) ++row_start_[t.row + 1];
  for (std::size_t r = 0; r < rows_; ++r) row_start_[r + 1] += row_start_[r];
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = {static_cast<int>(i), static_cast<int>(i), 1.0};
  return SparseMatrix(n, n, std::move(t));
}

double SparseMatrix::row_sum(std::size_t r) const {
  double s = 0.0;
  for (const Triplet& t : row(r)) s += t.value;
  return s;
}

std::vector<int> SparseMatrix::column_counts() const {
  std::vector<int> counts(cols_, 0);
  for (const Triplet& t : triplets_) ++counts[t.col];
  return counts;
}

SparseMatrix SparseMatrix::indicator() const {
  SparseMatrix out = *this;
  for (Triplet& t : out.triplets_) t.value = 1.0;
  return out;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(triplets_.size());
  for (const Triplet& x : triplets_) t.push_back({x.col, x.row, x.value});
  return SparseMatrix(cols_, rows_, std::move(t));
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_),
                                            static_cast<Eigen::Index>(cols_));
  for (const Triplet& t : triplets_) d(t.row, t.col) = t.value;
  return d;
}

FeatureMap sparse_apply(const SparseMatrix& m, const FeatureMap& x) {
  if (static_cast<std::size_t>(x.cols()) != m.cols())
    throw Error(ErrorKind::DimensionMismatch, "matrix has " + std::to_string(m.cols()) +
                                                  " columns, feature map " +
                                                  std::to_string(x.cols()) + " edges");
  FeatureMap out = FeatureMap::Zero(x.rows(), static_cast<Eigen::Index>(m.rows()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto dst = out.col(static_cast<Eigen::Index>(r));
    for (const Triplet& t : m.row(r)) dst.noalias() += t.value * x.col(t.col);
  }
  return out;
}

FeatureMap sparse_apply_transpose(const SparseMatrix& m, const FeatureMap& x) {
  if (static_cast<std::size_t>(x.cols()) != m.rows())
    throw Error(ErrorKind::DimensionMismatch, "matrix has " + std::to_string(m.rows()) +
                                                  " rows, feature map " + std::to_string(x.cols()) +
                                                  " edges");
  FeatureMap out = FeatureMap::Zero(x.rows(), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto src = x.col(static_cast<Eigen::Index>(r));
    for (const Triplet& t : m.row(r)) out.col(t.col).noalias() += t.value * src;
  }
  return out;
}

}  // namespace medmesh
