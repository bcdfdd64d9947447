#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "matchkit/error.hpp"

namespace matchkit {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N points in R^d stored row-major, one point per row. Immutable once built;
/// every coordinate is finite and d >= 1. An empty set (n = 0) is allowed so
/// that validation can report it with a proper error.
template <typename Scalar>
class BasicPointSet {
 public:
  using Matrix = RowMatrix<Scalar>;
  using ConstRow = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

  BasicPointSet() : points_(0, 1) {}

  explicit BasicPointSet(Matrix points) : points_(std::move(points)) {
    if (points_.cols() < 1) {
      throw Error(Errc::DimensionMismatch, "point dimension must be at least 1");
    }
    if (!points_.allFinite()) {
      throw Error(Errc::NonFiniteCoordinate, "point coordinates must be finite");
    }
  }

  static BasicPointSet from_rows(const std::vector<std::vector<Scalar>>& rows, Index dim = -1) {
    if (rows.empty()) {
      return BasicPointSet(Matrix(0, dim < 1 ? 1 : dim));
    }
    const Index d = static_cast<Index>(rows.front().size());
    if (dim >= 0 && dim != d) {
      throw Error(Errc::DimensionMismatch, "row dimension differs from requested dimension");
    }
    Matrix m(static_cast<Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<Index>(rows[i].size()) != d) {
        throw Error(Errc::DimensionMismatch,
                    "row " + std::to_string(i) + " has dimension " + std::to_string(rows[i].size()) +
                        ", expected " + std::to_string(d));
      }
      for (Index k = 0; k < d; ++k) m(static_cast<Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
    }
    return BasicPointSet(std::move(m));
  }

  /// Convenience for one-dimensional samples.
  static BasicPointSet from_values(std::initializer_list<Scalar> values) {
    Matrix m(static_cast<Index>(values.size()), 1);
    Index i = 0;
    for (Scalar v : values) m(i++, 0) = v;
    return BasicPointSet(std::move(m));
  }

  Index size() const noexcept { return points_.rows(); }
  Index dim() const noexcept { return points_.cols(); }
  bool empty() const noexcept { return points_.rows() == 0; }

  const Matrix& matrix() const noexcept { return points_; }
  std::span<const Scalar> row(Index i) const {
    return {points_.data() + i * points_.cols(), static_cast<std::size_t>(points_.cols())};
  }

 private:
  Matrix points_;
};

using PointSet = BasicPointSet<double>;

/// Squared Euclidean distance. Every distance comparison in the toolkit goes
/// through this function so that ties are decided identically everywhere.
template <typename Scalar>
inline Scalar squared_distance(std::span<const Scalar> a, std::span<const Scalar> b) noexcept {
  Scalar acc = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Scalar diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

/// Stacks the rows of `a` on top of the rows of `b`.
template <typename Scalar>
BasicPointSet<Scalar> concatenate(const BasicPointSet<Scalar>& a, const BasicPointSet<Scalar>& b) {
  if (a.dim() != b.dim()) throw Error(Errc::DimensionMismatch, "cannot concatenate point sets of different dimension");
  RowMatrix<Scalar> m(a.size() + b.size(), a.dim());
  if (a.size() > 0) m.topRows(a.size()) = a.matrix();
  if (b.size() > 0) m.bottomRows(b.size()) = b.matrix();
  return BasicPointSet<Scalar>(std::move(m));
}

/// Rows of `points` selected by `ids`, in that order.
template <typename Scalar>
BasicPointSet<Scalar> select_rows(const BasicPointSet<Scalar>& points, std::span<const Index> ids) {
  RowMatrix<Scalar> m(static_cast<Index>(ids.size()), points.dim());
  for (std::size_t r = 0; r < ids.size(); ++r) m.row(static_cast<Index>(r)) = points.matrix().row(ids[r]);
  return BasicPointSet<Scalar>(std::move(m));
}

/// Observational data (X_i, D_i, Y_i), i = 1..n, with treatment D_i in {0, 1}.
class CausalDataset {
 public:
  CausalDataset(PointSet covariates, std::span<const int> treatments, Eigen::VectorXd outcomes);

  Index size() const noexcept { return covariates_.size(); }
  Index dim() const noexcept { return covariates_.dim(); }
  Index n0() const noexcept { return static_cast<Index>(control_ids_.size()); }
  Index n1() const noexcept { return static_cast<Index>(treated_ids_.size()); }

  const PointSet& covariates() const noexcept { return covariates_; }
  const std::vector<std::uint8_t>& treatments() const noexcept { return treatments_; }
  const Eigen::VectorXd& outcomes() const noexcept { return outcomes_; }
  bool treated(Index i) const { return treatments_[static_cast<std::size_t>(i)] != 0; }

  /// Global row indices of the control (D = 0) and treated (D = 1) units, ascending.
  const std::vector<Index>& control_ids() const noexcept { return control_ids_; }
  const std::vector<Index>& treated_ids() const noexcept { return treated_ids_; }
  const std::vector<Index>& group_ids(int omega) const noexcept { return omega == 0 ? control_ids_ : treated_ids_; }

  /// Subset of the rows in `ids`, in that order.
  CausalDataset subset(std::span<const Index> ids) const;

 private:
  PointSet covariates_;
  std::vector<std::uint8_t> treatments_;
  Eigen::VectorXd outcomes_;
  std::vector<Index> control_ids_;
  std::vector<Index> treated_ids_;
};

/// Tuning knobs shared by the estimators.
struct EstimatorConfig {
  Index m = 1;
  double alpha = 1.0;
  int k_folds = 2;
  std::uint64_t seed = 0;
  int outcome_degree = 1;

  void validate() const;
};

void validate_two_sample(const PointSet& x, const PointSet& z, Index m);
void validate_causal(const CausalDataset& ds, Index m);

/// Round-half-up followed by clamping into [lo, hi].
Index round_clamp(double value, Index lo, Index hi);

}  // namespace matchkit
