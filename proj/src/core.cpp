#include "matchkit/core.hpp"

#include <algorithm>

namespace matchkit {

CausalDataset::CausalDataset(PointSet covariates, std::span<const int> treatments, Eigen::VectorXd outcomes)
    : covariates_(std::move(covariates)), outcomes_(std::move(outcomes)) {
  const auto n = covariates_.size();
  if (static_cast<Index>(treatments.size()) != n || outcomes_.size() != n) {
    throw Error(Errc::DimensionMismatch, "covariates, treatments and outcomes must have equal length (" +
                                             std::to_string(n) + ", " + std::to_string(treatments.size()) + ", " +
                                             std::to_string(outcomes_.size()) + ")");
  }
  treatments_.reserve(treatments.size());
  for (std::size_t i = 0; i < treatments.size(); ++i) {
    const int t = treatments[i];
    if (t != 0 && t != 1) {
      throw Error(Errc::BadTreatmentValue,
                  "treatment at row " + std::to_string(i) + " is " + std::to_string(t) + ", expected 0 or 1");
    }
    treatments_.push_back(static_cast<std::uint8_t>(t));
    (t == 1 ? treated_ids_ : control_ids_).push_back(static_cast<Index>(i));
  }
}

CausalDataset CausalDataset::subset(std::span<const Index> ids) const {
  std::vector<int> t(ids.size());
  Eigen::VectorXd y(static_cast<Index>(ids.size()));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    t[r] = treatments_[static_cast<std::size_t>(ids[r])];
    y(static_cast<Index>(r)) = outcomes_(ids[r]);
  }
  return CausalDataset(select_rows(covariates_, ids), t, std::move(y));
}

void EstimatorConfig::validate() const {
  if (m < 1) throw Error(Errc::InvalidM, "m must be at least 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(Errc::InvalidArgument, "alpha must be positive and finite");
  if (k_folds < 2) throw Error(Errc::InvalidArgument, "k_folds must be at least 2");
  if (outcome_degree < -1) throw Error(Errc::InvalidArgument, "outcome_degree must be >= 0 (or -1 for the zero model)");
}

void validate_two_sample(const PointSet& x, const PointSet& z, Index m) {
  if (x.dim() != z.dim()) {
    throw Error(Errc::DimensionMismatch,
                "x has dimension " + std::to_string(x.dim()) + " but z has dimension " + std::to_string(z.dim()));
  }
  if (x.empty() || z.empty()) throw Error(Errc::EmptySample, "both samples must be nonempty");
  if (m < 1 || m > x.size()) {
    throw Error(Errc::InvalidM, "m = " + std::to_string(m) + " must lie in [1, " + std::to_string(x.size()) + "]");
  }
}

void validate_causal(const CausalDataset& ds, Index m) {
  if (m < 1) throw Error(Errc::InvalidM, "m must be at least 1");
  if (ds.n0() < m || ds.n1() < m) {
    throw Error(Errc::GroupTooSmall, "need at least m = " + std::to_string(m) + " units per group, have n0 = " +
                                         std::to_string(ds.n0()) + ", n1 = " + std::to_string(ds.n1()));
  }
  if (!ds.outcomes().allFinite()) throw Error(Errc::NonFiniteOutcome, "outcomes must be finite");
}

Index round_clamp(double value, Index lo, Index hi) {
  if (hi < lo) hi = lo;
  if (!(value >= static_cast<double>(lo))) return lo;  // also catches NaN
  if (value >= static_cast<double>(hi)) return hi;
  return std::clamp(static_cast<Index>(std::floor(value + 0.5)), lo, hi);
}

}  // namespace matchkit
