#include "matchkit/divergence.hpp"

#include <cmath>

#include "matchkit/ratio.hpp"

namespace matchkit {

double phi(double t) {
  if (t < 0.0 || std::isnan(t)) throw Error(Errc::NegativeInput, "phi is defined on [0, inf)");
  if (t == 0.0) return 0.0;
  return t * std::log(t);
}

DivergenceEstimate kl_estimate(const PointSet& x, const PointSet& z, Index m) {
  const auto ratio = density_ratio_at_sample(x, z, m);
  double sum = 0.0, comp = 0.0;
  for (Index i = 0; i < ratio.values.size(); ++i) {
    const double y = phi(ratio.values(i)) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return {sum / static_cast<double>(x.size()), m, x.size(), z.size()};
}

Index select_m_kl(Index n0, Index n1, Index d, double alpha) {
  if (n0 < 1 || n1 < 1 || d < 1) throw Error(Errc::InvalidArgument, "sample sizes and dimension must be positive");
  if (!(alpha > 0.0)) throw Error(Errc::InvalidArgument, "alpha must be positive");
  const double dd = static_cast<double>(d);
  const double balanced = std::pow(static_cast<double>(n0), 1.0 / (1.0 + dd));
  const double imbalanced = static_cast<double>(n0) * std::pow(static_cast<double>(n1), -dd / (1.0 + dd));
  return round_clamp(alpha * std::max(balanced, imbalanced), 1, n0);
}

}  // namespace matchkit
