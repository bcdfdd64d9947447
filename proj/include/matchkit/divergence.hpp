#pragma once

#include "matchkit/core.hpp"

namespace matchkit {

/// t * ln(t), with phi(0) = 0.
double phi(double t);

struct DivergenceEstimate {
  double value = 0.0;
  Index m = 0;
  Index n0 = 0;
  Index n1 = 0;
};

/// Plug-in KL(nu1 || nu0) in nats: the mean of phi(r_M(X_i)) over the x sample.
DivergenceEstimate kl_estimate(const PointSet& x, const PointSet& z, Index m);

/// round(alpha * max(n0^{1/(1+d)}, n0 * n1^{-d/(1+d)})), clamped to [1, n0].
Index select_m_kl(Index n0, Index n1, Index d, double alpha);

}  // namespace matchkit
