#pragma once

// Second-order split gain with L1/L2 regularisation, and the matching
// optimal leaf value.

#include <cmath>

namespace crisk::boost {

/// sign(g) * max(|g| - alpha, 0)
inline double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

/// T(G)^2 / (H + lambda); 0 when the denominator vanishes.
inline double node_score(double g, double h, double lambda, double alpha) {
  const double denom = h + lambda;
  if (!(denom > 0)) return 0.0;
  const double t = soft_threshold(g, alpha);
  return t * t / denom;
}

/// 1/2 [ G_L^2/(H_L+l) + G_R^2/(H_R+l) - (G_L+G_R)^2/(H_L+H_R+l) ] - gamma,
/// each G soft-thresholded by `alpha` before squaring.
inline double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma,
                         double alpha = 0.0) {
  return 0.5 * (node_score(gl, hl, lambda, alpha) + node_score(gr, hr, lambda, alpha) -
                node_score(gl + gr, hl + hr, lambda, alpha)) -
         gamma;
}

/// -T(G) / (H + lambda), before shrinkage.
inline double leaf_output(double g, double h, double lambda, double alpha) {
  const double denom = h + lambda;
  if (!(denom > 0)) return 0.0;
  return -soft_threshold(g, alpha) / denom;
}

}  // namespace crisk::boost
