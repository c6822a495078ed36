#pragma once

// Weighted binary log-loss on raw scores (log-odds).

#include <cmath>
#include <span>

#include "crisk/common.hpp"

namespace crisk::boost {

struct GradHess {
  double g = 0, h = 0;
};

/// First and second derivative of w * logloss(sigmoid(score), y) in score.
inline GradHess logistic_grad_hess(double score, int y, double w) {
  const double p = sigmoid(score);
  return {w * (p - static_cast<double>(y)), w * p * (1.0 - p)};
}

/// w * [log(1 + e^s) - y s], evaluated without overflow.
inline double logistic_loss(double score, int y, double w) {
  const double softplus = score > 0 ? score + std::log1p(std::exp(-score)) : std::log1p(std::exp(score));
  return w * (softplus - static_cast<double>(y) * score);
}

/// Mean weighted log-loss.
inline double mean_logistic_loss(std::span<const double> scores, std::span<const int> y,
                                 std::span<const double> w) {
  double s = 0, ws = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    s += logistic_loss(scores[i], y[i], w[i]);
    ws += w[i];
  }
  return ws > 0 ? s / ws : 0.0;
}

/// Per-row weights: positives get negatives/positives when rebalancing.
inline std::vector<double> class_weights(std::span<const int> y, bool is_unbalance) {
  std::size_t pos = 0;
  for (int v : y) pos += v == 1 ? 1 : 0;
  const std::size_t neg = y.size() - pos;
  const double wpos = (is_unbalance && pos > 0 && neg > 0) ? static_cast<double>(neg) / static_cast<double>(pos) : 1.0;
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = y[i] == 1 ? wpos : 1.0;
  return w;
}

/// log(weighted positives / weighted negatives).
inline double prior_log_odds(std::span<const int> y, std::span<const double> w) {
  double p = 0, n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? p : n) += w[i];
  if (!(p > 0) || !(n > 0)) throw DataError("training labels must contain both classes");
  return std::log(p / n);
}

}  // namespace crisk::boost
