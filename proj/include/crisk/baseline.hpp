#pragma once

// Weighted, L2-regularised logistic regression fit by full-batch gradient
// descent with a fixed step. Expects standardised inputs.

#include <cmath>
#include <span>
#include <vector>

#include "crisk/common.hpp"

namespace crisk {

struct LogisticConfig {
  double learning_rate = 0.5;
  std::size_t max_iterations = 1000;
  double l2 = 1e-4;
  double tolerance = 1e-6;  // stop once the gradient norm drops below
  std::uint64_t seed = 0;   // recorded for provenance; the fit is deterministic
};

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0;
  LogisticConfig config;
  std::size_t iterations = 0;
  std::vector<double> loss_history;  // objective before each step
};

struct LogisticObjective {
  double loss = 0;
  std::vector<double> grad_w;
  double grad_b = 0;

  double grad_norm() const {
    double s = grad_b * grad_b;
    for (double g : grad_w) s += g * g;
    return std::sqrt(s);
  }
};

/// (1/W) sum_i w_i logloss(sigmoid(x_i.w + b), y_i) + (l2/2)|w|^2 and its
/// gradient in (w, b).
inline LogisticObjective logistic_objective(std::span<const double> weights, double bias, const Matrix& x,
                                            std::span<const int> y, std::span<const double> sw, double l2) {
  const std::size_t d = x.cols();
  LogisticObjective o;
  o.grad_w.assign(d, 0.0);
  double wsum = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double z = bias;
    for (std::size_t j = 0; j < d; ++j) z += row[j] * weights[j];
    const double p = sigmoid(z);
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    o.loss += sw[r] * (softplus - y[r] * z);
    const double resid = sw[r] * (p - y[r]);
    for (std::size_t j = 0; j < d; ++j) o.grad_w[j] += resid * row[j];
    o.grad_b += resid;
    wsum += sw[r];
  }
  const double inv = wsum > 0 ? 1.0 / wsum : 0.0;
  o.loss *= inv;
  o.grad_b *= inv;
  double reg = 0;
  for (std::size_t j = 0; j < d; ++j) {
    o.grad_w[j] = o.grad_w[j] * inv + l2 * weights[j];
    reg += weights[j] * weights[j];
  }
  o.loss += 0.5 * l2 * reg;
  return o;
}

/// Empty `sample_weights` means unit weights.
inline LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, std::span<const double> sample_weights,
                                  const LogisticConfig& cfg) {
  if (x.rows() != y.size()) throw DataError("fit_logistic: X/y length mismatch");
  if (!sample_weights.empty() && sample_weights.size() != y.size())
    throw DataError("fit_logistic: weight length mismatch");
  for (double v : x.data())
    if (!std::isfinite(v)) throw DataError("fit_logistic: non-finite input");
  for (int v : y)
    if (v != 0 && v != 1) throw DataError("fit_logistic: labels must be 0/1");
  std::vector<double> unit;
  if (sample_weights.empty()) {
    unit.assign(y.size(), 1.0);
    sample_weights = unit;
  }

  LogisticModel m;
  m.config = cfg;
  m.weights.assign(x.cols(), 0.0);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const auto o = logistic_objective(m.weights, m.bias, x, y, sample_weights, cfg.l2);
    m.loss_history.push_back(o.loss);
    if (o.grad_norm() < cfg.tolerance) break;
    for (std::size_t j = 0; j < m.weights.size(); ++j) m.weights[j] -= cfg.learning_rate * o.grad_w[j];
    m.bias -= cfg.learning_rate * o.grad_b;
    m.iterations = it + 1;
  }
  return m;
}

inline std::vector<double> predict_logistic(const LogisticModel& m, const Matrix& x) {
  if (x.cols() != m.weights.size())
    throw DataError("predict_logistic: input has " + std::to_string(x.cols()) + " columns, model expects " +
                    std::to_string(m.weights.size()));
  std::vector<double> p(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double z = m.bias;
    const auto row = x.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) z += row[j] * m.weights[j];
    p[r] = sigmoid(z);
  }
  return p;
}

}  // namespace crisk
