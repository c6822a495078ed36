#pragma once

// Confusion matrix, threshold metrics, ROC polyline and trapezoidal AUC.

#include <algorithm>
#include <numeric>
#include <ostream>
#include <span>
#include <vector>

#include "crisk/common.hpp"

namespace crisk {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double threshold = 0.5;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Predicted positive iff score >= threshold.
inline ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels,
                                 double threshold = 0.5) {
  if (scores.size() != labels.size()) throw DataError("confusion: length mismatch");
  if (scores.empty()) throw DataError("confusion: empty input");
  ConfusionMatrix c;
  c.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool pos = labels[i] == 1;
    if (pred && pos) ++c.tp;
    else if (pred) ++c.fp;
    else if (pos) ++c.fn;
    else ++c.tn;
  }
  return c;
}

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
  // Set when a denominator was zero and the 0-convention applied.
  bool precision_undefined = false, recall_undefined = false, f1_undefined = false;
};

inline Metrics metrics(const ConfusionMatrix& c) {
  Metrics m;
  const auto total = static_cast<double>(c.total());
  m.accuracy = total > 0 ? static_cast<double>(c.tp + c.tn) / total : 0.0;
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  else m.precision_undefined = true;
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  else m.recall_undefined = true;
  if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  else m.f1_undefined = true;
  return m;
}

struct RocPoint {
  double fpr = 0, tpr = 0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
  std::size_t m_plus = 0;   // positives
  std::size_t m_minus = 0;  // negatives
};

struct RocResult {
  RocCurve curve;
  double auc = 0;
};

/// Walks scores in descending order from (0,0). Each tie group of p
/// positives and q negatives is one segment to (fpr + q/m-, tpr + p/m+);
/// the area is the trapezoid sum over segments.
inline RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("roc_auc: length mismatch");
  RocResult res;
  auto& curve = res.curve;
  for (int y : labels) (y == 1 ? curve.m_plus : curve.m_minus)++;
  if (curve.m_plus == 0 || curve.m_minus == 0) throw DataError("roc_auc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double inv_p = 1.0 / static_cast<double>(curve.m_plus);
  const double inv_n = 1.0 / static_cast<double>(curve.m_minus);
  curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double area2 = 0;  // twice the area, in units of inv_p * inv_n
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i, p = 0, q = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? p : q)++;
      ++j;
    }
    // trapezoid: width q, heights tp and tp + p (integer counts, exact)
    area2 += static_cast<double>(q) * static_cast<double>(2 * tp + p);
    tp += p;
    fp += q;
    curve.points.push_back({static_cast<double>(fp) * inv_n, static_cast<double>(tp) * inv_p});
    i = j;
  }
  curve.points.back() = {1.0, 1.0};
  res.auc = area2 * 0.5 * inv_p * inv_n;
  return res;
}

inline double auc(std::span<const double> scores, std::span<const int> labels) {
  return roc_auc(scores, labels).auc;
}

inline void write_roc_csv(const RocCurve& c, std::ostream& out) {
  out << "fpr,tpr\n";
  out.precision(17);
  for (const auto& p : c.points) out << p.fpr << ',' << p.tpr << '\n';
}

/// Everything reported for one classifier on one test set.
struct EvalReport {
  Metrics metrics;
  ConfusionMatrix confusion;
  double auc = 0;
  double wall_time_seconds = 0;
};

inline EvalReport evaluate(std::span<const double> scores, std::span<const int> labels,
                           double threshold = 0.5) {
  EvalReport r;
  r.confusion = confusion(scores, labels, threshold);
  r.metrics = metrics(r.confusion);
  r.auc = auc(scores, labels);
  return r;
}

}  // namespace crisk
