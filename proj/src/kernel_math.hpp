#pragma once

// Scalar building blocks shared by the serial and OpenMP kernels. Keeping the
// per-row and per-subset arithmetic in one place is what makes the two
// backends agree bit for bit.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dmt/kernels.hpp"

namespace dmt::kernels::detail {

inline double softplus(double a) {
  return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline void logits(const Matrix& w, const Matrix& rows, Eigen::Index i, double* z) {
  const Eigen::Index m = rows.cols();
  for (Eigen::Index k = 0; k < w.rows(); ++k) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) s += w(k, j) * rows(i, j);
    z[k] = s + w(k, m);
  }
}

/// Probabilities for row i; z is scratch of size n_classes.
inline void row_probabilities(const Matrix& w, const Matrix& rows, Eigen::Index i,
                              std::size_t n_classes, double* z, Matrix& out) {
  logits(w, rows, i, z);
  if (n_classes == 2) {
    out(i, 0) = sigmoid(-z[0]);
    out(i, 1) = sigmoid(z[0]);
    return;
  }
  const auto c = static_cast<Eigen::Index>(n_classes);
  double zmax = z[0];
  for (Eigen::Index k = 1; k < c; ++k) zmax = std::max(zmax, z[k]);
  double total = 0.0;
  for (Eigen::Index k = 0; k < c; ++k) total += std::exp(z[k] - zmax);
  const double lse = zmax + std::log(total);
  for (Eigen::Index k = 0; k < c; ++k) out(i, k) = std::exp(z[k] - lse);
}

/// Loss term and residual row for row i.
inline void row_term(const Matrix& w, const Matrix& rows, Eigen::Index i, int label,
                     std::size_t n_classes, double* z, RowTerms& out) {
  static const double log_floor = std::log(kProbabilityFloor);
  logits(w, rows, i, z);
  double log_p = 0.0;
  if (n_classes == 2) {
    log_p = label == 1 ? -softplus(-z[0]) : -softplus(z[0]);
    out.residual(i, 0) = sigmoid(z[0]) - (label == 1 ? 1.0 : 0.0);
  } else {
    const auto c = static_cast<Eigen::Index>(n_classes);
    double zmax = z[0];
    for (Eigen::Index k = 1; k < c; ++k) zmax = std::max(zmax, z[k]);
    double total = 0.0;
    for (Eigen::Index k = 0; k < c; ++k) total += std::exp(z[k] - zmax);
    const double lse = zmax + std::log(total);
    for (Eigen::Index k = 0; k < c; ++k) {
      out.residual(i, k) = std::exp(z[k] - lse) - (k == label ? 1.0 : 0.0);
    }
    log_p = z[label] - lse;
  }
  out.loss[static_cast<std::size_t>(i)] = -std::max(log_p, log_floor);
}

/// Adds residual_i (outer) [x_i, 1] into grad.
inline void add_outer(const Matrix& rows, const Matrix& residual, Eigen::Index i, Matrix& grad) {
  const Eigen::Index m = rows.cols();
  for (Eigen::Index k = 0; k < residual.cols(); ++k) {
    const double rk = residual(i, k);
    for (Eigen::Index j = 0; j < m; ++j) grad(k, j) += rk * rows(i, j);
    grad(k, m) += rk;
  }
}

inline void accumulate_subset(const Matrix& rows, const RowTerms& terms, const SplitTest& test,
                              SubsetSums& out) {
  out.loss = 0.0;
  out.count = 0;
  out.grad.setZero(terms.residual.cols(), rows.cols() + 1);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (!test.goes_left(rows(i, static_cast<Eigen::Index>(test.feature)))) continue;
    out.loss += terms.loss[static_cast<std::size_t>(i)];
    ++out.count;
    add_outer(rows, terms.residual, i, out.grad);
  }
}

inline double squared_difference_norm(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double d = a.data()[k] - b.data()[k];
    s += d * d;
  }
  return s;
}

inline double squared_norm(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) s += a.data()[k] * a.data()[k];
  return s;
}

/// Enumerates the splits of one feature observed in the batch. Numeric
/// features yield midpoints between consecutive distinct values; categorical
/// features yield one equality test per observed value.
inline void scan_feature(const Matrix& rows, const RowTerms& terms, const Matrix& total_grad,
                         std::size_t feature, FeatureKind kind, std::vector<ScannedSplit>& out) {
  const auto n = static_cast<std::size_t>(rows.rows());
  const auto f = static_cast<Eigen::Index>(feature);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return rows(a, f) < rows(b, f); });

  Matrix grad = Matrix::Zero(terms.residual.cols(), rows.cols() + 1);
  double loss = 0.0;
  std::size_t count = 0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const Eigen::Index i = order[pos];
    const double x = rows(i, f);
    loss += terms.loss[static_cast<std::size_t>(i)];
    ++count;
    add_outer(rows, terms.residual, i, grad);

    const bool group_ends = pos + 1 == n || rows(order[pos + 1], f) != x;
    if (!group_ends) continue;

    if (kind == FeatureKind::numeric) {
      if (pos + 1 == n) break;
      const double next = rows(order[pos + 1], f);
      double mid = 0.5 * (x + next);
      if (!(mid < next)) mid = x;
      out.push_back({SplitTest{feature, mid, kind}, loss, count, squared_norm(grad),
                     squared_difference_norm(total_grad, grad)});
    } else {
      if (count < n) {
        out.push_back({SplitTest{feature, x, kind}, loss, count, squared_norm(grad),
                       squared_difference_norm(total_grad, grad)});
      }
      grad.setZero();
      loss = 0.0;
      count = 0;
    }
  }
}

}  // namespace dmt::kernels::detail
