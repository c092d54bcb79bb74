#pragma once

#include <cstddef>

#include "dmt/glm.hpp"
#include "dmt/types.hpp"

namespace dmt {

/// Accumulated loss, gradient and observation count of a node (or of the
/// left side of a split candidate), all evaluated at the node's parameters as
/// they were when each batch arrived.
struct NodeStats {
  double loss_sum = 0.0;
  GradientAccumulator grad;
  std::size_t count = 0;

  NodeStats() = default;
  NodeStats(std::size_t rows, std::size_t cols) : grad(rows, cols) {}

  void add(double loss, const Matrix& grad_sum, std::size_t n) {
    loss_sum += loss;
    grad.add(grad_sum);
    count += n;
  }

  void reset() {
    loss_sum = 0.0;
    grad.reset();
    count = 0;
  }

  /// Statistics of the complement subset (this minus subset).
  NodeStats minus(const NodeStats& subset) const;
};

/// First-order estimate of the loss a child would reach after one warm-start
/// step from the parent: loss - (lr / count) * |grad|^2, floored at zero.
double candidate_loss_approx(double loss, const Matrix& grad_sum, std::size_t count,
                             double learning_rate);
double candidate_loss_approx(const NodeStats& stats, double learning_rate);

/// Same estimate from a precomputed squared gradient norm.
double candidate_loss_approx_from_norm(double loss, double grad_sq_norm, std::size_t count,
                                       double learning_rate);

/// Loss improvement of splitting a leaf. Returns -infinity when either side of
/// the candidate is empty.
double split_gain(const NodeStats& node, const NodeStats& left, double learning_rate);

/// Loss improvement of replacing an inner node's subtree (whose leaves carry
/// leaf_loss_sum in total) by the candidate split.
double replace_gain(double leaf_loss_sum, const NodeStats& inner, const NodeStats& left,
                    double learning_rate);

/// Loss improvement of collapsing an inner node's subtree into a leaf.
inline double prune_gain(double leaf_loss_sum, double inner_loss_sum) {
  return leaf_loss_sum - inner_loss_sum;
}

/// Minimum gain for replacing a reference model with k_parent parameters by a
/// pair of models with k_left and k_right parameters at confidence epsilon:
/// k_left + k_right - k_parent - ln(epsilon).
double gain_threshold(double k_left, double k_right, double k_parent, double epsilon);

/// Minimum prune gain: the single inner model replaces leaves holding
/// k_leaves parameters in total, so k_inner - k_leaves - ln(epsilon).
double prune_threshold(double k_inner, double k_leaves, double epsilon);

}  // namespace dmt
