#include "dmt/gains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dmt/errors.hpp"

namespace dmt {

NodeStats NodeStats::minus(const NodeStats& subset) const {
  NodeStats out = *this;
  out.loss_sum -= subset.loss_sum;
  out.grad.subtract(subset.grad.sum());
  out.count = count >= subset.count ? count - subset.count : 0;
  return out;
}

double candidate_loss_approx_from_norm(double loss, double grad_sq_norm, std::size_t count,
                                       double learning_rate) {
  if (count == 0) throw DegenerateCandidateError("candidate side has no observations");
  const double approx = loss - learning_rate / static_cast<double>(count) * grad_sq_norm;
  return std::max(approx, 0.0);
}

double candidate_loss_approx(double loss, const Matrix& grad_sum, std::size_t count,
                             double learning_rate) {
  return candidate_loss_approx_from_norm(loss, grad_sum.squaredNorm(), count, learning_rate);
}

double candidate_loss_approx(const NodeStats& stats, double learning_rate) {
  return candidate_loss_approx_from_norm(stats.loss_sum, stats.grad.squared_norm(), stats.count,
                                         learning_rate);
}

namespace {

// Sum of both sides' approximate losses, or nullopt-like infinity when a side
// is empty.
double approx_pair(const NodeStats& parent, const NodeStats& left, double learning_rate) {
  if (left.count == 0 || left.count >= parent.count) {
    return std::numeric_limits<double>::infinity();
  }
  const NodeStats right = parent.minus(left);
  return candidate_loss_approx(left, learning_rate) + candidate_loss_approx(right, learning_rate);
}

}  // namespace

double split_gain(const NodeStats& node, const NodeStats& left, double learning_rate) {
  const double pair = approx_pair(node, left, learning_rate);
  if (std::isinf(pair)) return -std::numeric_limits<double>::infinity();
  return node.loss_sum - pair;
}

double replace_gain(double leaf_loss_sum, const NodeStats& inner, const NodeStats& left,
                    double learning_rate) {
  const double pair = approx_pair(inner, left, learning_rate);
  if (std::isinf(pair)) return -std::numeric_limits<double>::infinity();
  return leaf_loss_sum - pair;
}

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw ConfigError("epsilon must lie in (0, 1], got " + std::to_string(epsilon));
  }
}

}  // namespace

double gain_threshold(double k_left, double k_right, double k_parent, double epsilon) {
  check_epsilon(epsilon);
  return k_left + k_right - k_parent - std::log(epsilon);
}

double prune_threshold(double k_inner, double k_leaves, double epsilon) {
  check_epsilon(epsilon);
  return k_inner - k_leaves - std::log(epsilon);
}

}  // namespace dmt
