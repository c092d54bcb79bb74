#pragma once

#include <cstddef>
#include <span>

#include "dmt/types.hpp"

namespace dmt {

/// Logit (two classes) or multinomial logit (c > 2 classes) model.
///
/// Weights have one row per logit (1 for binary targets, c otherwise) and
/// n_features + 1 columns; the last column is the intercept. The binary model
/// predicts p(class 1) = sigmoid(w . x + b).
class LinearNodeModel {
 public:
  LinearNodeModel(std::size_t n_features, std::size_t n_classes, double learning_rate = 0.05);

  /// Adopts existing weights; the shape must match (logit_rows, n_features + 1).
  LinearNodeModel(Matrix weights, std::size_t n_classes, double learning_rate);

  const Matrix& weights() const { return weights_; }
  void set_weights(const Matrix& weights);

  std::size_t n_features() const { return static_cast<std::size_t>(weights_.cols()) - 1; }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t logit_rows() const { return static_cast<std::size_t>(weights_.rows()); }
  std::size_t parameter_count() const { return static_cast<std::size_t>(weights_.size()); }
  double learning_rate() const { return learning_rate_; }

  /// Moves the weights by -learning_rate * grad_sum / n_rows.
  void apply_gradient(const Matrix& grad_sum, std::size_t n_rows);

 private:
  Matrix weights_;
  std::size_t n_classes_;
  double learning_rate_;
};

/// Number of logit rows used for a c-class target.
inline std::size_t logit_rows_for(std::size_t n_classes) { return n_classes == 2 ? 1 : n_classes; }

/// Running sum of gradients with the shape of a model's weights.
class GradientAccumulator {
 public:
  GradientAccumulator() = default;
  GradientAccumulator(std::size_t rows, std::size_t cols) : sum_(Matrix::Zero(rows, cols)) {}

  const Matrix& sum() const { return sum_; }
  void add(const Matrix& grad) { sum_ += grad; }
  void subtract(const Matrix& grad) { sum_ -= grad; }
  void reset() { sum_.setZero(); }
  double squared_norm() const { return sum_.squaredNorm(); }

 private:
  Matrix sum_;
};

/// n x c class probabilities, clamped into [1e-15, 1 - 1e-15].
Matrix predict_proba(const LinearNodeModel& model, const Matrix& rows,
                     Execution exec = Execution::parallel);

/// Summed negative log-likelihood -sum_i log p(y_i | x_i).
double nll_loss(const LinearNodeModel& model, const Matrix& rows, std::span<const int> labels,
                Execution exec = Execution::parallel);

/// Exact gradient of nll_loss with respect to the weights (summed over rows).
Matrix nll_gradient(const LinearNodeModel& model, const Matrix& rows,
                    std::span<const int> labels, Execution exec = Execution::parallel);

/// One constant-rate gradient step with the batch-mean gradient. Returns the
/// summed batch gradient evaluated before the step.
Matrix sgd_step(LinearNodeModel& model, const Matrix& rows, std::span<const int> labels,
                Execution exec = Execution::parallel);

/// parent - (learning_rate / count) * grad_sum
Matrix warm_start_params(const Matrix& parent_weights, const GradientAccumulator& grad_sum,
                         std::size_t count, double learning_rate);

/// Throws DimensionError / LabelError if the batch does not fit the model.
void check_batch(const LinearNodeModel& model, const Matrix& rows, std::span<const int> labels);

}  // namespace dmt
