#include "dmt/glm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmt/errors.hpp"
#include "dmt/kernels.hpp"

namespace dmt {

namespace {

void check_learning_rate(double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ConfigError("learning rate must be finite and non-negative, got " + std::to_string(lr));
  }
}

}  // namespace

LinearNodeModel::LinearNodeModel(std::size_t n_features, std::size_t n_classes,
                                 double learning_rate)
    : n_classes_(n_classes), learning_rate_(learning_rate) {
  if (n_classes < 2) throw ConfigError("a classifier needs at least two classes");
  check_learning_rate(learning_rate);
  weights_ = Matrix::Zero(static_cast<Eigen::Index>(logit_rows_for(n_classes)),
                          static_cast<Eigen::Index>(n_features + 1));
}

LinearNodeModel::LinearNodeModel(Matrix weights, std::size_t n_classes, double learning_rate)
    : weights_(std::move(weights)), n_classes_(n_classes), learning_rate_(learning_rate) {
  if (n_classes < 2) throw ConfigError("a classifier needs at least two classes");
  check_learning_rate(learning_rate);
  if (static_cast<std::size_t>(weights_.rows()) != logit_rows_for(n_classes) ||
      weights_.cols() < 1) {
    throw DimensionError("weight matrix shape does not match the class count");
  }
  if (!weights_.allFinite()) throw ConfigError("weights must be finite");
}

void LinearNodeModel::set_weights(const Matrix& weights) {
  if (weights.rows() != weights_.rows() || weights.cols() != weights_.cols()) {
    throw DimensionError("weight matrix shape cannot change over a model's lifetime");
  }
  weights_ = weights;
}

void LinearNodeModel::apply_gradient(const Matrix& grad_sum, std::size_t n_rows) {
  if (n_rows == 0) return;
  const double scale = learning_rate_ / static_cast<double>(n_rows);
  weights_ -= scale * grad_sum;
}

void check_batch(const LinearNodeModel& model, const Matrix& rows, std::span<const int> labels) {
  if (static_cast<std::size_t>(rows.cols()) != model.n_features()) {
    throw DimensionError("expected " + std::to_string(model.n_features()) + " feature columns, got " +
                         std::to_string(rows.cols()));
  }
  if (static_cast<std::size_t>(rows.rows()) != labels.size()) {
    throw DimensionError("row count and label count differ");
  }
  if (rows.rows() == 0) throw DimensionError("batch has no rows");
  const int c = static_cast<int>(model.n_classes());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw LabelError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                       " is outside [0, " + std::to_string(c) + ")");
    }
  }
}

Matrix predict_proba(const LinearNodeModel& model, const Matrix& rows, Execution exec) {
  if (static_cast<std::size_t>(rows.cols()) != model.n_features()) {
    throw DimensionError("expected " + std::to_string(model.n_features()) + " feature columns, got " +
                         std::to_string(rows.cols()));
  }
  Matrix out;
  kernels::probabilities(exec, model.weights(), rows, model.n_classes(), out);
  out = out.cwiseMax(kProbabilityFloor).cwiseMin(1.0 - kProbabilityFloor);
  return out;
}

double nll_loss(const LinearNodeModel& model, const Matrix& rows, std::span<const int> labels,
                Execution exec) {
  check_batch(model, rows, labels);
  kernels::RowTerms terms;
  kernels::row_terms(exec, model.weights(), rows, labels, model.n_classes(), terms);
  return terms.loss_sum();
}

Matrix nll_gradient(const LinearNodeModel& model, const Matrix& rows,
                    std::span<const int> labels, Execution exec) {
  check_batch(model, rows, labels);
  kernels::RowTerms terms;
  kernels::row_terms(exec, model.weights(), rows, labels, model.n_classes(), terms);
  Matrix grad;
  kernels::gradient(exec, rows, terms.residual, grad);
  return grad;
}

Matrix sgd_step(LinearNodeModel& model, const Matrix& rows, std::span<const int> labels,
                Execution exec) {
  Matrix grad = nll_gradient(model, rows, labels, exec);
  model.apply_gradient(grad, static_cast<std::size_t>(rows.rows()));
  return grad;
}

Matrix warm_start_params(const Matrix& parent_weights, const GradientAccumulator& grad_sum,
                         std::size_t count, double learning_rate) {
  if (count == 0) throw DegenerateCandidateError("warm start needs at least one observation");
  if (grad_sum.sum().rows() != parent_weights.rows() ||
      grad_sum.sum().cols() != parent_weights.cols()) {
    throw DimensionError("gradient shape does not match the parent weights");
  }
  return parent_weights - (learning_rate / static_cast<double>(count)) * grad_sum.sum();
}

}  // namespace dmt
