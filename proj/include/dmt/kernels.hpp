#pragma once

// Batch kernels shared by the simple models and the tree. Every kernel has a
// serial reference implementation and an OpenMP implementation; the two are
// required to produce bit-identical output (each reduction is summed in row
// order regardless of how work is split across threads).

#include <cstddef>
#include <span>
#include <vector>

#include "dmt/split_test.hpp"
#include "dmt/types.hpp"

namespace dmt::kernels {

/// Per-row negative log-likelihood terms and residuals (p - onehot(y)) at
/// fixed weights. For binary models the residual has a single column.
struct RowTerms {
  std::vector<double> loss;
  Matrix residual;

  std::size_t size() const { return loss.size(); }
  double loss_sum() const;
};

/// Loss, gradient and count summed over the rows a split test sends left.
struct SubsetSums {
  double loss = 0.0;
  Matrix grad;
  std::size_t count = 0;
};

/// A split observed in a batch, with the squared gradient norms of both sides.
struct ScannedSplit {
  SplitTest test;
  double left_loss = 0.0;
  std::size_t left_count = 0;
  double left_sq_norm = 0.0;
  double right_sq_norm = 0.0;
};

namespace serial {
void probabilities(const Matrix& weights, const Matrix& rows, std::size_t n_classes, Matrix& out);
void row_terms(const Matrix& weights, const Matrix& rows, std::span<const int> labels,
               std::size_t n_classes, RowTerms& out);
void gradient(const Matrix& rows, const Matrix& residual, Matrix& out);
void subset_sums(const Matrix& rows, const RowTerms& terms, std::span<const SplitTest> tests,
                 std::vector<SubsetSums>& out);
void scan_splits(const Matrix& rows, const RowTerms& terms, const Matrix& total_grad,
                 std::span<const FeatureKind> kinds, std::vector<ScannedSplit>& out);
}  // namespace serial

namespace omp {
void probabilities(const Matrix& weights, const Matrix& rows, std::size_t n_classes, Matrix& out);
void row_terms(const Matrix& weights, const Matrix& rows, std::span<const int> labels,
               std::size_t n_classes, RowTerms& out);
void gradient(const Matrix& rows, const Matrix& residual, Matrix& out);
void subset_sums(const Matrix& rows, const RowTerms& terms, std::span<const SplitTest> tests,
                 std::vector<SubsetSums>& out);
void scan_splits(const Matrix& rows, const RowTerms& terms, const Matrix& total_grad,
                 std::span<const FeatureKind> kinds, std::vector<ScannedSplit>& out);
}  // namespace omp

inline void probabilities(Execution exec, const Matrix& weights, const Matrix& rows,
                          std::size_t n_classes, Matrix& out) {
  exec == Execution::serial ? serial::probabilities(weights, rows, n_classes, out)
                            : omp::probabilities(weights, rows, n_classes, out);
}

inline void row_terms(Execution exec, const Matrix& weights, const Matrix& rows,
                      std::span<const int> labels, std::size_t n_classes, RowTerms& out) {
  exec == Execution::serial ? serial::row_terms(weights, rows, labels, n_classes, out)
                            : omp::row_terms(weights, rows, labels, n_classes, out);
}

inline void gradient(Execution exec, const Matrix& rows, const Matrix& residual, Matrix& out) {
  exec == Execution::serial ? serial::gradient(rows, residual, out)
                            : omp::gradient(rows, residual, out);
}

inline void subset_sums(Execution exec, const Matrix& rows, const RowTerms& terms,
                        std::span<const SplitTest> tests, std::vector<SubsetSums>& out) {
  exec == Execution::serial ? serial::subset_sums(rows, terms, tests, out)
                            : omp::subset_sums(rows, terms, tests, out);
}

inline void scan_splits(Execution exec, const Matrix& rows, const RowTerms& terms,
                        const Matrix& total_grad, std::span<const FeatureKind> kinds,
                        std::vector<ScannedSplit>& out) {
  exec == Execution::serial ? serial::scan_splits(rows, terms, total_grad, kinds, out)
                            : omp::scan_splits(rows, terms, total_grad, kinds, out);
}

}  // namespace dmt::kernels
