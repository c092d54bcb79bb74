#include <vector>

#include "kernel_math.hpp"

namespace dmt::kernels {

double RowTerms::loss_sum() const {
  double s = 0.0;
  for (double l : loss) s += l;
  return s;
}

namespace serial {

void probabilities(const Matrix& weights, const Matrix& rows, std::size_t n_classes, Matrix& out) {
  out.resize(rows.rows(), static_cast<Eigen::Index>(n_classes));
  std::vector<double> z(n_classes);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    detail::row_probabilities(weights, rows, i, n_classes, z.data(), out);
  }
}

void row_terms(const Matrix& weights, const Matrix& rows, std::span<const int> labels,
               std::size_t n_classes, RowTerms& out) {
  out.loss.assign(static_cast<std::size_t>(rows.rows()), 0.0);
  out.residual.resize(rows.rows(), weights.rows());
  std::vector<double> z(n_classes);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    detail::row_term(weights, rows, i, labels[static_cast<std::size_t>(i)], n_classes, z.data(),
                     out);
  }
}

void gradient(const Matrix& rows, const Matrix& residual, Matrix& out) {
  out.setZero(residual.cols(), rows.cols() + 1);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) detail::add_outer(rows, residual, i, out);
}

void subset_sums(const Matrix& rows, const RowTerms& terms, std::span<const SplitTest> tests,
                 std::vector<SubsetSums>& out) {
  out.resize(tests.size());
  for (std::size_t t = 0; t < tests.size(); ++t) {
    detail::accumulate_subset(rows, terms, tests[t], out[t]);
  }
}

void scan_splits(const Matrix& rows, const RowTerms& terms, const Matrix& total_grad,
                 std::span<const FeatureKind> kinds, std::vector<ScannedSplit>& out) {
  out.clear();
  for (std::size_t f = 0; f < kinds.size(); ++f) {
    detail::scan_feature(rows, terms, total_grad, f, kinds[f], out);
  }
}

}  // namespace serial
}  // namespace dmt::kernels
