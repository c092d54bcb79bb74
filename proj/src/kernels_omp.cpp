#include <vector>

#include <omp.h>

#include "kernel_math.hpp"

namespace dmt::kernels::omp {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr long kMinParallelWork = 1 << 14;
}  // namespace

void probabilities(const Matrix& weights, const Matrix& rows, std::size_t n_classes, Matrix& out) {
  out.resize(rows.rows(), static_cast<Eigen::Index>(n_classes));
  const long n = rows.rows();
  const long work = n * static_cast<long>(weights.size());
#pragma omp parallel if (work > kMinParallelWork)
  {
    std::vector<double> z(n_classes);
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) {
      detail::row_probabilities(weights, rows, i, n_classes, z.data(), out);
    }
  }
}

void row_terms(const Matrix& weights, const Matrix& rows, std::span<const int> labels,
               std::size_t n_classes, RowTerms& out) {
  out.loss.assign(static_cast<std::size_t>(rows.rows()), 0.0);
  out.residual.resize(rows.rows(), weights.rows());
  const long n = rows.rows();
  const long work = n * static_cast<long>(weights.size());
#pragma omp parallel if (work > kMinParallelWork)
  {
    std::vector<double> z(n_classes);
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) {
      detail::row_term(weights, rows, i, labels[static_cast<std::size_t>(i)], n_classes, z.data(),
                       out);
    }
  }
}

void gradient(const Matrix& rows, const Matrix& residual, Matrix& out) {
  const long r = residual.cols();
  const long m = rows.cols();
  const long n = rows.rows();
  out.setZero(r, m + 1);
  // One output column per iteration; every entry is still summed in row order.
#pragma omp parallel for schedule(static) if (n * r * (m + 1) > kMinParallelWork)
  for (long j = 0; j <= m; ++j) {
    for (long i = 0; i < n; ++i) {
      for (long k = 0; k < r; ++k) {
        if (j < m) {
          out(k, j) += residual(i, k) * rows(i, j);
        } else {
          out(k, j) += residual(i, k);
        }
      }
    }
  }
}

void subset_sums(const Matrix& rows, const RowTerms& terms, std::span<const SplitTest> tests,
                 std::vector<SubsetSums>& out) {
  out.resize(tests.size());
  const long n_tests = static_cast<long>(tests.size());
  const long work = n_tests * rows.rows() * terms.residual.cols() * (rows.cols() + 1);
#pragma omp parallel for schedule(dynamic) if (work > kMinParallelWork)
  for (long t = 0; t < n_tests; ++t) {
    detail::accumulate_subset(rows, terms, tests[static_cast<std::size_t>(t)],
                              out[static_cast<std::size_t>(t)]);
  }
}

void scan_splits(const Matrix& rows, const RowTerms& terms, const Matrix& total_grad,
                 std::span<const FeatureKind> kinds, std::vector<ScannedSplit>& out) {
  const long n_features = static_cast<long>(kinds.size());
  std::vector<std::vector<ScannedSplit>> per_feature(kinds.size());
  const long work = n_features * rows.rows() * terms.residual.cols() * (rows.cols() + 1);
#pragma omp parallel for schedule(dynamic) if (work > kMinParallelWork)
  for (long f = 0; f < n_features; ++f) {
    const auto fi = static_cast<std::size_t>(f);
    detail::scan_feature(rows, terms, total_grad, fi, kinds[fi], per_feature[fi]);
  }
  out.clear();
  for (auto& v : per_feature) out.insert(out.end(), v.begin(), v.end());
}

}  // namespace dmt::kernels::omp
