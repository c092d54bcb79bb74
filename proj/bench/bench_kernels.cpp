// Serial reference kernels against their OpenMP counterparts, plus one
// whole-tree update per batch size.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "dmt/kernels.hpp"
#include "dmt/tree.hpp"

namespace {

using dmt::Execution;
using dmt::Matrix;

struct Fixture {
  Matrix rows;
  std::vector<int> labels;
  Matrix weights;
  std::vector<dmt::FeatureKind> kinds;

  Fixture(std::size_t n, std::size_t m, std::size_t c) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    rows.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
      for (Eigen::Index j = 0; j < rows.cols(); ++j) rows(i, j) = u(rng);
    labels.resize(n);
    for (auto& y : labels) y = static_cast<int>(rng() % c);
    weights = Matrix::Zero(static_cast<Eigen::Index>(dmt::logit_rows_for(c)),
                           static_cast<Eigen::Index>(m + 1));
    for (Eigen::Index k = 0; k < weights.size(); ++k) weights.data()[k] = u(rng) - 0.5;
    kinds.assign(m, dmt::FeatureKind::numeric);
  }
};

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void BM_RowTerms(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(1)), 50, 2);
  dmt::kernels::RowTerms terms;
  for (auto _ : state) {
    dmt::kernels::row_terms(exec_of(state), f.weights, f.rows, f.labels, 2, terms);
    benchmark::DoNotOptimize(terms.loss.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_Gradient(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(1)), 50, 5);
  dmt::kernels::RowTerms terms;
  dmt::kernels::row_terms(Execution::serial, f.weights, f.rows, f.labels, 5, terms);
  Matrix grad;
  for (auto _ : state) {
    dmt::kernels::gradient(exec_of(state), f.rows, terms.residual, grad);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_ScanSplits(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(1)), 50, 2);
  dmt::kernels::RowTerms terms;
  dmt::kernels::row_terms(Execution::serial, f.weights, f.rows, f.labels, 2, terms);
  Matrix grad;
  dmt::kernels::gradient(Execution::serial, f.rows, terms.residual, grad);
  std::vector<dmt::kernels::ScannedSplit> out;
  for (auto _ : state) {
    dmt::kernels::scan_splits(exec_of(state), f.rows, terms, grad, f.kinds, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_TreeUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(1));
  Fixture f(n, 20, 2);
  for (auto _ : state) {
    state.PauseTiming();
    dmt::DmtConfig cfg;
    cfg.n_features = 20;
    cfg.execution = exec_of(state);
    dmt::DynamicModelTree tree(cfg);
    state.ResumeTiming();
    tree.update(f.rows, f.labels);
    benchmark::DoNotOptimize(tree.batches_seen());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}

// First argument: 0 = serial, 1 = OpenMP. Second: rows per batch.
#define DMT_KERNEL_ARGS ArgsProduct({{0, 1}, {1000, 10000, 100000}})

BENCHMARK(BM_RowTerms)->DMT_KERNEL_ARGS;
BENCHMARK(BM_Gradient)->DMT_KERNEL_ARGS;
BENCHMARK(BM_ScanSplits)->DMT_KERNEL_ARGS;
BENCHMARK(BM_TreeUpdate)->DMT_KERNEL_ARGS;

}  // namespace

BENCHMARK_MAIN();
