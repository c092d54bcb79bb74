#include <cmath>
#include <vector>

#include <gtest/gtest.h>
#include <omp.h>

#include "dmt/errors.hpp"
#include "dmt/glm.hpp"
#include "dmt/kernels.hpp"
#include "test_support.hpp"

using namespace dmt;
using dmt::testing::bitwise_equal;
using dmt::testing::random_weights;
using dmt::testing::uniform_labels;
using dmt::testing::uniform_rows;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Independent loss oracle: plain softmax over explicit logits.
double oracle_loss(const Matrix& w, const Matrix& x, const Labels& y, std::size_t c) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<double> z(c, 0.0);
    const Eigen::Index r = w.rows();
    for (Eigen::Index k = 0; k < r; ++k) {
      double s = w(k, w.cols() - 1);
      for (Eigen::Index j = 0; j < x.cols(); ++j) s += w(k, j) * x(i, j);
      z[c == 2 ? 1 : static_cast<std::size_t>(k)] = s;
    }
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double den = 0.0;
    for (double v : z) den += std::exp(v - mx);
    const double p = std::exp(z[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])] - mx) / den;
    total -= std::log(std::max(p, 1e-15));
  }
  return total;
}

}  // namespace

TEST(LinearNodeModel, ShapesFollowClassCount) {
  LinearNodeModel binary(3, 2);
  EXPECT_EQ(binary.logit_rows(), 1u);
  EXPECT_EQ(binary.parameter_count(), 4u);
  LinearNodeModel multi(3, 5);
  EXPECT_EQ(multi.logit_rows(), 5u);
  EXPECT_EQ(multi.parameter_count(), 20u);
  EXPECT_TRUE((binary.weights().array() == 0.0).all());
}

TEST(LinearNodeModel, RejectsBadConstruction) {
  EXPECT_THROW(LinearNodeModel(3, 1), ConfigError);
  EXPECT_THROW(LinearNodeModel(3, 2, -0.1), ConfigError);
  EXPECT_THROW(LinearNodeModel(Matrix::Zero(2, 4), 2, 0.05), DimensionError);
  Matrix bad = Matrix::Zero(1, 4);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(LinearNodeModel(bad, 2, 0.05), ConfigError);
  LinearNodeModel m(3, 2);
  EXPECT_THROW(m.set_weights(Matrix::Zero(1, 5)), DimensionError);
}

TEST(PredictProba, ZeroWeightsAreUniform) {
  const Matrix x = uniform_rows(4, 3, 1);
  const Matrix p2 = predict_proba(LinearNodeModel(3, 2), x);
  EXPECT_TRUE((p2.array() == 0.5).all());
  const Matrix p5 = predict_proba(LinearNodeModel(3, 5), x);
  for (Eigen::Index k = 0; k < p5.size(); ++k) EXPECT_NEAR(p5.data()[k], 0.2, 1e-15);
}

TEST(PredictProba, SigmoidExample) {
  LinearNodeModel m(mat({{1.0, 0.0}}), 2, 0.05);
  const Matrix p = predict_proba(m, mat({{2.0}}));
  EXPECT_NEAR(p(0, 1), 0.880797, 1e-6);
  EXPECT_NEAR(p(0, 0), 1.0 - 0.880797, 1e-6);
}

TEST(PredictProba, NoOverflowForLargeLogits) {
  LinearNodeModel bin(mat({{500.0, 0.0}}), 2, 0.05);
  const Matrix pb = predict_proba(bin, mat({{1.0}, {-1.0}}));
  EXPECT_TRUE(pb.allFinite());
  EXPECT_GT(pb(0, 1), 0.0);
  EXPECT_LT(pb(0, 1), 1.0);
  LinearNodeModel multi(mat({{500.0, 0.0}, {-500.0, 0.0}, {0.0, 0.0}}), 3, 0.05);
  const Matrix pm = predict_proba(multi, mat({{1.0}}));
  EXPECT_TRUE(pm.allFinite());
  EXPECT_NEAR(pm.row(0).sum(), 1.0, 1e-9);
}

TEST(PredictProba, RowsSumToOne) {
  for (std::size_t c : {2u, 3u, 7u}) {
    LinearNodeModel m(random_weights(logit_rows_for(c), 6, 11 + c, 5.0), c, 0.05);
    const Matrix p = predict_proba(m, uniform_rows(50, 5, c, -3.0, 3.0));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-9);
      EXPECT_GT(p.row(i).minCoeff(), 0.0);
      EXPECT_LT(p.row(i).maxCoeff(), 1.0);
    }
  }
}

TEST(PredictProba, ColumnMismatchThrows) {
  EXPECT_THROW(predict_proba(LinearNodeModel(3, 2), uniform_rows(2, 4, 1)), DimensionError);
}

TEST(NllLoss, Examples) {
  EXPECT_NEAR(nll_loss(LinearNodeModel(2, 2), uniform_rows(10, 2, 3), uniform_labels(10, 2, 3)),
              10.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(nll_loss(LinearNodeModel(2, 4), uniform_rows(3, 2, 3), uniform_labels(3, 4, 3)),
              3.0 * std::log(4.0), 1e-12);
  LinearNodeModel m(mat({{1.0, 0.0}}), 2, 0.05);
  EXPECT_NEAR(nll_loss(m, mat({{2.0}}), Labels{1}), 0.126928, 1e-6);
}

TEST(NllLoss, MatchesIndependentOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t c = 2 + s % 4, m = 1 + s % 6;
    const Matrix w = random_weights(logit_rows_for(c), m + 1, 100 + s, 2.0);
    const Matrix x = uniform_rows(12, m, 200 + s);
    const Labels y = uniform_labels(12, c, 300 + s);
    EXPECT_NEAR(nll_loss(LinearNodeModel(w, c, 0.05), x, y), oracle_loss(w, x, y, c), 1e-10);
  }
}

TEST(NllLoss, ClampKeepsLossFinite) {
  LinearNodeModel m(mat({{1000.0, 0.0}}), 2, 0.05);
  const double loss = nll_loss(m, mat({{1.0}}), Labels{0});
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, -std::log(1e-15), 1e-9);
}

TEST(NllLoss, LabelErrors) {
  LinearNodeModel m(2, 3);
  EXPECT_THROW(nll_loss(m, uniform_rows(2, 2, 1), Labels{0, 3}), LabelError);
  EXPECT_THROW(nll_loss(m, uniform_rows(2, 2, 1), Labels{-1, 0}), LabelError);
  EXPECT_THROW(nll_loss(m, uniform_rows(2, 2, 1), Labels{0}), DimensionError);
}

TEST(NllLoss, AdditiveOverConcatenation) {
  LinearNodeModel m(random_weights(3, 5, 7), 3, 0.05);
  const Matrix x = uniform_rows(40, 4, 8);
  const Labels y = uniform_labels(40, 3, 9);
  const Matrix a = x.topRows(17), b = x.bottomRows(23);
  const Labels ya(y.begin(), y.begin() + 17), yb(y.begin() + 17, y.end());
  EXPECT_NEAR(nll_loss(m, x, y), nll_loss(m, a, ya) + nll_loss(m, b, yb), 1e-9);
}

TEST(NllGradient, BalancedBatchHasZeroIntercept) {
  const Matrix g = nll_gradient(LinearNodeModel(1, 2), mat({{0.7}, {0.7}}), Labels{0, 1});
  EXPECT_DOUBLE_EQ(g(0, 1), 0.0);
}

TEST(NllGradient, FormulaPerLogitRow) {
  const Matrix w = random_weights(4, 3, 5);
  const Matrix x = uniform_rows(6, 2, 6);
  const Labels y = uniform_labels(6, 4, 7);
  LinearNodeModel m(w, 4, 0.05);
  const Matrix p = predict_proba(m, x);
  Matrix expect = Matrix::Zero(4, 3);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index k = 0; k < 4; ++k) {
      const double r = p(i, k) - (y[static_cast<std::size_t>(i)] == k ? 1.0 : 0.0);
      expect(k, 0) += r * x(i, 0);
      expect(k, 1) += r * x(i, 1);
      expect(k, 2) += r;
    }
  EXPECT_LT((nll_gradient(m, x, y) - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NllGradient, CentralFiniteDifferences) {
  constexpr double h = 1e-6;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const std::size_t c = 2 + s % 4, m = 1 + s % 8, n = 1 + s % 16;
    const Matrix w = random_weights(logit_rows_for(c), m + 1, 500 + s);
    const Matrix x = uniform_rows(n, m, 600 + s, -1.0, 1.0);
    const Labels y = uniform_labels(n, c, 700 + s);
    const Matrix g = nll_gradient(LinearNodeModel(w, c, 0.05), x, y);
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      Matrix wp = w, wm = w;
      wp.data()[k] += h;
      wm.data()[k] -= h;
      const double fd = (oracle_loss(wp, x, y, c) - oracle_loss(wm, x, y, c)) / (2 * h);
      const double a = g.data()[k];
      EXPECT_LT(std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1.0}), 1e-5);
    }
  }
}

TEST(SgdStep, HandExample) {
  LinearNodeModel m(1, 2, 0.05);
  const Matrix g = sgd_step(m, mat({{1.0}}), Labels{1});
  EXPECT_DOUBLE_EQ(g(0, 0), -0.5);
  EXPECT_DOUBLE_EQ(g(0, 1), -0.5);
  EXPECT_DOUBLE_EQ(m.weights()(0, 0), 0.025);
  EXPECT_DOUBLE_EQ(m.weights()(0, 1), 0.025);
}

TEST(SgdStep, ZeroRateLeavesWeights) {
  const Matrix w = random_weights(1, 4, 3);
  LinearNodeModel m(w, 2, 0.0);
  sgd_step(m, uniform_rows(8, 3, 1), uniform_labels(8, 2, 1));
  EXPECT_TRUE(bitwise_equal(m.weights(), w));
}

TEST(SgdStep, SaturatedBatchBarelyMoves) {
  const Matrix w = mat({{100.0, 0.0}});
  LinearNodeModel m(w, 2, 0.05);
  sgd_step(m, mat({{1.0}, {2.0}}), Labels{1, 1});
  EXPECT_LE((m.weights() - w).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SgdStep, DescendsOnSeparableBatch) {
  const Matrix x = uniform_rows(60, 2, 21);
  Labels y(60);
  for (Eigen::Index i = 0; i < 60; ++i) y[static_cast<std::size_t>(i)] = x(i, 0) + x(i, 1) > 1.0;
  LinearNodeModel m(2, 2, 0.05);
  sgd_step(m, x, y);
  const double first = nll_loss(m, x, y);
  for (int t = 1; t < 200; ++t) sgd_step(m, x, y);
  EXPECT_LT(nll_loss(m, x, y), first);
}

TEST(WarmStart, Examples) {
  GradientAccumulator acc(1, 2);
  acc.add(mat({{2.0, 4.0}}));
  const Matrix w = warm_start_params(mat({{1.0, 1.0}}), acc, 4, 0.05);
  EXPECT_DOUBLE_EQ(w(0, 0), 0.975);
  EXPECT_DOUBLE_EQ(w(0, 1), 0.95);
}

TEST(WarmStart, IdentityCases) {
  const Matrix parent = random_weights(3, 4, 9);
  GradientAccumulator zero(3, 4);
  EXPECT_TRUE(bitwise_equal(warm_start_params(parent, zero, 7, 0.05), parent));
  GradientAccumulator some(3, 4);
  some.add(random_weights(3, 4, 10));
  EXPECT_TRUE(bitwise_equal(warm_start_params(parent, some, 7, 0.0), parent));
  EXPECT_THROW(warm_start_params(parent, some, 0, 0.05), DegenerateCandidateError);
}

TEST(GradientAccumulator, AdditiveFromZero) {
  LinearNodeModel m(random_weights(1, 4, 2), 2, 0.05);
  const Matrix x = uniform_rows(9, 3, 4);
  const Labels y = uniform_labels(9, 2, 4);
  GradientAccumulator acc(1, 4);
  acc.add(nll_gradient(m, x, y));
  EXPECT_TRUE(bitwise_equal(acc.sum(), nll_gradient(m, x, y)));
  acc.reset();
  EXPECT_EQ(acc.squared_norm(), 0.0);
}

// The parallel kernels must reproduce the serial reference bit for bit.
class KernelParity : public ::testing::TestWithParam<std::size_t> {
 protected:
  void SetUp() override { omp_set_num_threads(4); }
};

TEST_P(KernelParity, SerialAndParallelAgree) {
  const std::size_t c = GetParam();
  const Matrix x = uniform_rows(3000, 8, 31);
  const Labels y = uniform_labels(3000, c, 32);
  LinearNodeModel m(random_weights(logit_rows_for(c), 9, 33), c, 0.05);
  EXPECT_TRUE(bitwise_equal(predict_proba(m, x, Execution::serial),
                            predict_proba(m, x, Execution::parallel)));
  EXPECT_EQ(nll_loss(m, x, y, Execution::serial), nll_loss(m, x, y, Execution::parallel));
  EXPECT_TRUE(bitwise_equal(nll_gradient(m, x, y, Execution::serial),
                            nll_gradient(m, x, y, Execution::parallel)));

  kernels::RowTerms terms;
  kernels::row_terms(Execution::serial, m.weights(), x, y, c, terms);
  Matrix grad;
  kernels::gradient(Execution::serial, x, terms.residual, grad);
  std::vector<FeatureKind> kinds(8, FeatureKind::numeric);
  kinds[3] = FeatureKind::categorical;
  std::vector<kernels::ScannedSplit> a, b;
  kernels::scan_splits(Execution::serial, x, terms, grad, kinds, a);
  kernels::scan_splits(Execution::parallel, x, terms, grad, kinds, b);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].test, b[i].test);
    EXPECT_EQ(a[i].left_loss, b[i].left_loss);
    EXPECT_EQ(a[i].left_sq_norm, b[i].left_sq_norm);
    EXPECT_EQ(a[i].right_sq_norm, b[i].right_sq_norm);
  }
  std::vector<SplitTest> tests;
  for (std::size_t i = 0; i < a.size(); i += 97) tests.push_back(a[i].test);
  std::vector<kernels::SubsetSums> sa, sb;
  kernels::subset_sums(Execution::serial, x, terms, tests, sa);
  kernels::subset_sums(Execution::parallel, x, terms, tests, sb);
  ASSERT_EQ(sa.size(), sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_EQ(sa[i].loss, sb[i].loss);
    EXPECT_EQ(sa[i].count, sb[i].count);
    EXPECT_TRUE(bitwise_equal(sa[i].grad, sb[i].grad));
  }
}

INSTANTIATE_TEST_SUITE_P(Classes, KernelParity, ::testing::Values(2u, 3u, 6u));
