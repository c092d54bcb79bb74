#include <algorithm>
#include <cmath>
#include <limits>

#include "dmt/errors.hpp"
#include "dmt/tree.hpp"

namespace dmt {

namespace {

struct Scored {
  SplitTest test;
  double gain;
};

// Higher gain first; equal gains fall back to the lower (feature, value).
bool better(const Scored& a, const Scored& b) {
  if (a.gain != b.gain) return a.gain > b.gain;
  return split_test_less(a.test, b.test);
}

double fresh_gain(const kernels::ScannedSplit& s, double batch_loss, std::size_t n,
                  double learning_rate) {
  const std::size_t right_count = n - s.left_count;
  if (s.left_count == 0 || right_count == 0) return -std::numeric_limits<double>::infinity();
  const double left = candidate_loss_approx_from_norm(s.left_loss, s.left_sq_norm, s.left_count,
                                                      learning_rate);
  const double right = candidate_loss_approx_from_norm(batch_loss - s.left_loss, s.right_sq_norm,
                                                       right_count, learning_rate);
  return batch_loss - left - right;
}

}  // namespace

double candidate_rank_gain(const TreeNode& node, const SplitCandidate& cand,
                           double learning_rate) {
  return split_gain(node.stats, cand.left, learning_rate);
}

void manage_candidates(TreeNode& node, const Matrix& rows, const kernels::RowTerms& terms,
                       const Matrix& batch_grad, const DmtConfig& config) {
  const Execution exec = config.execution;
  const double lr = config.learning_rate;
  const std::size_t cap = config.effective_candidate_cap();
  const auto n = static_cast<std::size_t>(rows.rows());
  if (n == 0 || cap == 0) return;

  // 1. Stored candidates see the rows they send left.
  if (!node.candidates.empty()) {
    std::vector<SplitTest> tests;
    tests.reserve(node.candidates.size());
    for (const auto& c : node.candidates) tests.push_back(c.test);
    std::vector<kernels::SubsetSums> sums;
    kernels::subset_sums(exec, rows, terms, tests, sums);
    for (std::size_t t = 0; t < sums.size(); ++t) {
      node.candidates[t].left.add(sums[t].loss, sums[t].grad, sums[t].count);
    }
  }

  // 2. Fresh candidates from this batch, scored on this batch only.
  const std::vector<FeatureKind> kinds = config.effective_feature_kinds();
  std::vector<kernels::ScannedSplit> scanned;
  kernels::scan_splits(exec, rows, terms, batch_grad, kinds, scanned);
  const double batch_loss = terms.loss_sum();

  std::vector<Scored> fresh;
  fresh.reserve(scanned.size());
  for (const auto& s : scanned) {
    const bool stored = std::any_of(node.candidates.begin(), node.candidates.end(),
                                    [&](const SplitCandidate& c) { return c.test == s.test; });
    if (stored) continue;
    const double g = fresh_gain(s, batch_loss, n, lr);
    if (std::isinf(g)) continue;
    fresh.push_back({s.test, g});
  }
  std::sort(fresh.begin(), fresh.end(), better);

  // 3. Fill free slots, then swap out the weakest stored candidates.
  std::vector<SplitTest> incoming;
  std::size_t next_fresh = 0;
  const std::size_t free_slots = cap > node.candidates.size() ? cap - node.candidates.size() : 0;
  while (incoming.size() < free_slots && next_fresh < fresh.size()) {
    incoming.push_back(fresh[next_fresh++].test);
  }

  std::vector<std::size_t> evicted;
  const auto max_replace =
      static_cast<std::size_t>(std::ceil(config.replacement_fraction * static_cast<double>(cap)));
  if (max_replace > 0 && next_fresh < fresh.size() && !node.candidates.empty()) {
    std::vector<std::pair<Scored, std::size_t>> stored;
    stored.reserve(node.candidates.size());
    for (std::size_t i = 0; i < node.candidates.size(); ++i) {
      stored.push_back({{node.candidates[i].test, candidate_rank_gain(node, node.candidates[i], lr)}, i});
    }
    // Weakest first.
    std::sort(stored.begin(), stored.end(),
              [](const auto& a, const auto& b) { return better(b.first, a.first); });
    for (std::size_t q = 0; q < stored.size() && evicted.size() < max_replace &&
                            next_fresh < fresh.size();
         ++q) {
      if (!(fresh[next_fresh].gain > stored[q].first.gain)) break;
      evicted.push_back(stored[q].second);
      incoming.push_back(fresh[next_fresh++].test);
    }
  }

  if (incoming.empty()) return;

  std::vector<kernels::SubsetSums> sums;
  kernels::subset_sums(exec, rows, terms, incoming, sums);
  const auto r = static_cast<std::size_t>(node.model.logit_rows());
  const std::size_t cols = node.model.n_features() + 1;
  std::vector<SplitCandidate> added;
  added.reserve(incoming.size());
  for (std::size_t t = 0; t < incoming.size(); ++t) {
    SplitCandidate cand{incoming[t], NodeStats(r, cols)};
    cand.left.add(sums[t].loss, sums[t].grad, sums[t].count);
    added.push_back(std::move(cand));
  }

  // Evicted slots are overwritten in place; the rest are appended.
  std::size_t a = 0;
  std::sort(evicted.begin(), evicted.end());
  const std::size_t fill_count = incoming.size() - evicted.size();
  for (; a < fill_count; ++a) node.candidates.push_back(std::move(added[a]));
  for (std::size_t e = 0; e < evicted.size(); ++e, ++a) {
    node.candidates[evicted[e]] = std::move(added[a]);
  }
}

void manage_candidates(TreeNode& node, const Matrix& rows, std::span<const int> labels,
                       const DmtConfig& config) {
  check_batch(node.model, rows, labels);
  kernels::RowTerms terms;
  kernels::row_terms(config.execution, node.model.weights(), rows, labels,
                     node.model.n_classes(), terms);
  Matrix grad;
  kernels::gradient(config.execution, rows, terms.residual, grad);
  manage_candidates(node, rows, terms, grad, config);
}

}  // namespace dmt
