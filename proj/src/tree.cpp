#include "dmt/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dmt/errors.hpp"

namespace dmt {

std::string to_string(const SplitTest& test) {
  std::ostringstream os;
  os.precision(6);
  os << "x[" << test.feature << "] " << (test.kind == FeatureKind::numeric ? "<=" : "==") << ' '
     << test.value;
  return os.str();
}

std::string to_string(StructuralAction action) {
  switch (action) {
    case StructuralAction::none: return "none";
    case StructuralAction::split: return "split";
    case StructuralAction::replace: return "replace";
    case StructuralAction::prune: return "prune";
  }
  return "unknown";
}

void DmtConfig::validate() const {
  if (n_features == 0) throw ConfigError("n_features must be positive");
  if (n_classes < 2) throw ConfigError("n_classes must be at least 2");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  if (effective_candidate_cap() < 1) throw ConfigError("candidate cap must be at least 1");
  if (!(replacement_fraction >= 0.0 && replacement_fraction <= 1.0)) {
    throw ConfigError("replacement fraction must lie in [0, 1]");
  }
  if (!feature_kinds.empty() && feature_kinds.size() != n_features) {
    throw ConfigError("feature_kinds must list one kind per feature");
  }
}

std::vector<FeatureKind> DmtConfig::effective_feature_kinds() const {
  if (!feature_kinds.empty()) return feature_kinds;
  return std::vector<FeatureKind>(n_features, FeatureKind::numeric);
}

TreeNode::TreeNode(std::uint64_t node_id, std::size_t node_depth, LinearNodeModel node_model)
    : id(node_id),
      depth(node_depth),
      model(std::move(node_model)),
      stats(model.logit_rows(), model.n_features() + 1) {}

double subtree_leaf_loss(const TreeNode& node) {
  if (node.is_leaf()) return node.stats.loss_sum;
  return subtree_leaf_loss(*node.left) + subtree_leaf_loss(*node.right);
}

std::size_t subtree_leaf_parameters(const TreeNode& node) {
  if (node.is_leaf()) return node.model.parameter_count();
  return subtree_leaf_parameters(*node.left) + subtree_leaf_parameters(*node.right);
}

double replace_gain(const TreeNode& inner, const SplitCandidate& cand, double learning_rate) {
  return replace_gain(subtree_leaf_loss(inner), inner.stats, cand.left, learning_rate);
}

double prune_gain(const TreeNode& inner) {
  return prune_gain(subtree_leaf_loss(inner), inner.stats.loss_sum);
}

std::vector<int> argmax_rows(const Matrix& proba) {
  std::vector<int> out(static_cast<std::size_t>(proba.rows()));
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < proba.cols(); ++k) {
      if (proba(i, k) > proba(i, best)) best = k;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

DynamicModelTree::DynamicModelTree(DmtConfig config) : config_(std::move(config)) {
  config_.validate();
  root_ = make_node(0, Matrix::Zero(static_cast<Eigen::Index>(logit_rows_for(config_.n_classes)),
                                    static_cast<Eigen::Index>(config_.n_features + 1)));
}

std::unique_ptr<TreeNode> DynamicModelTree::make_node(std::size_t depth, const Matrix& weights) {
  return std::make_unique<TreeNode>(
      next_id_++, depth, LinearNodeModel(weights, config_.n_classes, config_.learning_rate));
}

bool DynamicModelTree::may_split(std::size_t depth) const {
  return !config_.max_depth || depth < *config_.max_depth;
}

void DynamicModelTree::check_rows(const Matrix& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != config_.n_features) {
    throw DimensionError("expected " + std::to_string(config_.n_features) +
                         " feature columns, got " + std::to_string(rows.cols()));
  }
}

void DynamicModelTree::update(const Matrix& rows, std::span<const int> labels) {
  check_rows(rows);
  check_batch(root_->model, rows, labels);
  if (!rows.allFinite()) throw DimensionError("feature values must be finite");
  ++batches_;
  update_node(*root_, rows, labels);
}

namespace {

struct Partition {
  Matrix left_rows, right_rows;
  std::vector<int> left_labels, right_labels;
};

Partition partition(const Matrix& rows, std::span<const int> labels, const SplitTest& test) {
  std::vector<Eigen::Index> left_idx, right_idx;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    (test.goes_left(rows(i, static_cast<Eigen::Index>(test.feature))) ? left_idx : right_idx)
        .push_back(i);
  }
  Partition p;
  p.left_rows = rows(left_idx, Eigen::all);
  p.right_rows = rows(right_idx, Eigen::all);
  for (auto i : left_idx) p.left_labels.push_back(labels[static_cast<std::size_t>(i)]);
  for (auto i : right_idx) p.right_labels.push_back(labels[static_cast<std::size_t>(i)]);
  return p;
}

}  // namespace

void DynamicModelTree::update_node(TreeNode& node, const Matrix& rows,
                                   std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (n == 0) return;

  // Loss and gradient at the parameters the node held when the batch arrived.
  kernels::RowTerms terms;
  kernels::row_terms(config_.execution, node.model.weights(), rows, labels, config_.n_classes,
                     terms);
  Matrix grad;
  kernels::gradient(config_.execution, rows, terms.residual, grad);
  node.stats.add(terms.loss_sum(), grad, n);

  if (may_split(node.depth)) manage_candidates(node, rows, terms, grad, config_);

  node.model.apply_gradient(grad, n);

  if (node.is_leaf()) {
    evaluate_leaf(node);
    return;
  }
  Partition p = partition(rows, labels, *node.split);
  update_node(*node.left, p.left_rows, p.left_labels);
  update_node(*node.right, p.right_rows, p.right_labels);
  evaluate_inner(node);
}

namespace {

// Best candidate by `gain_of`, skipping `exclude`; ties go to the lower test.
template <typename GainFn>
const SplitCandidate* best_candidate(const std::vector<SplitCandidate>& candidates,
                                     const std::optional<SplitTest>& exclude, GainFn gain_of,
                                     double& best_gain) {
  const SplitCandidate* best = nullptr;
  best_gain = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (exclude && c.test == *exclude) continue;
    const double g = gain_of(c);
    if (std::isinf(g) && g < 0) continue;
    if (!best || g > best_gain || (g == best_gain && split_test_less(c.test, best->test))) {
      best = &c;
      best_gain = g;
    }
  }
  return best;
}

}  // namespace

void DynamicModelTree::grow(TreeNode& node, const SplitTest& test) {
  node.split = test;
  node.left = make_node(node.depth + 1, node.model.weights());
  node.right = make_node(node.depth + 1, node.model.weights());
  node.stats.reset();
  node.candidates.clear();
}

void DynamicModelTree::evaluate_leaf(TreeNode& node) {
  if (!may_split(node.depth) || node.candidates.empty()) return;
  const double lr = config_.learning_rate;
  double gain = 0.0;
  const SplitCandidate* best = best_candidate(
      node.candidates, std::nullopt,
      [&](const SplitCandidate& c) { return split_gain(node.stats, c.left, lr); }, gain);
  if (!best) return;
  const auto k = static_cast<double>(node.model.parameter_count());
  const double threshold = gain_threshold(k, k, k, config_.epsilon);
  if (gain < threshold) return;

  audit_.push_back({batches_, node.id, StructuralAction::split, gain, threshold, false, 0.0, 0.0});
  const SplitTest test = best->test;
  grow(node, test);
}

void DynamicModelTree::evaluate_inner(TreeNode& node) {
  const double lr = config_.learning_rate;
  const double leaf_loss = subtree_leaf_loss(node);
  const auto k = static_cast<double>(node.model.parameter_count());
  const auto k_leaves = static_cast<double>(subtree_leaf_parameters(node));

  const double g_prune = prune_gain(leaf_loss, node.stats.loss_sum);
  const double t_prune = prune_threshold(k, k_leaves, config_.epsilon);
  const bool prune_ok = g_prune >= t_prune;

  double g_replace = 0.0;
  const SplitCandidate* best = best_candidate(
      node.candidates, node.split,
      [&](const SplitCandidate& c) { return replace_gain(leaf_loss, node.stats, c.left, lr); },
      g_replace);
  const double t_replace = gain_threshold(k, k, k_leaves, config_.epsilon);
  const bool replace_ok = best && g_replace >= t_replace;

  AuditEntry entry{batches_, node.id, StructuralAction::none, 0.0, 0.0, prune_ok, g_prune, t_prune};
  if (prune_ok && (!replace_ok || g_prune >= g_replace)) {
    entry.action = StructuralAction::prune;
    entry.gain = g_prune;
    entry.threshold = t_prune;
    node.split.reset();
    node.left.reset();
    node.right.reset();
  } else if (replace_ok) {
    entry.action = StructuralAction::replace;
    entry.gain = g_replace;
    entry.threshold = t_replace;
    const SplitTest test = best->test;
    grow(node, test);
  }
  if (entry.action != StructuralAction::none || prune_ok) audit_.push_back(entry);
}

namespace {

void predict_node(const TreeNode& node, const Matrix& rows, std::span<const Eigen::Index> idx,
                  Execution exec, Matrix& out) {
  if (idx.empty()) return;
  if (node.is_leaf()) {
    const Matrix sub = rows(std::vector<Eigen::Index>(idx.begin(), idx.end()), Eigen::all);
    const Matrix p = predict_proba(node.model, sub, exec);
    for (std::size_t t = 0; t < idx.size(); ++t) out.row(idx[t]) = p.row(static_cast<Eigen::Index>(t));
    return;
  }
  std::vector<Eigen::Index> left, right;
  const auto f = static_cast<Eigen::Index>(node.split->feature);
  for (auto i : idx) (node.split->goes_left(rows(i, f)) ? left : right).push_back(i);
  predict_node(*node.left, rows, left, exec, out);
  predict_node(*node.right, rows, right, exec, out);
}

}  // namespace

Matrix DynamicModelTree::predict_proba(const Matrix& rows) const {
  check_rows(rows);
  Matrix out(rows.rows(), static_cast<Eigen::Index>(config_.n_classes));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) idx[static_cast<std::size_t>(i)] = i;
  predict_node(*root_, rows, idx, config_.execution, out);
  return out;
}

std::vector<int> DynamicModelTree::predict(const Matrix& rows) const {
  return argmax_rows(predict_proba(rows));
}

namespace {

void describe_node(const TreeNode& node, TreeReport& report) {
  NodeReport r;
  r.id = node.id;
  r.leaf = node.is_leaf();
  r.depth = node.depth;
  r.split = node.split;
  r.weights = node.model.weights();
  r.loss_sum = node.stats.loss_sum;
  r.count = node.stats.count;
  r.grad_sum = node.stats.grad.sum();
  r.n_candidates = node.candidates.size();
  report.depth = std::max(report.depth, node.depth);
  if (node.is_leaf()) {
    ++report.n_leaves;
    report.parameter_count += node.model.parameter_count();
    report.nodes.push_back(std::move(r));
    return;
  }
  ++report.n_inner;
  ++report.parameter_count;
  r.left = node.left->id;
  r.right = node.right->id;
  report.nodes.push_back(std::move(r));
  describe_node(*node.left, report);
  describe_node(*node.right, report);
}

std::size_t node_violations(const TreeNode& node, double rel_tol) {
  std::size_t bad = 0;
  const double tol = rel_tol * (1.0 + std::abs(node.stats.loss_sum));
  for (const auto& c : node.candidates) {
    if (c.left.count > node.stats.count) ++bad;
    else if (node.stats.loss_sum - c.left.loss_sum < -tol) ++bad;
  }
  if (!node.is_leaf()) {
    bad += node_violations(*node.left, rel_tol) + node_violations(*node.right, rel_tol);
  }
  return bad;
}

}  // namespace

TreeReport DynamicModelTree::describe() const {
  TreeReport report;
  report.n_features = config_.n_features;
  report.n_classes = config_.n_classes;
  describe_node(*root_, report);
  report.split_count = report.n_inner;
  return report;
}

std::size_t DynamicModelTree::decomposition_violations(double rel_tol) const {
  return node_violations(*root_, rel_tol);
}

}  // namespace dmt
