#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmt/gains.hpp"
#include "dmt/glm.hpp"
#include "dmt/kernels.hpp"
#include "dmt/split_test.hpp"
#include "dmt/types.hpp"

namespace dmt {

struct DmtConfig {
  std::size_t n_features = 0;
  std::size_t n_classes = 2;
  double learning_rate = 0.05;
  /// AIC confidence; smaller values demand more evidence per structural change.
  double epsilon = 1e-7;
  /// Defaults to three times the feature count.
  std::optional<std::size_t> candidate_cap;
  /// Fraction of stored candidates that fresh ones may replace per batch.
  double replacement_fraction = 0.5;
  /// 0 keeps the tree at a single root model.
  std::optional<std::size_t> max_depth;
  /// Per-feature split kind; empty means every feature is numeric.
  std::vector<FeatureKind> feature_kinds;
  Execution execution = Execution::parallel;

  void validate() const;
  std::size_t effective_candidate_cap() const {
    return candidate_cap.value_or(3 * n_features);
  }
  std::vector<FeatureKind> effective_feature_kinds() const;
};

struct SplitCandidate {
  SplitTest test;
  NodeStats left;
};

struct TreeNode {
  std::uint64_t id = 0;
  std::size_t depth = 0;
  LinearNodeModel model;
  NodeStats stats;
  std::vector<SplitCandidate> candidates;
  std::optional<SplitTest> split;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;

  TreeNode(std::uint64_t node_id, std::size_t node_depth, LinearNodeModel node_model);

  bool is_leaf() const { return !split.has_value(); }
};

enum class StructuralAction { none, split, replace, prune };

std::string to_string(StructuralAction action);

/// One structural decision. Entries are written for every applied change and
/// for every inner-node evaluation where the prune test passed.
struct AuditEntry {
  std::size_t batch = 0;
  std::uint64_t node_id = 0;
  StructuralAction action = StructuralAction::none;
  double gain = 0.0;
  double threshold = 0.0;
  bool prune_eligible = false;
  double prune_gain = 0.0;
  double prune_threshold = 0.0;
};

struct NodeReport {
  std::uint64_t id = 0;
  bool leaf = true;
  std::size_t depth = 0;
  std::optional<SplitTest> split;
  Matrix weights;
  double loss_sum = 0.0;
  std::size_t count = 0;
  Matrix grad_sum;
  std::size_t n_candidates = 0;
  std::optional<std::uint64_t> left;
  std::optional<std::uint64_t> right;

  friend bool operator==(const NodeReport&, const NodeReport&) = default;
};

/// Census of a tree. Nodes are listed in pre-order.
struct TreeReport {
  std::size_t n_features = 0;
  std::size_t n_classes = 2;
  std::size_t n_inner = 0;
  std::size_t n_leaves = 0;
  std::size_t depth = 0;
  /// Inner nodes only; the evaluation counting rules live in eval.
  std::size_t split_count = 0;
  /// One per inner split value plus every leaf weight (intercepts included).
  std::size_t parameter_count = 0;
  std::vector<NodeReport> nodes;

  friend bool operator==(const TreeReport&, const TreeReport&) = default;
};

/// Sum of the loss accumulated at the leaves below (or at) node.
double subtree_leaf_loss(const TreeNode& node);
/// Total parameter count of the leaf models below (or at) node.
std::size_t subtree_leaf_parameters(const TreeNode& node);

/// Gain of replacing an inner node's subtree by cand.
double replace_gain(const TreeNode& inner, const SplitCandidate& cand, double learning_rate);
/// Gain of collapsing an inner node's subtree into a leaf.
double prune_gain(const TreeNode& inner);

/// Updates a node's candidate set with one batch. `terms` and `batch_grad`
/// must be evaluated at the node's current weights on `rows`:
///  1. stored candidates accumulate the rows they send left,
///  2. fresh candidates are enumerated from the batch and scored on it alone,
///  3. free slots are filled with the best fresh candidates, then up to
///     ceil(replacement_fraction * cap) of the lowest-gain stored candidates
///     are swapped for better-scoring fresh ones.
void manage_candidates(TreeNode& node, const Matrix& rows, const kernels::RowTerms& terms,
                       const Matrix& batch_grad, const DmtConfig& config);

/// Convenience overload evaluating the batch at the node's current weights.
void manage_candidates(TreeNode& node, const Matrix& rows, std::span<const int> labels,
                       const DmtConfig& config);

/// Gain used to rank a node's candidates (split form, from the node's stats).
double candidate_rank_gain(const TreeNode& node, const SplitCandidate& cand, double learning_rate);

/// Incremental tree with a linear model in every node. Each batch trains every
/// model on the rows routed through it, then grows, replaces or prunes
/// subtrees bottom-up where the loss-based gains clear their AIC thresholds.
class DynamicModelTree {
 public:
  explicit DynamicModelTree(DmtConfig config);

  void update(const Matrix& rows, std::span<const int> labels);

  std::vector<int> predict(const Matrix& rows) const;
  Matrix predict_proba(const Matrix& rows) const;

  TreeReport describe() const;

  const TreeNode& root() const { return *root_; }
  const DmtConfig& config() const { return config_; }
  const std::vector<AuditEntry>& audit_log() const { return audit_; }
  std::size_t batches_seen() const { return batches_; }

  /// Number of (node, candidate) pairs whose derived right-side statistics
  /// have negative count or a loss below -rel_tol * (1 + |node loss|).
  std::size_t decomposition_violations(double rel_tol = 1e-9) const;

 private:
  std::unique_ptr<TreeNode> make_node(std::size_t depth, const Matrix& weights);
  bool may_split(std::size_t depth) const;
  void update_node(TreeNode& node, const Matrix& rows, std::span<const int> labels);
  void evaluate_leaf(TreeNode& node);
  void evaluate_inner(TreeNode& node);
  void grow(TreeNode& node, const SplitTest& test);
  void check_rows(const Matrix& rows) const;

  DmtConfig config_;
  std::unique_ptr<TreeNode> root_;
  std::uint64_t next_id_ = 0;
  std::size_t batches_ = 0;
  std::vector<AuditEntry> audit_;
};

/// Index of the largest probability in each row (first one on ties).
std::vector<int> argmax_rows(const Matrix& proba);

}  // namespace dmt
