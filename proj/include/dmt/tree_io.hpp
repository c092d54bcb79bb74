#pragma once

#include <cstddef>
#include <string>

#include "dmt/tree.hpp"

namespace dmt {

/// Tree dump document (JSON). Layout:
///
///   {
///     "format": "dmt-tree", "version": 1,
///     "n_features": m, "n_classes": c,
///     "n_inner": .., "n_leaves": .., "depth": ..,
///     "split_count": .., "parameter_count": ..,
///     "nodes": [                                   // pre-order
///       { "id": 0, "kind": "inner" | "leaf", "depth": 0,
///         "split": {"feature": j, "value": v, "kind": "numeric" | "categorical"} | null,
///         "weights": [[...], ...],                 // logit rows x (m + 1), intercept last
///         "stats": {"loss_sum": .., "count": .., "grad_sum": [[...], ...]},
///         "n_candidates": ..,
///         "children": [left_id, right_id] | [] }
///     ]
///   }
///
/// Numbers are written with round-trip precision, so parse(dump(r)) == r.
std::string dump_tree(const TreeReport& report);

/// Throws ParseError naming the byte offset or the offending node field.
TreeReport parse_tree_dump(const std::string& text);

void write_tree_dump(const std::string& path, const TreeReport& report);
TreeReport read_tree_dump(const std::string& path);

/// Indented text rendering, one line per node: the split test for inner
/// nodes, the strongest features for leaves, and per-node counts.
std::string render_tree(const TreeReport& report, std::size_t top_features = 3);

/// One-line census: inner/leaf counts, depth, splits and parameters as
/// counted by the evaluation module.
std::string tree_totals(const TreeReport& report);

}  // namespace dmt
