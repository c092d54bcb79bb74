#include "dmt/tree_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dmt/errors.hpp"
#include "dmt/eval.hpp"

namespace dmt {

using nlohmann::ordered_json;

namespace {

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const ordered_json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a non-empty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto& row = j[r];
    if (!row.is_array() || row.size() != cols) {
      throw ParseError(where + "[" + std::to_string(r) + "]: ragged or non-array row");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        throw ParseError(where + "[" + std::to_string(r) + "][" + std::to_string(c) +
                         "]: expected a number");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

template <typename T>
T field(const ordered_json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(where + "." + key + ": wrong type");
  }
}

}  // namespace

std::string dump_tree(const TreeReport& report) {
  ordered_json doc;
  doc["format"] = "dmt-tree";
  doc["version"] = 1;
  doc["n_features"] = report.n_features;
  doc["n_classes"] = report.n_classes;
  doc["n_inner"] = report.n_inner;
  doc["n_leaves"] = report.n_leaves;
  doc["depth"] = report.depth;
  doc["split_count"] = report.split_count;
  doc["parameter_count"] = report.parameter_count;
  auto& nodes = doc["nodes"] = ordered_json::array();
  for (const auto& n : report.nodes) {
    ordered_json node;
    node["id"] = n.id;
    node["kind"] = n.leaf ? "leaf" : "inner";
    node["depth"] = n.depth;
    if (n.split) {
      node["split"] = {{"feature", n.split->feature},
                       {"value", n.split->value},
                       {"kind", n.split->kind == FeatureKind::numeric ? "numeric" : "categorical"}};
    } else {
      node["split"] = nullptr;
    }
    node["weights"] = matrix_to_json(n.weights);
    node["stats"] = {{"loss_sum", n.loss_sum},
                     {"count", n.count},
                     {"grad_sum", matrix_to_json(n.grad_sum)}};
    node["n_candidates"] = n.n_candidates;
    node["children"] = ordered_json::array();
    if (n.left && n.right) node["children"] = {*n.left, *n.right};
    nodes.push_back(std::move(node));
  }
  return doc.dump(1) + "\n";
}

TreeReport parse_tree_dump(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("tree dump is not valid JSON at byte " + std::to_string(e.byte) + ": " +
                     e.what());
  }
  const std::string root = "$";
  if (field<std::string>(doc, "format", root) != "dmt-tree") {
    throw ParseError("$.format: not a dmt-tree document");
  }
  if (field<int>(doc, "version", root) != 1) throw ParseError("$.version: unsupported version");
  TreeReport r;
  r.n_features = field<std::size_t>(doc, "n_features", root);
  r.n_classes = field<std::size_t>(doc, "n_classes", root);
  r.n_inner = field<std::size_t>(doc, "n_inner", root);
  r.n_leaves = field<std::size_t>(doc, "n_leaves", root);
  r.depth = field<std::size_t>(doc, "depth", root);
  r.split_count = field<std::size_t>(doc, "split_count", root);
  r.parameter_count = field<std::size_t>(doc, "parameter_count", root);
  if (!doc.contains("nodes") || !doc["nodes"].is_array() || doc["nodes"].empty()) {
    throw ParseError("$.nodes: expected a non-empty array");
  }
  const auto& nodes = doc["nodes"];
  std::size_t inner = 0, leaves = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    const std::string where = "$.nodes[" + std::to_string(i) + "]";
    NodeReport nr;
    nr.id = field<std::uint64_t>(n, "id", where);
    const auto kind = field<std::string>(n, "kind", where);
    if (kind != "leaf" && kind != "inner") throw ParseError(where + ".kind: expected leaf or inner");
    nr.leaf = kind == "leaf";
    nr.depth = field<std::size_t>(n, "depth", where);
    if (!n.contains("split")) throw ParseError(where + ": missing field 'split'");
    if (!n["split"].is_null()) {
      const auto& s = n["split"];
      SplitTest t;
      t.feature = field<std::size_t>(s, "feature", where + ".split");
      t.value = field<double>(s, "value", where + ".split");
      const auto sk = field<std::string>(s, "kind", where + ".split");
      if (sk != "numeric" && sk != "categorical") {
        throw ParseError(where + ".split.kind: expected numeric or categorical");
      }
      t.kind = sk == "numeric" ? FeatureKind::numeric : FeatureKind::categorical;
      if (t.feature >= r.n_features) throw ParseError(where + ".split.feature: out of range");
      nr.split = t;
    }
    if (!n.contains("weights")) throw ParseError(where + ": missing field 'weights'");
    nr.weights = matrix_from_json(n["weights"], where + ".weights");
    if (static_cast<std::size_t>(nr.weights.cols()) != r.n_features + 1 ||
        static_cast<std::size_t>(nr.weights.rows()) != logit_rows_for(r.n_classes)) {
      throw ParseError(where + ".weights: shape does not match n_features / n_classes");
    }
    if (!n.contains("stats")) throw ParseError(where + ": missing field 'stats'");
    const auto& st = n["stats"];
    nr.loss_sum = field<double>(st, "loss_sum", where + ".stats");
    nr.count = field<std::size_t>(st, "count", where + ".stats");
    if (!st.contains("grad_sum")) throw ParseError(where + ".stats: missing field 'grad_sum'");
    nr.grad_sum = matrix_from_json(st["grad_sum"], where + ".stats.grad_sum");
    nr.n_candidates = field<std::size_t>(n, "n_candidates", where);
    const auto children = field<std::vector<std::uint64_t>>(n, "children", where);
    if (nr.leaf != children.empty() || (!children.empty() && children.size() != 2)) {
      throw ParseError(where + ".children: leaves have none, inner nodes have two");
    }
    if (nr.leaf == nr.split.has_value()) {
      throw ParseError(where + ".split: leaves have no split, inner nodes need one");
    }
    if (!children.empty()) {
      nr.left = children[0];
      nr.right = children[1];
    }
    (nr.leaf ? leaves : inner)++;
    r.nodes.push_back(std::move(nr));
  }
  if (inner != r.n_inner || leaves != r.n_leaves) {
    throw ParseError("$: n_inner / n_leaves disagree with the node list");
  }
  return r;
}

void write_tree_dump(const std::string& path, const TreeReport& report) {
  write_file_atomic(path, dump_tree(report));
}

TreeReport read_tree_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_tree_dump(ss.str());
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void render_node(const TreeReport& report, const std::map<std::uint64_t, std::size_t>& by_id,
                 std::size_t index, std::size_t indent, const std::string& branch,
                 std::size_t top, std::ostringstream& os) {
  const NodeReport& n = report.nodes[index];
  os << std::string(indent * 2, ' ') << branch << "[" << n.id << "] ";
  if (!n.leaf) {
    os << to_string(*n.split) << "  (n=" << n.count << ", loss=" << num(n.loss_sum) << ")\n";
    render_node(report, by_id, by_id.at(*n.left), indent + 1, "yes: ", top, os);
    render_node(report, by_id, by_id.at(*n.right), indent + 1, "no:  ", top, os);
    return;
  }
  os << "leaf  (n=" << n.count << ", loss=" << num(n.loss_sum) << ")";
  const auto m = static_cast<std::size_t>(n.weights.cols()) - 1;
  std::vector<std::pair<double, std::size_t>> strength;
  for (std::size_t j = 0; j < m; ++j) {
    strength.push_back({n.weights.col(static_cast<Eigen::Index>(j)).cwiseAbs().maxCoeff(), j});
  }
  std::stable_sort(strength.begin(), strength.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (!strength.empty()) {
    os << "  top:";
    for (std::size_t t = 0; t < std::min(top, strength.size()); ++t) {
      const std::size_t j = strength[t].second;
      // Signed weight of the first logit row; multiclass shows the magnitude.
      const double w = n.weights.rows() == 1 ? n.weights(0, static_cast<Eigen::Index>(j))
                                             : strength[t].first;
      os << " x[" << j << "]=" << num(w);
    }
  }
  os << '\n';
}

}  // namespace

std::string render_tree(const TreeReport& report, std::size_t top_features) {
  std::map<std::uint64_t, std::size_t> by_id;
  for (std::size_t i = 0; i < report.nodes.size(); ++i) by_id[report.nodes[i].id] = i;
  std::ostringstream os;
  if (!report.nodes.empty()) render_node(report, by_id, 0, 0, "", top_features, os);
  return os.str();
}

std::string tree_totals(const TreeReport& report) {
  std::ostringstream os;
  os << "inner=" << report.n_inner << " leaves=" << report.n_leaves << " depth=" << report.depth
     << " splits=" << count_splits(report)
     << " parameters=" << count_parameters(report, ParameterConvention::paper);
  return os.str();
}

}  // namespace dmt
