#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <unordered_map>

#include "dmt/errors.hpp"
#include "dmt/streams.hpp"

namespace dmt {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim, long line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"' && cur.empty()) {
      quoted = true;
    } else if (ch == delim) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  if (quoted) throw IngestionError("unterminated quoted field", line_no);
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Parses a complete numeric field; non-numeric text yields false.
bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

bool parse_label_int(const std::string& s, long& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtol(s.c_str(), &end, 10);
  return end == s.c_str() + s.size() && out >= 0;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset read_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw IngestionError("'" + path + "' is empty; a header row is required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = split_line(line, options.delimiter, 1);
  for (auto& h : header) h = trim(h);
  const std::size_t n_cols = header.size();

  // Default label: the last column, skipping a trailing concept-id column.
  std::size_t label_col = n_cols - 1;
  if (options.label_column.empty() && n_cols > 1 && !options.concept_column.empty() &&
      header[label_col] == options.concept_column) {
    --label_col;
  }
  if (!options.label_column.empty()) {
    const auto it = std::find(header.begin(), header.end(), options.label_column);
    if (it == header.end()) {
      throw IngestionError("label column '" + options.label_column + "' not found in header", 1);
    }
    label_col = static_cast<std::size_t>(it - header.begin());
  }
  std::ptrdiff_t concept_col = -1;
  if (!options.concept_column.empty()) {
    const auto it = std::find(header.begin(), header.end(), options.concept_column);
    if (it != header.end() && static_cast<std::size_t>(it - header.begin()) != label_col) {
      concept_col = it - header.begin();
    }
  }
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < n_cols; ++c) {
    if (c != label_col && static_cast<std::ptrdiff_t>(c) != concept_col) feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw IngestionError("no feature columns", 1);

  std::vector<std::vector<std::string>> cells;
  std::vector<long> line_numbers;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_line(line, options.delimiter, line_no);
    if (fields.size() != n_cols) {
      throw IngestionError("expected " + std::to_string(n_cols) + " fields, found " +
                               std::to_string(fields.size()),
                           line_no);
    }
    for (auto& f : fields) f = trim(f);
    cells.push_back(std::move(fields));
    line_numbers.push_back(line_no);
  }
  if (cells.empty()) throw IngestionError("'" + path + "' has a header but no rows");
  const std::size_t n = cells.size();
  const std::size_t m = feature_cols.size();

  Dataset d;
  d.schema.label_name = header[label_col];
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));

  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t col = feature_cols[j];
    d.schema.feature_names.push_back(header[col]);
    bool numeric = true;
    double v = 0.0;
    for (std::size_t i = 0; i < n && numeric; ++i) {
      if (cells[i][col].empty()) throw IngestionError("missing value in column '" + header[col] + "'", line_numbers[i]);
      numeric = parse_double(cells[i][col], v);
    }
    d.schema.categorical.push_back(!numeric);
    if (numeric) {
      for (std::size_t i = 0; i < n; ++i) {
        parse_double(cells[i][col], v);
        if (!std::isfinite(v)) {
          throw IngestionError("non-finite value in column '" + header[col] + "'", line_numbers[i]);
        }
        d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      }
    } else {
      std::unordered_map<std::string, int> codes;
      for (std::size_t i = 0; i < n; ++i) {
        const auto [it, inserted] = codes.try_emplace(cells[i][col], static_cast<int>(codes.size()));
        d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = it->second;
      }
    }
  }

  // Scale every feature column into [0, 1].
  if (options.normalization == Normalization::precomputed && options.ranges.size() != m) {
    throw IngestionError("precomputed normalization needs " + std::to_string(m) + " ranges, got " +
                         std::to_string(options.ranges.size()));
  }
  for (std::size_t j = 0; j < m; ++j) {
    auto col = d.features.col(static_cast<Eigen::Index>(j));
    FeatureRange r;
    if (options.normalization == Normalization::precomputed) {
      r = options.ranges[j];
    } else {
      r = {col.minCoeff(), col.maxCoeff()};
    }
    d.schema.ranges.push_back(r);
    const double span = r.max - r.min;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      col(i) = span > 0.0 ? std::clamp((col(i) - r.min) / span, 0.0, 1.0) : 0.0;
    }
  }

  // Labels: non-negative integers keep their value, anything else is coded.
  bool integer_labels = true;
  long max_label = 0;
  for (std::size_t i = 0; i < n && integer_labels; ++i) {
    long v = 0;
    integer_labels = parse_label_int(cells[i][label_col], v);
    max_label = std::max(max_label, v);
  }
  d.labels.resize(n);
  if (integer_labels) {
    for (std::size_t i = 0; i < n; ++i) {
      long v = 0;
      parse_label_int(cells[i][label_col], v);
      d.labels[i] = static_cast<int>(v);
    }
    d.schema.n_classes = std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
    for (std::size_t c = 0; c < d.schema.n_classes; ++c) {
      d.schema.class_names.push_back(std::to_string(c));
    }
  } else {
    std::unordered_map<std::string, int> codes;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [it, inserted] =
          codes.try_emplace(cells[i][label_col], static_cast<int>(codes.size()));
      if (inserted) d.schema.class_names.push_back(cells[i][label_col]);
      d.labels[i] = it->second;
    }
    d.schema.n_classes = std::max<std::size_t>(2, codes.size());
    while (d.schema.class_names.size() < d.schema.n_classes) {
      d.schema.class_names.push_back("<unused>");
    }
  }

  if (concept_col >= 0) {
    d.schema.has_concept_ids = true;
    d.concept_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      long v = 0;
      if (!parse_label_int(cells[i][static_cast<std::size_t>(concept_col)], v)) {
        throw IngestionError("concept id must be a non-negative integer", line_numbers[i]);
      }
      d.concept_ids[i] = static_cast<int>(v);
    }
  }

  if (options.shuffle) {
    std::mt19937_64 rng(options.seed);
    std::vector<Eigen::Index> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<Eigen::Index>(i);
    for (std::size_t i = n - 1; i > 0; --i) {
      const auto u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      const auto k = std::min(i, static_cast<std::size_t>(u * static_cast<double>(i + 1)));
      std::swap(perm[i], perm[k]);
    }
    Matrix shuffled = d.features(perm, Eigen::all);
    d.features = std::move(shuffled);
    Labels labels(n);
    std::vector<int> ids(d.concept_ids.empty() ? 0 : n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = d.labels[static_cast<std::size_t>(perm[i])];
      if (!ids.empty()) ids[i] = d.concept_ids[static_cast<std::size_t>(perm[i])];
    }
    d.labels = std::move(labels);
    d.concept_ids = std::move(ids);
  }
  return d;
}

IngestResult ingest_csv(const std::string& path, const CsvOptions& options,
                        const BatchSpec& batching) {
  Dataset d = read_csv(path, options);
  IngestResult out;
  out.batches = make_batches(d, batching);
  out.schema = std::move(d.schema);
  return out;
}

void write_csv(const std::string& path, const Dataset& data, bool include_concept_ids,
               char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  const bool ids = include_concept_ids && data.concept_ids.size() == data.size();
  const auto m = static_cast<std::size_t>(data.features.cols());
  for (std::size_t j = 0; j < m; ++j) {
    out << (j < data.schema.feature_names.size() ? data.schema.feature_names[j]
                                                  : "x" + std::to_string(j))
        << delimiter;
  }
  out << data.schema.label_name;
  if (ids) out << delimiter << "concept";
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out << format_double(data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
          << delimiter;
    }
    const int y = data.labels[i];
    if (static_cast<std::size_t>(y) < data.schema.class_names.size()) {
      out << data.schema.class_names[static_cast<std::size_t>(y)];
    } else {
      out << y;
    }
    if (ids) out << delimiter << data.concept_ids[i];
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace dmt
