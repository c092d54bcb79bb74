#include "dmt/eval.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dmt/errors.hpp"

namespace dmt {

F1Averaging parse_f1_averaging(const std::string& name) {
  if (name == "standard" || name == "binary") return F1Averaging::standard;
  if (name == "macro") return F1Averaging::macro;
  if (name == "micro") return F1Averaging::micro;
  throw ConfigError("unknown F1 averaging '" + name + "'");
}

namespace {

double class_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

double f1_score(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes,
                F1Averaging averaging) {
  if (y_true.size() != y_pred.size()) throw MetricError("y_true and y_pred differ in length");
  if (y_true.empty()) throw MetricError("cannot score an empty batch");
  std::vector<std::size_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0),
      support(n_classes, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes ||
        static_cast<std::size_t>(p) >= n_classes) {
      throw MetricError("label outside [0, n_classes)");
    }
    ++support[static_cast<std::size_t>(t)];
    if (t == p) {
      ++tp[static_cast<std::size_t>(t)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(t)];
    }
  }
  if (averaging == F1Averaging::standard && n_classes == 2) return class_f1(tp[1], fp[1], fn[1]);
  if (averaging == F1Averaging::micro) {
    std::size_t t = 0, f = 0, n = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      t += tp[c];
      f += fp[c];
      n += fn[c];
    }
    return class_f1(t, f, n);
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (support[c] == 0) continue;
    sum += class_f1(tp[c], fp[c], fn[c]);
    ++present;
  }
  return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

std::size_t count_splits(const TreeReport& report) {
  const std::size_t per_leaf = report.n_classes == 2 ? 1 : report.n_classes;
  return report.n_inner + report.n_leaves * per_leaf;
}

ParameterConvention parse_parameter_convention(const std::string& name) {
  if (name == "paper") return ParameterConvention::paper;
  if (name == "internal") return ParameterConvention::internal;
  throw ConfigError("unknown parameter convention '" + name + "'");
}

std::size_t count_parameters(const TreeReport& report, ParameterConvention convention) {
  const std::size_t m = report.n_features;
  if (convention == ParameterConvention::paper) {
    const std::size_t rows = report.n_classes == 2 ? 1 : report.n_classes;
    return report.n_inner + report.n_leaves * m * rows;
  }
  return report.n_inner + report.n_leaves * logit_rows_for(report.n_classes) * (m + 1);
}

Complexity DmtLearner::complexity() const {
  const TreeReport r = tree_.describe();
  return {count_splits(r), count_parameters(r, ParameterConvention::paper)};
}

std::vector<int> GlmLearner::predict(const Matrix& rows) {
  return argmax_rows(predict_proba(model_, rows, exec_));
}

void GlmLearner::update(const StreamBatch& batch) {
  sgd_step(model_, batch.features, batch.labels, exec_);
}

Complexity GlmLearner::complexity() const {
  TreeReport r;
  r.n_features = model_.n_features();
  r.n_classes = model_.n_classes();
  r.n_leaves = 1;
  return {count_splits(r), count_parameters(r, ParameterConvention::paper)};
}

std::vector<PrequentialRecord> prequential_run(Learner& learner,
                                               std::span<const StreamBatch> stream,
                                               const PrequentialOptions& options) {
  if (stream.empty()) throw EvaluationError("stream has no batches");
  using Clock = std::chrono::steady_clock;
  std::vector<PrequentialRecord> records;
  records.reserve(stream.size());
  for (std::size_t it = 0; it < stream.size(); ++it) {
    const StreamBatch& batch = stream[it];
    if (batch.size() == 0) throw EvaluationError("empty batch at iteration " + std::to_string(it));
    const auto start = Clock::now();
    const std::vector<int> pred = learner.predict(batch.features);
    const double f1 = f1_score(batch.labels, pred, options.n_classes, options.averaging);
    learner.update(batch);
    const auto stop = Clock::now();
    const Complexity cx = learner.complexity();
    PrequentialRecord rec{it, f1, cx.n_splits, cx.n_parameters,
                          options.record_time
                              ? std::chrono::duration<double>(stop - start).count()
                              : 0.0,
                          batch.size()};
    records.push_back(rec);
    if (options.on_iteration) options.on_iteration(rec);
  }
  return records;
}

std::vector<PrequentialRecord> prequential_run(Learner& learner, const Dataset& data,
                                               double batch_fraction,
                                               const PrequentialOptions& options) {
  if (data.size() == 0) throw EvaluationError("stream has no rows");
  BatchSpec spec;
  spec.fraction = batch_fraction;
  const auto batches = make_batches(data, spec);
  return prequential_run(learner, batches, options);
}

WindowSeries sliding_aggregate(std::span<const double> series, std::size_t window) {
  if (window == 0) throw ConfigError("window must be at least 1");
  WindowSeries out;
  out.mean.reserve(series.size());
  out.stddev.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
    const auto n = static_cast<double>(i + 1 - lo);
    double sum = 0.0;
    for (std::size_t k = lo; k <= i; ++k) sum += series[k];
    const double mean = sum / n;
    double sq = 0.0;
    for (std::size_t k = lo; k <= i; ++k) sq += (series[k] - mean) * (series[k] - mean);
    out.mean.push_back(mean);
    out.stddev.push_back(std::sqrt(sq / n));
  }
  return out;
}

std::vector<double> f1_series(std::span<const PrequentialRecord> records) {
  std::vector<double> v;
  for (const auto& r : records) v.push_back(r.f1);
  return v;
}

std::vector<double> splits_series(std::span<const PrequentialRecord> records) {
  std::vector<double> v;
  for (const auto& r : records) v.push_back(static_cast<double>(r.n_splits));
  return v;
}

std::vector<double> parameters_series(std::span<const PrequentialRecord> records) {
  std::vector<double> v;
  for (const auto& r : records) v.push_back(static_cast<double>(r.n_parameters));
  return v;
}

RecordWindows sliding_aggregate(std::span<const PrequentialRecord> records, std::size_t window) {
  std::vector<double> elapsed;
  for (const auto& r : records) elapsed.push_back(r.elapsed);
  return {sliding_aggregate(f1_series(records), window),
          sliding_aggregate(splits_series(records), window),
          sliding_aggregate(parameters_series(records), window),
          sliding_aggregate(elapsed, window)};
}

SeriesSummary summarize(std::span<const double> series) {
  if (series.empty()) return {};
  double sum = 0.0;
  for (double v : series) sum += v;
  const double mean = sum / static_cast<double>(series.size());
  double sq = 0.0;
  for (double v : series) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(series.size()))};
}

namespace {

constexpr const char* kRecordHeader = "iteration,f1,n_splits,n_parameters,elapsed,batch_size";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string records_to_csv(std::span<const PrequentialRecord> records) {
  std::ostringstream os;
  os << kRecordHeader << '\n';
  for (const auto& r : records) {
    os << r.iteration << ',' << fmt(r.f1) << ',' << r.n_splits << ',' << r.n_parameters << ','
       << fmt(r.elapsed) << ',' << r.batch_size << '\n';
  }
  return os.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << contents;
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move '" + tmp + "' to '" + path + "'");
  }
}

void export_records(const std::string& path, std::span<const PrequentialRecord> records,
                    RecordFormat format) {
  if (format == RecordFormat::csv) {
    write_file_atomic(path, records_to_csv(records));
    return;
  }
  nlohmann::ordered_json doc;
  doc["columns"] = {"iteration", "f1", "n_splits", "n_parameters", "elapsed", "batch_size"};
  auto& rows = doc["records"] = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    rows.push_back({{"iteration", r.iteration},
                    {"f1", r.f1},
                    {"n_splits", r.n_splits},
                    {"n_parameters", r.n_parameters},
                    {"elapsed", r.elapsed},
                    {"batch_size", r.batch_size}});
  }
  write_file_atomic(path, doc.dump(2) + "\n");
}

std::vector<PrequentialRecord> import_records(const std::string& path, RecordFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<PrequentialRecord> out;
  if (format == RecordFormat::json) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
      for (const auto& r : doc.at("records")) {
        out.push_back({r.at("iteration").get<std::size_t>(), r.at("f1").get<double>(),
                       r.at("n_splits").get<std::size_t>(), r.at("n_parameters").get<std::size_t>(),
                       r.at("elapsed").get<double>(), r.at("batch_size").get<std::size_t>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed records file '" + path + "': " + e.what());
    }
    return out;
  }
  std::string line;
  if (!std::getline(in, line) || line != kRecordHeader) {
    throw ParseError("'" + path + "' does not start with the metrics header");
  }
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    PrequentialRecord r;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%zu,%lf,%zu,%zu,%lf,%zu%c", &r.iteration, &r.f1, &r.n_splits,
                    &r.n_parameters, &r.elapsed, &r.batch_size, &tail) != 6) {
      throw ParseError("malformed metrics row at line " + std::to_string(line_no));
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace dmt
