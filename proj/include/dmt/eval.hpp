#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dmt/glm.hpp"
#include "dmt/streams.hpp"
#include "dmt/tree.hpp"

namespace dmt {

enum class F1Averaging {
  /// F1 of class 1 for two-class targets, macro otherwise.
  standard,
  /// Unweighted mean over the classes present in y_true.
  macro,
  micro,
};

F1Averaging parse_f1_averaging(const std::string& name);

double f1_score(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes,
                F1Averaging averaging = F1Averaging::standard);

/// Inner nodes plus one split per leaf for binary targets, c per leaf otherwise.
std::size_t count_splits(const TreeReport& report);

enum class ParameterConvention {
  /// One per split value plus m weights per logit row at each leaf.
  paper,
  /// One per split value plus every leaf weight including intercepts.
  internal,
};

ParameterConvention parse_parameter_convention(const std::string& name);
std::size_t count_parameters(const TreeReport& report, ParameterConvention convention);

struct Complexity {
  std::size_t n_splits = 0;
  std::size_t n_parameters = 0;
};

/// Anything that can be evaluated prequentially.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::vector<int> predict(const Matrix& rows) = 0;
  virtual void update(const StreamBatch& batch) = 0;
  virtual Complexity complexity() const = 0;
};

class DmtLearner : public Learner {
 public:
  explicit DmtLearner(DmtConfig config) : tree_(std::move(config)) {}

  std::vector<int> predict(const Matrix& rows) override { return tree_.predict(rows); }
  void update(const StreamBatch& batch) override { tree_.update(batch.features, batch.labels); }
  Complexity complexity() const override;

  const DynamicModelTree& tree() const { return tree_; }

 private:
  DynamicModelTree tree_;
};

/// A single linear model trained with sgd_step; the root-only baseline.
class GlmLearner : public Learner {
 public:
  GlmLearner(std::size_t n_features, std::size_t n_classes, double learning_rate,
             Execution exec = Execution::parallel)
      : model_(n_features, n_classes, learning_rate), exec_(exec) {}

  std::vector<int> predict(const Matrix& rows) override;
  void update(const StreamBatch& batch) override;
  Complexity complexity() const override;

  const LinearNodeModel& model() const { return model_; }

 private:
  LinearNodeModel model_;
  Execution exec_;
};

struct PrequentialRecord {
  std::size_t iteration = 0;
  double f1 = 0.0;
  std::size_t n_splits = 0;
  std::size_t n_parameters = 0;
  /// Seconds spent on predict + update; zero unless timing is enabled.
  double elapsed = 0.0;
  std::size_t batch_size = 0;

  friend bool operator==(const PrequentialRecord&, const PrequentialRecord&) = default;
};

struct PrequentialOptions {
  std::size_t n_classes = 2;
  F1Averaging averaging = F1Averaging::standard;
  bool record_time = false;
  /// Called after each iteration's update with the new record.
  std::function<void(const PrequentialRecord&)> on_iteration;
};

/// Test-then-train: each batch is predicted with the model as it stood after
/// the previous batch, scored, and only then used for training.
std::vector<PrequentialRecord> prequential_run(Learner& learner,
                                               std::span<const StreamBatch> stream,
                                               const PrequentialOptions& options);

/// Batches the dataset by `batch_fraction` of its rows, then runs as above.
std::vector<PrequentialRecord> prequential_run(Learner& learner, const Dataset& data,
                                               double batch_fraction,
                                               const PrequentialOptions& options);

struct WindowSeries {
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Trailing-window mean and population standard deviation; the first
/// window - 1 entries use the available prefix.
WindowSeries sliding_aggregate(std::span<const double> series, std::size_t window = 20);

struct RecordWindows {
  WindowSeries f1, n_splits, n_parameters, elapsed;
};

RecordWindows sliding_aggregate(std::span<const PrequentialRecord> records,
                                std::size_t window = 20);

struct SeriesSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

SeriesSummary summarize(std::span<const double> series);

std::vector<double> f1_series(std::span<const PrequentialRecord> records);
std::vector<double> splits_series(std::span<const PrequentialRecord> records);
std::vector<double> parameters_series(std::span<const PrequentialRecord> records);

enum class RecordFormat { csv, json };

/// Column order: iteration,f1,n_splits,n_parameters,elapsed,batch_size.
void export_records(const std::string& path, std::span<const PrequentialRecord> records,
                    RecordFormat format = RecordFormat::csv);
std::vector<PrequentialRecord> import_records(const std::string& path,
                                              RecordFormat format = RecordFormat::csv);

std::string records_to_csv(std::span<const PrequentialRecord> records);

/// Writes `contents` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace dmt
