#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dmt/split_test.hpp"
#include "dmt/types.hpp"

namespace dmt {

/// A batch of normalized feature rows with integer class labels.
/// concept_ids is filled only when a generator's debug channel is enabled.
struct StreamBatch {
  Matrix features;
  Labels labels;
  std::vector<int> concept_ids;

  std::size_t size() const { return labels.size(); }
  void validate(std::size_t n_classes) const;
};

/// Concept change from the previous concept to `concept_id`. Between start
/// and end the new concept is sampled with probability ramping linearly from
/// 0 to 1; start == end is an abrupt change.
struct DriftEvent {
  std::size_t start = 0;
  std::size_t end = 0;
  int concept_id = 0;
};

class DriftSchedule {
 public:
  DriftSchedule() = default;
  DriftSchedule(int initial_concept, std::vector<DriftEvent> events);

  /// Abrupt changes at each position, cycling through concepts 1, 2, ...
  /// modulo n_concepts.
  static DriftSchedule abrupt(const std::vector<std::size_t>& positions, int n_concepts);

  int initial_concept() const { return initial_; }
  const std::vector<DriftEvent>& events() const { return events_; }

  /// Concept for sample `index`; `u` is a uniform draw in [0, 1) used inside
  /// incremental windows.
  int concept_at(std::size_t index, double u) const;
  /// Concept in force once every event starting at or before index has
  /// completed (ignores window mixing).
  int settled_concept_at(std::size_t index) const;

 private:
  int initial_ = 0;
  std::vector<DriftEvent> events_;
};

enum class GeneratorKind { sea, agrawal, hyperplane };

std::string to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(const std::string& name);

struct HyperplaneOptions {
  std::size_t n_features = 50;
  /// Per-sample change applied to every weight (direction flips at random).
  double rotation = 0.0;
  /// Probability per sample that a weight's drift direction reverses.
  double direction_flip = 0.1;
};

struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::sea;
  std::size_t n_samples = 0;
  std::size_t batch_size = 1000;
  /// Probability that one feature of a sample is redrawn after labelling.
  double noise_probability = 0.1;
  std::uint64_t seed = 1;
  DriftSchedule schedule;
  HyperplaneOptions hyperplane;
  bool emit_concept_ids = false;

  void validate() const;
  std::size_t n_features() const;
  std::size_t n_classes() const { return 2; }
};

/// Sample-by-sample generator. SEA concepts threshold f1 + f2 at 8, 9, 7 and
/// 9.5 on raw features in [0, 10] (label 1 below the threshold). Agrawal
/// concepts are classification functions 1-4. Hyperplane labels are
/// 1 iff w . x >= w0 with w0 = sum(w) / 2; odd concept ids invert the label.
/// All emitted features are scaled to [0, 1].
class StreamGenerator {
 public:
  explicit StreamGenerator(GeneratorConfig config);

  std::size_t n_features() const { return config_.n_features(); }
  std::size_t position() const { return position_; }
  bool exhausted() const { return position_ >= config_.n_samples; }

  /// Next batch of up to batch_size samples (fewer at the end of the stream).
  StreamBatch next_batch();

 private:
  void next_sample(double* x, int& label, int& concept_id);
  int sea_label(const double* raw, int concept_id) const;
  int agrawal_label(const double* raw, int concept_id) const;
  void agrawal_sample(double* raw);
  void hyperplane_step();

  GeneratorConfig config_;
  std::mt19937_64 rng_;
  std::size_t position_ = 0;
  std::vector<double> hp_weights_;
  std::vector<double> hp_direction_;
};

/// Whole stream, split into batches of config.batch_size.
std::vector<StreamBatch> generate(const GeneratorConfig& config);

struct FeatureRange {
  double min = 0.0;
  double max = 1.0;
};

struct Schema {
  std::vector<std::string> feature_names;
  std::vector<bool> categorical;
  /// Raw value range used to scale each feature.
  std::vector<FeatureRange> ranges;
  std::string label_name = "label";
  /// Original label strings in code order.
  std::vector<std::string> class_names;
  std::size_t n_classes = 2;
  bool has_concept_ids = false;

  std::size_t n_features() const { return feature_names.size(); }
  std::vector<FeatureKind> feature_kinds() const;
};

/// Whole stream in memory.
struct Dataset {
  Schema schema;
  Matrix features;
  Labels labels;
  std::vector<int> concept_ids;

  std::size_t size() const { return labels.size(); }
};

/// Batch size either fixed or as a fraction of the total row count (floored,
/// at least 1). The final partial batch is always emitted.
struct BatchSpec {
  std::size_t batch_size = 0;
  double fraction = 0.001;

  std::size_t resolve(std::size_t total_rows) const;
};

std::vector<StreamBatch> make_batches(const Dataset& data, const BatchSpec& spec);

/// Collects batches into one dataset with a generic schema (features
/// x0, x1, ..., label column "label", ranges [0, 1]).
Dataset to_dataset(const std::vector<StreamBatch>& batches, std::size_t n_classes);

/// Whole generated stream as a dataset with the generator's feature names.
Dataset generate_dataset(const GeneratorConfig& config);

enum class Normalization { first_pass, precomputed };

struct CsvOptions {
  char delimiter = ',';
  /// Defaults to the last column (ignoring a trailing concept column) when empty.
  std::string label_column;
  Normalization normalization = Normalization::first_pass;
  /// One range per feature column, used with Normalization::precomputed.
  std::vector<FeatureRange> ranges;
  /// Column holding concept ids written by the generator's debug channel;
  /// it is kept out of the features when present.
  std::string concept_column = "concept";
  bool shuffle = false;
  std::uint64_t seed = 1;
};

/// Reads a CSV stream. String columns are coded in order of first appearance;
/// numeric columns are min-max scaled to [0, 1] (clamped under precomputed
/// ranges). Labels that are all non-negative integers keep their values;
/// anything else is coded by first appearance.
Dataset read_csv(const std::string& path, const CsvOptions& options = {});

struct IngestResult {
  std::vector<StreamBatch> batches;
  Schema schema;
};

IngestResult ingest_csv(const std::string& path, const CsvOptions& options,
                        const BatchSpec& batching = {});

/// Writes features and labels with a header row; adds a trailing concept
/// column when include_concept_ids is set and ids are available.
void write_csv(const std::string& path, const Dataset& data, bool include_concept_ids = false,
               char delimiter = ',');

}  // namespace dmt
