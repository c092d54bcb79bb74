#include "dmt/streams.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dmt/errors.hpp"

namespace dmt {

namespace {

// Portable uniform draw in [0, 1) from the top 53 bits.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform(rng) * static_cast<double>(n)));
}

constexpr std::array<double, 4> kSeaThresholds{8.0, 9.0, 7.0, 9.5};

constexpr std::size_t kAgrawalFeatures = 9;
const std::array<FeatureRange, kAgrawalFeatures> kAgrawalRanges{{
    {20000.0, 150000.0},   // salary
    {0.0, 75000.0},        // commission
    {20.0, 80.0},          // age
    {0.0, 4.0},            // elevel
    {1.0, 20.0},           // car
    {0.0, 8.0},            // zipcode
    {50000.0, 1350000.0},  // hvalue
    {1.0, 30.0},           // hyears
    {0.0, 500000.0},       // loan
}};
const std::array<const char*, kAgrawalFeatures> kAgrawalNames{
    "salary", "commission", "age", "elevel", "car", "zipcode", "hvalue", "hyears", "loan"};

int positive_mod(int a, int n) { return ((a % n) + n) % n; }

}  // namespace

void StreamBatch::validate(std::size_t n_classes) const {
  if (labels.empty()) throw DimensionError("batch has no rows");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw DimensionError("row count and label count differ");
  }
  if (!features.allFinite()) throw DimensionError("feature values must be finite");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) throw LabelError("label out of range");
  }
}

DriftSchedule::DriftSchedule(int initial_concept, std::vector<DriftEvent> events)
    : initial_(initial_concept), events_(std::move(events)) {
  if (initial_ < 0) throw ConfigError("concept ids must be non-negative");
  for (std::size_t e = 0; e < events_.size(); ++e) {
    const auto& ev = events_[e];
    if (ev.end < ev.start) throw ConfigError("drift event ends before it starts");
    if (ev.concept_id < 0) throw ConfigError("concept ids must be non-negative");
    if (e > 0 && ev.start < events_[e - 1].end) {
      throw ConfigError("drift events must be ordered and non-overlapping");
    }
    if (e > 0 && ev.start == events_[e - 1].start) {
      throw ConfigError("two drift events start at the same sample");
    }
  }
}

DriftSchedule DriftSchedule::abrupt(const std::vector<std::size_t>& positions, int n_concepts) {
  if (n_concepts < 1) throw ConfigError("need at least one concept");
  std::vector<DriftEvent> events;
  for (std::size_t j = 0; j < positions.size(); ++j) {
    events.push_back({positions[j], positions[j], static_cast<int>((j + 1) % n_concepts)});
  }
  return DriftSchedule(0, std::move(events));
}

int DriftSchedule::concept_at(std::size_t index, double u) const {
  int previous = initial_;
  for (const auto& ev : events_) {
    if (index < ev.start) break;
    if (index >= ev.end) {
      previous = ev.concept_id;
      continue;
    }
    const double p = static_cast<double>(index - ev.start) / static_cast<double>(ev.end - ev.start);
    return u < p ? ev.concept_id : previous;
  }
  return previous;
}

int DriftSchedule::settled_concept_at(std::size_t index) const {
  int c = initial_;
  for (const auto& ev : events_) {
    if (index >= ev.end) c = ev.concept_id;
  }
  return c;
}

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::sea: return "sea";
    case GeneratorKind::agrawal: return "agrawal";
    case GeneratorKind::hyperplane: return "hyperplane";
  }
  return "unknown";
}

GeneratorKind parse_generator_kind(const std::string& name) {
  if (name == "sea") return GeneratorKind::sea;
  if (name == "agrawal") return GeneratorKind::agrawal;
  if (name == "hyperplane") return GeneratorKind::hyperplane;
  throw ConfigError("unknown generator kind '" + name + "'");
}

void GeneratorConfig::validate() const {
  if (!(noise_probability >= 0.0 && noise_probability <= 1.0)) {
    throw ConfigError("noise probability must lie in [0, 1]");
  }
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (kind == GeneratorKind::hyperplane) {
    if (hyperplane.n_features == 0) throw ConfigError("hyperplane needs at least one feature");
    if (!(hyperplane.rotation >= 0.0)) throw ConfigError("rotation must be non-negative");
    if (!(hyperplane.direction_flip >= 0.0 && hyperplane.direction_flip <= 1.0)) {
      throw ConfigError("direction flip probability must lie in [0, 1]");
    }
  }
  const auto& ev = schedule.events();
  if (!ev.empty() && ev.back().end > n_samples) {
    throw ConfigError("drift schedule extends past the end of the stream");
  }
}

std::size_t GeneratorConfig::n_features() const {
  switch (kind) {
    case GeneratorKind::sea: return 3;
    case GeneratorKind::agrawal: return kAgrawalFeatures;
    case GeneratorKind::hyperplane: return hyperplane.n_features;
  }
  return 0;
}

StreamGenerator::StreamGenerator(GeneratorConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  if (config_.kind == GeneratorKind::hyperplane) {
    const std::size_t m = config_.hyperplane.n_features;
    hp_weights_.resize(m);
    for (auto& w : hp_weights_) w = uniform(rng_);
    hp_direction_.assign(m, 1.0);
  }
}

int StreamGenerator::sea_label(const double* raw, int concept_id) const {
  const double theta = kSeaThresholds[static_cast<std::size_t>(positive_mod(concept_id, 4))];
  return raw[0] + raw[1] <= theta ? 1 : 0;
}

void StreamGenerator::agrawal_sample(double* raw) {
  const double salary = 20000.0 + 130000.0 * uniform(rng_);
  const double commission_draw = uniform(rng_);
  raw[0] = salary;
  raw[1] = salary >= 75000.0 ? 0.0 : 10000.0 + 65000.0 * commission_draw;
  raw[2] = 20.0 + static_cast<double>(uniform_index(rng_, 61));
  raw[3] = static_cast<double>(uniform_index(rng_, 5));
  raw[4] = 1.0 + static_cast<double>(uniform_index(rng_, 20));
  raw[5] = static_cast<double>(uniform_index(rng_, 9));
  raw[6] = (9.0 - raw[5]) * 100000.0 * (0.5 + uniform(rng_));
  raw[7] = 1.0 + static_cast<double>(uniform_index(rng_, 30));
  raw[8] = 500000.0 * uniform(rng_);
}

int StreamGenerator::agrawal_label(const double* raw, int concept_id) const {
  const double salary = raw[0];
  const double age = raw[2];
  const auto elevel = static_cast<int>(raw[3]);
  auto in = [](double v, double lo, double hi) { return lo <= v && v <= hi; };
  bool group_a = false;
  switch (positive_mod(concept_id, 4)) {
    case 0:
      group_a = age < 40 || age >= 60;
      break;
    case 1:
      group_a = age < 40   ? in(salary, 50000, 100000)
                : age < 60 ? in(salary, 75000, 125000)
                           : in(salary, 25000, 75000);
      break;
    case 2:
      group_a = age < 40   ? elevel <= 1
                : age < 60 ? (elevel >= 1 && elevel <= 3)
                           : elevel >= 2;
      break;
    default:
      if (age < 40) {
        group_a = elevel <= 1 ? in(salary, 25000, 75000) : in(salary, 50000, 100000);
      } else if (age < 60) {
        group_a = (elevel >= 1 && elevel <= 3) ? in(salary, 50000, 100000)
                                               : in(salary, 75000, 125000);
      } else {
        group_a = elevel >= 2 ? in(salary, 50000, 100000) : in(salary, 25000, 75000);
      }
      break;
  }
  return group_a ? 0 : 1;
}

void StreamGenerator::hyperplane_step() {
  const auto& hp = config_.hyperplane;
  if (hp.rotation <= 0.0) return;
  for (std::size_t i = 0; i < hp_weights_.size(); ++i) {
    if (uniform(rng_) < hp.direction_flip) hp_direction_[i] = -hp_direction_[i];
    hp_weights_[i] += hp_direction_[i] * hp.rotation;
  }
}

void StreamGenerator::next_sample(double* x, int& label, int& concept_id) {
  const std::size_t m = n_features();
  concept_id = config_.schedule.concept_at(position_, uniform(rng_));
  switch (config_.kind) {
    case GeneratorKind::sea: {
      double raw[3];
      for (double& v : raw) v = 10.0 * uniform(rng_);
      label = sea_label(raw, concept_id);
      for (std::size_t j = 0; j < 3; ++j) x[j] = raw[j] / 10.0;
      break;
    }
    case GeneratorKind::agrawal: {
      double raw[kAgrawalFeatures];
      agrawal_sample(raw);
      label = agrawal_label(raw, concept_id);
      for (std::size_t j = 0; j < kAgrawalFeatures; ++j) {
        const auto& r = kAgrawalRanges[j];
        x[j] = std::clamp((raw[j] - r.min) / (r.max - r.min), 0.0, 1.0);
      }
      break;
    }
    case GeneratorKind::hyperplane: {
      double dot = 0.0, total = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        x[j] = uniform(rng_);
        dot += hp_weights_[j] * x[j];
        total += hp_weights_[j];
      }
      label = dot >= 0.5 * total ? 1 : 0;
      if (positive_mod(concept_id, 2) == 1) label = 1 - label;
      hyperplane_step();
      break;
    }
  }
  if (uniform(rng_) < config_.noise_probability) {
    const std::size_t f = uniform_index(rng_, m);
    x[f] = uniform(rng_);
  }
  ++position_;
}

StreamBatch StreamGenerator::next_batch() {
  const std::size_t n = std::min(config_.batch_size, config_.n_samples - position_);
  const std::size_t m = n_features();
  StreamBatch batch;
  batch.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  batch.labels.resize(n);
  if (config_.emit_concept_ids) batch.concept_ids.resize(n);
  std::vector<double> x(m);
  for (std::size_t i = 0; i < n; ++i) {
    int concept_id = 0;
    next_sample(x.data(), batch.labels[i], concept_id);
    for (std::size_t j = 0; j < m; ++j) {
      batch.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[j];
    }
    if (config_.emit_concept_ids) batch.concept_ids[i] = concept_id;
  }
  return batch;
}

std::vector<StreamBatch> generate(const GeneratorConfig& config) {
  StreamGenerator gen(config);
  std::vector<StreamBatch> out;
  while (!gen.exhausted()) out.push_back(gen.next_batch());
  return out;
}

std::vector<FeatureKind> Schema::feature_kinds() const {
  std::vector<FeatureKind> kinds;
  for (bool c : categorical) kinds.push_back(c ? FeatureKind::categorical : FeatureKind::numeric);
  return kinds;
}

std::size_t BatchSpec::resolve(std::size_t total_rows) const {
  if (batch_size > 0) return batch_size;
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("batch fraction must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total_rows)));
  return std::max<std::size_t>(n, 1);
}

std::vector<StreamBatch> make_batches(const Dataset& data, const BatchSpec& spec) {
  const std::size_t total = data.size();
  const std::size_t size = spec.resolve(total);
  std::vector<StreamBatch> out;
  for (std::size_t start = 0; start < total; start += size) {
    const std::size_t n = std::min(size, total - start);
    StreamBatch b;
    b.features = data.features.middleRows(static_cast<Eigen::Index>(start),
                                          static_cast<Eigen::Index>(n));
    b.labels.assign(data.labels.begin() + static_cast<long>(start),
                    data.labels.begin() + static_cast<long>(start + n));
    if (!data.concept_ids.empty()) {
      b.concept_ids.assign(data.concept_ids.begin() + static_cast<long>(start),
                           data.concept_ids.begin() + static_cast<long>(start + n));
    }
    out.push_back(std::move(b));
  }
  return out;
}

Dataset to_dataset(const std::vector<StreamBatch>& batches, std::size_t n_classes) {
  Dataset d;
  std::size_t rows = 0;
  Eigen::Index m = batches.empty() ? 0 : batches.front().features.cols();
  bool ids = !batches.empty();
  for (const auto& b : batches) {
    rows += b.size();
    if (b.features.cols() != m) throw DimensionError("batches disagree on feature count");
    ids = ids && b.concept_ids.size() == b.size();
  }
  d.features.resize(static_cast<Eigen::Index>(rows), m);
  Eigen::Index at = 0;
  for (const auto& b : batches) {
    d.features.middleRows(at, b.features.rows()) = b.features;
    at += b.features.rows();
    d.labels.insert(d.labels.end(), b.labels.begin(), b.labels.end());
    if (ids) d.concept_ids.insert(d.concept_ids.end(), b.concept_ids.begin(), b.concept_ids.end());
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    d.schema.feature_names.push_back("x" + std::to_string(j));
    d.schema.categorical.push_back(false);
    d.schema.ranges.push_back({0.0, 1.0});
  }
  d.schema.n_classes = n_classes;
  for (std::size_t c = 0; c < n_classes; ++c) d.schema.class_names.push_back(std::to_string(c));
  d.schema.has_concept_ids = ids;
  return d;
}

Dataset generate_dataset(const GeneratorConfig& config) {
  Dataset d = to_dataset(generate(config), config.n_classes());
  if (config.kind == GeneratorKind::sea) {
    d.schema.feature_names = {"f1", "f2", "f3"};
  } else if (config.kind == GeneratorKind::agrawal) {
    d.schema.feature_names.assign(kAgrawalNames.begin(), kAgrawalNames.end());
  }
  return d;
}

}  // namespace dmt
