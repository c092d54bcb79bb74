// dmt: generate drifting streams, run prequential evaluation, inspect trees.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "dmt/errors.hpp"
#include "dmt/eval.hpp"
#include "dmt/streams.hpp"
#include "dmt/tree.hpp"
#include "dmt/tree_io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInvariant = 3;

struct InvariantBreach : dmt::Error {
  using dmt::Error::Error;
};

struct GenerateArgs {
  std::string kind = "sea";
  std::size_t n = 100000;
  std::string drifts;
  double noise = 0.1;
  std::uint64_t seed = 1;
  std::size_t features = 50;
  double rotation = 0.0;
  bool concept_ids = false;
  std::string out = "stream.csv";
};

struct RunArgs {
  std::string stream;
  std::string label;
  double batch_frac = 0.001;
  std::size_t batch_size = 0;
  double lr = 0.05;
  double epsilon = 1e-7;
  std::size_t candidate_cap = 0;
  double replacement = 0.5;
  int max_depth = -1;
  std::uint64_t seed = 1;
  bool shuffle = false;
  bool unit_ranges = false;
  std::string averaging = "standard";
  bool record_time = false;
  bool serial = false;
  std::string out = "run";
};

std::size_t parse_count(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw dmt::ConfigError("bad drift position '" + s + "'");
  return static_cast<std::size_t>(v);
}

// "20000,40000" for abrupt changes, "20000-25000" for an incremental window.
dmt::DriftSchedule parse_drifts(const std::string& spec, int n_concepts) {
  std::vector<dmt::DriftEvent> events;
  if (spec.empty()) return dmt::DriftSchedule(0, events);
  std::stringstream ss(spec);
  std::string item;
  int concept_id = 0;
  while (std::getline(ss, item, ',')) {
    dmt::DriftEvent e;
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      e.start = e.end = parse_count(item);
    } else {
      e.start = parse_count(item.substr(0, dash));
      e.end = parse_count(item.substr(dash + 1));
    }
    concept_id = (concept_id + 1) % n_concepts;
    e.concept_id = concept_id;
    events.push_back(e);
  }
  return dmt::DriftSchedule(0, std::move(events));
}

int cmd_generate(const GenerateArgs& a) {
  dmt::GeneratorConfig cfg;
  cfg.kind = dmt::parse_generator_kind(a.kind);
  cfg.n_samples = a.n;
  cfg.noise_probability = a.noise;
  cfg.seed = a.seed;
  cfg.hyperplane.n_features = a.features;
  cfg.hyperplane.rotation = a.rotation;
  cfg.emit_concept_ids = a.concept_ids;
  // Hyperplane alternates between the plane and its inversion.
  cfg.schedule = parse_drifts(a.drifts, cfg.kind == dmt::GeneratorKind::hyperplane ? 2 : 4);
  cfg.validate();

  const dmt::Dataset data = dmt::generate_dataset(cfg);
  dmt::write_csv(a.out, data, a.concept_ids);
  std::cout << "wrote " << a.out << ": rows=" << data.size()
            << " features=" << data.schema.n_features() << " classes=" << data.schema.n_classes
            << '\n';
  return kExitOk;
}

ordered_json manifest_json(const RunArgs& a, const dmt::Schema& schema,
                           const dmt::DmtConfig& cfg, std::size_t rows, std::size_t batch) {
  ordered_json m;
  m["tool"] = "dmt";
  m["version"] = DMT_VERSION;
  m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION);
#if defined(__VERSION__)
  m["compiler"] = __VERSION__;
#endif
  m["seed"] = a.seed;
  m["stream"] = {{"path", a.stream},
                 {"rows", rows},
                 {"features", schema.n_features()},
                 {"classes", schema.n_classes},
                 {"label", schema.label_name},
                 {"shuffle", a.shuffle},
                 {"normalization", a.unit_ranges ? "unit" : "first_pass"}};
  m["learner"] = {{"learning_rate", cfg.learning_rate},
                  {"epsilon", cfg.epsilon},
                  {"candidate_cap", cfg.effective_candidate_cap()},
                  {"replacement_fraction", cfg.replacement_fraction},
                  {"max_depth", cfg.max_depth ? ordered_json(*cfg.max_depth) : ordered_json()},
                  {"execution", cfg.execution == dmt::Execution::serial ? "serial" : "parallel"}};
  m["evaluation"] = {{"batch_fraction", a.batch_frac},
                     {"batch_size", batch},
                     {"averaging", a.averaging},
                     {"record_time", a.record_time},
                     {"out", a.out}};
  return m;
}

// Every applied change must have cleared its threshold.
void check_audit(const dmt::DynamicModelTree& tree) {
  for (const auto& e : tree.audit_log()) {
    if (e.action == dmt::StructuralAction::none) continue;
    if (!(e.gain >= e.threshold)) {
      throw InvariantBreach("audit breach: " + dmt::to_string(e.action) + " at node " +
                            std::to_string(e.node_id) + " in batch " + std::to_string(e.batch) +
                            " with gain below threshold");
    }
  }
  if (const auto v = tree.decomposition_violations(); v != 0) {
    throw InvariantBreach("statistics decomposition violated for " + std::to_string(v) +
                          " candidates");
  }
}

int cmd_run(const RunArgs& a) {
  dmt::CsvOptions csv;
  csv.label_column = a.label;
  csv.shuffle = a.shuffle;
  csv.seed = a.seed;
  dmt::Dataset data = dmt::read_csv(a.stream, csv);
  if (a.unit_ranges) {
    // Generated streams are already in [0, 1]; skip the first-pass rescale.
    csv.normalization = dmt::Normalization::precomputed;
    csv.ranges.assign(data.schema.n_features(), dmt::FeatureRange{0.0, 1.0});
    data = dmt::read_csv(a.stream, csv);
  }
  dmt::BatchSpec spec;
  spec.batch_size = a.batch_size;
  spec.fraction = a.batch_frac;
  const auto batches = dmt::make_batches(data, spec);

  dmt::DmtConfig cfg;
  cfg.n_features = data.schema.n_features();
  cfg.n_classes = data.schema.n_classes;
  cfg.learning_rate = a.lr;
  cfg.epsilon = a.epsilon;
  if (a.candidate_cap > 0) cfg.candidate_cap = a.candidate_cap;
  cfg.replacement_fraction = a.replacement;
  if (a.max_depth >= 0) cfg.max_depth = static_cast<std::size_t>(a.max_depth);
  cfg.feature_kinds = data.schema.feature_kinds();
  cfg.execution = a.serial ? dmt::Execution::serial : dmt::Execution::parallel;
  cfg.validate();

  dmt::PrequentialOptions opts;
  opts.n_classes = cfg.n_classes;
  opts.averaging = dmt::parse_f1_averaging(a.averaging);
  opts.record_time = a.record_time;

  dmt::DmtLearner learner(cfg);
  const auto records = dmt::prequential_run(learner, batches, opts);
  check_audit(learner.tree());

  fs::create_directories(a.out);
  const std::string dir = a.out;
  dmt::export_records(dir + "/metrics.csv", records);
  const auto report = learner.tree().describe();
  dmt::write_tree_dump(dir + "/tree.json", report);
  dmt::write_file_atomic(dir + "/manifest.json",
                         manifest_json(a, data.schema, cfg, data.size(),
                                       spec.batch_size ? spec.batch_size
                                                       : spec.resolve(data.size()))
                                 .dump(2) +
                             "\n");

  const auto f1 = dmt::summarize(dmt::f1_series(records));
  const auto splits = dmt::summarize(dmt::splits_series(records));
  const auto params = dmt::summarize(dmt::parameters_series(records));
  char line[256];
  std::snprintf(line, sizeof line,
                "iterations=%zu f1=%.4f+-%.4f splits=%.2f parameters=%.2f", records.size(),
                f1.mean, f1.stddev, splits.mean, params.mean);
  std::cout << line << '\n';
  std::cout << "final " << dmt::tree_totals(report) << '\n';
  return kExitOk;
}

int cmd_inspect(const std::string& path, std::size_t top) {
  const auto report = dmt::read_tree_dump(path);
  std::cout << dmt::render_tree(report, top) << dmt::tree_totals(report) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic model trees for drifting data streams"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic drifting stream as CSV");
  g->add_option("--kind", gen.kind, "sea | agrawal | hyperplane")->capture_default_str();
  g->add_option("--n", gen.n, "Number of samples")->capture_default_str();
  g->add_option("--drifts", gen.drifts,
                "Comma-separated change points; a-b gives an incremental window");
  g->add_option("--noise", gen.noise, "Per-sample feature noise probability")
      ->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--features", gen.features, "Hyperplane dimension")->capture_default_str();
  g->add_option("--rotation", gen.rotation, "Hyperplane per-sample weight drift")
      ->capture_default_str();
  g->add_flag("--concept-ids", gen.concept_ids, "Append the concept id debug column");
  g->add_option("--out", gen.out)->capture_default_str();

  RunArgs run;
  auto* r = app.add_subcommand("run", "Prequential evaluation of a dynamic model tree");
  r->add_option("--stream", run.stream, "CSV stream")->required();
  r->add_option("--label", run.label, "Label column (default: last)");
  r->add_option("--batch-frac", run.batch_frac, "Batch size as a fraction of the rows")
      ->capture_default_str();
  r->add_option("--batch-size", run.batch_size, "Fixed batch size (overrides --batch-frac)");
  r->add_option("--lr", run.lr, "Learning rate")->capture_default_str();
  r->add_option("--epsilon", run.epsilon, "AIC confidence")->capture_default_str();
  r->add_option("--candidate-cap", run.candidate_cap, "Stored candidates per node (default 3m)");
  r->add_option("--replacement", run.replacement, "Candidate replacement fraction")
      ->capture_default_str();
  r->add_option("--max-depth", run.max_depth, "Maximum depth (0 = single GLM)");
  r->add_option("--seed", run.seed, "Shuffle seed")->capture_default_str();
  r->add_flag("--shuffle", run.shuffle, "Shuffle rows before streaming");
  r->add_flag("--unit-ranges", run.unit_ranges, "Treat features as already scaled to [0, 1]");
  r->add_option("--averaging", run.averaging, "standard | macro | micro")->capture_default_str();
  r->add_flag("--record-time", run.record_time, "Record wall-clock time per iteration");
  r->add_flag("--serial", run.serial, "Use the serial reference kernels");
  r->add_option("--out", run.out, "Output directory")->capture_default_str();

  std::string dump;
  std::size_t top = 3;
  auto* ins = app.add_subcommand("inspect", "Render a tree dump");
  ins->add_option("dump", dump, "tree.json written by run")->required();
  ins->add_option("--top", top, "Features listed per leaf")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen);
    if (r->parsed()) return cmd_run(run);
    return cmd_inspect(dump, top);
  } catch (const dmt::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvariantBreach& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const dmt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
