// fairsan: learn a local sanitizer that hides a sensitive attribute, apply
// it to tabular data, and evaluate the fairness/utility trade-off.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairsan/scenarios.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace fairsan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

fs::path default_out_root() {
  const char* env = std::getenv("FAIRSAN_OUT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("fairsan_runs");
}

struct CommonTrainFlags {
  std::vector<double> alphas;
  int sweep = 0;
  int epochs = 40;
  std::uint64_t seed = 0;
  int folds = 10;
  std::size_t batch = 100;
  int ratio = 50;
  std::size_t noise_dim = 3;
  std::string noise_dist = "uniform";
  double san_lr = 2e-4;
  double disc_lr = 2e-4;
  std::vector<std::size_t> san_hidden = {64, 64};
  std::vector<std::size_t> disc_hidden = {32, 32, 32, 32};
  int jobs = 1;
  bool literal_disc_head = false;
};

nlohmann::ordered_json read_manifest(const fs::path& run_dir) {
  std::ifstream is(run_dir / "run_manifest.json");
  if (!is) throw DataError("not a run directory (missing run_manifest.json): " + run_dir.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return nlohmann::ordered_json::parse(ss.str());
}

int cmd_schema(const std::string& input, const SchemaOverrides& overrides,
               const std::string& out, char delimiter) {
  const Dataset data = read_csv(input, delimiter);
  const Schema schema = infer_schema(data, overrides);
  schema.save(out);
  std::cout << "wrote " << out << "\n";
  for (const ColumnSpec& c : schema.columns) {
    std::cout << "  " << c.name << ": " << kind_name(c.kind);
    if (c.role != ColumnRole::Plain) std::cout << " [" << role_name(c.role) << "]";
    if (schema.is_log_column(c.name)) std::cout << " (log)";
    std::cout << "\n";
  }
  std::cout << data.n_rows() << " records retained\n";
  return kExitOk;
}

int cmd_train(const std::string& input, const std::string& schema_path, const fs::path& out,
              const CommonTrainFlags& flags, char delimiter, bool verbose) {
  const Dataset data = read_csv(input, delimiter);
  const Schema schema = Schema::load(schema_path);

  CvConfig cfg;
  cfg.folds = flags.folds;
  if (!flags.alphas.empty() && flags.sweep > 0) {
    throw UsageError("--alpha and --sweep are mutually exclusive");
  }
  if (flags.sweep > 0) {
    cfg.alphas = alpha_progression(flags.sweep);
  } else {
    cfg.alphas = flags.alphas;  // empty -> default sweep (progression + endpoints)
  }
  cfg.master_seed = flags.seed;
  cfg.jobs = flags.jobs;
  cfg.out_dir = out;
  cfg.train.epochs = flags.epochs;
  cfg.train.batch_size = flags.batch;
  cfg.train.training_ratio = flags.ratio;
  cfg.train.noise.dim = flags.noise_dim;
  cfg.train.noise.distribution = noise_distribution_from_name(flags.noise_dist);
  cfg.train.sanitizer_lr = flags.san_lr;
  cfg.train.discriminator_lr = flags.disc_lr;
  cfg.train.sanitizer_hidden = flags.san_hidden;
  cfg.train.discriminator_hidden = flags.disc_hidden;
  cfg.train.literal_disc_head = flags.literal_disc_head;
  cfg.train.validate();

  run_training(data, schema, cfg, verbose ? &std::cerr : nullptr);
  std::cout << "wrote run directory " << out.string() << "\n";
  return kExitOk;
}

int cmd_sanitize(const fs::path& run_dir, const std::string& input, const std::string& out,
                 int fold, double alpha_flag, int epoch_flag, std::uint64_t noise_seed,
                 char delimiter) {
  const nlohmann::ordered_json manifest = read_manifest(run_dir);
  const Schema schema = Schema::from_json_string(manifest.at("schema").dump());
  const std::vector<double> alphas = manifest.at("alphas").get<std::vector<double>>();
  const TrainConfig train_cfg = TrainConfig::from_json_string(manifest.at("train").dump());

  double alpha = alpha_flag;
  if (std::isnan(alpha)) {
    if (alphas.size() != 1) {
      throw UsageError("run has " + std::to_string(alphas.size()) +
                       " alpha values; pick one with --alpha");
    }
    alpha = alphas.front();
  }
  const fs::path cell = cell_dir(run_dir, fold, alpha);
  if (!fs::exists(cell)) throw DataError("no checkpoints for this cell: " + cell.string());
  const int epoch = epoch_flag >= 0 ? epoch_flag : load_selected_epoch(cell);
  const Network sanitizer = load_epoch_checkpoint(cell, epoch);

  const EncodingMeta meta =
      EncodingMeta::load(run_dir / ("fold_" + std::to_string(fold)) / "encoding_meta.json");
  const Dataset data = read_csv(input, delimiter);
  const EncodedMatrix enc = apply_encoding(data, schema, meta);
  const EncodedMatrix san = sanitize(sanitizer, enc, noise_seed, train_cfg.noise.distribution);
  const Dataset decoded = postprocess(san, meta);
  write_csv(decoded, out, delimiter);
  std::cout << "wrote " << out << " (" << decoded.n_rows() << " records, epoch " << epoch
            << ")\n";
  return kExitOk;
}

int cmd_evaluate(const fs::path& run_dir, const std::string& input,
                 const std::string& scenarios_flag, const fs::path& out, char delimiter,
                 bool verbose) {
  std::vector<Scenario> scenarios;
  if (scenarios_flag.empty() || scenarios_flag == "all") {
    scenarios = all_scenarios();
  } else {
    std::stringstream ss(scenarios_flag);
    std::string token;
    std::set<std::string> seen;
    while (std::getline(ss, token, ',')) {
      if (token.empty() || !seen.insert(token).second) continue;
      scenarios.push_back(scenario_from_name(token));
    }
    if (scenarios.empty()) throw UsageError("no scenarios selected");
  }
  const Dataset data = read_csv(input, delimiter);
  const std::vector<RunResult> rows =
      evaluate_run(run_dir, data, scenarios, verbose ? &std::cerr : nullptr);
  fs::create_directories(out);
  write_results_csv(rows, out / "results.csv");
  write_results_json(rows, out / "results.json");
  write_summary_json(aggregate(rows), out / "summary.json");
  std::cout << "wrote " << (out / "results.csv").string() << " (" << rows.size()
            << " rows) and " << (out / "summary.json").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairsan: adversarially trained local sanitizer for tabular data"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log per-epoch training metrics to stderr");

  // schema
  auto* sc_schema = app.add_subcommand("schema", "infer a column schema from a csv");
  std::string in_csv, out_schema = "schema.json";
  SchemaOverrides overrides;
  char delimiter = ',';
  sc_schema->add_option("input", in_csv, "input csv")->required();
  sc_schema->add_option("--sensitive", overrides.sensitive, "sensitive column name")->required();
  sc_schema->add_option("--decision", overrides.decision, "decision column name")->required();
  sc_schema->add_option("--out", out_schema, "output schema path");
  sc_schema->add_option("--delimiter", delimiter, "field delimiter");
  sc_schema->add_option("--categorical-threshold", overrides.categorical_threshold,
                        "numeric columns with fewer distinct values become categorical");
  sc_schema->add_option("--log-column", overrides.log_columns,
                        "numeric column to transform with ln(1+x)");
  sc_schema->add_option("--numeric", overrides.force_numeric, "force a column to numeric");
  sc_schema->add_option("--categorical", overrides.force_categorical,
                        "force a column to categorical");

  // train
  auto* sc_train = app.add_subcommand("train", "train sanitizers over the fold/alpha grid");
  std::string schema_path;
  fs::path out_dir = default_out_root() / "run";
  CommonTrainFlags tf;
  sc_train->add_option("input", in_csv, "input csv")->required();
  sc_train->add_option("--schema", schema_path, "schema json")->required();
  sc_train->add_option("--out", out_dir, "run directory (default $FAIRSAN_OUT/run)");
  sc_train->add_option("--alpha", tf.alphas, "trade-off weight(s) in [0,1]; repeatable");
  sc_train->add_option("--sweep", tf.sweep, "train the first N progression alphas");
  sc_train->add_option("--epochs", tf.epochs, "epochs per cell");
  sc_train->add_option("--seed", tf.seed, "master seed");
  sc_train->add_option("--folds", tf.folds, "cross-validation folds");
  sc_train->add_option("--batch", tf.batch, "batch size");
  sc_train->add_option("--ratio", tf.ratio, "discriminator steps per sanitizer step");
  sc_train->add_option("--noise-dim", tf.noise_dim, "noise inputs appended to the sanitizer");
  sc_train->add_option("--noise-dist", tf.noise_dist, "noise distribution: uniform or gaussian");
  sc_train->add_option("--san-lr", tf.san_lr, "sanitizer learning rate");
  sc_train->add_option("--disc-lr", tf.disc_lr, "discriminator learning rate");
  sc_train->add_option("--san-hidden", tf.san_hidden, "sanitizer hidden widths");
  sc_train->add_option("--disc-hidden", tf.disc_hidden, "discriminator hidden widths");
  sc_train->add_option("--jobs", tf.jobs, "parallel (fold, alpha) cells");
  sc_train->add_flag("--literal-disc-head", tf.literal_disc_head,
                     "LeakyReLU discriminator head instead of sigmoid");
  sc_train->add_option("--delimiter", delimiter, "field delimiter");

  // sanitize
  auto* sc_san = app.add_subcommand("sanitize", "apply a trained sanitizer to a csv");
  fs::path run_dir;
  std::string out_csv = "sanitized.csv";
  int fold = 0;
  double alpha_flag = std::numeric_limits<double>::quiet_NaN();
  int epoch_flag = -1;
  std::uint64_t noise_seed = 0;
  sc_san->add_option("run_dir", run_dir, "training run directory")->required();
  sc_san->add_option("input", in_csv, "input csv (original attribute space, including S)")
      ->required();
  sc_san->add_option("--out", out_csv, "output csv");
  sc_san->add_option("--fold", fold, "fold whose sanitizer to use");
  sc_san->add_option("--alpha", alpha_flag, "alpha cell to use (required for multi-alpha runs)");
  sc_san->add_option("--epoch", epoch_flag, "checkpoint epoch (default: heuristic selection)");
  sc_san->add_option("--noise-seed", noise_seed, "noise seed (sanitization is deterministic)");
  sc_san->add_option("--delimiter", delimiter, "field delimiter");

  // evaluate
  auto* sc_eval = app.add_subcommand("evaluate", "compute the metric tables for a run");
  std::string scenarios_flag = "all";
  fs::path eval_out;
  sc_eval->add_option("run_dir", run_dir, "training run directory")->required();
  sc_eval->add_option("input", in_csv, "the csv the run was trained on")->required();
  sc_eval->add_option("--scenarios", scenarios_flag,
                      "comma list of baseline,s1,s2,s3,s4 (default all)");
  sc_eval->add_option("--out", eval_out, "output directory (default: the run directory)");
  sc_eval->add_option("--delimiter", delimiter, "field delimiter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (sc_schema->parsed()) return cmd_schema(in_csv, overrides, out_schema, delimiter);
    if (sc_train->parsed()) {
      return cmd_train(in_csv, schema_path, out_dir, tf, delimiter, verbose);
    }
    if (sc_san->parsed()) {
      return cmd_sanitize(run_dir, in_csv, out_csv, fold, alpha_flag, epoch_flag, noise_seed,
                          delimiter);
    }
    if (sc_eval->parsed()) {
      return cmd_evaluate(run_dir, in_csv, scenarios_flag,
                          eval_out.empty() ? run_dir : eval_out, delimiter, verbose);
    }
    std::cerr << "usage error: no subcommand\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
}
