#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fairsan/data.hpp"
#include "fairsan/evaluators.hpp"
#include "fairsan/metrics.hpp"
#include "fairsan/training.hpp"

namespace fairsan {

/// Deployment scenarios: which of the train/test attribute and decision
/// blocks are original (O) and which are sanitized (barred).
///   baseline  train O/O   test O/O
///   s1        train S/S   test S/S    (complete data debiasing)
///   s2        train S/O   test S/O    (partial data debiasing)
///   s3        train S/S   test O/O    (fair classifier on original data)
///   s4        train O/O   test S/O    (local sanitization)
enum class Scenario { Baseline, S1, S2, S3, S4 };

std::string scenario_name(Scenario sc);
Scenario scenario_from_name(const std::string& s);
std::vector<Scenario> all_scenarios();

struct ScenarioData {
  EncodedMatrix train_features;  // plain attribute columns only
  std::vector<int> train_labels;
  EncodedMatrix test_features;
  std::vector<int> test_labels;
};

/// Builds the train/test composition for a scenario. Original matrices carry
/// S and Y; sanitized matrices carry the same records without S. Throws on a
/// record-id mismatch between original and sanitized fold data.
ScenarioData compose(Scenario sc, const EncodedMatrix& orig_train, const EncodedMatrix& orig_test,
                     const EncodedMatrix& san_train, const EncodedMatrix& san_test);

/// One metric observation; results.csv rows.
struct RunResult {
  int fold = 0;
  double alpha = 0.0;
  std::string scenario;    // baseline, s1..s4, protection, protection_baseline
  std::string classifier;  // probe family or "-" for dataset-level metrics
  std::string metric;
  double value = 0.0;
};

struct CvConfig {
  int folds = 10;
  std::vector<double> alphas;  // empty -> default sweep
  TrainConfig train;           // template; alpha and seed are set per cell
  ProbeConfig probes;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  std::vector<Scenario> scenarios = all_scenarios();
  std::filesystem::path out_dir;  // when set, checkpoints and manifests are persisted
};

/// The six-value geometric progression plus the endpoints 0 and 1.
std::vector<double> default_alpha_sweep();

/// Full protocol: for every (fold, alpha) train the sanitizer, pick the
/// epoch with heuristic_a, sanitize the splits, fit probes and emit every
/// metric row. Deterministic from the master seed; cells may run in
/// parallel with `jobs`.
std::vector<RunResult> run_cv(const Dataset& data, const Schema& schema, const CvConfig& config,
                              std::ostream* log = nullptr);

/// Training-only pass that persists the run directory (run_manifest.json,
/// fold_F/encoding_meta.json, fold_F/alpha_A/{manifest, trace, checkpoints}).
void run_training(const Dataset& data, const Schema& schema, const CvConfig& config,
                  std::ostream* log = nullptr);

/// Re-evaluates a persisted run directory: loads selected checkpoints and
/// recomputes metric rows for the requested scenarios.
std::vector<RunResult> evaluate_run(const std::filesystem::path& run_dir, const Dataset& data,
                                    const std::vector<Scenario>& scenarios,
                                    std::ostream* log = nullptr);

struct SummaryRow {
  double alpha = 0.0;
  std::string scenario;
  std::string classifier;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;  // sample std (N-1); 0 for a single fold
  int n = 0;
};

/// Mean and sample standard deviation across folds per
/// (alpha, scenario, classifier, metric).
std::vector<SummaryRow> aggregate(const std::vector<RunResult>& results);

void write_results_csv(const std::vector<RunResult>& results, const std::filesystem::path& path);
void write_results_json(const std::vector<RunResult>& results, const std::filesystem::path& path);
std::vector<RunResult> read_results_csv(const std::filesystem::path& path);
void write_summary_json(const std::vector<SummaryRow>& summary, const std::filesystem::path& path);

/// Cell directory under a run root, e.g. fold_3/alpha_0.9875.
std::filesystem::path cell_dir(const std::filesystem::path& run_dir, int fold, double alpha);

}  // namespace fairsan
