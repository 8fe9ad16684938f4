#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "fairsan/scenarios.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace fairsan;

namespace {

struct Fixture {
  Dataset data;
  Schema schema;
  EncodedMatrix train, test;
  EncodedMatrix san_train, san_test;
};

Fixture make_fixture(std::size_t n, std::uint64_t seed) {
  Fixture fx;
  fx.data = synthetic::leak_dataset(n, seed);
  fx.schema = synthetic::leak_schema();
  const auto [enc, meta] = preprocess(fx.data, fx.schema);
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < n; ++i) (i < n * 3 / 4 ? train_rows : test_rows).push_back(i);
  fx.train = select_rows(enc, train_rows);
  fx.test = select_rows(enc, test_rows);

  TrainConfig cfg;
  cfg.seed = seed;
  const Network net = make_sanitizer_network(enc.n_cols, cfg);
  fx.san_train = sanitize(net, fx.train, seed + 1);
  fx.san_test = sanitize(net, fx.test, seed + 2);
  return fx;
}

CvConfig tiny_cv_config(std::uint64_t master_seed) {
  CvConfig cfg;
  cfg.folds = 3;
  cfg.alphas = {0.0, 1.0};
  cfg.master_seed = master_seed;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 25;
  cfg.train.training_ratio = 3;
  cfg.train.sanitizer_lr = 1e-3;
  cfg.train.discriminator_lr = 1e-3;
  cfg.train.sanitizer_hidden = {16, 16};
  cfg.train.discriminator_hidden = {12, 12, 12, 12};
  cfg.train.trace_probes.mlp_epochs = 5;
  cfg.train.trace_probes.gb_rounds = 10;
  cfg.train.trace_probes.hinge_iterations = 50;
  cfg.probes.mlp_epochs = 10;
  cfg.probes.gb_rounds = 20;
  cfg.probes.hinge_iterations = 100;
  return cfg;
}

}  // namespace

TEST_CASE("compose: scenario table compositions are exact") {
  const Fixture fx = make_fixture(160, 3);
  const std::vector<int> y_train = binary_column(fx.train, fx.train.y_col);
  const std::vector<int> y_test = binary_column(fx.test, fx.test.y_col);
  const std::vector<int> ybar_train = binary_column(fx.san_train, fx.san_train.y_col);
  const std::vector<int> ybar_test = binary_column(fx.san_test, fx.san_test.y_col);
  const std::size_t d_plain = plain_columns(fx.train).size();

  const ScenarioData base =
      compose(Scenario::Baseline, fx.train, fx.test, fx.san_train, fx.san_test);
  CHECK(base.train_labels == y_train);
  CHECK(base.test_labels == y_test);
  CHECK(base.train_features.n_cols == d_plain);
  CHECK(base.train_features.at(0, 2) == fx.train.at(0, 2));  // original attributes

  const ScenarioData s1 = compose(Scenario::S1, fx.train, fx.test, fx.san_train, fx.san_test);
  CHECK(s1.train_labels == ybar_train);
  CHECK(s1.test_labels == ybar_test);
  CHECK(s1.train_features.at(0, 2) == fx.san_train.at(0, 2));  // sanitized attributes

  const ScenarioData s2 = compose(Scenario::S2, fx.train, fx.test, fx.san_train, fx.san_test);
  CHECK(s2.train_labels == y_train);  // original decision on both sides
  CHECK(s2.test_labels == y_test);
  CHECK(s2.train_features.at(0, 2) == fx.san_train.at(0, 2));

  const ScenarioData s3 = compose(Scenario::S3, fx.train, fx.test, fx.san_train, fx.san_test);
  CHECK(s3.train_labels == ybar_train);  // sanitized decision for training
  CHECK(s3.test_labels == y_test);       // original test side
  CHECK(s3.train_features.at(0, 2) == fx.san_train.at(0, 2));
  CHECK(s3.test_features.at(0, 2) == fx.test.at(0, 2));

  const ScenarioData s4 = compose(Scenario::S4, fx.train, fx.test, fx.san_train, fx.san_test);
  CHECK(s4.train_labels == y_train);
  CHECK(s4.test_labels == y_test);  // original decision against sanitized attributes
  CHECK(s4.train_features.at(0, 2) == fx.train.at(0, 2));
  CHECK(s4.test_features.at(0, 2) == fx.san_test.at(0, 2));
}

TEST_CASE("compose: features never include the sensitive or decision columns") {
  const Fixture fx = make_fixture(80, 4);
  for (Scenario sc : all_scenarios()) {
    const ScenarioData d = compose(sc, fx.train, fx.test, fx.san_train, fx.san_test);
    for (const std::string& name : d.train_features.column_names) {
      CHECK(name != "gender");
      CHECK(name != "outcome");
    }
    CHECK(d.train_features.n_cols == d.test_features.n_cols);
    CHECK(d.train_features.n_rows == d.train_labels.size());
  }
}

TEST_CASE("compose: mismatched fold records are fatal") {
  const Fixture fx = make_fixture(80, 5);
  const std::vector<std::size_t> subset = {0, 1, 2, 3};
  const EncodedMatrix wrong = select_rows(fx.san_train, subset);
  CHECK_THROWS_AS(compose(Scenario::S1, fx.train, fx.test, wrong, fx.san_test), DataError);
}

TEST_CASE("scenario names round-trip") {
  for (Scenario sc : all_scenarios()) {
    CHECK(scenario_from_name(scenario_name(sc)) == sc);
  }
  CHECK_THROWS_AS(scenario_from_name("s9"), UsageError);
}

TEST_CASE("default alpha sweep is the progression plus the endpoints") {
  const std::vector<double> alphas = default_alpha_sweep();
  REQUIRE(alphas.size() == 8);
  CHECK(alphas.front() == 0.0);
  CHECK(alphas[1] == 0.6);
  CHECK(alphas[6] == 0.9875);
  CHECK(alphas.back() == 1.0);
}

TEST_CASE("run_cv: row inventory, ranges, baseline alpha-independence, leakage") {
  const Dataset data = synthetic::leak_dataset(150, 21);
  const Schema schema = synthetic::leak_schema();
  const CvConfig cfg = tiny_cv_config(777);
  const std::vector<RunResult> rows = run_cv(data, schema, cfg);

  // guaranteed rows per (fold, alpha): yacc and demo_parity for
  // 5 scenarios x 3 families, 11 protection rows, 7 protection_baseline rows
  std::size_t yacc = 0, dp = 0, eq = 0, prot = 0, prot_base = 0;
  for (const RunResult& r : rows) {
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
    CHECK((r.fold >= 0 && r.fold < 3));
    if (r.metric == "yacc") ++yacc;
    if (r.metric == "demo_parity") ++dp;
    if (r.metric.rfind("eq_odd_gap", 0) == 0) ++eq;
    if (r.scenario == "protection") ++prot;
    if (r.scenario == "protection_baseline") ++prot_base;
  }
  const std::size_t cells = 3 * 2;
  CHECK(yacc == cells * 15);
  CHECK(dp == cells * 15);
  CHECK(eq <= cells * 30);  // undefined gaps are skipped, never invented
  CHECK(prot == cells * 11);
  CHECK(prot_base == cells * 7);
  CHECK(rows.size() == yacc + dp + eq + prot + prot_base);

  // baseline rows are exactly replicated across the alpha sweep
  std::map<std::tuple<int, std::string, std::string, std::string>, std::set<double>> baseline_vals;
  for (const RunResult& r : rows) {
    if (r.scenario == "baseline" || r.scenario == "protection_baseline") {
      baseline_vals[{r.fold, r.scenario, r.classifier, r.metric}].insert(r.value);
    }
  }
  CHECK(baseline_vals.size() == 3u * (12u + 7u));
  for (const auto& [key, vals] : baseline_vals) CHECK(vals.size() == 1);
}

TEST_CASE("run_cv: deterministic and byte-identical results.csv from the master seed") {
  const Dataset data = synthetic::leak_dataset(120, 9);
  const Schema schema = synthetic::leak_schema();
  const CvConfig cfg = tiny_cv_config(4242);

  const auto dir = std::filesystem::temp_directory_path() / "fairsan_cv_det";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  const std::vector<RunResult> a = run_cv(data, schema, cfg);
  write_results_csv(a, dir / "a.csv");
  const std::vector<RunResult> b = run_cv(data, schema, cfg);
  write_results_csv(b, dir / "b.csv");

  std::ifstream fa(dir / "a.csv"), fb(dir / "b.csv");
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(!sa.str().empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_cv: parallel jobs produce the same rows as a serial run") {
  const Dataset data = synthetic::leak_dataset(120, 10);
  const Schema schema = synthetic::leak_schema();
  CvConfig cfg = tiny_cv_config(5151);
  const std::vector<RunResult> serial = run_cv(data, schema, cfg);
  cfg.jobs = 4;
  const std::vector<RunResult> parallel = run_cv(data, schema, cfg);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].value == parallel[i].value);
    CHECK(serial[i].scenario == parallel[i].scenario);
  }
}

TEST_CASE("run_cv: persisted run directory reloads and re-evaluates identically") {
  const Dataset data = synthetic::leak_dataset(120, 11);
  const Schema schema = synthetic::leak_schema();
  CvConfig cfg = tiny_cv_config(6161);
  const auto dir = std::filesystem::temp_directory_path() / "fairsan_cv_rundir";
  std::filesystem::remove_all(dir);
  cfg.out_dir = dir;

  const std::vector<RunResult> direct = run_cv(data, schema, cfg);
  CHECK(std::filesystem::exists(dir / "run_manifest.json"));
  CHECK(std::filesystem::exists(dir / "fold_0" / "encoding_meta.json"));
  CHECK(std::filesystem::exists(cell_dir(dir, 0, 0.0) / "trace.csv"));
  CHECK(std::filesystem::exists(cell_dir(dir, 2, 1.0) / "epoch_001.ckpt"));

  const std::vector<RunResult> reloaded = evaluate_run(dir, data, cfg.scenarios);
  REQUIRE(direct.size() == reloaded.size());
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(direct[i].value == reloaded[i].value);
    CHECK(direct[i].metric == reloaded[i].metric);
  }

  // a different dataset must be rejected
  const Dataset other = synthetic::leak_dataset(121, 11);
  CHECK_THROWS_AS(evaluate_run(dir, other, cfg.scenarios), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_cv: scenario filter restricts the rows") {
  const Dataset data = synthetic::leak_dataset(120, 12);
  const Schema schema = synthetic::leak_schema();
  CvConfig cfg = tiny_cv_config(7171);
  cfg.scenarios = {Scenario::Baseline};
  const std::vector<RunResult> rows = run_cv(data, schema, cfg);
  for (const RunResult& r : rows) {
    CHECK((r.scenario == "baseline" || r.scenario == "protection_baseline"));
  }
  // alpha-independent rows only: identical values across the sweep
  std::map<std::tuple<int, std::string, std::string, std::string>, std::set<double>> vals;
  for (const RunResult& r : rows) {
    vals[{r.fold, r.scenario, r.classifier, r.metric}].insert(r.value);
  }
  for (const auto& [key, vs] : vals) CHECK(vs.size() == 1);
}

TEST_CASE("no leakage: encoding statistics come from the training blocks only") {
  // fold ranges are seeded; verify via the persisted encoding meta that the
  // numeric min/max match a recomputation on the train indices alone
  const Dataset data = synthetic::leak_dataset(120, 13);
  const Schema schema = synthetic::leak_schema();
  const FoldAssignment fa = split_folds(data.n_rows(), 3, derive_seed(8282, "folds"));
  CvConfig cfg = tiny_cv_config(8282);
  const auto dir = std::filesystem::temp_directory_path() / "fairsan_cv_leak";
  std::filesystem::remove_all(dir);
  cfg.out_dir = dir;
  run_training(data, schema, cfg);

  for (int f = 0; f < 3; ++f) {
    const EncodingMeta meta =
        EncodingMeta::load(dir / ("fold_" + std::to_string(f)) / "encoding_meta.json");
    const EncodingMeta expect = fit_encoding(data, schema, fa.train_indices(f));
    for (std::size_t c = 0; c < meta.columns.size(); ++c) {
      if (meta.columns[c].spec.kind == ColumnKind::Numeric) {
        CHECK(meta.columns[c].min == expect.columns[c].min);
        CHECK(meta.columns[c].max == expect.columns[c].max);
      }
    }
    // train/validation/test index sets are pairwise disjoint
    std::set<std::size_t> seen;
    for (std::size_t i : fa.train_indices(f)) CHECK(seen.insert(i).second);
    for (std::size_t i : fa.validation_indices(f)) CHECK(seen.insert(i).second);
    for (std::size_t i : fa.test_indices(f)) CHECK(seen.insert(i).second);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("aggregate: mean and sample standard deviation across folds") {
  std::vector<RunResult> rows;
  rows.push_back({0, 0.5, "s1", "mlp", "yacc", 0.1});
  rows.push_back({1, 0.5, "s1", "mlp", "yacc", 0.3});
  rows.push_back({0, 0.5, "s1", "mlp", "demo_parity", 0.2});
  const std::vector<SummaryRow> summary = aggregate(rows);
  REQUIRE(summary.size() == 2);
  const SummaryRow* yacc = nullptr;
  const SummaryRow* dp = nullptr;
  for (const SummaryRow& s : summary) {
    if (s.metric == "yacc") yacc = &s;
    if (s.metric == "demo_parity") dp = &s;
  }
  REQUIRE(yacc != nullptr);
  CHECK(yacc->mean == doctest::Approx(0.2));
  CHECK(yacc->stddev == doctest::Approx(std::sqrt(0.02)));  // ~0.1414
  CHECK(yacc->n == 2);
  REQUIRE(dp != nullptr);
  CHECK(dp->stddev == 0.0);  // single fold reports std 0
  CHECK(dp->n == 1);
}

TEST_CASE("aggregate matches a brute-force recomputation over raw rows") {
  Rng rng(31337);
  std::vector<RunResult> rows;
  const char* metrics[] = {"yacc", "ber"};
  for (int fold = 0; fold < 7; ++fold) {
    for (double alpha : {0.0, 0.5}) {
      for (const char* m : metrics) {
        rows.push_back({fold, alpha, "s2", "gb_stumps", m, rng.uniform()});
      }
    }
  }
  const std::vector<SummaryRow> summary = aggregate(rows);
  for (const SummaryRow& s : summary) {
    double mean = 0.0;
    int n = 0;
    for (const RunResult& r : rows) {
      if (r.alpha == s.alpha && r.metric == s.metric) {
        mean += r.value;
        ++n;
      }
    }
    mean /= n;
    double ss = 0.0;
    for (const RunResult& r : rows) {
      if (r.alpha == s.alpha && r.metric == s.metric) ss += (r.value - mean) * (r.value - mean);
    }
    CHECK(s.n == n);
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.stddev == doctest::Approx(std::sqrt(ss / (n - 1))).epsilon(1e-12));
  }
}

TEST_CASE("results csv round-trip and schema check") {
  const auto path = std::filesystem::temp_directory_path() / "fairsan_results_rt.csv";
  std::vector<RunResult> rows;
  rows.push_back({0, 0.9875, "s1", "mlp", "yacc", 0.875});
  rows.push_back({1, 0.0, "protection", "-", "fid", 0.5});
  write_results_csv(rows, path);
  const std::vector<RunResult> redo = read_results_csv(path);
  REQUIRE(redo.size() == 2);
  CHECK(redo[0].alpha == 0.9875);
  CHECK(redo[0].value == 0.875);
  CHECK(redo[1].classifier == "-");
  std::filesystem::remove(path);
}
