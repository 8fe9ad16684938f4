#include "fairsan/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "json_util.hpp"

namespace fairsan {

using ordered_json = nlohmann::ordered_json;

std::string scenario_name(Scenario sc) {
  switch (sc) {
    case Scenario::Baseline: return "baseline";
    case Scenario::S1: return "s1";
    case Scenario::S2: return "s2";
    case Scenario::S3: return "s3";
    case Scenario::S4: return "s4";
  }
  throw UsageError("unknown scenario");
}

Scenario scenario_from_name(const std::string& s) {
  if (s == "baseline") return Scenario::Baseline;
  if (s == "s1") return Scenario::S1;
  if (s == "s2") return Scenario::S2;
  if (s == "s3") return Scenario::S3;
  if (s == "s4") return Scenario::S4;
  throw UsageError("unknown scenario: " + s);
}

std::vector<Scenario> all_scenarios() {
  return {Scenario::Baseline, Scenario::S1, Scenario::S2, Scenario::S3, Scenario::S4};
}

std::vector<double> default_alpha_sweep() {
  std::vector<double> alphas = {0.0};
  const std::vector<double> prog = alpha_progression(6);
  alphas.insert(alphas.end(), prog.begin(), prog.end());
  alphas.push_back(1.0);
  return alphas;
}

namespace {

EncodedMatrix features_from_original(const EncodedMatrix& m) {
  return select_columns(m, plain_columns(m));
}

EncodedMatrix features_from_sanitized(const EncodedMatrix& m) {
  if (m.y_col < 0) throw UsageError("sanitized matrix lacks the decision column");
  return drop_column(m, static_cast<std::size_t>(m.y_col));
}

void check_fold_match(const EncodedMatrix& orig, const EncodedMatrix& san, const char* what) {
  if (orig.n_rows != san.n_rows || orig.record_ids != san.record_ids) {
    throw DataError(std::string("fold mismatch: sanitized ") + what +
                    " does not cover the same records as the original split");
  }
}

}  // namespace

ScenarioData compose(Scenario sc, const EncodedMatrix& orig_train, const EncodedMatrix& orig_test,
                     const EncodedMatrix& san_train, const EncodedMatrix& san_test) {
  const bool needs_san_train = sc == Scenario::S1 || sc == Scenario::S2 || sc == Scenario::S3;
  const bool needs_san_test = sc == Scenario::S1 || sc == Scenario::S2 || sc == Scenario::S4;
  if (needs_san_train) check_fold_match(orig_train, san_train, "train set");
  if (needs_san_test) check_fold_match(orig_test, san_test, "test set");

  ScenarioData d;
  switch (sc) {
    case Scenario::Baseline:
      d.train_features = features_from_original(orig_train);
      d.train_labels = binary_column(orig_train, orig_train.y_col);
      d.test_features = features_from_original(orig_test);
      d.test_labels = binary_column(orig_test, orig_test.y_col);
      break;
    case Scenario::S1:  // sanitized attributes and decisions on both sides
      d.train_features = features_from_sanitized(san_train);
      d.train_labels = binary_column(san_train, san_train.y_col);
      d.test_features = features_from_sanitized(san_test);
      d.test_labels = binary_column(san_test, san_test.y_col);
      break;
    case Scenario::S2:  // sanitized attributes, original decision
      d.train_features = features_from_sanitized(san_train);
      d.train_labels = binary_column(orig_train, orig_train.y_col);
      d.test_features = features_from_sanitized(san_test);
      d.test_labels = binary_column(orig_test, orig_test.y_col);
      break;
    case Scenario::S3:  // fair classifier: sanitized train, original test
      d.train_features = features_from_sanitized(san_train);
      d.train_labels = binary_column(san_train, san_train.y_col);
      d.test_features = features_from_original(orig_test);
      d.test_labels = binary_column(orig_test, orig_test.y_col);
      break;
    case Scenario::S4:  // local sanitization: original train, sanitized test
      d.train_features = features_from_original(orig_train);
      d.train_labels = binary_column(orig_train, orig_train.y_col);
      d.test_features = features_from_sanitized(san_test);
      d.test_labels = binary_column(orig_test, orig_test.y_col);
      break;
  }
  // The two feature layouts (original minus {S, Y} and sanitized minus Y)
  // describe the same columns; align the names so probes accept both sides.
  if (d.train_features.n_cols != d.test_features.n_cols) {
    throw DataError("compose: train/test feature width mismatch");
  }
  d.test_features.column_names = d.train_features.column_names;
  return d;
}

namespace {

struct FoldData {
  int fold = 0;
  EncodingMeta meta;
  EncodedMatrix train;
  EncodedMatrix validation;
  EncodedMatrix test;
};

FoldData prepare_fold(const Dataset& data, const Schema& schema, const FoldAssignment& fa,
                      int fold) {
  FoldData fd;
  fd.fold = fold;
  const std::vector<std::size_t> train_rows = fa.train_indices(fold);
  fd.meta = fit_encoding(data, schema, train_rows);
  const EncodedMatrix full = apply_encoding(data, schema, fd.meta);
  fd.train = select_rows(full, train_rows);
  fd.validation = select_rows(full, fa.validation_indices(fold));
  fd.test = select_rows(full, fa.test_indices(fold));
  return fd;
}

FoldData load_fold(const Dataset& data, const Schema& schema, const FoldAssignment& fa, int fold,
                   const std::filesystem::path& run_dir) {
  FoldData fd;
  fd.fold = fold;
  fd.meta = EncodingMeta::load(run_dir / ("fold_" + std::to_string(fold)) / "encoding_meta.json");
  const EncodedMatrix full = apply_encoding(data, schema, fd.meta);
  fd.train = select_rows(full, fa.train_indices(fold));
  fd.validation = select_rows(full, fa.validation_indices(fold));
  fd.test = select_rows(full, fa.test_indices(fold));
  return fd;
}

void emit(std::vector<RunResult>& out, int fold, double alpha, const std::string& scenario,
          const std::string& classifier, const std::string& metric, double value) {
  if (!std::isfinite(value) || value < -1e-12 || value > 1.0 + 1e-12) {
    throw DataError("metric out of range: " + scenario + "/" + classifier + "/" + metric + " = " +
                    std::to_string(value));
  }
  out.push_back({fold, alpha, scenario, classifier, metric, std::clamp(value, 0.0, 1.0)});
}

/// Fits a probe and predicts on the test block. A heavily sanitized decision
/// column can collapse to a single class (observed at alpha near 1), in
/// which case the honest model is the constant predictor.
std::vector<int> probe_predictions(ProbeFamily family, const EncodedMatrix& train_x,
                                   const std::vector<int>& train_y, const EncodedMatrix& test_x,
                                   std::uint64_t seed, const ProbeConfig& probes) {
  std::size_t count[2] = {0, 0};
  for (int y : train_y) count[y] += 1;
  if (count[0] < 2 || count[1] < 2) {
    const int majority = count[1] > count[0] ? 1 : 0;
    return std::vector<int>(test_x.n_rows, majority);
  }
  const Classifier clf = Classifier::fit(family, train_x, train_y, seed, probes);
  return clf.predict(test_x);
}

void scenario_rows(std::vector<RunResult>& out, Scenario sc, const FoldData& fd,
                   const EncodedMatrix& san_train, const EncodedMatrix& san_test, double alpha,
                   const ProbeConfig& probes,
                   const std::function<std::uint64_t(const std::string&)>& seed_for) {
  const ScenarioData d = compose(sc, fd.train, fd.test, san_train, san_test);
  const std::vector<int> s_test = binary_column(fd.test, fd.test.s_col);
  const std::string name = scenario_name(sc);
  for (ProbeFamily family : kAllFamilies) {
    const std::vector<int> pred =
        probe_predictions(family, d.train_features, d.train_labels, d.test_features,
                          seed_for("probe_" + name + "_" + family_name(family)), probes);
    const std::string fam = family_name(family);
    emit(out, fd.fold, alpha, name, fam, "yacc", accuracy(pred, d.test_labels));
    emit(out, fd.fold, alpha, name, fam, "demo_parity", demo_parity(pred, s_test));
    for (int outcome : {1, 0}) {
      // A collapsed sanitized decision can empty a conditional cell; the gap
      // is undefined there and the row is simply not emitted.
      try {
        emit(out, fd.fold, alpha, name, fam, "eq_odd_gap_" + std::to_string(outcome),
             eq_odd_gap(pred, d.test_labels, s_test, outcome));
      } catch (const DataError&) {
      }
    }
  }
}

/// Protection metrics on sanitized data: adversaries fit on the sanitized
/// train split to recover S, scored on the sanitized test split; plus
/// dataset-level fidelity/diversity/decision-shift.
void protection_rows(std::vector<RunResult>& out, const FoldData& fd,
                     const EncodedMatrix& san_train, const EncodedMatrix& san_val,
                     const EncodedMatrix& san_test, double alpha, const ProbeConfig& probes,
                     const std::function<std::uint64_t(const std::string&)>& seed_for) {
  const std::vector<int> s_train = binary_column(fd.train, fd.train.s_col);
  const std::vector<int> s_test = binary_column(fd.test, fd.test.s_col);
  for (ProbeFamily family : kAllFamilies) {
    const Classifier clf = Classifier::fit(family, san_train, s_train,
                                           seed_for("probe_protection_" + family_name(family)),
                                           probes);
    const std::vector<int> pred = clf.predict(san_test);
    const std::string fam = family_name(family);
    emit(out, fd.fold, alpha, "protection", fam, "ber", ber(pred, s_test));
    emit(out, fd.fold, alpha, "protection", fam, "sacc", s_acc(pred, s_test));
  }
  emit(out, fd.fold, alpha, "protection", "-", "fid",
       fidelity(drop_column(fd.test, fd.test.s_col), san_test));
  emit(out, fd.fold, alpha, "protection", "-", "diversity", diversity(san_test));

  // decision shift over the whole sanitized set (train + validation + test)
  std::vector<int> y_orig, y_san, s_all;
  auto append = [&](const EncodedMatrix& orig, const EncodedMatrix& san) {
    const std::vector<int> yo = binary_column(orig, orig.y_col);
    const std::vector<int> ys = binary_column(san, san.y_col);
    const std::vector<int> so = binary_column(orig, orig.s_col);
    y_orig.insert(y_orig.end(), yo.begin(), yo.end());
    y_san.insert(y_san.end(), ys.begin(), ys.end());
    s_all.insert(s_all.end(), so.begin(), so.end());
  };
  append(fd.train, san_train);
  append(fd.validation, san_val);
  append(fd.test, san_test);
  const DecisionShift shift = decision_shift_by_group(y_orig, y_san, s_all);
  emit(out, fd.fold, alpha, "protection", "-", "decision_shift", shift.overall);
  emit(out, fd.fold, alpha, "protection", "-", "decision_shift_s0", shift.group0);
  emit(out, fd.fold, alpha, "protection", "-", "decision_shift_s1", shift.group1);
}

/// Alpha-independent reference rows on the original data: scenario-baseline
/// utility metrics plus adversary strength (protection_baseline).
std::vector<RunResult> baseline_rows(const FoldData& fd, std::uint64_t master_seed,
                                     const ProbeConfig& probes) {
  std::vector<RunResult> out;
  const EncodedMatrix empty;
  auto seed_for = [&](const std::string& purpose) {
    return derive_seed(master_seed, static_cast<std::uint64_t>(fd.fold), 0, "baseline_" + purpose);
  };
  scenario_rows(out, Scenario::Baseline, fd, empty, empty, 0.0, probes, seed_for);

  const std::vector<int> s_train = binary_column(fd.train, fd.train.s_col);
  const std::vector<int> s_test = binary_column(fd.test, fd.test.s_col);
  const EncodedMatrix raw_train = drop_column(fd.train, fd.train.s_col);
  const EncodedMatrix raw_test = drop_column(fd.test, fd.test.s_col);
  for (ProbeFamily family : kAllFamilies) {
    const Classifier clf = Classifier::fit(family, raw_train, s_train,
                                           seed_for("probe_protection_" + family_name(family)),
                                           probes);
    const std::vector<int> pred = clf.predict(raw_test);
    const std::string fam = family_name(family);
    emit(out, fd.fold, 0.0, "protection_baseline", fam, "ber", ber(pred, s_test));
    emit(out, fd.fold, 0.0, "protection_baseline", fam, "sacc", s_acc(pred, s_test));
  }
  emit(out, fd.fold, 0.0, "protection_baseline", "-", "diversity", diversity(raw_test));
  return out;
}

std::vector<RunResult> evaluate_cell(const FoldData& fd, const Network& sanitizer, int fold,
                                     std::size_t alpha_index, double alpha, const CvConfig& cfg) {
  auto seed_for = [&](const std::string& purpose) {
    return derive_seed(cfg.master_seed, static_cast<std::uint64_t>(fold), alpha_index, purpose);
  };
  std::vector<RunResult> rows;
  const bool any_sanitized =
      std::any_of(cfg.scenarios.begin(), cfg.scenarios.end(),
                  [](Scenario sc) { return sc != Scenario::Baseline; });
  if (!any_sanitized) return rows;

  const NoiseDistribution noise = cfg.train.noise.distribution;
  const EncodedMatrix san_train = sanitize(sanitizer, fd.train, seed_for("sanitize_train"), noise);
  const EncodedMatrix san_val =
      sanitize(sanitizer, fd.validation, seed_for("sanitize_validation"), noise);
  const EncodedMatrix san_test = sanitize(sanitizer, fd.test, seed_for("sanitize_test"), noise);

  protection_rows(rows, fd, san_train, san_val, san_test, alpha, cfg.probes, seed_for);
  for (Scenario sc : cfg.scenarios) {
    if (sc == Scenario::Baseline) continue;
    scenario_rows(rows, sc, fd, san_train, san_test, alpha, cfg.probes, seed_for);
  }
  return rows;
}

void sort_rows(std::vector<RunResult>& rows) {
  std::sort(rows.begin(), rows.end(), [](const RunResult& a, const RunResult& b) {
    return std::tie(a.fold, a.alpha, a.scenario, a.classifier, a.metric) <
           std::tie(b.fold, b.alpha, b.scenario, b.classifier, b.metric);
  });
}

template <typename Fn>
auto with_context(const std::string& ctx, Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    throw UsageError(e.what() + ctx);
  } catch (const DivergenceError& e) {
    throw DivergenceError(e.what() + ctx);
  } catch (const DataError& e) {
    throw DataError(e.what() + ctx);
  } catch (const std::exception& e) {
    throw DataError(e.what() + ctx);
  }
}

std::string cell_context(int fold, double alpha) {
  return " (fold " + std::to_string(fold) + ", alpha " + format_value(alpha) + ")";
}

void write_run_manifest(const std::filesystem::path& run_dir, const Dataset& data,
                        const Schema& schema, const CvConfig& cfg,
                        const std::vector<double>& alphas) {
  ordered_json j;
  j["master_seed"] = cfg.master_seed;
  j["folds"] = cfg.folds;
  j["alphas"] = alphas;
  j["dataset_hash"] = dataset_hash(data);
  j["schema_hash"] = fnv1a(schema.to_json_string());
  j["schema"] = ordered_json::parse(schema.to_json_string());
  j["train"] = ordered_json::parse(cfg.train.to_json_string());
  j["probes"] = probe_to_json(cfg.probes);
  std::ofstream os(run_dir / "run_manifest.json", std::ios::trunc);
  if (!os) throw DataError("cannot write run manifest in " + run_dir.string());
  os << j.dump(2) << "\n";
}

struct RunPlan {
  std::vector<double> alphas;
  FoldAssignment assignment;
};

RunPlan make_plan(const Dataset& data, const CvConfig& cfg) {
  RunPlan plan;
  plan.alphas = cfg.alphas.empty() ? default_alpha_sweep() : cfg.alphas;
  plan.assignment = split_folds(data.n_rows(), cfg.folds, derive_seed(cfg.master_seed, "folds"));
  return plan;
}

/// Runs fn(fold, alpha_index) over the (fold, alpha) grid, optionally in
/// parallel; exceptions are re-thrown in deterministic cell order.
void for_each_cell(int folds, std::size_t n_alphas, int jobs,
                   const std::function<void(int, std::size_t)>& fn) {
  struct Cell {
    int fold;
    std::size_t ai;
  };
  std::vector<Cell> cells;
  for (int f = 0; f < folds; ++f) {
    for (std::size_t ai = 0; ai < n_alphas; ++ai) cells.push_back({f, ai});
  }
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  if (workers == 1) {
    for (const Cell& c : cells) fn(c.fold, c.ai);
    return;
  }
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        fn(cells[i].fold, cells[i].ai);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::filesystem::path cell_dir(const std::filesystem::path& run_dir, int fold, double alpha) {
  return run_dir / ("fold_" + std::to_string(fold)) / ("alpha_" + format_value(alpha));
}

std::vector<RunResult> run_cv(const Dataset& data, const Schema& schema, const CvConfig& cfg,
                              std::ostream* log) {
  schema.validate();
  const RunPlan plan = make_plan(data, cfg);
  const bool persist = !cfg.out_dir.empty();
  if (persist) {
    std::filesystem::create_directories(cfg.out_dir);
    write_run_manifest(cfg.out_dir, data, schema, cfg, plan.alphas);
  }

  std::vector<FoldData> folds;
  folds.reserve(cfg.folds);
  for (int f = 0; f < cfg.folds; ++f) {
    folds.push_back(prepare_fold(data, schema, plan.assignment, f));
    if (persist) {
      const std::filesystem::path fold_dir = cfg.out_dir / ("fold_" + std::to_string(f));
      std::filesystem::create_directories(fold_dir);
      folds.back().meta.save(fold_dir / "encoding_meta.json");
    }
  }

  const bool want_baseline = std::find(cfg.scenarios.begin(), cfg.scenarios.end(),
                                       Scenario::Baseline) != cfg.scenarios.end();
  std::vector<std::vector<RunResult>> baselines(cfg.folds);
  if (want_baseline) {
    for (int f = 0; f < cfg.folds; ++f) {
      baselines[f] = with_context(" (fold " + std::to_string(f) + ", baseline)", [&] {
        return baseline_rows(folds[f], cfg.master_seed, cfg.probes);
      });
    }
  }

  std::vector<std::vector<RunResult>> cell_rows(
      static_cast<std::size_t>(cfg.folds) * plan.alphas.size());
  for_each_cell(cfg.folds, plan.alphas.size(), cfg.jobs, [&](int fold, std::size_t ai) {
    const double alpha = plan.alphas[ai];
    with_context(cell_context(fold, alpha), [&] {
      TrainConfig tc = cfg.train;
      tc.alpha = alpha;
      tc.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(fold), ai, "train");
      SanitizerBundle bundle =
          train(folds[fold].train, folds[fold].validation, tc, cfg.jobs == 1 ? log : nullptr);
      if (persist) save_bundle(bundle, cell_dir(cfg.out_dir, fold, alpha));
      const Network& selected = bundle.checkpoints.at(bundle.selected_epoch);
      cell_rows[static_cast<std::size_t>(fold) * plan.alphas.size() + ai] =
          evaluate_cell(folds[fold], selected, fold, ai, alpha, cfg);
      return 0;
    });
  });

  std::vector<RunResult> rows;
  for (auto& cr : cell_rows) rows.insert(rows.end(), cr.begin(), cr.end());
  if (want_baseline) {
    for (int f = 0; f < cfg.folds; ++f) {
      for (double alpha : plan.alphas) {
        for (RunResult row : baselines[f]) {
          row.alpha = alpha;
          rows.push_back(std::move(row));
        }
      }
    }
  }
  sort_rows(rows);
  return rows;
}

void run_training(const Dataset& data, const Schema& schema, const CvConfig& cfg,
                  std::ostream* log) {
  schema.validate();
  if (cfg.out_dir.empty()) throw UsageError("run_training: output directory is required");
  const RunPlan plan = make_plan(data, cfg);
  std::filesystem::create_directories(cfg.out_dir);
  write_run_manifest(cfg.out_dir, data, schema, cfg, plan.alphas);

  std::vector<FoldData> folds;
  folds.reserve(cfg.folds);
  for (int f = 0; f < cfg.folds; ++f) {
    folds.push_back(prepare_fold(data, schema, plan.assignment, f));
    const std::filesystem::path fold_dir = cfg.out_dir / ("fold_" + std::to_string(f));
    std::filesystem::create_directories(fold_dir);
    folds.back().meta.save(fold_dir / "encoding_meta.json");
  }

  for_each_cell(cfg.folds, plan.alphas.size(), cfg.jobs, [&](int fold, std::size_t ai) {
    const double alpha = plan.alphas[ai];
    with_context(cell_context(fold, alpha), [&] {
      TrainConfig tc = cfg.train;
      tc.alpha = alpha;
      tc.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(fold), ai, "train");
      SanitizerBundle bundle =
          train(folds[fold].train, folds[fold].validation, tc, cfg.jobs == 1 ? log : nullptr);
      save_bundle(bundle, cell_dir(cfg.out_dir, fold, alpha));
      return 0;
    });
  });
}

std::vector<RunResult> evaluate_run(const std::filesystem::path& run_dir, const Dataset& data,
                                    const std::vector<Scenario>& scenarios, std::ostream* log) {
  std::ifstream is(run_dir / "run_manifest.json");
  if (!is) throw DataError("cannot open run manifest in " + run_dir.string());
  std::stringstream ss;
  ss << is.rdbuf();
  ordered_json j = ordered_json::parse(ss.str());

  CvConfig cfg;
  cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  cfg.folds = j.at("folds").get<int>();
  cfg.alphas = j.at("alphas").get<std::vector<double>>();
  cfg.train = TrainConfig::from_json_string(j.at("train").dump());
  cfg.probes = probe_from_json(j.at("probes"));
  cfg.scenarios = scenarios;
  const Schema schema = Schema::from_json_string(j.at("schema").dump());
  if (j.at("dataset_hash").get<std::uint64_t>() != dataset_hash(data)) {
    throw DataError("evaluate_run: dataset does not match the one used for training");
  }

  const FoldAssignment fa =
      split_folds(data.n_rows(), cfg.folds, derive_seed(cfg.master_seed, "folds"));
  std::vector<RunResult> rows;
  for (int f = 0; f < cfg.folds; ++f) {
    const FoldData fd = load_fold(data, schema, fa, f, run_dir);
    const bool want_baseline = std::find(scenarios.begin(), scenarios.end(),
                                         Scenario::Baseline) != scenarios.end();
    std::vector<RunResult> base;
    if (want_baseline) {
      base = with_context(" (fold " + std::to_string(f) + ", baseline)",
                          [&] { return baseline_rows(fd, cfg.master_seed, cfg.probes); });
    }
    for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
      const double alpha = cfg.alphas[ai];
      with_context(cell_context(f, alpha), [&] {
        const std::filesystem::path cell = cell_dir(run_dir, f, alpha);
        const int selected = load_selected_epoch(cell);
        const Network sanitizer = load_epoch_checkpoint(cell, selected);
        std::vector<RunResult> cellr = evaluate_cell(fd, sanitizer, f, ai, alpha, cfg);
        rows.insert(rows.end(), cellr.begin(), cellr.end());
        for (RunResult row : base) {
          row.alpha = alpha;
          rows.push_back(std::move(row));
        }
        return 0;
      });
      if (log != nullptr) {
        *log << "evaluated fold " << f << " alpha " << format_value(alpha) << "\n";
      }
    }
  }
  sort_rows(rows);
  return rows;
}

std::vector<SummaryRow> aggregate(const std::vector<RunResult>& results) {
  std::map<std::tuple<double, std::string, std::string, std::string>, std::vector<double>> groups;
  for (const RunResult& r : results) {
    groups[{r.alpha, r.scenario, r.classifier, r.metric}].push_back(r.value);
  }
  std::vector<SummaryRow> out;
  out.reserve(groups.size());
  for (const auto& [key, values] : groups) {
    SummaryRow row;
    row.alpha = std::get<0>(key);
    row.scenario = std::get<1>(key);
    row.classifier = std::get<2>(key);
    row.metric = std::get<3>(key);
    row.n = static_cast<int>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    row.mean = mean;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    row.stddev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    out.push_back(std::move(row));
  }
  return out;
}

void write_results_csv(const std::vector<RunResult>& results, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write results csv: " + path.string());
  os << "fold,alpha,scenario,classifier,metric,value\n";
  for (const RunResult& r : results) {
    os << r.fold << ',' << format_value(r.alpha) << ',' << r.scenario << ',' << r.classifier
       << ',' << r.metric << ',' << format_value(r.value) << '\n';
  }
}

void write_results_json(const std::vector<RunResult>& results,
                        const std::filesystem::path& path) {
  ordered_json j = ordered_json::array();
  for (const RunResult& r : results) {
    j.push_back({{"fold", r.fold},
                 {"alpha", r.alpha},
                 {"scenario", r.scenario},
                 {"classifier", r.classifier},
                 {"metric", r.metric},
                 {"value", r.value}});
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write results json: " + path.string());
  os << j.dump(2) << "\n";
}

std::vector<RunResult> read_results_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open results csv: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw DataError("results csv is empty");
  if (line != "fold,alpha,scenario,classifier,metric,value") {
    throw DataError("results csv: unexpected header: " + line);
  }
  std::vector<RunResult> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream fields(line);
    RunResult r;
    std::string cell;
    try {
      std::getline(fields, cell, ',');
      r.fold = std::stoi(cell);
      std::getline(fields, cell, ',');
      r.alpha = std::stod(cell);
      std::getline(fields, r.scenario, ',');
      std::getline(fields, r.classifier, ',');
      std::getline(fields, r.metric, ',');
      std::getline(fields, cell, ',');
      r.value = std::stod(cell);
    } catch (const std::exception&) {
      throw DataError("results csv: malformed line: " + line);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_summary_json(const std::vector<SummaryRow>& summary,
                        const std::filesystem::path& path) {
  ordered_json j = ordered_json::array();
  for (const SummaryRow& row : summary) {
    j.push_back({{"alpha", row.alpha},
                 {"scenario", row.scenario},
                 {"classifier", row.classifier},
                 {"metric", row.metric},
                 {"mean", row.mean},
                 {"std", row.stddev},
                 {"n", row.n}});
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write summary json: " + path.string());
  os << j.dump(2) << "\n";
}

}  // namespace fairsan
