#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"

#include "fairsan/scenarios.hpp"
#include "support/synthetic.hpp"

using namespace fairsan;
namespace fs = std::filesystem;

// End-to-end checks through the installed binary. FAIRSAN_BIN is injected by
// the build.

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(FAIRSAN_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Sandbox {
  fs::path dir;
  fs::path csv;
  fs::path schema;

  Sandbox() {
    dir = fs::temp_directory_path() / "fairsan_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    csv = dir / "data.csv";
    write_csv(synthetic::leak_dataset(200, 77), csv);
    schema = dir / "schema.json";
  }
  ~Sandbox() { fs::remove_all(dir); }

  std::string train_args(const fs::path& out) const {
    return "train " + csv.string() + " --schema " + schema.string() + " --out " + out.string() +
           " --alpha 0 --epochs 1 --folds 10 --batch 20 --ratio 2 --seed 5" +
           " --san-hidden 12 12 --disc-hidden 8 8 8 8";
  }
};

}  // namespace

TEST_CASE("cli: schema inference, usage errors and exit codes") {
  Sandbox sb;
  CHECK(run("schema " + sb.csv.string() + " --sensitive gender --decision outcome --out " +
            sb.schema.string()) == 0);
  CHECK(fs::exists(sb.schema));
  const Schema schema = Schema::load(sb.schema);
  CHECK(schema.find("gender")->role == ColumnRole::Sensitive);
  CHECK(schema.find("leak")->kind == ColumnKind::Categorical);
  CHECK(schema.find("x1")->kind == ColumnKind::Numeric);

  // missing --sensitive is a usage error (exit 1)
  CHECK(run("schema " + sb.csv.string() + " --decision outcome") == 1);
  // unreadable input is a data error (exit 2)
  CHECK(run("schema /nonexistent.csv --sensitive a --decision b") == 2);
  // kind override is respected
  const fs::path forced = sb.dir / "forced.json";
  CHECK(run("schema " + sb.csv.string() +
            " --sensitive gender --decision outcome --numeric leak --out " +
            forced.string()) == 0);
  CHECK(Schema::load(forced).find("leak")->kind == ColumnKind::Numeric);
}

TEST_CASE("cli: train, sanitize and evaluate round trip") {
  Sandbox sb;
  REQUIRE(run("schema " + sb.csv.string() + " --sensitive gender --decision outcome --out " +
              sb.schema.string()) == 0);
  const fs::path run_dir = sb.dir / "run";
  REQUIRE(run(sb.train_args(run_dir)) == 0);
  CHECK(fs::exists(run_dir / "run_manifest.json"));
  CHECK(fs::exists(cell_dir(run_dir, 9, 0.0) / "epoch_000.ckpt"));

  // sanitize: header = input header minus the sensitive column
  const fs::path san_csv = sb.dir / "sanitized.csv";
  REQUIRE(run("sanitize " + run_dir.string() + " " + sb.csv.string() + " --out " +
              san_csv.string() + " --noise-seed 3") == 0);
  const Dataset sanitized = read_csv(san_csv);
  CHECK(sanitized.header ==
        std::vector<std::string>{"leak", "x1", "x2", "x3", "x4", "x5", "outcome"});
  CHECK(sanitized.n_rows() == 200);
  // categorical cells contain only categories seen at training
  for (const auto& row : sanitized.rows) {
    CHECK((row[0] == "0" || row[0] == "1"));
    CHECK((row[6] == ">50K" || row[6] == "<=50K"));
  }

  // single-record input gives a single-record output
  const Dataset full = read_csv(sb.csv);
  Dataset one;
  one.header = full.header;
  one.rows = {full.rows[0]};
  one.record_ids = {0};
  const fs::path one_csv = sb.dir / "one.csv";
  write_csv(one, one_csv);
  const fs::path one_out = sb.dir / "one_out.csv";
  REQUIRE(run("sanitize " + run_dir.string() + " " + one_csv.string() + " --out " +
              one_out.string()) == 0);
  CHECK(read_csv(one_out).n_rows() == 1);

  // evaluate writes results.csv + summary.json conforming to the row schema
  REQUIRE(run("evaluate " + run_dir.string() + " " + sb.csv.string() + " --out " +
              (sb.dir / "eval").string()) == 0);
  const std::vector<RunResult> rows = read_results_csv(sb.dir / "eval" / "results.csv");
  CHECK(!rows.empty());
  for (const RunResult& r : rows) {
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
  }
  CHECK(fs::exists(sb.dir / "eval" / "summary.json"));

  // baseline-only evaluation emits alpha-independent rows only
  REQUIRE(run("evaluate " + run_dir.string() + " " + sb.csv.string() +
              " --scenarios baseline --out " + (sb.dir / "eval_base").string()) == 0);
  for (const RunResult& r : read_results_csv(sb.dir / "eval_base" / "results.csv")) {
    CHECK((r.scenario == "baseline" || r.scenario == "protection_baseline"));
  }

  // evaluating against a different dataset is a data error
  const fs::path wrong = sb.dir / "wrong.csv";
  write_csv(synthetic::leak_dataset(199, 78), wrong);
  CHECK(run("evaluate " + run_dir.string() + " " + wrong.string()) == 2);
}

TEST_CASE("cli: idempotent re-runs produce byte-identical artifacts") {
  Sandbox sb;
  REQUIRE(run("schema " + sb.csv.string() + " --sensitive gender --decision outcome --out " +
              sb.schema.string()) == 0);
  const fs::path run_a = sb.dir / "run_a";
  const fs::path run_b = sb.dir / "run_b";
  REQUIRE(run(sb.train_args(run_a)) == 0);
  REQUIRE(run(sb.train_args(run_b)) == 0);
  // re-run over an existing directory overwrites with identical bytes
  REQUIRE(run(sb.train_args(run_a)) == 0);

  for (const char* rel :
       {"run_manifest.json", "fold_0/encoding_meta.json", "fold_0/alpha_0/trace.csv",
        "fold_0/alpha_0/manifest.json", "fold_0/alpha_0/epoch_000.ckpt",
        "fold_3/alpha_0/epoch_000.ckpt"}) {
    CHECK_MESSAGE(slurp(run_a / rel) == slurp(run_b / rel), rel);
  }

  const fs::path eval_a = sb.dir / "ea";
  const fs::path eval_b = sb.dir / "eb";
  REQUIRE(run("evaluate " + run_a.string() + " " + sb.csv.string() + " --out " +
              eval_a.string()) == 0);
  REQUIRE(run("evaluate " + run_b.string() + " " + sb.csv.string() + " --out " +
              eval_b.string()) == 0);
  CHECK(slurp(eval_a / "results.csv") == slurp(eval_b / "results.csv"));
  CHECK(slurp(eval_a / "summary.json") == slurp(eval_b / "summary.json"));
}

TEST_CASE("cli: sanitize demands an alpha choice on multi-alpha runs") {
  Sandbox sb;
  REQUIRE(run("schema " + sb.csv.string() + " --sensitive gender --decision outcome --out " +
              sb.schema.string()) == 0);
  const fs::path run_dir = sb.dir / "run_two";
  REQUIRE(run("train " + sb.csv.string() + " --schema " + sb.schema.string() + " --out " +
              run_dir.string() +
              " --alpha 0 --alpha 1 --epochs 1 --folds 10 --batch 20 --ratio 2 --seed 5"
              " --san-hidden 12 12 --disc-hidden 8 8 8 8") == 0);
  CHECK(run("sanitize " + run_dir.string() + " " + sb.csv.string() + " --out " +
            (sb.dir / "s.csv").string()) == 1);
  CHECK(run("sanitize " + run_dir.string() + " " + sb.csv.string() + " --alpha 1 --out " +
            (sb.dir / "s.csv").string()) == 0);
  // --epoch override selects a specific checkpoint
  CHECK(run("sanitize " + run_dir.string() + " " + sb.csv.string() + " --alpha 1 --epoch 0"
            " --out " + (sb.dir / "s0.csv").string()) == 0);
  CHECK(run("sanitize " + run_dir.string() + " " + sb.csv.string() + " --alpha 1 --epoch 9"
            " --out " + (sb.dir / "s9.csv").string()) == 2);  // no such checkpoint
}

TEST_CASE("cli: --sweep trains the geometric progression of alphas") {
  Sandbox sb;
  REQUIRE(run("schema " + sb.csv.string() + " --sensitive gender --decision outcome --out " +
              sb.schema.string()) == 0);
  const fs::path run_dir = sb.dir / "run_sweep";
  const auto t0 = std::chrono::steady_clock::now();
  REQUIRE(run("train " + sb.csv.string() + " --schema " + sb.schema.string() + " --out " +
              run_dir.string() +
              " --sweep 6 --epochs 1 --folds 10 --batch 20 --ratio 2 --seed 5 --jobs 4"
              " --san-hidden 12 12 --disc-hidden 8 8 8 8") == 0);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 60.0);  // the desk-scale fixture trains in well under a minute

  std::ifstream is(run_dir / "run_manifest.json");
  std::stringstream ss;
  ss << is.rdbuf();
  const auto manifest = nlohmann::ordered_json::parse(ss.str());
  const std::vector<double> alphas = manifest.at("alphas").get<std::vector<double>>();
  CHECK(alphas == std::vector<double>{0.6, 0.8, 0.9, 0.95, 0.975, 0.9875});
  CHECK(fs::exists(cell_dir(run_dir, 0, 0.9875) / "epoch_000.ckpt"));

  // --alpha together with --sweep is a usage error
  CHECK(run("train " + sb.csv.string() + " --schema " + sb.schema.string() + " --out " +
            (sb.dir / "x").string() + " --sweep 2 --alpha 0.5 --epochs 1") == 1);
}

TEST_CASE("cli: FAIRSAN_OUT sets the default output root") {
  Sandbox sb;
  REQUIRE(run("schema " + sb.csv.string() + " --sensitive gender --decision outcome --out " +
              sb.schema.string()) == 0);
  const fs::path root = sb.dir / "env_root";
  const std::string cmd = "FAIRSAN_OUT=" + root.string() + " " + FAIRSAN_BIN + " train " +
                          sb.csv.string() + " --schema " + sb.schema.string() +
                          " --alpha 0 --epochs 1 --folds 10 --batch 20 --ratio 2 --seed 5"
                          " --san-hidden 12 12 --disc-hidden 8 8 8 8 >/dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(root / "run" / "run_manifest.json"));
}
