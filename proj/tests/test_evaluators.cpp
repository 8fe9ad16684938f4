#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fairsan/evaluators.hpp"
#include "fairsan/metrics.hpp"
#include "support/synthetic.hpp"

using namespace fairsan;

namespace {

EncodedMatrix matrix_of(std::size_t n, std::size_t d, const std::vector<double>& values) {
  EncodedMatrix m;
  m.n_rows = n;
  m.n_cols = d;
  m.values = values;
  for (std::size_t i = 0; i < n; ++i) m.record_ids.push_back(i);
  for (std::size_t c = 0; c < d; ++c) m.column_names.push_back("f" + std::to_string(c));
  return m;
}

EncodedMatrix separable_1d(std::size_t n, std::vector<int>& labels) {
  std::vector<double> v;
  labels.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i % 2;
    v.push_back(y == 1 ? 0.8 + 0.01 * double(i % 10) : 0.1 + 0.01 * double(i % 10));
    labels.push_back(y);
  }
  return matrix_of(n, 1, v);
}

}  // namespace

TEST_CASE("separable 1-D data: every family reaches training accuracy 1.0") {
  std::vector<int> labels;
  const EncodedMatrix x = separable_1d(40, labels);
  for (ProbeFamily family : kAllFamilies) {
    const Classifier clf = Classifier::fit(family, x, labels, 99);
    const std::vector<int> pred = clf.predict(x);
    CHECK_MESSAGE(accuracy(pred, labels) == 1.0, family_name(family));
  }
}

TEST_CASE("gb_stumps: labels equal to a feature column need a single stump") {
  Rng rng(3);
  std::vector<double> values;
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) {
    const int y = i % 2;
    values.push_back(rng.uniform());        // noise column
    values.push_back(static_cast<double>(y));  // the label itself
    values.push_back(rng.uniform());
    labels.push_back(y);
  }
  const EncodedMatrix x = matrix_of(50, 3, values);
  ProbeConfig cfg;
  cfg.gb_rounds = 1;
  const Classifier clf = Classifier::fit(ProbeFamily::GbStumps, x, labels, 1, cfg);
  REQUIRE(clf.stumps().size() == 1);
  CHECK(clf.stumps()[0].feature == 1);
  // one 0.1-rate stump is not past the 0.5 threshold yet; the split itself
  // must be the perfect one
  ProbeConfig full;
  const Classifier strong = Classifier::fit(ProbeFamily::GbStumps, x, labels, 1, full);
  CHECK(accuracy(strong.predict(x), labels) == 1.0);
}

TEST_CASE("random labels: held-out accuracy hovers around chance") {
  double mean = 0.0;
  int draws = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 7919);
    const std::size_t n = 100;
    std::vector<double> train_v, test_v;
    std::vector<int> train_y, test_y;
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < 5; ++c) train_v.push_back(rng.uniform());
      train_y.push_back(i % 4 < 2 ? 0 : 1);
      for (int c = 0; c < 5; ++c) test_v.push_back(rng.uniform());
      test_y.push_back(rng.uniform() < 0.5 ? 1 : 0);
    }
    const EncodedMatrix train_x = matrix_of(n, 5, train_v);
    const EncodedMatrix test_x = matrix_of(n, 5, test_v);
    for (ProbeFamily family : kAllFamilies) {
      const Classifier clf = Classifier::fit(family, train_x, train_y, seed);
      const double acc = accuracy(clf.predict(test_x), test_y);
      CHECK(acc >= 0.30);
      CHECK(acc <= 0.70);
      mean += acc;
      ++draws;
    }
  }
  mean /= draws;
  CHECK(mean >= 0.35);
  CHECK(mean <= 0.65);
}

TEST_CASE("determinism: the same seed reproduces identical predictions") {
  Rng rng(55);
  std::vector<double> v;
  std::vector<int> y;
  for (int i = 0; i < 80; ++i) {
    for (int c = 0; c < 4; ++c) v.push_back(rng.uniform());
    y.push_back((i % 3) == 0 ? 1 : 0);
  }
  const EncodedMatrix x = matrix_of(80, 4, v);
  for (ProbeFamily family : kAllFamilies) {
    const Classifier a = Classifier::fit(family, x, y, 1234);
    const Classifier b = Classifier::fit(family, x, y, 1234);
    CHECK(a.scores(x) == b.scores(x));
  }
}

TEST_CASE("probe strength: every family nails the un-sanitized leak dataset") {
  const Dataset data = synthetic::leak_dataset(1200, 42);
  const Schema schema = synthetic::leak_schema();
  const auto [enc, meta] = preprocess(data, schema);
  const EncodedMatrix features = drop_column(enc, enc.s_col);
  const std::vector<int> s = binary_column(enc, enc.s_col);

  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < enc.n_rows; ++i) {
    (i < 900 ? train_rows : test_rows).push_back(i);
  }
  const EncodedMatrix train_x = select_rows(features, train_rows);
  const EncodedMatrix test_x = select_rows(features, test_rows);
  const std::vector<int> train_s(s.begin(), s.begin() + 900);
  const std::vector<int> test_s(s.begin() + 900, s.end());

  for (ProbeFamily family : kAllFamilies) {
    const Classifier clf = Classifier::fit(family, train_x, train_s, 7);
    const std::vector<int> pred = clf.predict(test_x);
    CHECK_MESSAGE(s_acc(pred, test_s) >= 0.99, family_name(family));
    CHECK_MESSAGE(ber(pred, test_s) <= 0.01, family_name(family));
  }
}

TEST_CASE("single-class training labels are a degenerate-label error") {
  std::vector<int> labels;
  const EncodedMatrix x = separable_1d(20, labels);
  const std::vector<int> ones(20, 1);
  for (ProbeFamily family : kAllFamilies) {
    CHECK_THROWS_AS(Classifier::fit(family, x, ones, 1), DataError);
  }
  std::vector<int> nearly(20, 1);
  nearly[0] = 0;  // a single example of class 0 is still degenerate
  CHECK_THROWS_AS(Classifier::fit(ProbeFamily::GbStumps, x, nearly, 1), DataError);
}

TEST_CASE("gb_stumps: constant features give a constant prediction") {
  const EncodedMatrix x = matrix_of(12, 2, std::vector<double>(24, 0.5));
  std::vector<int> y(12, 0);
  y[0] = y[1] = y[2] = 1;
  const Classifier clf = Classifier::fit(ProbeFamily::GbStumps, x, y, 1);
  const std::vector<int> pred = clf.predict(x);
  for (int p : pred) CHECK(p == pred[0]);
}

TEST_CASE("linear_hinge: negating the weights flips every prediction") {
  std::vector<int> labels;
  const EncodedMatrix x = separable_1d(30, labels);
  Classifier clf = Classifier::fit(ProbeFamily::LinearHinge, x, labels, 5);
  const std::vector<int> before = clf.predict(x);
  for (double& w : clf.linear_weights()) w = -w;
  const std::vector<int> after = clf.predict(x);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(after[i] == 1 - before[i]);
}

TEST_CASE("predict rejects a feature layout that differs from training") {
  std::vector<int> labels;
  const EncodedMatrix x = separable_1d(20, labels);
  const Classifier clf = Classifier::fit(ProbeFamily::Mlp, x, labels, 2);
  EncodedMatrix other = x;
  other.column_names[0] = "renamed";
  CHECK_THROWS_AS(clf.predict(other), UsageError);
}
