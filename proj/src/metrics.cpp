#include "fairsan/metrics.hpp"

#include <cmath>

namespace fairsan {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw UsageError(std::string(what) + ": length mismatch");
}

void require_binary(std::span<const int> v, const char* what) {
  for (int x : v) {
    if (x != 0 && x != 1) throw DataError(std::string(what) + ": values must be 0/1");
  }
}

}  // namespace

double ber(std::span<const int> predictions, std::span<const int> s) {
  require_same_size(predictions.size(), s.size(), "ber");
  require_binary(predictions, "ber");
  require_binary(s, "ber");
  std::size_t n[2] = {0, 0};
  std::size_t err[2] = {0, 0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    n[s[i]] += 1;
    err[s[i]] += predictions[i] != s[i] ? 1 : 0;
  }
  if (n[0] == 0 || n[1] == 0) {
    throw DataError("ber undefined: a sensitive group is missing from the sample");
  }
  return 0.5 * (static_cast<double>(err[0]) / static_cast<double>(n[0]) +
                static_cast<double>(err[1]) / static_cast<double>(n[1]));
}

double s_acc(std::span<const int> predictions, std::span<const int> s) {
  require_same_size(predictions.size(), s.size(), "s_acc");
  if (predictions.empty()) throw UsageError("s_acc: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < s.size(); ++i) hit += predictions[i] == s[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(s.size());
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  return s_acc(predictions, labels);
}

double fidelity(const EncodedMatrix& orig, const EncodedMatrix& san) {
  if (orig.n_rows != san.n_rows || orig.n_cols != san.n_cols) {
    throw UsageError("fidelity: shape mismatch");
  }
  if (orig.n_rows == 0 || orig.n_cols == 0) throw UsageError("fidelity: empty input");
  const double norm = std::sqrt(static_cast<double>(orig.n_cols));
  double acc = 0.0;
  for (std::size_t r = 0; r < orig.n_rows; ++r) {
    double sq = 0.0;
    for (std::size_t c = 0; c < orig.n_cols; ++c) {
      const double d = orig.at(r, c) - san.at(r, c);
      sq += d * d;
    }
    acc += std::sqrt(sq) / norm;
  }
  return 1.0 - acc / static_cast<double>(orig.n_rows);
}

double diversity(const EncodedMatrix& m) {
  if (m.n_rows < 2) throw DataError("diversity undefined for fewer than 2 records");
  if (m.n_cols == 0) throw UsageError("diversity: empty columns");
  const double norm = std::sqrt(static_cast<double>(m.n_cols));
  double acc = 0.0;
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    for (std::size_t j = i + 1; j < m.n_rows; ++j) {
      double sq = 0.0;
      for (std::size_t c = 0; c < m.n_cols; ++c) {
        const double d = m.at(i, c) - m.at(j, c);
        sq += d * d;
      }
      acc += 2.0 * std::sqrt(sq);  // (i,j) and (j,i) terms of the double sum
    }
  }
  const double n = static_cast<double>(m.n_rows);
  return acc / (n * (n - 1.0) * norm);
}

double demo_parity(std::span<const int> predictions, std::span<const int> s) {
  require_same_size(predictions.size(), s.size(), "demo_parity");
  require_binary(predictions, "demo_parity");
  require_binary(s, "demo_parity");
  std::size_t n[2] = {0, 0};
  std::size_t pos[2] = {0, 0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    n[s[i]] += 1;
    pos[s[i]] += predictions[i];
  }
  if (n[0] == 0 || n[1] == 0) {
    throw DataError("demo_parity undefined: a sensitive group is missing");
  }
  return std::fabs(static_cast<double>(pos[0]) / static_cast<double>(n[0]) -
                   static_cast<double>(pos[1]) / static_cast<double>(n[1]));
}

double eq_odd_gap(std::span<const int> predictions, std::span<const int> y_true,
                  std::span<const int> s, int outcome) {
  require_same_size(predictions.size(), y_true.size(), "eq_odd_gap");
  require_same_size(predictions.size(), s.size(), "eq_odd_gap");
  if (outcome != 0 && outcome != 1) throw UsageError("eq_odd_gap: outcome must be 0 or 1");
  require_binary(predictions, "eq_odd_gap");
  require_binary(y_true, "eq_odd_gap");
  require_binary(s, "eq_odd_gap");
  std::size_t n[2] = {0, 0};
  std::size_t pos[2] = {0, 0};
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y_true[i] != outcome) continue;
    n[s[i]] += 1;
    pos[s[i]] += predictions[i];
  }
  if (n[0] == 0 || n[1] == 0) {
    throw DataError("eq_odd_gap undefined: empty conditional cell (S=" +
                    std::string(n[0] == 0 ? "0" : "1") + ", Y=" + std::to_string(outcome) + ")");
  }
  return std::fabs(static_cast<double>(pos[0]) / static_cast<double>(n[0]) -
                   static_cast<double>(pos[1]) / static_cast<double>(n[1]));
}

std::vector<double> relative_change(std::span<const double> orig, std::span<const double> san) {
  require_same_size(orig.size(), san.size(), "relative_change");
  std::vector<double> rc(orig.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    const double denom = (std::fabs(orig[i]) + std::fabs(san[i])) / 2.0;
    rc[i] = denom == 0.0 ? 0.0 : std::fabs(orig[i] - san[i]) / denom;
  }
  return rc;
}

double categorical_modified_fraction(std::span<const std::string> orig,
                                     std::span<const std::string> san) {
  require_same_size(orig.size(), san.size(), "categorical_modified_fraction");
  if (orig.empty()) throw UsageError("categorical_modified_fraction: empty input");
  std::size_t changed = 0;
  for (std::size_t i = 0; i < orig.size(); ++i) changed += orig[i] != san[i] ? 1 : 0;
  return static_cast<double>(changed) / static_cast<double>(orig.size());
}

double decision_shift(std::span<const int> orig_y, std::span<const int> san_y) {
  require_same_size(orig_y.size(), san_y.size(), "decision_shift");
  if (orig_y.empty()) throw UsageError("decision_shift: empty input");
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < orig_y.size(); ++i) flipped += orig_y[i] != san_y[i] ? 1 : 0;
  return static_cast<double>(flipped) / static_cast<double>(orig_y.size());
}

DecisionShift decision_shift_by_group(std::span<const int> orig_y, std::span<const int> san_y,
                                      std::span<const int> s) {
  require_same_size(orig_y.size(), s.size(), "decision_shift_by_group");
  require_binary(s, "decision_shift_by_group");
  std::size_t n[2] = {0, 0};
  std::size_t flip[2] = {0, 0};
  for (std::size_t i = 0; i < orig_y.size(); ++i) {
    n[s[i]] += 1;
    flip[s[i]] += orig_y[i] != san_y[i] ? 1 : 0;
  }
  if (n[0] == 0 || n[1] == 0) {
    throw DataError("decision_shift_by_group undefined: a sensitive group is missing");
  }
  DecisionShift out;
  out.overall = decision_shift(orig_y, san_y);
  out.group0 = static_cast<double>(flip[0]) / static_cast<double>(n[0]);
  out.group1 = static_cast<double>(flip[1]) / static_cast<double>(n[1]);
  return out;
}

}  // namespace fairsan
