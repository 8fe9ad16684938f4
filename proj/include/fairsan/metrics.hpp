#pragma once

#include <span>
#include <string>
#include <vector>

#include "fairsan/data.hpp"

namespace fairsan {

// Fairness / fidelity / utility measures. All pure functions; binary inputs
// are 0/1 ints. Metrics over group-conditional rates throw DataError when a
// required group or conditional cell is empty.

/// Balanced error rate: mean of the two group-conditional error rates.
/// 0.5 means inference no better than chance.
double ber(std::span<const int> predictions, std::span<const int> s);

/// Accuracy of an adversary at recovering the sensitive attribute.
double s_acc(std::span<const int> predictions, std::span<const int> s);

/// Plain accuracy (same computation as s_acc, named for decision labels).
double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// 1 - mean_r ||orig_r - san_r||_2 / sqrt(d). 1 on identical matrices, 0 when
/// every entry differs by the maximum 1.0.
double fidelity(const EncodedMatrix& orig, const EncodedMatrix& san);

/// Mean pairwise normalized L2 distance among records; 0 when all records
/// collapse to one profile. Needs at least two records.
double diversity(const EncodedMatrix& m);

/// |P(pred=1 | S=0) - P(pred=1 | S=1)|
double demo_parity(std::span<const int> predictions, std::span<const int> s);

/// |P(pred=1 | S=0, Y=y) - P(pred=1 | S=1, Y=y)| for outcome y in {0,1}.
double eq_odd_gap(std::span<const int> predictions, std::span<const int> y_true,
                  std::span<const int> s, int outcome);

/// Per-record relative change |o-s| / ((|o|+|s|)/2), 0 when both are 0.
/// Computed on decoded (original-space) values.
std::vector<double> relative_change(std::span<const double> orig, std::span<const double> san);

/// Fraction of records whose decoded category changed.
double categorical_modified_fraction(std::span<const std::string> orig,
                                     std::span<const std::string> san);

/// Fraction of records whose decision flipped.
double decision_shift(std::span<const int> orig_y, std::span<const int> san_y);

struct DecisionShift {
  double overall;
  double group0;
  double group1;
};

DecisionShift decision_shift_by_group(std::span<const int> orig_y, std::span<const int> san_y,
                                      std::span<const int> s);

}  // namespace fairsan
