#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairsan/data.hpp"
#include "fairsan/neural.hpp"

namespace fairsan {

/// External classifier families used to probe how recoverable a label is
/// from a dataset. Three families so that protection numbers can be taken
/// as a minimum over qualitatively different inductive biases.
enum class ProbeFamily { Mlp, GbStumps, LinearHinge };

constexpr ProbeFamily kAllFamilies[] = {ProbeFamily::Mlp, ProbeFamily::GbStumps,
                                        ProbeFamily::LinearHinge};

std::string family_name(ProbeFamily f);
ProbeFamily family_from_name(const std::string& s);

struct ProbeConfig {
  // mlp: dense net from neural core, sigmoid head, MSE on 0/1 labels
  std::vector<std::size_t> mlp_hidden = {32, 32};
  int mlp_epochs = 40;
  std::size_t mlp_batch = 32;
  double mlp_lr = 3e-3;
  // gradient-boosted depth-1 threshold trees on raw encoded columns
  int gb_rounds = 100;
  double gb_learning_rate = 0.1;
  // linear model, hinge loss, L2 penalty, deterministic subgradient descent
  double hinge_lambda = 1e-3;
  int hinge_iterations = 500;
};

struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;
  double left_value = 0.0;   // feature < threshold
  double right_value = 0.0;  // feature >= threshold
};

class Classifier {
 public:
  /// Trains one probe. Deterministic under `seed`. Throws DataError when the
  /// training labels do not contain at least two examples of each class.
  static Classifier fit(ProbeFamily family, const EncodedMatrix& features,
                        std::span<const int> labels, std::uint64_t seed,
                        const ProbeConfig& config = {});

  /// Hard 0/1 predictions; scores thresholded at 0.5.
  std::vector<int> predict(const EncodedMatrix& features) const;

  /// Calibrated scores in [0,1]: mlp uses its sigmoid head, the linear model
  /// maps its margin through a logistic, boosting reports its regression
  /// value clamped to [0,1].
  std::vector<double> scores(const EncodedMatrix& features) const;

  ProbeFamily family() const { return family_; }
  std::uint64_t layout_hash() const { return layout_hash_; }

  const std::vector<Stump>& stumps() const { return stumps_; }
  const std::vector<double>& linear_weights() const { return hinge_w_; }
  std::vector<double>& linear_weights() { return hinge_w_; }

 private:
  ProbeFamily family_ = ProbeFamily::Mlp;
  std::uint64_t layout_hash_ = 0;
  std::size_t n_features_ = 0;

  Network net_;                  // mlp
  double gb_base_ = 0.0;         // gb
  std::vector<Stump> stumps_;    // gb
  std::vector<double> hinge_w_;  // linear; bias is the last entry
};

}  // namespace fairsan
