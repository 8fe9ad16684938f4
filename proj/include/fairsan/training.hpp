#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fairsan/data.hpp"
#include "fairsan/evaluators.hpp"
#include "fairsan/neural.hpp"

namespace fairsan {

enum class NoiseDistribution : std::uint8_t { Uniform, Gaussian };

std::string noise_distribution_name(NoiseDistribution d);
NoiseDistribution noise_distribution_from_name(const std::string& s);

/// Noise inputs appended to the sanitizer input; uniform [0,1] by default.
struct NoiseSpec {
  std::size_t dim = 3;
  NoiseDistribution distribution = NoiseDistribution::Uniform;
};

/// Hyperparameters of one sanitizer training run. Defaults follow the tuned
/// Adult-scale setup (40 epochs, batches of 100, 50 discriminator steps per
/// sanitizer step, Adam at 2e-4); smaller datasets usually want a higher
/// learning rate or smaller batches.
struct TrainConfig {
  double alpha = 0.9875;  // fairness/fidelity trade-off in [0,1]
  int epochs = 40;
  std::size_t batch_size = 100;
  int training_ratio = 50;  // discriminator steps per sanitizer step
  NoiseSpec noise;
  double sanitizer_lr = 2e-4;
  double discriminator_lr = 2e-4;
  std::vector<std::size_t> sanitizer_hidden = {64, 64};
  std::vector<std::size_t> discriminator_hidden = {32, 32, 32, 32};
  // The discriminator head defaults to Sigmoid so its output lives in [0,1]
  // where the soft balanced error rate is defined; set literal_disc_head to
  // restore a LeakyReLU head matching the sanitizer's output activation.
  bool literal_disc_head = false;
  std::uint64_t seed = 0;
  ProbeConfig trace_probes;

  void validate() const;
  std::string to_json_string() const;
  static TrainConfig from_json_string(const std::string& text);
};

struct EpochRecord {
  int epoch = 0;
  double ber_min = 0.0;  // min over probe families on the validation split
  double s_acc = 0.0;    // sAcc of the family achieving ber_min
  double fidelity = 0.0;
};

struct TrainStats {
  long sanitizer_steps = 0;
  long discriminator_steps = 0;
  long discriminator_records = 0;  // record presentations, steps x batch
  long skipped_adversarial_batches = 0;
  long trace_probe_failures = 0;
};

struct SanitizerBundle {
  Network sanitizer;
  Network discriminator;
  std::vector<Network> checkpoints;  // sanitizer state after each epoch
  std::vector<EpochRecord> trace;
  TrainConfig config;
  TrainStats stats;
  int selected_epoch = -1;
};

/// Alternating adversarial loop: per batch the discriminator takes
/// `training_ratio` MSE steps toward recovering S from the sanitizer output,
/// then the sanitizer takes one step on the vector loss. The per-epoch trace
/// (ber_min / sAcc / fidelity) is computed on the validation set.
/// Throws DivergenceError with epoch/batch context when a loss goes
/// non-finite.
SanitizerBundle train(const EncodedMatrix& train_set, const EncodedMatrix& validation_set,
                      const TrainConfig& config, std::ostream* log = nullptr);

/// Architecture contract. Sanitizer: encoded width + noise inputs, three
/// dense layers (ReLU hidden, LeakyReLU output), outputs every column but S.
/// Discriminator: five dense layers from the sanitizer output to one unit.
Network make_sanitizer_network(std::size_t encoded_width, const TrainConfig& config);
Network make_discriminator_network(std::size_t encoded_width, const TrainConfig& config);

/// Applies a sanitizer checkpoint. Output drops the sensitive column, is
/// clipped to [0,1], and is deterministic given the noise seed. The noise
/// distribution must match the one used in training.
EncodedMatrix sanitize(const Network& sanitizer, const EncodedMatrix& records,
                       std::uint64_t noise_seed,
                       NoiseDistribution noise = NoiseDistribution::Uniform);

/// Differentiable stand-in for the balanced error rate of the discriminator:
/// mean over groups of the expected error, using continuous outputs in [0,1].
/// Equals the hard BER when outputs are exactly 0/1; 0.5 when every output
/// is 0.5. Requires both groups in the batch.
double soft_ber(std::span<const double> disc_outputs, std::span<const int> s_labels);

/// Loss vector of the sanitizer for one batch: one (1-alpha)-weighted mean
/// absolute error per reconstructed column (the attributes and Y), then the
/// adversarial component alpha * (1/2 - soft_ber). Gradients of all
/// components are accumulated into a single update; the values are reported
/// per component for diagnostics.
struct SanitizerLoss {
  std::vector<double> reconstruction;  // per non-sensitive encoded column
  double adversarial = 0.0;
  double total() const;
};

SanitizerLoss sanitizer_loss(const EncodedMatrix& original_batch,
                             const EncodedMatrix& sanitized_batch,
                             std::span<const double> disc_outputs, double alpha);

/// Epoch selection: distance to the ideal point (BER = 0.5, fid = 1),
/// earliest epoch wins ties. `literal_formula` scores (ber-1/2)^2 + fid
/// instead, as printed in the original write-up of the heuristic.
int heuristic_a(std::span<const EpochRecord> trace, bool literal_formula = false);

/// Geometric progression of the trade-off weight:
/// alpha_i = 0.2 + 0.4 * (2^i - 1) / 2^(i-1), i = 1..i_max.
/// Values are computed exactly (they are finite decimals).
std::vector<double> alpha_progression(int i_max);

// Run-directory layout: manifest.json, trace.csv (epoch,ber_min,sacc,fid),
// epoch_NNN.ckpt per epoch, discriminator.ckpt.
void save_bundle(const SanitizerBundle& bundle, const std::filesystem::path& dir);
Network load_epoch_checkpoint(const std::filesystem::path& dir, int epoch);
std::vector<EpochRecord> load_trace(const std::filesystem::path& dir);
int load_selected_epoch(const std::filesystem::path& dir);

}  // namespace fairsan
