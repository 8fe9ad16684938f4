#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fairsan/common.hpp"

namespace fairsan {

enum class Activation : std::uint8_t { Identity = 0, ReLU = 1, LeakyReLU = 2, Sigmoid = 3 };

constexpr double kLeakyReluSlope = 0.01;

double activate(Activation a, double z);
double activate_derivative(Activation a, double z);
std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Row-major dense matrix of doubles. Just storage plus indexing; the
/// network code owns the math.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double* row(std::size_t i) { return data.data() + i * cols; }
};

struct DenseLayer {
  Matrix weights;            // out x in
  std::vector<double> bias;  // out
  Activation activation = Activation::ReLU;

  std::size_t in_width() const { return weights.cols; }
  std::size_t out_width() const { return weights.rows; }
};

struct LayerGrads {
  Matrix weights;
  std::vector<double> bias;
};

struct Gradients {
  std::vector<LayerGrads> layers;
};

/// Fixed stack of dense layers with cached activations for reverse-mode
/// gradients. Single-threaded mutation; safe to copy/move across threads.
class Network {
 public:
  Network() = default;

  /// widths = {input, hidden..., output}; activations has widths.size()-1
  /// entries. Weights start uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
  /// drawn from `seed`; biases start at zero.
  Network(const std::vector<std::size_t>& widths, const std::vector<Activation>& activations,
          std::uint64_t seed);

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::size_t layer_count() const { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::uint64_t seed() const { return seed_; }

  /// Computes the output and caches every intermediate activation.
  const std::vector<double>& forward(std::span<const double> input);

  /// Output of the last forward() call.
  const std::vector<double>& output() const;

  /// Parameter gradients for the cached forward pass. Does not mutate weights.
  /// Throws UsageError when no forward state is cached.
  Gradients backward(std::span<const double> loss_grad) const;

  /// Like backward() but adds into an existing accumulator; optionally
  /// reports the gradient with respect to the network input.
  void backward_accumulate(std::span<const double> loss_grad, Gradients& acc,
                           std::vector<double>* input_grad = nullptr) const;

  /// Gradient with respect to the input only (skips the parameter outer
  /// products). Used when a downstream network backpropagates through this
  /// one without training it.
  std::vector<double> input_gradient(std::span<const double> loss_grad) const;

  Gradients zero_gradients() const;
  std::size_t parameter_count() const;

  /// Forward pass without touching the backward cache; usable concurrently
  /// from multiple threads on a const network.
  std::vector<double> evaluate(std::span<const double> input) const;

  bool all_finite() const;

 private:
  std::vector<DenseLayer> layers_;
  std::uint64_t seed_ = 0;

  // forward cache: activations_[0] is the input, pre_[k] the pre-activation
  // of layer k, activations_[k+1] its output.
  std::vector<std::vector<double>> pre_;
  std::vector<std::vector<double>> activations_;
  bool has_forward_ = false;
};

/// Adam with bias correction. Moment buffers mirror the parameter shapes of
/// the network they were built for.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const Network& net, double lr, double beta1 = 0.9, double beta2 = 0.999,
            double epsilon = 1e-8);

  /// One update: t += 1, moments updated, bias-corrected step applied.
  /// Throws DivergenceError when a gradient or an updated weight is not finite.
  void step(Network& net, const Gradients& grads);

  long step_count() const { return t_; }
  double learning_rate() const { return lr_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double epsilon() const { return eps_; }

 private:
  double lr_ = 2e-4;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<LayerGrads> m_;
  std::vector<LayerGrads> v_;

  friend void save_network(const Network&, const std::filesystem::path&, const AdamState*);
  friend bool load_adam_from_stream(std::istream&, AdamState&);
};

// Losses.
double mse(std::span<const double> pred, std::span<const double> target);
std::vector<double> mse_gradient(std::span<const double> pred, std::span<const double> target);
std::vector<double> l1_per_attribute(std::span<const double> pred, std::span<const double> target);
std::vector<double> l1_gradient(std::span<const double> pred, std::span<const double> target);

// Checkpoint file: little-endian binary, layout documented in README.md
// ("Checkpoint format"). Round-trips bit-exactly.
void save_network(const Network& net, const std::filesystem::path& path,
                  const AdamState* optimizer = nullptr);
Network load_network(const std::filesystem::path& path, AdamState* optimizer = nullptr);

}  // namespace fairsan
