#include "fairsan/neural.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace fairsan {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::LeakyReLU: return z > 0.0 ? z : kLeakyReluSlope * z;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  throw UsageError("unknown activation");
}

double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::LeakyReLU: return z > 0.0 ? 1.0 : kLeakyReluSlope;
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
  }
  throw UsageError("unknown activation");
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::LeakyReLU: return "leaky_relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  throw UsageError("unknown activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  if (name == "leaky_relu") return Activation::LeakyReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw UsageError("unknown activation name: " + name);
}

Network::Network(const std::vector<std::size_t>& widths,
                 const std::vector<Activation>& activations, std::uint64_t seed)
    : seed_(seed) {
  if (widths.size() < 2) throw UsageError("network needs at least input and output widths");
  if (activations.size() != widths.size() - 1) {
    throw UsageError("need one activation per layer");
  }
  Rng rng(seed);
  layers_.reserve(widths.size() - 1);
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    if (widths[k] == 0 || widths[k + 1] == 0) throw UsageError("layer widths must be positive");
    DenseLayer layer;
    layer.weights = Matrix(widths[k + 1], widths[k]);
    layer.bias.assign(widths[k + 1], 0.0);
    layer.activation = activations[k];
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[k]));
    for (double& w : layer.weights.data) w = rng.uniform(-bound, bound);
    layers_.push_back(std::move(layer));
  }
}

std::size_t Network::input_width() const {
  if (layers_.empty()) throw UsageError("empty network");
  return layers_.front().in_width();
}

std::size_t Network::output_width() const {
  if (layers_.empty()) throw UsageError("empty network");
  return layers_.back().out_width();
}

const std::vector<double>& Network::forward(std::span<const double> input) {
  if (layers_.empty()) throw UsageError("empty network");
  if (input.size() != input_width()) {
    throw UsageError("forward: input width " + std::to_string(input.size()) +
                     " does not match network input " + std::to_string(input_width()));
  }
  pre_.resize(layers_.size());
  activations_.resize(layers_.size() + 1);
  activations_[0].assign(input.begin(), input.end());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer& layer = layers_[k];
    const std::vector<double>& in = activations_[k];
    std::vector<double>& z = pre_[k];
    std::vector<double>& out = activations_[k + 1];
    z.assign(layer.out_width(), 0.0);
    out.assign(layer.out_width(), 0.0);
    for (std::size_t o = 0; o < layer.out_width(); ++o) {
      const double* w = layer.weights.row(o);
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < layer.in_width(); ++i) acc += w[i] * in[i];
      z[o] = acc;
      out[o] = activate(layer.activation, acc);
    }
  }
  has_forward_ = true;
  return activations_.back();
}

const std::vector<double>& Network::output() const {
  if (!has_forward_) throw UsageError("output: no cached forward pass");
  return activations_.back();
}

void Network::backward_accumulate(std::span<const double> loss_grad, Gradients& acc,
                                  std::vector<double>* input_grad) const {
  if (!has_forward_) throw UsageError("backward called without a cached forward pass");
  if (loss_grad.size() != output_width()) {
    throw UsageError("backward: loss gradient width does not match network output");
  }
  if (acc.layers.size() != layers_.size()) {
    throw UsageError("backward: gradient accumulator shape mismatch");
  }
  std::vector<double> delta(loss_grad.begin(), loss_grad.end());
  std::vector<double> next;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const DenseLayer& layer = layers_[k];
    LayerGrads& g = acc.layers[k];
    const std::vector<double>& z = pre_[k];
    const std::vector<double>& in = activations_[k];
    for (std::size_t o = 0; o < layer.out_width(); ++o) {
      delta[o] *= activate_derivative(layer.activation, z[o]);
    }
    for (std::size_t o = 0; o < layer.out_width(); ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* wg = g.weights.row(o);
      for (std::size_t i = 0; i < layer.in_width(); ++i) wg[i] += d * in[i];
      g.bias[o] += d;
    }
    if (k > 0 || input_grad != nullptr) {
      next.assign(layer.in_width(), 0.0);
      for (std::size_t o = 0; o < layer.out_width(); ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const double* w = layer.weights.row(o);
        for (std::size_t i = 0; i < layer.in_width(); ++i) next[i] += d * w[i];
      }
      delta.swap(next);
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(delta);
}

Gradients Network::backward(std::span<const double> loss_grad) const {
  Gradients g = zero_gradients();
  backward_accumulate(loss_grad, g, nullptr);
  return g;
}

std::vector<double> Network::input_gradient(std::span<const double> loss_grad) const {
  if (!has_forward_) throw UsageError("input_gradient called without a cached forward pass");
  if (loss_grad.size() != output_width()) {
    throw UsageError("input_gradient: loss gradient width does not match network output");
  }
  std::vector<double> delta(loss_grad.begin(), loss_grad.end());
  std::vector<double> next;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const DenseLayer& layer = layers_[k];
    const std::vector<double>& z = pre_[k];
    for (std::size_t o = 0; o < layer.out_width(); ++o) {
      delta[o] *= activate_derivative(layer.activation, z[o]);
    }
    next.assign(layer.in_width(), 0.0);
    for (std::size_t o = 0; o < layer.out_width(); ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = layer.weights.row(o);
      for (std::size_t i = 0; i < layer.in_width(); ++i) next[i] += d * w[i];
    }
    delta.swap(next);
  }
  return delta;
}

Gradients Network::zero_gradients() const {
  Gradients g;
  g.layers.reserve(layers_.size());
  for (const DenseLayer& layer : layers_) {
    LayerGrads lg;
    lg.weights = Matrix(layer.out_width(), layer.in_width());
    lg.bias.assign(layer.out_width(), 0.0);
    g.layers.push_back(std::move(lg));
  }
  return g;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers_) n += layer.weights.data.size() + layer.bias.size();
  return n;
}

std::vector<double> Network::evaluate(std::span<const double> input) const {
  if (layers_.empty()) throw UsageError("empty network");
  if (input.size() != layers_.front().in_width()) {
    throw UsageError("evaluate: input width does not match network input");
  }
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> out;
  for (const DenseLayer& layer : layers_) {
    out.assign(layer.out_width(), 0.0);
    for (std::size_t o = 0; o < layer.out_width(); ++o) {
      const double* w = layer.weights.row(o);
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < layer.in_width(); ++i) acc += w[i] * cur[i];
      out[o] = activate(layer.activation, acc);
    }
    cur.swap(out);
  }
  return cur;
}

bool Network::all_finite() const {
  for (const DenseLayer& layer : layers_) {
    for (double w : layer.weights.data) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : layer.bias) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

AdamState::AdamState(const Network& net, double lr, double beta1, double beta2, double epsilon)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  for (const DenseLayer& layer : net.layers()) {
    LayerGrads m, v;
    m.weights = Matrix(layer.out_width(), layer.in_width());
    m.bias.assign(layer.out_width(), 0.0);
    v.weights = Matrix(layer.out_width(), layer.in_width());
    v.bias.assign(layer.out_width(), 0.0);
    m_.push_back(std::move(m));
    v_.push_back(std::move(v));
  }
}

namespace {

void adam_update(double g, double& m, double& v, double& param, double lr, double b1, double b2,
                 double eps, double bc1, double bc2) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g * g;
  const double m_hat = m / bc1;
  const double v_hat = v / bc2;
  param -= lr * m_hat / (std::sqrt(v_hat) + eps);
}

}  // namespace

void AdamState::step(Network& net, const Gradients& grads) {
  if (m_.size() != net.layer_count() || grads.layers.size() != net.layer_count()) {
    throw UsageError("adam step: shape mismatch between state, network and gradients");
  }
  for (const LayerGrads& lg : grads.layers) {
    for (double g : lg.weights.data) {
      if (!std::isfinite(g)) throw DivergenceError("adam step: non-finite weight gradient");
    }
    for (double g : lg.bias) {
      if (!std::isfinite(g)) throw DivergenceError("adam step: non-finite bias gradient");
    }
  }
  t_ += 1;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    DenseLayer& layer = net.layers()[k];
    const LayerGrads& lg = grads.layers[k];
    if (lg.weights.rows != layer.out_width() || lg.weights.cols != layer.in_width()) {
      throw UsageError("adam step: gradient shape mismatch at layer " + std::to_string(k));
    }
    for (std::size_t j = 0; j < layer.weights.data.size(); ++j) {
      adam_update(lg.weights.data[j], m_[k].weights.data[j], v_[k].weights.data[j],
                  layer.weights.data[j], lr_, beta1_, beta2_, eps_, bc1, bc2);
    }
    for (std::size_t j = 0; j < layer.bias.size(); ++j) {
      adam_update(lg.bias[j], m_[k].bias[j], v_[k].bias[j], layer.bias[j], lr_, beta1_, beta2_,
                  eps_, bc1, bc2);
    }
  }
  if (!net.all_finite()) throw DivergenceError("adam step: weights diverged to non-finite values");
}

double mse(std::span<const double> pred, std::span<const double> target) {
  if (pred.empty()) throw UsageError("mse: empty input");
  if (pred.size() != target.size()) throw UsageError("mse: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

std::vector<double> mse_gradient(std::span<const double> pred, std::span<const double> target) {
  if (pred.empty()) throw UsageError("mse_gradient: empty input");
  if (pred.size() != target.size()) throw UsageError("mse_gradient: length mismatch");
  std::vector<double> g(pred.size());
  const double scale = 2.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) g[i] = scale * (pred[i] - target[i]);
  return g;
}

std::vector<double> l1_per_attribute(std::span<const double> pred,
                                     std::span<const double> target) {
  if (pred.size() != target.size()) throw UsageError("l1_per_attribute: length mismatch");
  std::vector<double> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) out[i] = std::fabs(pred[i] - target[i]);
  return out;
}

std::vector<double> l1_gradient(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw UsageError("l1_gradient: length mismatch");
  std::vector<double> g(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    g[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
  }
  return g;
}

// --- checkpoint io ---------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'F', 'S', 'N', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("checkpoint: truncated file");
}

void write_doubles(std::ostream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::istream& is, std::vector<double>& v) {
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw DataError("checkpoint: truncated file");
}

void write_layer_grads(std::ostream& os, const std::vector<LayerGrads>& grads) {
  for (const LayerGrads& lg : grads) {
    write_doubles(os, lg.weights.data);
    write_doubles(os, lg.bias);
  }
}

}  // namespace

bool load_adam_from_stream(std::istream& is, AdamState& opt) {
  read_pod(is, opt.lr_);
  read_pod(is, opt.beta1_);
  read_pod(is, opt.beta2_);
  read_pod(is, opt.eps_);
  std::int64_t t = 0;
  read_pod(is, t);
  opt.t_ = static_cast<long>(t);
  for (std::size_t k = 0; k < opt.m_.size(); ++k) {
    read_doubles(is, opt.m_[k].weights.data);
    read_doubles(is, opt.m_[k].bias);
  }
  for (std::size_t k = 0; k < opt.v_.size(); ++k) {
    read_doubles(is, opt.v_[k].weights.data);
    read_doubles(is, opt.v_[k].bias);
  }
  return true;
}

void save_network(const Network& net, const std::filesystem::path& path,
                  const AdamState* optimizer) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("checkpoint: cannot open for writing: " + path.string());
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, net.seed());
  write_pod(os, static_cast<std::uint32_t>(net.layer_count()));
  for (const DenseLayer& layer : net.layers()) {
    write_pod(os, static_cast<std::uint32_t>(layer.in_width()));
    write_pod(os, static_cast<std::uint32_t>(layer.out_width()));
    write_pod(os, static_cast<std::uint8_t>(layer.activation));
  }
  for (const DenseLayer& layer : net.layers()) {
    write_doubles(os, layer.weights.data);
    write_doubles(os, layer.bias);
  }
  const std::uint8_t has_opt = optimizer != nullptr ? 1 : 0;
  write_pod(os, has_opt);
  if (optimizer != nullptr) {
    write_pod(os, optimizer->learning_rate());
    write_pod(os, optimizer->beta1());
    write_pod(os, optimizer->beta2());
    write_pod(os, optimizer->epsilon());
    write_pod(os, static_cast<std::int64_t>(optimizer->step_count()));
    // Moment buffers are private; serialize through a copy-free friend path.
    const AdamState& opt = *optimizer;
    write_layer_grads(os, opt.m_);
    write_layer_grads(os, opt.v_);
  }
  if (!os) throw DataError("checkpoint: write failed: " + path.string());
}

Network load_network(const std::filesystem::path& path, AdamState* optimizer) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic in " + path.string());
  }
  std::uint32_t version = 0;
  read_pod(is, version);
  if (version != kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  std::uint64_t seed = 0;
  read_pod(is, seed);
  std::uint32_t n_layers = 0;
  read_pod(is, n_layers);
  std::vector<std::size_t> widths;
  std::vector<Activation> acts;
  widths.reserve(n_layers + 1);
  for (std::uint32_t k = 0; k < n_layers; ++k) {
    std::uint32_t in = 0, out = 0;
    std::uint8_t act = 0;
    read_pod(is, in);
    read_pod(is, out);
    read_pod(is, act);
    if (k == 0) {
      widths.push_back(in);
    } else if (widths.back() != in) {
      throw DataError("checkpoint: layer widths do not chain");
    }
    widths.push_back(out);
    acts.push_back(static_cast<Activation>(act));
  }
  Network net(widths, acts, seed);
  for (DenseLayer& layer : net.layers()) {
    read_doubles(is, layer.weights.data);
    read_doubles(is, layer.bias);
  }
  std::uint8_t has_opt = 0;
  read_pod(is, has_opt);
  if (has_opt != 0 && optimizer != nullptr) {
    *optimizer = AdamState(net, 2e-4);
    load_adam_from_stream(is, *optimizer);
  }
  return net;
}

}  // namespace fairsan
