#include "fairsan/evaluators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fairsan {

std::string family_name(ProbeFamily f) {
  switch (f) {
    case ProbeFamily::Mlp: return "mlp";
    case ProbeFamily::GbStumps: return "gb_stumps";
    case ProbeFamily::LinearHinge: return "linear_hinge";
  }
  throw UsageError("unknown probe family");
}

ProbeFamily family_from_name(const std::string& s) {
  if (s == "mlp") return ProbeFamily::Mlp;
  if (s == "gb_stumps") return ProbeFamily::GbStumps;
  if (s == "linear_hinge") return ProbeFamily::LinearHinge;
  throw UsageError("unknown probe family: " + s);
}

namespace {

void check_labels(const EncodedMatrix& features, std::span<const int> labels) {
  if (features.n_rows != labels.size()) throw UsageError("fit: feature/label count mismatch");
  if (features.n_rows == 0 || features.n_cols == 0) throw UsageError("fit: empty training set");
  std::size_t count[2] = {0, 0};
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("fit: labels must be 0/1");
    count[y] += 1;
  }
  if (count[0] < 2 || count[1] < 2) {
    throw DataError("fit: degenerate labels, need at least 2 examples per class (have " +
                    std::to_string(count[0]) + "/" + std::to_string(count[1]) + ")");
  }
}

void fit_mlp(Network& net, const EncodedMatrix& x, std::span<const int> labels,
             std::uint64_t seed, const ProbeConfig& cfg) {
  std::vector<std::size_t> widths;
  widths.push_back(x.n_cols);
  for (std::size_t h : cfg.mlp_hidden) widths.push_back(h);
  widths.push_back(1);
  std::vector<Activation> acts(widths.size() - 1, Activation::ReLU);
  acts.back() = Activation::Sigmoid;
  net = Network(widths, acts, mix_seed(seed, fnv1a("mlp_init")));
  AdamState adam(net, cfg.mlp_lr);

  Rng rng(mix_seed(seed, fnv1a("mlp_batches")));
  std::vector<std::size_t> order(x.n_rows);
  std::iota(order.begin(), order.end(), 0);
  Gradients grads = net.zero_gradients();
  std::vector<double> target(1);
  for (int epoch = 0; epoch < cfg.mlp_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.mlp_batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.mlp_batch);
      for (auto& lg : grads.layers) {
        std::fill(lg.weights.data.begin(), lg.weights.data.end(), 0.0);
        std::fill(lg.bias.begin(), lg.bias.end(), 0.0);
      }
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t r = order[i];
        const auto& out = net.forward(x.row(r));
        target[0] = static_cast<double>(labels[r]);
        std::vector<double> g = mse_gradient(out, target);
        const double scale = 1.0 / static_cast<double>(stop - start);
        for (double& v : g) v *= scale;
        net.backward_accumulate(g, grads);
      }
      adam.step(net, grads);
    }
  }
}

struct SplitResult {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double left_mean = 0.0;
  double right_mean = 0.0;
  double score = -1.0;  // sum-of-squares explained; higher is better
};

}  // namespace

Classifier Classifier::fit(ProbeFamily family, const EncodedMatrix& features,
                           std::span<const int> labels, std::uint64_t seed,
                           const ProbeConfig& cfg) {
  check_labels(features, labels);
  Classifier clf;
  clf.family_ = family;
  clf.layout_hash_ = features.layout_hash();
  clf.n_features_ = features.n_cols;

  const std::size_t n = features.n_rows;
  const std::size_t d = features.n_cols;

  if (family == ProbeFamily::Mlp) {
    fit_mlp(clf.net_, features, labels, seed, cfg);
    return clf;
  }

  if (family == ProbeFamily::GbStumps) {
    // least-squares boosting of two-leaf threshold trees
    double base = 0.0;
    for (int y : labels) base += y;
    base /= static_cast<double>(n);
    clf.gb_base_ = base;

    // presort row indices per feature
    std::vector<std::vector<std::size_t>> sorted(d);
    for (std::size_t f = 0; f < d; ++f) {
      sorted[f].resize(n);
      std::iota(sorted[f].begin(), sorted[f].end(), 0);
      std::stable_sort(sorted[f].begin(), sorted[f].end(), [&](std::size_t a, std::size_t b) {
        return features.at(a, f) < features.at(b, f);
      });
    }

    std::vector<double> pred(n, base);
    std::vector<double> residual(n);
    for (int round = 0; round < cfg.gb_rounds; ++round) {
      for (std::size_t i = 0; i < n; ++i) {
        residual[i] = static_cast<double>(labels[i]) - pred[i];
      }
      double total = 0.0;
      for (double r : residual) total += r;

      SplitResult best;
      for (std::size_t f = 0; f < d; ++f) {
        const auto& idx = sorted[f];
        double left_sum = 0.0;
        for (std::size_t pos = 0; pos + 1 < n; ++pos) {
          left_sum += residual[idx[pos]];
          const double lo = features.at(idx[pos], f);
          const double hi = features.at(idx[pos + 1], f);
          if (lo == hi) continue;  // threshold must separate distinct values
          const double n_left = static_cast<double>(pos + 1);
          const double n_right = static_cast<double>(n - pos - 1);
          const double right_sum = total - left_sum;
          const double score =
              left_sum * left_sum / n_left + right_sum * right_sum / n_right;
          if (score > best.score) {
            best.found = true;
            best.score = score;
            best.feature = f;
            best.threshold = 0.5 * (lo + hi);
            best.left_mean = left_sum / n_left;
            best.right_mean = right_sum / n_right;
          }
        }
      }

      Stump stump;
      if (best.found) {
        stump.feature = best.feature;
        stump.threshold = best.threshold;
        stump.left_value = cfg.gb_learning_rate * best.left_mean;
        stump.right_value = cfg.gb_learning_rate * best.right_mean;
      } else {
        // all features constant: shrink toward the residual mean
        const double mean = total / static_cast<double>(n);
        stump.feature = 0;
        stump.threshold = -std::numeric_limits<double>::infinity();
        stump.left_value = stump.right_value = cfg.gb_learning_rate * mean;
      }
      for (std::size_t i = 0; i < n; ++i) {
        pred[i] += features.at(i, stump.feature) < stump.threshold ? stump.left_value
                                                                   : stump.right_value;
      }
      clf.stumps_.push_back(stump);
    }
    return clf;
  }

  // linear hinge: pegasos-style subgradient descent on (w, b) with the bias
  // folded in as a constant feature; labels mapped to {-1, +1}
  (void)seed;  // the solver is deterministic; seed kept for interface symmetry
  const double lambda = cfg.hinge_lambda;
  std::vector<double> w(d + 1, 0.0);
  std::vector<double> grad(d + 1, 0.0);
  for (int t = 1; t <= cfg.hinge_iterations; ++t) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = features.row(i);
      double margin = w[d];
      for (std::size_t f = 0; f < d; ++f) margin += w[f] * row[f];
      const double y = labels[i] == 1 ? 1.0 : -1.0;
      if (y * margin < 1.0) {
        for (std::size_t f = 0; f < d; ++f) grad[f] -= y * row[f];
        grad[d] -= y;
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const double eta = 1.0 / (lambda * static_cast<double>(t));
    for (std::size_t f = 0; f <= d; ++f) {
      w[f] -= eta * (lambda * w[f] + grad[f] * inv_n);
    }
    // pegasos projection onto the ball of radius 1/sqrt(lambda)
    double norm_sq = 0.0;
    for (double v : w) norm_sq += v * v;
    const double radius = 1.0 / std::sqrt(lambda);
    if (norm_sq > radius * radius) {
      const double scale = radius / std::sqrt(norm_sq);
      for (double& v : w) v *= scale;
    }
  }
  clf.hinge_w_ = std::move(w);
  return clf;
}

std::vector<double> Classifier::scores(const EncodedMatrix& features) const {
  if (features.layout_hash() != layout_hash_ || features.n_cols != n_features_) {
    throw UsageError("predict: feature layout does not match the training layout");
  }
  std::vector<double> out(features.n_rows, 0.0);
  switch (family_) {
    case ProbeFamily::Mlp:
      for (std::size_t r = 0; r < features.n_rows; ++r) {
        out[r] = net_.evaluate(features.row(r))[0];
      }
      break;
    case ProbeFamily::GbStumps:
      for (std::size_t r = 0; r < features.n_rows; ++r) {
        double score = gb_base_;
        for (const Stump& s : stumps_) {
          score += features.at(r, s.feature) < s.threshold ? s.left_value : s.right_value;
        }
        out[r] = std::clamp(score, 0.0, 1.0);
      }
      break;
    case ProbeFamily::LinearHinge:
      for (std::size_t r = 0; r < features.n_rows; ++r) {
        const auto row = features.row(r);
        double margin = hinge_w_.back();
        for (std::size_t f = 0; f < n_features_; ++f) margin += hinge_w_[f] * row[f];
        out[r] = 1.0 / (1.0 + std::exp(-margin));
      }
      break;
  }
  return out;
}

std::vector<int> Classifier::predict(const EncodedMatrix& features) const {
  const std::vector<double> s = scores(features);
  std::vector<int> labels(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) labels[i] = s[i] >= 0.5 ? 1 : 0;
  return labels;
}

}  // namespace fairsan
