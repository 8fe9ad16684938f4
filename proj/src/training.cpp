#include "fairsan/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fairsan/metrics.hpp"
#include "json_util.hpp"

namespace fairsan {

using ordered_json = nlohmann::ordered_json;

std::string noise_distribution_name(NoiseDistribution d) {
  switch (d) {
    case NoiseDistribution::Uniform: return "uniform";
    case NoiseDistribution::Gaussian: return "gaussian";
  }
  throw UsageError("unknown noise distribution");
}

NoiseDistribution noise_distribution_from_name(const std::string& s) {
  if (s == "uniform") return NoiseDistribution::Uniform;
  if (s == "gaussian") return NoiseDistribution::Gaussian;
  throw UsageError("unknown noise distribution: " + s);
}

namespace {

double sample_noise(Rng& rng, NoiseDistribution dist) {
  if (dist == NoiseDistribution::Uniform) return rng.uniform();
  // Box-Muller from two uniforms; u1 shifted into (0, 1]
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

void TrainConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw UsageError("train config: alpha must be in [0,1]");
  if (epochs < 1) throw UsageError("train config: epochs must be >= 1");
  if (batch_size < 1) throw UsageError("train config: batch size must be >= 1");
  if (training_ratio < 1) throw UsageError("train config: training ratio must be >= 1");
  if (sanitizer_lr <= 0.0 || discriminator_lr <= 0.0) {
    throw UsageError("train config: learning rates must be positive");
  }
}

std::string TrainConfig::to_json_string() const {
  ordered_json j;
  j["alpha"] = alpha;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["training_ratio"] = training_ratio;
  j["noise_dim"] = noise.dim;
  j["noise_distribution"] = noise_distribution_name(noise.distribution);
  j["sanitizer_lr"] = sanitizer_lr;
  j["discriminator_lr"] = discriminator_lr;
  j["sanitizer_hidden"] = sanitizer_hidden;
  j["discriminator_hidden"] = discriminator_hidden;
  j["literal_disc_head"] = literal_disc_head;
  j["seed"] = seed;
  j["trace_probes"] = probe_to_json(trace_probes);
  return j.dump(2) + "\n";
}

TrainConfig TrainConfig::from_json_string(const std::string& text) {
  TrainConfig cfg;
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("train config parse error: ") + e.what());
  }
  cfg.alpha = j.at("alpha").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<std::size_t>();
  cfg.training_ratio = j.at("training_ratio").get<int>();
  cfg.noise.dim = j.at("noise_dim").get<std::size_t>();
  if (j.contains("noise_distribution")) {
    cfg.noise.distribution =
        noise_distribution_from_name(j.at("noise_distribution").get<std::string>());
  }
  cfg.sanitizer_lr = j.at("sanitizer_lr").get<double>();
  cfg.discriminator_lr = j.at("discriminator_lr").get<double>();
  cfg.sanitizer_hidden = j.at("sanitizer_hidden").get<std::vector<std::size_t>>();
  cfg.discriminator_hidden = j.at("discriminator_hidden").get<std::vector<std::size_t>>();
  cfg.literal_disc_head = j.at("literal_disc_head").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("trace_probes")) {
    cfg.trace_probes = probe_from_json(j["trace_probes"]);
  }
  cfg.validate();
  return cfg;
}

double soft_ber(std::span<const double> disc_outputs, std::span<const int> s_labels) {
  if (disc_outputs.size() != s_labels.size()) throw UsageError("soft_ber: length mismatch");
  double sum[2] = {0.0, 0.0};
  std::size_t n[2] = {0, 0};
  for (std::size_t i = 0; i < s_labels.size(); ++i) {
    const int s = s_labels[i];
    if (s != 0 && s != 1) throw DataError("soft_ber: labels must be 0/1");
    n[s] += 1;
    sum[s] += disc_outputs[i];
  }
  if (n[0] == 0 || n[1] == 0) {
    throw DataError("soft_ber undefined: batch contains a single sensitive group");
  }
  const double err0 = sum[0] / static_cast<double>(n[0]);               // predicted 1 while s=0
  const double err1 = 1.0 - sum[1] / static_cast<double>(n[1]);         // predicted 0 while s=1
  return 0.5 * (err0 + err1);
}

double SanitizerLoss::total() const {
  double t = adversarial;
  for (double v : reconstruction) t += v;
  return t;
}

SanitizerLoss sanitizer_loss(const EncodedMatrix& original_batch,
                             const EncodedMatrix& sanitized_batch,
                             std::span<const double> disc_outputs, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw UsageError("sanitizer_loss: alpha must be in [0,1]");
  if (original_batch.s_col < 0) throw UsageError("sanitizer_loss: original batch must carry S");
  if (original_batch.n_rows != sanitized_batch.n_rows ||
      original_batch.n_cols != sanitized_batch.n_cols + 1) {
    throw UsageError("sanitizer_loss: shape mismatch between original and sanitized batch");
  }
  if (disc_outputs.size() != original_batch.n_rows) {
    throw UsageError("sanitizer_loss: discriminator output count mismatch");
  }
  const std::size_t s_col = static_cast<std::size_t>(original_batch.s_col);
  const std::size_t n = original_batch.n_rows;

  SanitizerLoss loss;
  loss.reconstruction.assign(sanitized_batch.n_cols, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t out_c = 0;
    for (std::size_t c = 0; c < original_batch.n_cols; ++c) {
      if (c == s_col) continue;
      loss.reconstruction[out_c] +=
          std::fabs(original_batch.at(r, c) - sanitized_batch.at(r, out_c));
      ++out_c;
    }
  }
  const double recon_w = (1.0 - alpha) / static_cast<double>(n);
  for (double& v : loss.reconstruction) v *= recon_w;

  const std::vector<int> s = binary_column(original_batch, s_col);
  loss.adversarial = alpha * (0.5 - soft_ber(disc_outputs, s));
  return loss;
}

int heuristic_a(std::span<const EpochRecord> trace, bool literal_formula) {
  if (trace.empty()) throw UsageError("heuristic_a: empty trace");
  int best_epoch = trace.front().epoch;
  double best_score = std::numeric_limits<double>::infinity();
  for (const EpochRecord& rec : trace) {
    const double db = rec.ber_min - 0.5;
    const double score =
        literal_formula ? db * db + rec.fidelity
                        : db * db + (1.0 - rec.fidelity) * (1.0 - rec.fidelity);
    if (score < best_score) {
      best_score = score;
      best_epoch = rec.epoch;
    }
  }
  return best_epoch;
}

std::vector<double> alpha_progression(int i_max) {
  if (i_max < 1) throw UsageError("alpha_progression: i_max must be >= 1");
  std::vector<double> alphas;
  alphas.reserve(i_max);
  for (int i = 1; i <= i_max; ++i) {
    // alpha_i = 1 - 2^(3-i)/10 written as an exact integer ratio so the
    // single division produces the correctly rounded decimal value.
    double v;
    if (i == 1) {
      v = 3.0 / 5.0;
    } else if (i == 2) {
      v = 4.0 / 5.0;
    } else if (i <= 52) {
      const double den = 10.0 * std::exp2(static_cast<double>(i - 3));
      v = (den - 1.0) / den;
    } else {
      v = 1.0 - std::exp2(static_cast<double>(3 - i)) / 10.0;
    }
    alphas.push_back(v);
  }
  return alphas;
}

Network make_sanitizer_network(std::size_t encoded_width, const TrainConfig& cfg) {
  std::vector<std::size_t> widths;
  widths.push_back(encoded_width + cfg.noise.dim);
  for (std::size_t h : cfg.sanitizer_hidden) widths.push_back(h);
  widths.push_back(encoded_width - 1);  // everything but S
  std::vector<Activation> acts(widths.size() - 1, Activation::ReLU);
  acts.back() = Activation::LeakyReLU;
  return Network(widths, acts, derive_seed(cfg.seed, "sanitizer_init"));
}

Network make_discriminator_network(std::size_t encoded_width, const TrainConfig& cfg) {
  std::vector<std::size_t> widths;
  widths.push_back(encoded_width - 1);
  for (std::size_t h : cfg.discriminator_hidden) widths.push_back(h);
  widths.push_back(1);
  std::vector<Activation> acts(widths.size() - 1, Activation::ReLU);
  acts.back() = cfg.literal_disc_head ? Activation::LeakyReLU : Activation::Sigmoid;
  return Network(widths, acts, derive_seed(cfg.seed, "discriminator_init"));
}

namespace {

void zero(Gradients& g) {
  for (LayerGrads& lg : g.layers) {
    std::fill(lg.weights.data.begin(), lg.weights.data.end(), 0.0);
    std::fill(lg.bias.begin(), lg.bias.end(), 0.0);
  }
}

/// Per-epoch validation metrics: probes fit on the first half of the
/// sanitized validation set to recover S, scored on the second half.
/// A probe that cannot be fit (degenerate half) is skipped; if no family
/// fits, the epoch records chance-level protection.
EpochRecord trace_epoch(int epoch, const Network& sanitizer, const EncodedMatrix& validation,
                        const TrainConfig& cfg, TrainStats& stats) {
  EpochRecord rec;
  rec.epoch = epoch;
  const EncodedMatrix san =
      sanitize(sanitizer, validation,
               derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(epoch), "trace_noise"),
               cfg.noise.distribution);
  const EncodedMatrix orig_no_s = drop_column(validation, validation.s_col);
  rec.fidelity = fidelity(orig_no_s, san);

  const std::vector<int> s = binary_column(validation, validation.s_col);
  const std::size_t half = validation.n_rows / 2;
  std::vector<std::size_t> fit_rows(half), eval_rows(validation.n_rows - half);
  std::iota(fit_rows.begin(), fit_rows.end(), 0);
  std::iota(eval_rows.begin(), eval_rows.end(), half);
  const EncodedMatrix fit_x = select_rows(san, fit_rows);
  const EncodedMatrix eval_x = select_rows(san, eval_rows);
  std::vector<int> fit_s(s.begin(), s.begin() + half);
  std::vector<int> eval_s(s.begin() + half, s.end());

  double majority = 0.0;
  for (int v : eval_s) majority += v;
  majority /= static_cast<double>(eval_s.size());
  majority = std::max(majority, 1.0 - majority);

  rec.ber_min = 0.5;
  rec.s_acc = majority;
  bool any = false;
  for (ProbeFamily family : kAllFamilies) {
    try {
      const Classifier probe =
          Classifier::fit(family, fit_x, fit_s,
                          derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                      static_cast<std::uint64_t>(family), "trace_probe"),
                          cfg.trace_probes);
      const std::vector<int> pred = probe.predict(eval_x);
      const double b = ber(pred, eval_s);
      if (!any || b < rec.ber_min) {
        rec.ber_min = b;
        rec.s_acc = s_acc(pred, eval_s);
        any = true;
      }
    } catch (const DataError&) {
      stats.trace_probe_failures += 1;
    }
  }
  return rec;
}

}  // namespace

EncodedMatrix sanitize(const Network& sanitizer, const EncodedMatrix& records,
                       std::uint64_t noise_seed, NoiseDistribution noise_dist) {
  if (records.s_col < 0 || records.y_col < 0) {
    throw DataError("sanitize: records must carry the sensitive and decision columns");
  }
  const std::size_t noise_dim = sanitizer.input_width() - records.n_cols;
  if (sanitizer.input_width() < records.n_cols ||
      sanitizer.output_width() != records.n_cols - 1) {
    throw DataError("sanitize: record layout does not match the sanitizer widths");
  }
  Rng noise(noise_seed);
  EncodedMatrix out;
  out.n_rows = records.n_rows;
  out.n_cols = records.n_cols - 1;
  out.values.assign(out.n_rows * out.n_cols, 0.0);
  out.record_ids = records.record_ids;
  const std::size_t s_col = static_cast<std::size_t>(records.s_col);
  for (std::size_t c = 0; c < records.n_cols; ++c) {
    if (c == s_col) continue;
    if (!records.column_names.empty()) out.column_names.push_back(records.column_names[c]);
  }
  out.s_col = -1;
  out.y_col = records.y_col > records.s_col ? records.y_col - 1 : records.y_col;

  std::vector<double> input(records.n_cols + noise_dim);
  for (std::size_t r = 0; r < records.n_rows; ++r) {
    const auto row = records.row(r);
    std::copy(row.begin(), row.end(), input.begin());
    for (std::size_t k = 0; k < noise_dim; ++k) {
      input[records.n_cols + k] = sample_noise(noise, noise_dist);
    }
    const std::vector<double> y = sanitizer.evaluate(input);
    for (std::size_t c = 0; c < out.n_cols; ++c) {
      out.at(r, c) = std::clamp(y[c], 0.0, 1.0);
    }
  }
  return out;
}

SanitizerBundle train(const EncodedMatrix& train_set, const EncodedMatrix& validation_set,
                      const TrainConfig& config, std::ostream* log) {
  config.validate();
  if (train_set.s_col < 0 || train_set.y_col < 0) {
    throw DataError("train: encoded matrix must carry the sensitive and decision columns");
  }
  if (train_set.n_rows == 0) throw DataError("train: empty training set");
  if (validation_set.n_cols != train_set.n_cols ||
      validation_set.s_col != train_set.s_col || validation_set.y_col != train_set.y_col) {
    throw DataError("train: validation layout does not match training layout");
  }

  SanitizerBundle bundle;
  bundle.config = config;
  bundle.sanitizer = make_sanitizer_network(train_set.n_cols, config);
  bundle.discriminator = make_discriminator_network(train_set.n_cols, config);

  Network& san = bundle.sanitizer;
  Network& disc = bundle.discriminator;
  AdamState adam_san(san, config.sanitizer_lr);
  AdamState adam_disc(disc, config.discriminator_lr);

  const std::size_t n = train_set.n_rows;
  const std::size_t width = train_set.n_cols;
  const std::size_t out_width = width - 1;
  const std::size_t s_col = static_cast<std::size_t>(train_set.s_col);
  const double alpha = config.alpha;
  const std::vector<int> s_all = binary_column(train_set, s_col);

  Rng order_rng(derive_seed(config.seed, "batch_order"));
  Rng noise_rng(derive_seed(config.seed, "train_noise"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  Gradients disc_grads = disc.zero_gradients();
  Gradients san_grads = san.zero_gradients();
  std::vector<double> san_input(width + config.noise.dim);
  std::vector<double> disc_loss_grad(1);
  std::vector<double> node_grad(out_width);

  // reusable per-batch buffers
  const std::size_t max_batch = std::min<std::size_t>(config.batch_size, n);
  std::vector<std::vector<double>> san_out(max_batch);
  std::vector<double> batch_noise(max_batch * config.noise.dim);
  std::vector<int> batch_s(max_batch);
  std::vector<double> disc_pred(max_batch);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::size_t b = stop - start;

      // shared noise for this batch, one block per record
      for (std::size_t i = 0; i < b * config.noise.dim; ++i) {
        batch_noise[i] = sample_noise(noise_rng, config.noise.distribution);
      }

      std::size_t n_group[2] = {0, 0};
      for (std::size_t i = 0; i < b; ++i) {
        batch_s[i] = s_all[order[start + i]];
        n_group[batch_s[i]] += 1;
      }
      const bool both_groups = n_group[0] > 0 && n_group[1] > 0;
      if (!both_groups && alpha > 0.0) {
        bundle.stats.skipped_adversarial_batches += 1;
        if (log != nullptr) {
          *log << "epoch " << epoch << " batch " << batch_index
               << ": single sensitive group, adversarial term skipped\n";
        }
      }

      // sanitized outputs under the fixed sanitizer
      for (std::size_t i = 0; i < b; ++i) {
        const auto row = train_set.row(order[start + i]);
        std::copy(row.begin(), row.end(), san_input.begin());
        for (std::size_t k = 0; k < config.noise.dim; ++k) {
          san_input[width + k] = batch_noise[i * config.noise.dim + k];
        }
        const std::vector<double>& y = san.forward(
            std::span<const double>(san_input.data(), width + config.noise.dim));
        san_out[i].assign(y.begin(), y.end());
      }

      // discriminator phase: `ratio` MSE steps on this batch
      for (int step = 0; step < config.training_ratio; ++step) {
        zero(disc_grads);
        double disc_loss = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
          const std::vector<double>& p = disc.forward(san_out[i]);
          const double diff = p[0] - static_cast<double>(batch_s[i]);
          disc_loss += diff * diff;
          disc_loss_grad[0] = 2.0 * diff / static_cast<double>(b);
          disc.backward_accumulate(disc_loss_grad, disc_grads);
        }
        disc_loss /= static_cast<double>(b);
        if (!std::isfinite(disc_loss)) {
          throw DivergenceError("training diverged: non-finite discriminator loss at epoch " +
                                std::to_string(epoch) + ", batch " + std::to_string(batch_index));
        }
        adam_disc.step(disc, disc_grads);
        bundle.stats.discriminator_steps += 1;
        bundle.stats.discriminator_records += static_cast<long>(b);
      }

      // sanitizer phase: one accumulated step on the vector loss
      const double recon_w = (1.0 - alpha) / static_cast<double>(b);
      // d(adversarial)/d(disc output) is constant per group:
      //   alpha * -1/(2 n0) for S=0, alpha * +1/(2 n1) for S=1
      const double adv_g0 = both_groups ? -alpha / (2.0 * static_cast<double>(n_group[0])) : 0.0;
      const double adv_g1 = both_groups ? alpha / (2.0 * static_cast<double>(n_group[1])) : 0.0;

      zero(san_grads);
      double recon_value = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t r = order[start + i];
        const auto row = train_set.row(r);
        std::copy(row.begin(), row.end(), san_input.begin());
        for (std::size_t k = 0; k < config.noise.dim; ++k) {
          san_input[width + k] = batch_noise[i * config.noise.dim + k];
        }
        const std::vector<double>& y = san.forward(
            std::span<const double>(san_input.data(), width + config.noise.dim));

        std::size_t out_c = 0;
        for (std::size_t c = 0; c < width; ++c) {
          if (c == s_col) continue;
          const double diff = y[out_c] - train_set.at(r, c);
          recon_value += std::fabs(diff);
          node_grad[out_c] = recon_w * (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0));
          ++out_c;
        }
        if (both_groups && alpha > 0.0) {
          const std::vector<double>& p = disc.forward(y);
          disc_pred[i] = p[0];
          disc_loss_grad[0] = batch_s[i] == 0 ? adv_g0 : adv_g1;
          const std::vector<double> through = disc.input_gradient(disc_loss_grad);
          for (std::size_t c = 0; c < out_width; ++c) node_grad[c] += through[c];
        }
        san.backward_accumulate(node_grad, san_grads);
      }
      double batch_loss = recon_value * recon_w;
      if (both_groups && alpha > 0.0) {
        batch_loss += alpha * (0.5 - soft_ber(std::span<const double>(disc_pred.data(), b),
                                              std::span<const int>(batch_s.data(), b)));
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("training diverged: non-finite sanitizer loss at epoch " +
                              std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      }
      adam_san.step(san, san_grads);
      bundle.stats.sanitizer_steps += 1;
    }

    bundle.checkpoints.push_back(san);
    bundle.trace.push_back(
        trace_epoch(epoch, san, validation_set, config, bundle.stats));
    if (log != nullptr) {
      const EpochRecord& rec = bundle.trace.back();
      *log << "epoch " << rec.epoch << ": ber_min=" << rec.ber_min << " sacc=" << rec.s_acc
           << " fid=" << rec.fidelity << "\n";
    }
  }

  bundle.selected_epoch = heuristic_a(bundle.trace);
  return bundle;
}

// --- run-directory io --------------------------------------------------------

namespace {

std::string epoch_filename(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03d.ckpt", epoch);
  return buf;
}

}  // namespace

void save_bundle(const SanitizerBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t e = 0; e < bundle.checkpoints.size(); ++e) {
    save_network(bundle.checkpoints[e], dir / epoch_filename(static_cast<int>(e)));
  }
  save_network(bundle.discriminator, dir / "discriminator.ckpt");

  std::ofstream trace(dir / "trace.csv", std::ios::trunc);
  if (!trace) throw DataError("cannot write trace: " + (dir / "trace.csv").string());
  trace << "epoch,ber_min,sacc,fid\n";
  for (const EpochRecord& rec : bundle.trace) {
    trace << rec.epoch << ',' << format_value(rec.ber_min) << ',' << format_value(rec.s_acc)
          << ',' << format_value(rec.fidelity) << '\n';
  }

  ordered_json j;
  j["config"] = ordered_json::parse(bundle.config.to_json_string());
  j["selected_epoch"] = bundle.selected_epoch;
  j["stats"] = {{"sanitizer_steps", bundle.stats.sanitizer_steps},
                {"discriminator_steps", bundle.stats.discriminator_steps},
                {"discriminator_records", bundle.stats.discriminator_records},
                {"skipped_adversarial_batches", bundle.stats.skipped_adversarial_batches},
                {"trace_probe_failures", bundle.stats.trace_probe_failures}};
  std::ofstream manifest(dir / "manifest.json", std::ios::trunc);
  if (!manifest) throw DataError("cannot write manifest: " + (dir / "manifest.json").string());
  manifest << j.dump(2) << "\n";
}

Network load_epoch_checkpoint(const std::filesystem::path& dir, int epoch) {
  return load_network(dir / epoch_filename(epoch));
}

std::vector<EpochRecord> load_trace(const std::filesystem::path& dir) {
  std::ifstream is(dir / "trace.csv");
  if (!is) throw DataError("cannot open trace: " + (dir / "trace.csv").string());
  std::vector<EpochRecord> trace;
  std::string line;
  if (!std::getline(is, line)) throw DataError("trace.csv is empty");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    EpochRecord rec;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &rec.epoch, &rec.ber_min, &rec.s_acc,
                    &rec.fidelity) != 4) {
      throw DataError("trace.csv: malformed line: " + line);
    }
    trace.push_back(rec);
  }
  return trace;
}

int load_selected_epoch(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw DataError("cannot open manifest: " + (dir / "manifest.json").string());
  std::stringstream ss;
  ss << is.rdbuf();
  ordered_json j = ordered_json::parse(ss.str());
  return j.at("selected_epoch").get<int>();
}

}  // namespace fairsan
