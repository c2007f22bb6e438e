#include "dalc/lstm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "dalc/hashing.hpp"
#include "dalc/metrics.hpp"

namespace dalc {

namespace {

void validate_config(const LstmConfig& c) {
  if (c.hidden_layers < 1) throw ConfigError("hidden_layers must be >= 1");
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (c.hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (c.window_len < 1) throw ConfigError("window_len must be >= 1");
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  double uniform01() {
    state = splitmix64(state);
    return (static_cast<double>(state >> 11) + 1.0) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t next_u64() { return state = splitmix64(state); }
};

}  // namespace

WeightLayout::WeightLayout(int layers, int units)
    : layers_(layers), units_(units) {
  if (layers < 1 || units < 1)
    throw ConfigError("weight layout needs layers >= 1 and units >= 1");
  total_ = layer_offset(layers_) + units_ + 1;
}

int WeightLayout::gate_stride(int layer) const {
  return units_ * input_size(layer) + units_ * units_ + units_;
}

int WeightLayout::layer_offset(int layer) const {
  int off = 0;
  for (int l = 0; l < layer; ++l) off += kGates * gate_stride(l);
  return off;
}

int WeightLayout::wx(int layer, int gate) const {
  return layer_offset(layer) + gate * gate_stride(layer);
}

int WeightLayout::wh(int layer, int gate) const {
  return wx(layer, gate) + units_ * input_size(layer);
}

int WeightLayout::bias(int layer, int gate) const {
  return wh(layer, gate) + units_ * units_;
}

int WeightLayout::readout_w() const { return layer_offset(layers_); }

int WeightLayout::readout_b() const { return readout_w() + units_; }

TrainedModel init_weights(const LstmConfig& config) {
  validate_config(config);
  const WeightLayout layout(config.hidden_layers, config.hidden_units);
  TrainedModel model;
  model.config = config;
  model.weights.assign(layout.total(), 0.0);

  Rng rng(splitmix64(config.seed ^ 0x5eedf00dULL));
  const int units = layout.units();
  for (int l = 0; l < layout.layers(); ++l) {
    const int in = layout.input_size(l);
    const double wx_bound = std::sqrt(6.0 / (in + units));
    const double wh_bound = std::sqrt(6.0 / (units + units));
    for (int g = 0; g < WeightLayout::kGates; ++g) {
      double* wx = model.weights.data() + layout.wx(l, g);
      for (int i = 0; i < units * in; ++i)
        wx[i] = rng.uniform(-wx_bound, wx_bound);
      double* wh = model.weights.data() + layout.wh(l, g);
      for (int i = 0; i < units * units; ++i)
        wh[i] = rng.uniform(-wh_bound, wh_bound);
      double* b = model.weights.data() + layout.bias(l, g);
      const double bias_init = g == WeightLayout::kForget ? 1.0 : 0.0;
      for (int i = 0; i < units; ++i) b[i] = bias_init;
    }
  }
  const double ro_bound = std::sqrt(6.0 / (units + 1));
  double* w = model.weights.data() + layout.readout_w();
  for (int i = 0; i < units; ++i) w[i] = rng.uniform(-ro_bound, ro_bound);
  model.weights[layout.readout_b()] = 0.0;
  return model;
}

namespace {

// Per-sample activations kept for backpropagation through time.
// Indexing: [layer][t][unit], flattened.
struct Activations {
  int layers, steps, units;
  std::vector<double> x;       // layer inputs, [layer][t][input_size(layer)]
  std::vector<int> x_offset;   // per-layer offset into x
  std::vector<double> gate_i, gate_f, gate_g, gate_o, cell, tanh_cell, hidden;
  double output = 0.0;

  Activations(const WeightLayout& lay, int t_steps)
      : layers(lay.layers()), steps(t_steps), units(lay.units()) {
    const size_t cells = static_cast<size_t>(layers) * steps * units;
    gate_i.assign(cells, 0.0);
    gate_f.assign(cells, 0.0);
    gate_g.assign(cells, 0.0);
    gate_o.assign(cells, 0.0);
    cell.assign(cells, 0.0);
    tanh_cell.assign(cells, 0.0);
    hidden.assign(cells, 0.0);
    x_offset.resize(layers);
    int total = 0;
    for (int l = 0; l < layers; ++l) {
      x_offset[l] = total;
      total += steps * lay.input_size(l);
    }
    x.assign(total, 0.0);
  }

  size_t at(int layer, int t, int unit = 0) const {
    return (static_cast<size_t>(layer) * steps + t) * units + unit;
  }
  double* x_at(int layer, int t, const WeightLayout& lay) {
    return x.data() + x_offset[layer] + static_cast<size_t>(t) * lay.input_size(layer);
  }
};

double run_forward(const WeightLayout& lay, const double* w,
                   std::span<const double> window, Activations& act) {
  const int units = lay.units();
  const int steps = static_cast<int>(window.size());
  for (int t = 0; t < steps; ++t) {
    for (int l = 0; l < lay.layers(); ++l) {
      const int in = lay.input_size(l);
      double* x = act.x_at(l, t, lay);
      if (l == 0)
        x[0] = window[t];
      else
        for (int m = 0; m < in; ++m) x[m] = act.hidden[act.at(l - 1, t, m)];

      const double* hprev =
          t > 0 ? &act.hidden[act.at(l, t - 1)] : nullptr;
      const double* cprev = t > 0 ? &act.cell[act.at(l, t - 1)] : nullptr;

      for (int u = 0; u < units; ++u) {
        double pre[WeightLayout::kGates];
        for (int g = 0; g < WeightLayout::kGates; ++g) {
          const double* wx = w + lay.wx(l, g) + static_cast<size_t>(u) * in;
          const double* wh = w + lay.wh(l, g) + static_cast<size_t>(u) * units;
          double acc = w[lay.bias(l, g) + u];
          for (int m = 0; m < in; ++m) acc += wx[m] * x[m];
          if (hprev)
            for (int m = 0; m < units; ++m) acc += wh[m] * hprev[m];
          pre[g] = acc;
        }
        const double gi = sigmoid(pre[WeightLayout::kInput]);
        const double gf = sigmoid(pre[WeightLayout::kForget]);
        const double gg = std::tanh(pre[WeightLayout::kCell]);
        const double go = sigmoid(pre[WeightLayout::kOutput]);
        const double c = gf * (cprev ? cprev[u] : 0.0) + gi * gg;
        const double tc = std::tanh(c);
        const size_t idx = act.at(l, t, u);
        act.gate_i[idx] = gi;
        act.gate_f[idx] = gf;
        act.gate_g[idx] = gg;
        act.gate_o[idx] = go;
        act.cell[idx] = c;
        act.tanh_cell[idx] = tc;
        act.hidden[idx] = go * tc;
      }
    }
  }
  double y = w[lay.readout_b()];
  const double* ro = w + lay.readout_w();
  const double* htop = &act.hidden[act.at(lay.layers() - 1, steps - 1)];
  for (int u = 0; u < units; ++u) y += ro[u] * htop[u];
  act.output = y;
  return y;
}

// Gradient of loss = (output - target)^2 with respect to every weight,
// accumulated into `grad` (same layout as the weights).
void run_backward(const WeightLayout& lay, const double* w, double target,
                  const Activations& act, double* grad) {
  const int units = lay.units();
  const int steps = act.steps;
  const int layers = lay.layers();
  const double dy = 2.0 * (act.output - target);

  // dh flowing into each (layer, t) from the readout and from the layer
  // above; recurrent contributions are carried inside the time loop.
  std::vector<double> dh_in(static_cast<size_t>(layers) * steps * units, 0.0);
  const double* ro = w + lay.readout_w();
  {
    const size_t top = act.at(layers - 1, steps - 1);
    for (int u = 0; u < units; ++u) dh_in[top + u] += dy * ro[u];
    grad[lay.readout_b()] += dy;
    double* gro = grad + lay.readout_w();
    const double* htop = &act.hidden[top];
    for (int u = 0; u < units; ++u) gro[u] += dy * htop[u];
  }

  std::vector<double> dh_rec(units), dc_rec(units), da(4 * units);
  for (int l = layers - 1; l >= 0; --l) {
    const int in = lay.input_size(l);
    std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
    std::fill(dc_rec.begin(), dc_rec.end(), 0.0);
    for (int t = steps - 1; t >= 0; --t) {
      const size_t idx0 = act.at(l, t);
      const double* hprev = t > 0 ? &act.hidden[act.at(l, t - 1)] : nullptr;
      const double* cprev = t > 0 ? &act.cell[act.at(l, t - 1)] : nullptr;
      const double* x =
          act.x.data() + act.x_offset[l] + static_cast<size_t>(t) * in;

      double* da_i = da.data();
      double* da_f = da.data() + units;
      double* da_g = da.data() + 2 * units;
      double* da_o = da.data() + 3 * units;
      for (int u = 0; u < units; ++u) {
        const double dh = dh_in[idx0 + u] + dh_rec[u];
        const double gi = act.gate_i[idx0 + u];
        const double gf = act.gate_f[idx0 + u];
        const double gg = act.gate_g[idx0 + u];
        const double go = act.gate_o[idx0 + u];
        const double tc = act.tanh_cell[idx0 + u];
        const double dc = dh * go * (1.0 - tc * tc) + dc_rec[u];
        const double do_ = dh * tc;
        const double di = dc * gg;
        const double dg = dc * gi;
        const double df = dc * (cprev ? cprev[u] : 0.0);
        dc_rec[u] = dc * gf;
        da_i[u] = di * gi * (1.0 - gi);
        da_f[u] = df * gf * (1.0 - gf);
        da_g[u] = dg * (1.0 - gg * gg);
        da_o[u] = do_ * go * (1.0 - go);
      }

      static constexpr int kGateIdx[4] = {
          WeightLayout::kInput, WeightLayout::kForget, WeightLayout::kCell,
          WeightLayout::kOutput};
      std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
      for (int gi = 0; gi < 4; ++gi) {
        const int g = kGateIdx[gi];
        const double* dag = da.data() + static_cast<size_t>(gi) * units;
        double* gwx = grad + lay.wx(l, g);
        double* gwh = grad + lay.wh(l, g);
        double* gb = grad + lay.bias(l, g);
        const double* wx = w + lay.wx(l, g);
        const double* wh = w + lay.wh(l, g);
        for (int u = 0; u < units; ++u) {
          const double d = dag[u];
          if (d == 0.0) continue;
          gb[u] += d;
          double* gwxr = gwx + static_cast<size_t>(u) * in;
          for (int m = 0; m < in; ++m) gwxr[m] += d * x[m];
          if (hprev) {
            double* gwhr = gwh + static_cast<size_t>(u) * units;
            for (int m = 0; m < units; ++m) gwhr[m] += d * hprev[m];
          }
        }
        // Propagate to the layer below and to the previous time step.
        if (l > 0) {
          double* below = &dh_in[act.at(l - 1, t)];
          for (int u = 0; u < units; ++u) {
            const double d = dag[u];
            if (d == 0.0) continue;
            const double* wxr = wx + static_cast<size_t>(u) * in;
            for (int m = 0; m < in; ++m) below[m] += d * wxr[m];
          }
        }
        if (t > 0) {
          for (int u = 0; u < units; ++u) {
            const double d = dag[u];
            if (d == 0.0) continue;
            const double* whr = wh + static_cast<size_t>(u) * units;
            for (int m = 0; m < units; ++m) dh_rec[m] += d * whr[m];
          }
        }
      }
    }
  }
}

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  long step = 0;

  Adam(size_t n, double learning_rate) : lr(learning_rate), m(n, 0.0), v(n, 0.0) {}

  void update(std::vector<double>& w, const std::vector<double>& g) {
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, step);
    const double bc2 = 1.0 - std::pow(beta2, step);
    for (size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
  for (size_t i = idx.size(); i > 1; --i) {
    size_t j = rng.next_u64() % i;
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

double forward(const TrainedModel& model, std::span<const double> window) {
  if (static_cast<int>(window.size()) != model.config.window_len)
    throw DomainError("window length " + std::to_string(window.size()) +
                      " does not match the model's configured length " +
                      std::to_string(model.config.window_len));
  const WeightLayout lay = model.layout();
  Activations act(lay, static_cast<int>(window.size()));
  return run_forward(lay, model.weights.data(), window, act);
}

TrainingOutcome train(const LstmConfig& config, const DpcDataset& dataset) {
  validate_config(config);
  if (dataset.train_windows.empty())
    throw DataError("dataset has no training windows");
  if (dataset.test_windows.empty())
    throw DataError("dataset has no testing windows");
  if (dataset.window_len != config.window_len)
    throw DomainError("dataset window length " +
                      std::to_string(dataset.window_len) +
                      " does not match config window length " +
                      std::to_string(config.window_len));

  TrainedModel model = init_weights(config);
  model.normalization = dataset.normalization;
  const WeightLayout lay = model.layout();

  Activations act(lay, config.window_len);
  std::vector<double> grad(lay.total(), 0.0);
  Adam adam(lay.total(), config.learning_rate);
  std::vector<size_t> order(dataset.train_windows.size());
  std::iota(order.begin(), order.end(), 0);

  double first_epoch_loss = 0.0, final_epoch_loss = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(config.seed, 0x10000ULL + epoch));
    shuffle_indices(order, shuffle_rng);
    double loss_sum = 0.0;
    for (size_t i : order) {
      const Window& wnd = dataset.train_windows[i];
      const double y = run_forward(lay, model.weights.data(), wnd.input, act);
      const double err = y - wnd.target;
      loss_sum += err * err;
      std::fill(grad.begin(), grad.end(), 0.0);
      run_backward(lay, model.weights.data(), wnd.target, act, grad.data());
      adam.update(model.weights, grad);
    }
    const double mean_loss =
        loss_sum / static_cast<double>(dataset.train_windows.size());
    if (!std::isfinite(mean_loss))
      throw TrainingError("training diverged (non-finite loss) at epoch " +
                          std::to_string(epoch));
    if (epoch == 1) first_epoch_loss = mean_loss;
    final_epoch_loss = mean_loss;
  }
  const auto t1 = std::chrono::steady_clock::now();

  TrainingOutcome outcome;
  outcome.train_seconds = std::chrono::duration<double>(t1 - t0).count();
  outcome.epoch_seconds = outcome.train_seconds / config.epochs;
  outcome.first_epoch_loss = first_epoch_loss;
  outcome.final_epoch_loss = final_epoch_loss;

  std::vector<double> predicted;
  predicted.reserve(dataset.test_windows.size());
  for (const Window& wnd : dataset.test_windows) {
    const double y = run_forward(lay, model.weights.data(), wnd.input, act);
    predicted.push_back(dataset.normalization.denormalize(y));
  }
  outcome.aare = compute_aare(dataset.raw_test_targets, predicted);
  outcome.model = std::move(model);
  return outcome;
}

double gradient_check(const LstmConfig& config, std::span<const double> window,
                      double target) {
  validate_config(config);
  if (static_cast<int>(window.size()) != config.window_len)
    throw DomainError("window length does not match config");

  TrainedModel model = init_weights(config);
  const WeightLayout lay = model.layout();
  Activations act(lay, config.window_len);

  run_forward(lay, model.weights.data(), window, act);
  std::vector<double> analytic(lay.total(), 0.0);
  run_backward(lay, model.weights.data(), target, act, analytic.data());

  constexpr double kStep = 1e-5;
  auto loss_at = [&]() {
    const double y = run_forward(lay, model.weights.data(), window, act);
    const double err = y - target;
    return err * err;
  };

  double max_rel = 0.0;
  for (int i = 0; i < lay.total(); ++i) {
    const double saved = model.weights[i];
    model.weights[i] = saved + kStep;
    const double up = loss_at();
    model.weights[i] = saved - kStep;
    const double down = loss_at();
    model.weights[i] = saved;
    const double numeric = (up - down) / (2.0 * kStep);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-3});
    max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
  }
  return max_rel;
}

std::map<int, double> calibrate_epoch_times(int max_layers,
                                            const DpcDataset& probe,
                                            int probe_epochs,
                                            const LstmConfig& base) {
  if (max_layers < 1) throw ConfigError("max_layers must be >= 1");
  if (probe_epochs < 3)
    throw DomainError("probe_epochs must be >= 3 for a stable mean");
  std::map<int, double> times;
  for (int h = 1; h <= max_layers; ++h) {
    LstmConfig config = base;
    config.hidden_layers = h;
    config.epochs = probe_epochs;
    config.window_len = probe.window_len;
    config.seed = derive_config_seed(base.seed, h, probe_epochs);
    times[h] = train(config, probe).epoch_seconds;
  }
  return times;
}

std::uint64_t derive_config_seed(std::uint64_t base_seed, int hidden_layers,
                                 int epochs) {
  return mix_seed(mix_seed(base_seed, static_cast<std::uint64_t>(hidden_layers)),
                  static_cast<std::uint64_t>(epochs));
}

}  // namespace dalc
