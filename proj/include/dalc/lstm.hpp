#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "dalc/data.hpp"
#include "dalc/errors.hpp"

namespace dalc {

// Hyperparameters of one training run. The search varies hidden_layers and
// epochs; the rest are conventional fixed defaults.
struct LstmConfig {
  int hidden_layers = 1;
  int epochs = 100;
  int hidden_units = 32;
  int window_len = 12;  // one hour of 5-minute samples
  double learning_rate = 0.001;
  std::uint64_t seed = 0;

  friend bool operator==(const LstmConfig&, const LstmConfig&) = default;
};

// Offsets into the flat parameter vector. Gate order per layer is
// input, forget, cell, output; each gate block is [Wx | Wh | b] with
// row-major matrices. The linear readout (w, b) sits at the end.
class WeightLayout {
 public:
  static constexpr int kGates = 4;
  enum Gate { kInput = 0, kForget = 1, kCell = 2, kOutput = 3 };

  WeightLayout(int layers, int units);

  int layers() const { return layers_; }
  int units() const { return units_; }
  int input_size(int layer) const { return layer == 0 ? 1 : units_; }
  int total() const { return total_; }

  int wx(int layer, int gate) const;    // units x input_size(layer)
  int wh(int layer, int gate) const;    // units x units
  int bias(int layer, int gate) const;  // units
  int readout_w() const;                // units
  int readout_b() const;                // 1

 private:
  int layer_offset(int layer) const;
  int gate_stride(int layer) const;

  int layers_;
  int units_;
  int total_;
};

// Weights plus the normalization they were trained under. Inert data; safe
// to copy across threads.
struct TrainedModel {
  LstmConfig config;
  Normalization normalization;
  std::vector<double> weights;

  WeightLayout layout() const {
    return WeightLayout(config.hidden_layers, config.hidden_units);
  }
};

struct TrainingOutcome {
  TrainedModel model;
  double aare = 0.0;  // on the testing split, original units
  double train_seconds = 0.0;
  double epoch_seconds = 0.0;
  // Mean training loss of the first and last epoch (normalized scale).
  double first_epoch_loss = 0.0;
  double final_epoch_loss = 0.0;
};

// Deterministic function of config.seed: scaled-uniform weights with bound
// sqrt(6 / (fan_in + fan_out)), zero biases except the forget gate at 1.
TrainedModel init_weights(const LstmConfig& config);

// Next-step prediction in normalized scale. The window must be normalized
// and exactly config.window_len long.
double forward(const TrainedModel& model, std::span<const double> window);

// Trains from a fresh initialization for exactly config.epochs full passes,
// sample order reshuffled per epoch from the seed, Adam steps at batch size
// one, squared-error loss on normalized values. Reports AARE on the testing
// split in original units. Throws TrainingError (naming the epoch) if the
// loss goes non-finite.
TrainingOutcome train(const LstmConfig& config, const DpcDataset& dataset);

// Compares the analytic gradient of the squared-error loss against central
// finite differences (step 1e-5) over every parameter and returns the
// largest relative error, measured against max(|analytic|, |numeric|, 1e-3).
double gradient_check(const LstmConfig& config, std::span<const double> window,
                      double target);

// Measures the mean wall-clock seconds per epoch for each layer count in
// 1..max_layers by training probe_epochs epochs (>= 3) on the probe dataset.
std::map<int, double> calibrate_epoch_times(int max_layers,
                                            const DpcDataset& probe,
                                            int probe_epochs,
                                            const LstmConfig& base = {});

// Seed for one configuration, so distinct configurations are independent
// draws while the whole pipeline stays reproducible.
std::uint64_t derive_config_seed(std::uint64_t base_seed, int hidden_layers,
                                 int epochs);

}  // namespace dalc
