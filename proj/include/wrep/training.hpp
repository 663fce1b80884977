#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "wrep/attacks.hpp"
#include "wrep/dataset.hpp"
#include "wrep/kan.hpp"
#include "wrep/model.hpp"

namespace wrep {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  std::size_t patience = 10;
  double delta = 1.0;  // Huber threshold, meters
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-sample loss weights; positive and summing to 1.
struct SampleWeights {
  std::vector<double> values;

  static SampleWeights uniform(std::size_t n);
  double sum() const;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;  // 1-based
  bool stopped_early = false;

  std::size_t epochs_run() const { return val_loss.size(); }
};

void write_history_csv(const TrainHistory& h, std::ostream& out);

/// Sign of a 2-D residual: sign of (rx + ry), zero counted as positive.
int residual_sign(Position residual);

/// omega_i = max(N-, N+) / N_{t_i}, normalized to sum 1. Samples on the
/// minority side of the residual sign get the larger weight.
SampleWeights compute_sample_weights(std::span<const Position> residuals);

struct TrainResult {
  PositioningModel model;
  TrainHistory history;
  SampleWeights weights;
};

/// Mean over samples of the summed per-coordinate Huber loss, Infer mode.
double mean_huber_loss(const PositioningModel& m, const Dataset& d, double delta);

/// Mini-batch training minimizing sum_i w_i * Huber_i with Adam and early
/// stopping on validation loss. Returns the best-epoch snapshot.
///
/// `weights` defaults to uniform 1/N. The scaler is fitted on `train`
/// features unless `scaler` is supplied. Throws NumericalError on a
/// non-finite loss.
TrainResult train(const Dataset& train, const Dataset& val, const std::optional<SampleWeights>& weights,
                  const TrainConfig& cfg, const KanConfig& kan_cfg,
                  const std::optional<RobustScalerParams>& scaler = std::nullopt);

struct PipelineResult {
  TrainResult base;
  TrainResult robust;
  std::size_t robust_train_size = 0;
};

/// Base on clean data, then Robust on train + A with weights from the Base
/// model's residuals on train + A. Both models share the scaler fitted on
/// the clean training features.
PipelineResult train_robust_pipeline(const Dataset& train, const Dataset& val, std::span<const AttackSpec> attacks,
                                     const TrainConfig& cfg, const KanConfig& kan_cfg);

}  // namespace wrep
