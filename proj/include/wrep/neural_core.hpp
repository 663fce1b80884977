#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "wrep/matrix.hpp"
#include "wrep/rng.hpp"

namespace wrep {

enum class Mode { Train, Infer };

// ---------------------------------------------------------------------------
// Dense layer

struct LinearLayer {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out

  LinearLayer() = default;
  LinearLayer(std::size_t in, std::size_t out)
      : in_features(in), out_features(out), weights(in * out, 0.0), bias(out, 0.0) {}

  double& weight(std::size_t o, std::size_t i) { return weights[o * in_features + i]; }
  double weight(std::size_t o, std::size_t i) const { return weights[o * in_features + i]; }

  friend bool operator==(const LinearLayer&, const LinearLayer&) = default;
};

std::vector<double> linear_forward(const LinearLayer& layer, std::span<const double> x);
Matrix linear_forward(const LinearLayer& layer, const Matrix& x);

/// Accumulates dW += dy^T x and db += sum(dy) into `grad`; returns dx when requested.
void linear_backward(const LinearLayer& layer, const Matrix& x, const Matrix& dy, LinearLayer& grad,
                     Matrix* dx = nullptr);

// ---------------------------------------------------------------------------
// Activations

std::vector<double> relu(std::span<const double> x);
std::vector<double> tanh_act(std::span<const double> x);

// ---------------------------------------------------------------------------
// Batch normalization

struct BatchNormState {
  std::vector<double> gain;
  std::vector<double> shift;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;
  /// Frozen layers normalize with running statistics even in Train mode and
  /// never update them.
  bool frozen = false;

  BatchNormState() = default;
  explicit BatchNormState(std::size_t width)
      : gain(width, 1.0), shift(width, 0.0), running_mean(width, 0.0), running_var(width, 1.0) {}

  std::size_t width() const { return gain.size(); }
  friend bool operator==(const BatchNormState&, const BatchNormState&) = default;
};

/// Values saved by batchnorm_forward for the backward pass.
struct BatchNormCache {
  Matrix normalized;            // x_hat
  std::vector<double> inv_std;  // per column
  bool batch_statistics = false;
};

/// Train mode (not frozen): normalize by biased batch statistics and update
/// the running averages (running_var tracks the unbiased batch variance).
/// Otherwise normalize by the running statistics. Train mode needs >= 2 rows.
Matrix batchnorm_forward(BatchNormState& state, const Matrix& x, Mode mode, BatchNormCache* cache = nullptr);
/// Inference-only overload; never mutates the state.
Matrix batchnorm_forward(const BatchNormState& state, const Matrix& x, BatchNormCache* cache = nullptr);

/// Accumulates d(gain) and d(shift); returns d(input).
Matrix batchnorm_backward(const BatchNormState& state, const BatchNormCache& cache, const Matrix& dy,
                          std::span<double> dgain, std::span<double> dshift);

// ---------------------------------------------------------------------------
// Dropout

struct DropoutSpec {
  double rate = 0.0;
  friend bool operator==(const DropoutSpec&, const DropoutSpec&) = default;
};

/// Inverted dropout. In Train mode each unit is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); Infer mode is the identity.
std::vector<double> dropout_forward(const DropoutSpec& spec, std::span<const double> x, Mode mode, Rng& rng);
/// Batched form; `mask` (if given) receives the per-element multiplier.
Matrix dropout_forward(const DropoutSpec& spec, const Matrix& x, Mode mode, Rng& rng, Matrix* mask = nullptr);

// ---------------------------------------------------------------------------
// Huber loss

/// Loss of a single residual r = y - yhat.
double huber(double residual, double delta);
/// d huber / d yhat for a single residual.
double huber_grad(double residual, double delta);

/// Sum over components of the elementwise Huber loss.
double huber(std::span<const double> y, std::span<const double> yhat, double delta);
std::vector<double> huber_grad(std::span<const double> y, std::span<const double> yhat, double delta);

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class OptimizerState {
 public:
  OptimizerState() = default;
  /// One moment buffer pair per parameter block of the given size.
  OptimizerState(const std::vector<std::size_t>& block_sizes, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

  friend void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                        OptimizerState& state);
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// One bias-corrected adaptive-moment update. Throws std::invalid_argument
/// when block shapes disagree with the optimizer state.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               OptimizerState& state);

// ---------------------------------------------------------------------------
// Gradient verification

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t probes = 0;
  std::size_t worst_index = 0;
};

/// Compares `analytic` against central differences (f(t+h) - f(t-h)) / 2h
/// on `probes` coordinates drawn without replacement (all of them if
/// probes >= size). Relative error is |a - n| / max(|a|, |n|), taken as 0
/// when both are exactly zero.
GradCheckResult grad_check(const std::function<double(std::span<const double>)>& loss,
                           std::span<const double> theta, std::span<const double> analytic, std::size_t probes,
                           double h, std::uint64_t seed);

}  // namespace wrep
