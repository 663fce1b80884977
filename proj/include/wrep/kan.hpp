#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wrep/dataset.hpp"
#include "wrep/matrix.hpp"
#include "wrep/neural_core.hpp"
#include "wrep/rng.hpp"

namespace wrep {

/// Kolmogorov-Arnold regressor shape.
///
///   inner:       m_inner branches, each Dropout(BatchNorm(ReLU(W_j x + b_j)))
///                mapping n_inputs -> inner_width
///   kolmogorov:  concatenated branches (m_inner * inner_width) -> kolmogorov_width,
///                followed by tanh (the Arnold activation)
///   output:      kolmogorov_width -> 2 weighted sum with bias
struct KanConfig {
  std::size_t n_inputs = 1;
  std::size_t m_inner = 15;
  std::size_t inner_width = 16;
  std::size_t kolmogorov_width = 3;
  double dropout_rate = 0.1;
  double bn_momentum = 0.1;
  std::uint64_t seed = 0;

  /// Defaults with kolmogorov_width = 2 * n_inputs + 1.
  static KanConfig for_inputs(std::size_t n_inputs, std::uint64_t seed = 0);

  void validate() const;
  friend bool operator==(const KanConfig&, const KanConfig&) = default;
};

struct InnerBranch {
  LinearLayer dense;
  BatchNormState norm;
  DropoutSpec dropout;
  friend bool operator==(const InnerBranch&, const InnerBranch&) = default;
};

struct KanParams {
  KanConfig config;
  std::vector<InnerBranch> inner;
  LinearLayer kolmogorov;
  LinearLayer output;
  friend bool operator==(const KanParams&, const KanParams&) = default;
};

/// Seeded initialization: ReLU-fed layers draw N(0, 2/fan_in), the tanh
/// stage and output head N(0, 1/fan_in); biases zero; BN gain 1, shift 0.
KanParams init_kan(const KanConfig& cfg);

/// Trainable blocks in a fixed order: per branch (dense W, dense b, BN gain,
/// BN shift), then kolmogorov W, b, then output W, b. Running statistics are
/// not trainable.
std::vector<std::span<double>> trainable_blocks(KanParams& p);
std::vector<std::span<const double>> trainable_blocks(const KanParams& p);

std::size_t parameter_count(const KanParams& p);
std::vector<double> flatten(const KanParams& p);
void unflatten(KanParams& p, std::span<const double> flat);

/// Copy of `p` with every trainable value set to zero; used as a gradient buffer.
KanParams zeros_like(const KanParams& p);

/// Intermediate activations kept for backward().
struct KanCache {
  Matrix input;
  std::vector<Matrix> pre_activation;  // W_j x + b_j per branch
  std::vector<BatchNormCache> norm;
  std::vector<Matrix> dropout_mask;
  Matrix concatenated;
  Matrix arnold;  // tanh output
};

/// Batched forward pass producing an N x 2 matrix. Train mode uses batch
/// statistics (updating running averages) and dropout, and needs N >= 2
/// unless every BN layer is frozen.
Matrix forward_batch(KanParams& p, const Matrix& x, Mode mode, Rng& rng, KanCache* cache = nullptr);
/// Inference pass; row i equals forward(p, x.row(i)) exactly.
Matrix forward_batch(const KanParams& p, const Matrix& x, KanCache* cache = nullptr);

Position forward(const KanParams& p, std::span<const double> x);
Position forward(KanParams& p, std::span<const double> x, Mode mode, Rng& rng);

/// Accumulates parameter gradients of sum(dy . output) into `grads`
/// (shaped like `p`, see zeros_like).
void backward(const KanParams& p, const KanCache& cache, const Matrix& dy, KanParams& grads);

}  // namespace wrep
