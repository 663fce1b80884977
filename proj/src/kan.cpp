#include "wrep/kan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wrep {

KanConfig KanConfig::for_inputs(std::size_t n_inputs, std::uint64_t seed) {
  KanConfig cfg;
  cfg.n_inputs = n_inputs;
  cfg.kolmogorov_width = 2 * n_inputs + 1;
  cfg.seed = seed;
  return cfg;
}

void KanConfig::validate() const {
  if (n_inputs < 1) throw std::invalid_argument("kan: n_inputs must be >= 1");
  if (m_inner < 1) throw std::invalid_argument("kan: m_inner must be >= 1");
  if (inner_width < 1) throw std::invalid_argument("kan: inner_width must be >= 1");
  if (kolmogorov_width < 1) throw std::invalid_argument("kan: kolmogorov_width must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("kan: dropout_rate must be in [0, 1)");
  if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw std::invalid_argument("kan: bn_momentum must be in [0, 1]");
}

namespace {

void gaussian_fill(std::vector<double>& w, double variance, Rng& rng) {
  const double sd = std::sqrt(variance);
  for (double& v : w) v = sd * rng.normal();
}

}  // namespace

KanParams init_kan(const KanConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  KanParams p;
  p.config = cfg;
  p.inner.reserve(cfg.m_inner);
  for (std::size_t j = 0; j < cfg.m_inner; ++j) {
    InnerBranch b{LinearLayer(cfg.n_inputs, cfg.inner_width), BatchNormState(cfg.inner_width),
                  DropoutSpec{cfg.dropout_rate}};
    b.norm.momentum = cfg.bn_momentum;
    gaussian_fill(b.dense.weights, 2.0 / static_cast<double>(cfg.n_inputs), rng);
    p.inner.push_back(std::move(b));
  }
  const std::size_t concat = cfg.m_inner * cfg.inner_width;
  p.kolmogorov = LinearLayer(concat, cfg.kolmogorov_width);
  gaussian_fill(p.kolmogorov.weights, 1.0 / static_cast<double>(concat), rng);
  p.output = LinearLayer(cfg.kolmogorov_width, 2);
  gaussian_fill(p.output.weights, 1.0 / static_cast<double>(cfg.kolmogorov_width), rng);
  return p;
}

namespace {

template <class Params, class Span>
std::vector<Span> blocks_of(Params& p) {
  std::vector<Span> out;
  out.reserve(4 * p.inner.size() + 4);
  for (auto& b : p.inner) {
    out.emplace_back(b.dense.weights);
    out.emplace_back(b.dense.bias);
    out.emplace_back(b.norm.gain);
    out.emplace_back(b.norm.shift);
  }
  out.emplace_back(p.kolmogorov.weights);
  out.emplace_back(p.kolmogorov.bias);
  out.emplace_back(p.output.weights);
  out.emplace_back(p.output.bias);
  return out;
}

}  // namespace

std::vector<std::span<double>> trainable_blocks(KanParams& p) { return blocks_of<KanParams, std::span<double>>(p); }

std::vector<std::span<const double>> trainable_blocks(const KanParams& p) {
  return blocks_of<const KanParams, std::span<const double>>(p);
}

std::size_t parameter_count(const KanParams& p) {
  std::size_t n = 0;
  for (const auto& b : trainable_blocks(p)) n += b.size();
  return n;
}

std::vector<double> flatten(const KanParams& p) {
  std::vector<double> flat;
  flat.reserve(parameter_count(p));
  for (const auto& b : trainable_blocks(p)) flat.insert(flat.end(), b.begin(), b.end());
  return flat;
}

void unflatten(KanParams& p, std::span<const double> flat) {
  if (flat.size() != parameter_count(p)) throw std::invalid_argument("unflatten: size mismatch");
  std::size_t offset = 0;
  for (auto& b : trainable_blocks(p)) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), b.size(), b.begin());
    offset += b.size();
  }
}

KanParams zeros_like(const KanParams& p) {
  KanParams z = p;
  for (auto& b : trainable_blocks(z)) std::fill(b.begin(), b.end(), 0.0);
  return z;
}

namespace {

// Shared body of the Train and Infer passes. `mutable_params` is non-null
// only in Train mode.
Matrix run_forward(const KanParams& p, KanParams* mutable_params, const Matrix& x, Mode mode, Rng* rng,
                   KanCache* cache) {
  const KanConfig& cfg = p.config;
  if (x.cols() != cfg.n_inputs) throw std::invalid_argument("kan forward: input width mismatch");
  if (mode == Mode::Train && x.rows() < 2) {
    const bool all_frozen = std::all_of(p.inner.begin(), p.inner.end(), [](const InnerBranch& b) { return b.norm.frozen; });
    if (!all_frozen) throw std::invalid_argument("kan forward: Train mode needs a batch of at least 2");
  }

  const std::size_t n = x.rows();
  const std::size_t width = cfg.inner_width;
  Matrix concatenated(n, cfg.m_inner * width);
  if (cache) {
    cache->input = x;
    cache->pre_activation.assign(cfg.m_inner, Matrix());
    cache->norm.assign(cfg.m_inner, BatchNormCache());
    cache->dropout_mask.assign(cfg.m_inner, Matrix());
  }

  for (std::size_t j = 0; j < cfg.m_inner; ++j) {
    const InnerBranch& branch = p.inner[j];
    Matrix z = linear_forward(branch.dense, x);
    Matrix a(n, width);
    std::transform(z.data().begin(), z.data().end(), a.data().begin(), [](double v) { return v > 0.0 ? v : 0.0; });

    BatchNormCache* norm_cache = cache ? &cache->norm[j] : nullptr;
    Matrix normed = mutable_params ? batchnorm_forward(mutable_params->inner[j].norm, a, mode, norm_cache)
                                   : batchnorm_forward(branch.norm, a, norm_cache);

    Matrix mask;
    Matrix dropped;
    if (mode == Mode::Train) {
      dropped = dropout_forward(branch.dropout, normed, mode, *rng, cache ? &mask : nullptr);
    } else {
      dropped = std::move(normed);
      if (cache) mask = Matrix(n, width, 1.0);
    }

    for (std::size_t r = 0; r < n; ++r) std::copy_n(dropped.row(r).begin(), width, concatenated.row(r).begin() + static_cast<std::ptrdiff_t>(j * width));
    if (cache) {
      cache->pre_activation[j] = std::move(z);
      cache->dropout_mask[j] = std::move(mask);
    }
  }

  Matrix arnold = linear_forward(p.kolmogorov, concatenated);
  for (double& v : arnold.data()) v = std::tanh(v);
  Matrix out = linear_forward(p.output, arnold);
  if (cache) {
    cache->concatenated = std::move(concatenated);
    cache->arnold = std::move(arnold);
  }
  return out;
}

}  // namespace

Matrix forward_batch(KanParams& p, const Matrix& x, Mode mode, Rng& rng, KanCache* cache) {
  if (mode == Mode::Infer) return run_forward(p, nullptr, x, mode, &rng, cache);
  return run_forward(p, &p, x, mode, &rng, cache);
}

Matrix forward_batch(const KanParams& p, const Matrix& x, KanCache* cache) {
  return run_forward(p, nullptr, x, Mode::Infer, nullptr, cache);
}

Position forward(const KanParams& p, std::span<const double> x) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  const Matrix y = forward_batch(p, m);
  return {y(0, 0), y(0, 1)};
}

Position forward(KanParams& p, std::span<const double> x, Mode mode, Rng& rng) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  const Matrix y = forward_batch(p, m, mode, rng);
  return {y(0, 0), y(0, 1)};
}

void backward(const KanParams& p, const KanCache& cache, const Matrix& dy, KanParams& grads) {
  const KanConfig& cfg = p.config;
  const std::size_t n = dy.rows();
  if (dy.cols() != 2 || cache.arnold.rows() != n) throw std::invalid_argument("kan backward: shape mismatch");

  Matrix d_arnold;
  linear_backward(p.output, cache.arnold, dy, grads.output, &d_arnold);
  // tanh'(k) = 1 - tanh(k)^2
  for (std::size_t i = 0; i < d_arnold.data().size(); ++i) {
    const double t = cache.arnold.data()[i];
    d_arnold.data()[i] *= 1.0 - t * t;
  }
  Matrix d_concat;
  linear_backward(p.kolmogorov, cache.concatenated, d_arnold, grads.kolmogorov, &d_concat);

  const std::size_t width = cfg.inner_width;
  Matrix d_branch(n, width);
  for (std::size_t j = 0; j < cfg.m_inner; ++j) {
    const Matrix& mask = cache.dropout_mask[j];
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < width; ++c) d_branch(r, c) = d_concat(r, j * width + c) * mask(r, c);

    auto& g = grads.inner[j];
    Matrix d_relu = batchnorm_backward(p.inner[j].norm, cache.norm[j], d_branch, g.norm.gain, g.norm.shift);
    const Matrix& z = cache.pre_activation[j];
    for (std::size_t i = 0; i < d_relu.data().size(); ++i) {
      if (!(z.data()[i] > 0.0)) d_relu.data()[i] = 0.0;
    }
    linear_backward(p.inner[j].dense, cache.input, d_relu, g.dense);
  }
}

}  // namespace wrep
