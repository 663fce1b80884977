#include "wrep/neural_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wrep {

// ---------------------------------------------------------------------------
// Dense layer

std::vector<double> linear_forward(const LinearLayer& layer, std::span<const double> x) {
  if (x.size() != layer.in_features) throw std::invalid_argument("linear_forward: input width mismatch");
  std::vector<double> y(layer.out_features);
  for (std::size_t o = 0; o < layer.out_features; ++o) {
    const double* w = layer.weights.data() + o * layer.in_features;
    double acc = 0.0;
    for (std::size_t i = 0; i < layer.in_features; ++i) acc += w[i] * x[i];
    y[o] = acc + layer.bias[o];
  }
  return y;
}

Matrix linear_forward(const LinearLayer& layer, const Matrix& x) {
  if (x.cols() != layer.in_features) throw std::invalid_argument("linear_forward: input width mismatch");
  Matrix y(x.rows(), layer.out_features);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    for (std::size_t o = 0; o < layer.out_features; ++o) {
      const double* w = layer.weights.data() + o * layer.in_features;
      double acc = 0.0;
      for (std::size_t i = 0; i < layer.in_features; ++i) acc += w[i] * xr[i];
      y(r, o) = acc + layer.bias[o];
    }
  }
  return y;
}

void linear_backward(const LinearLayer& layer, const Matrix& x, const Matrix& dy, LinearLayer& grad, Matrix* dx) {
  if (x.rows() != dy.rows() || x.cols() != layer.in_features || dy.cols() != layer.out_features) {
    throw std::invalid_argument("linear_backward: shape mismatch");
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    for (std::size_t o = 0; o < layer.out_features; ++o) {
      const double g = dy(r, o);
      if (g == 0.0) continue;
      double* gw = grad.weights.data() + o * layer.in_features;
      for (std::size_t i = 0; i < layer.in_features; ++i) gw[i] += g * xr[i];
      grad.bias[o] += g;
    }
  }
  if (dx) {
    *dx = Matrix(x.rows(), layer.in_features);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto dxr = dx->row(r);
      for (std::size_t o = 0; o < layer.out_features; ++o) {
        const double g = dy(r, o);
        const double* w = layer.weights.data() + o * layer.in_features;
        for (std::size_t i = 0; i < layer.in_features; ++i) dxr[i] += g * w[i];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Activations

std::vector<double> relu(std::span<const double> x) {
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
  return y;
}

std::vector<double> tanh_act(std::span<const double> x) {
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::tanh(v); });
  return y;
}

// ---------------------------------------------------------------------------
// Batch normalization

namespace {

Matrix normalize_with(const BatchNormState& s, const Matrix& x, std::span<const double> mean,
                      std::span<const double> inv_std, BatchNormCache* cache, bool batch_stats) {
  Matrix y(x.rows(), x.cols());
  Matrix xhat(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double h = (x(r, c) - mean[c]) * inv_std[c];
      xhat(r, c) = h;
      y(r, c) = s.gain[c] * h + s.shift[c];
    }
  }
  if (cache) {
    cache->normalized = std::move(xhat);
    cache->inv_std.assign(inv_std.begin(), inv_std.end());
    cache->batch_statistics = batch_stats;
  }
  return y;
}

Matrix normalize_running(const BatchNormState& s, const Matrix& x, BatchNormCache* cache) {
  std::vector<double> inv_std(s.width());
  for (std::size_t c = 0; c < s.width(); ++c) inv_std[c] = 1.0 / std::sqrt(s.running_var[c] + s.eps);
  return normalize_with(s, x, s.running_mean, inv_std, cache, false);
}

void check_width(const BatchNormState& s, const Matrix& x) {
  if (x.cols() != s.width()) throw std::invalid_argument("batchnorm: batch width mismatch");
}

}  // namespace

Matrix batchnorm_forward(const BatchNormState& state, const Matrix& x, BatchNormCache* cache) {
  check_width(state, x);
  return normalize_running(state, x, cache);
}

Matrix batchnorm_forward(BatchNormState& state, const Matrix& x, Mode mode, BatchNormCache* cache) {
  check_width(state, x);
  if (mode == Mode::Infer || state.frozen) return normalize_running(state, x, cache);
  if (x.rows() < 2) throw std::invalid_argument("batchnorm: Train mode needs a batch of at least 2");

  const std::size_t n = x.rows();
  const std::size_t w = x.cols();
  std::vector<double> mean(w, 0.0), var(w, 0.0), inv_std(w);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < w; ++c) mean[c] += x(r, c);
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const double d = x(r, c) - mean[c];
      var[c] += d * d;
    }
  for (std::size_t c = 0; c < w; ++c) {
    const double biased = var[c] / static_cast<double>(n);
    inv_std[c] = 1.0 / std::sqrt(biased + state.eps);
    const double unbiased = var[c] / static_cast<double>(n - 1);
    state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean[c];
    state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * unbiased;
  }
  return normalize_with(state, x, mean, inv_std, cache, true);
}

Matrix batchnorm_backward(const BatchNormState& state, const BatchNormCache& cache, const Matrix& dy,
                          std::span<double> dgain, std::span<double> dshift) {
  const Matrix& xhat = cache.normalized;
  const std::size_t n = dy.rows();
  const std::size_t w = dy.cols();
  if (xhat.rows() != n || xhat.cols() != w || w != state.width()) {
    throw std::invalid_argument("batchnorm_backward: shape mismatch");
  }
  std::vector<double> sum_dy(w, 0.0), sum_dy_xhat(w, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      sum_dy[c] += dy(r, c);
      sum_dy_xhat[c] += dy(r, c) * xhat(r, c);
    }
  for (std::size_t c = 0; c < w; ++c) {
    dgain[c] += sum_dy_xhat[c];
    dshift[c] += sum_dy[c];
  }

  Matrix dx(n, w);
  if (!cache.batch_statistics) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < w; ++c) dx(r, c) = dy(r, c) * state.gain[c] * cache.inv_std[c];
    return dx;
  }
  // Batch statistics depend on every row:
  // dx = gain * inv_std / N * (N dy - sum(dy) - xhat * sum(dy xhat))
  const double nd = static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      dx(r, c) = state.gain[c] * cache.inv_std[c] / nd *
                 (nd * dy(r, c) - sum_dy[c] - xhat(r, c) * sum_dy_xhat[c]);
    }
  return dx;
}

// ---------------------------------------------------------------------------
// Dropout

namespace {

void check_rate(const DropoutSpec& spec) {
  if (!(spec.rate >= 0.0 && spec.rate < 1.0)) throw std::invalid_argument("dropout: rate must be in [0, 1)");
}

}  // namespace

std::vector<double> dropout_forward(const DropoutSpec& spec, std::span<const double> x, Mode mode, Rng& rng) {
  check_rate(spec);
  std::vector<double> y(x.begin(), x.end());
  if (mode == Mode::Infer || spec.rate == 0.0) return y;
  const double keep_scale = 1.0 / (1.0 - spec.rate);
  for (double& v : y) v = rng.uniform() < spec.rate ? 0.0 : v * keep_scale;
  return y;
}

Matrix dropout_forward(const DropoutSpec& spec, const Matrix& x, Mode mode, Rng& rng, Matrix* mask) {
  check_rate(spec);
  if (mode == Mode::Infer || spec.rate == 0.0) {
    if (mask) *mask = Matrix(x.rows(), x.cols(), 1.0);
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - spec.rate);
  Matrix m(x.rows(), x.cols());
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    m.data()[i] = rng.uniform() < spec.rate ? 0.0 : keep_scale;
    y.data()[i] = x.data()[i] * m.data()[i];
  }
  if (mask) *mask = std::move(m);
  return y;
}

// ---------------------------------------------------------------------------
// Huber

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("huber: delta must be > 0");
}

}  // namespace

double huber(double residual, double delta) {
  check_delta(delta);
  const double a = std::abs(residual);
  return a <= delta ? 0.5 * residual * residual : delta * a - 0.5 * delta * delta;
}

double huber_grad(double residual, double delta) {
  check_delta(delta);
  if (std::abs(residual) <= delta) return -residual;
  return residual > 0.0 ? -delta : delta;
}

double huber(std::span<const double> y, std::span<const double> yhat, double delta) {
  if (y.size() != yhat.size()) throw std::invalid_argument("huber: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += huber(y[i] - yhat[i], delta);
  return total;
}

std::vector<double> huber_grad(std::span<const double> y, std::span<const double> yhat, double delta) {
  if (y.size() != yhat.size()) throw std::invalid_argument("huber_grad: length mismatch");
  std::vector<double> g(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) g[i] = huber_grad(y[i] - yhat[i], delta);
  return g;
}

// ---------------------------------------------------------------------------
// Adam

OptimizerState::OptimizerState(const std::vector<std::size_t>& block_sizes, AdamConfig config) : config_(config) {
  for (std::size_t n : block_sizes) {
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
  }
}

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               OptimizerState& state) {
  if (params.size() != grads.size() || params.size() != state.m_.size()) {
    throw std::invalid_argument("adam_step: block count mismatch");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size() || params[b].size() != state.m_[b].size()) {
      throw std::invalid_argument("adam_step: block " + std::to_string(b) + " shape mismatch");
    }
  }
  const AdamConfig& c = state.config_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.m_[b];
    auto& v = state.v_[b];
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double g = grads[b][i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      params[b][i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& loss,
                           std::span<const double> theta, std::span<const double> analytic, std::size_t probes,
                           double h, std::uint64_t seed) {
  if (theta.size() != analytic.size()) throw std::invalid_argument("grad_check: gradient length mismatch");
  std::vector<std::size_t> coords(theta.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  const std::size_t count = std::min(probes, coords.size());
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` entries are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) std::swap(coords[i], coords[i + rng.index(coords.size() - i)]);

  GradCheckResult result;
  result.probes = count;
  std::vector<double> work(theta.begin(), theta.end());
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = coords[k];
    const double original = work[i];
    work[i] = original + h;
    const double up = loss(work);
    work[i] = original - h;
    const double down = loss(work);
    work[i] = original;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[i];
    const double scale = std::max(std::abs(a), std::abs(numeric));
    const double rel = scale == 0.0 ? 0.0 : std::abs(a - numeric) / scale;
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace wrep
