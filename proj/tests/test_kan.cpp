#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "wrep/kan.hpp"

using namespace wrep;

namespace {

Matrix random_input(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(rows, cols);
  for (double& v : x.data()) v = rng.normal();
  return x;
}

// Independent count of the learnable values: each branch has W (n x w) + b (w)
// + BN gain/shift (2w); the Kolmogorov layer (m w x k) + k; the head k x 2 + 2.
std::size_t expected_count(std::size_t n, std::size_t m, std::size_t w, std::size_t k) {
  return m * (n * w + w + 2 * w) + (m * w * k + k) + (k * 2 + 2);
}

// Sum of Huber losses of every row against `target`.
double batch_loss(const Matrix& out, const Matrix& target, Matrix* dy) {
  double s = 0.0;
  if (dy) *dy = Matrix(out.rows(), out.cols());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    const double r = target.data()[i] - out.data()[i];
    s += huber(r, 1.0);
    if (dy) dy->data()[i] = huber_grad(r, 1.0);
  }
  return s;
}

void populate_running_stats(KanParams& p, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& b : p.inner) b.norm.momentum = 1.0;
  Matrix x = random_input(64, p.config.n_inputs, seed);
  forward_batch(p, x, Mode::Train, rng);
  for (auto& b : p.inner) b.norm.momentum = p.config.bn_momentum;
}

}  // namespace

TEST_CASE("parameter count matches the architecture") {
  const KanParams p = init_kan(KanConfig::for_inputs(8, 1));
  CHECK(p.config.kolmogorov_width == 17);
  CHECK(parameter_count(p) == expected_count(8, 15, 16, 17));
  CHECK(parameter_count(p) == 6773);
  CHECK(flatten(p).size() == 6773);

  KanConfig c = KanConfig::for_inputs(3, 0);
  c.m_inner = 2;
  c.inner_width = 5;
  c.kolmogorov_width = 4;
  CHECK(parameter_count(init_kan(c)) == expected_count(3, 2, 5, 4));
}

TEST_CASE("initialization is seeded, biases zero") {
  const KanConfig cfg = KanConfig::for_inputs(8, 77);
  const KanParams a = init_kan(cfg);
  CHECK(a == init_kan(cfg));
  KanConfig other = cfg;
  other.seed = 78;
  CHECK_FALSE(a == init_kan(other));
  for (const auto& b : a.inner) {
    for (double v : b.dense.bias) CHECK(v == 0.0);
    for (double v : b.norm.gain) CHECK(v == 1.0);
    for (double v : b.norm.shift) CHECK(v == 0.0);
    CHECK(b.dropout.rate == 0.1);
  }
  for (double v : a.kolmogorov.bias) CHECK(v == 0.0);
  for (double v : a.output.bias) CHECK(v == 0.0);
}

TEST_CASE("config validation") {
  KanConfig c = KanConfig::for_inputs(4);
  c.m_inner = 0;
  CHECK_THROWS_AS(init_kan(c), std::invalid_argument);
  c = KanConfig::for_inputs(4);
  c.dropout_rate = 1.0;
  CHECK_THROWS_AS(init_kan(c), std::invalid_argument);
  c = KanConfig::for_inputs(0);
  CHECK_THROWS_AS(init_kan(c), std::invalid_argument);
}

TEST_CASE("flatten/unflatten round trip") {
  KanParams p = init_kan(KanConfig::for_inputs(5, 3));
  auto flat = flatten(p);
  for (double& v : flat) v += 0.5;
  KanParams q = p;
  unflatten(q, flat);
  CHECK(flatten(q) == flat);
  CHECK_THROWS_AS(unflatten(q, std::vector<double>(3)), std::invalid_argument);
  for (double v : flatten(zeros_like(p))) CHECK(v == 0.0);
}

TEST_CASE("zeroed weights give the output bias for every input") {
  KanParams p = init_kan(KanConfig::for_inputs(4, 5));
  std::vector<double> flat(parameter_count(p), 0.0);
  unflatten(p, flat);
  p.output.bias = {1.25, -3.5};
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix x = random_input(1, 4, s);
    CHECK(forward(p, x.row(0)) == Position{1.25, -3.5});
  }
}

TEST_CASE("batch inference equals per-row inference bitwise") {
  KanParams p = init_kan(KanConfig::for_inputs(8, 21));
  populate_running_stats(p, 4);
  const Matrix x = random_input(37, 8, 99);
  const Matrix batch = forward_batch(static_cast<const KanParams&>(p), x);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const Position single = forward(p, x.row(r));
    CHECK(batch(r, 0) == single.x);
    CHECK(batch(r, 1) == single.y);
  }
}

TEST_CASE("train mode needs two rows unless normalization is frozen") {
  KanConfig cfg = KanConfig::for_inputs(3, 1);
  cfg.dropout_rate = 0.0;
  KanParams p = init_kan(cfg);
  populate_running_stats(p, 2);
  Rng rng(0);
  const Matrix one = random_input(1, 3, 8);
  CHECK_THROWS_AS(forward_batch(p, one, Mode::Train, rng), std::invalid_argument);

  for (auto& b : p.inner) b.norm.frozen = true;
  const KanParams before = p;
  const Matrix x = random_input(6, 3, 9);
  CHECK(forward_batch(p, x, Mode::Train, rng) == forward_batch(before, x));
  CHECK(p == before);
  CHECK_NOTHROW(forward_batch(p, one, Mode::Train, rng));
}

TEST_CASE("inference does not mutate state and train mode is seeded") {
  KanParams p = init_kan(KanConfig::for_inputs(6, 2));
  const KanParams before = p;
  Rng rng(1);
  const Matrix x = random_input(8, 6, 3);
  forward_batch(p, x, Mode::Infer, rng);
  CHECK(p == before);

  KanParams a = before, b = before;
  Rng ra(5), rb(5);
  CHECK(forward_batch(a, x, Mode::Train, ra) == forward_batch(b, x, Mode::Train, rb));
  CHECK(a == b);
  CHECK_FALSE(a == before);
}

TEST_CASE("gradient check in inference configuration") {
  KanConfig cfg = KanConfig::for_inputs(8, 31);
  cfg.dropout_rate = 0.0;
  KanParams p = init_kan(cfg);
  populate_running_stats(p, 6);
  // Perturb BN affine parameters and biases away from their initial values.
  Rng rng(12);
  auto flat = flatten(p);
  for (double& v : flat) v += 0.05 * rng.normal();
  unflatten(p, flat);

  const Matrix x = random_input(12, 8, 40);
  const Matrix target = random_input(12, 2, 41);
  KanCache cache;
  const Matrix out = forward_batch(static_cast<const KanParams&>(p), x, &cache);
  Matrix dy;
  batch_loss(out, target, &dy);
  KanParams grads = zeros_like(p);
  backward(p, cache, dy, grads);

  auto loss = [&](std::span<const double> t) {
    KanParams q = p;
    unflatten(q, t);
    return batch_loss(forward_batch(static_cast<const KanParams&>(q), x), target, nullptr);
  };
  const auto r = grad_check(loss, flat, flatten(grads), 300, 1e-5, 7);
  CHECK(r.probes == 300);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("gradient check with batch statistics") {
  KanConfig cfg = KanConfig::for_inputs(4, 8);
  cfg.dropout_rate = 0.0;
  cfg.m_inner = 3;
  cfg.inner_width = 5;
  KanParams p = init_kan(cfg);
  const Matrix x = random_input(7, 4, 50);
  const Matrix target = random_input(7, 2, 51);

  KanParams work = p;
  Rng rng(0);
  KanCache cache;
  const Matrix out = forward_batch(work, x, Mode::Train, rng, &cache);
  Matrix dy;
  batch_loss(out, target, &dy);
  KanParams grads = zeros_like(p);
  backward(work, cache, dy, grads);

  // Dense biases feeding batch-statistic normalization have a true gradient
  // of zero, so compare with a mixed absolute/relative tolerance.
  auto loss = [&](const std::vector<double>& t) {
    KanParams q = p;
    unflatten(q, t);
    Rng r(0);
    return batch_loss(forward_batch(q, x, Mode::Train, r), target, nullptr);
  };
  const auto theta = flatten(p);
  const auto analytic = flatten(grads);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto plus = theta, minus = theta;
    plus[i] += h;
    minus[i] -= h;
    const double numeric = (loss(plus) - loss(minus)) / (2.0 * h);
    const double err = std::abs(numeric - analytic[i]) / (std::max(std::abs(numeric), std::abs(analytic[i])) + 1e-6);
    worst = std::max(worst, err);
  }
  CHECK(worst < 1e-4);
}
