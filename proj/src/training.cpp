#include "wrep/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "wrep/csv_util.hpp"
#include "wrep/errors.hpp"
#include "wrep/rng.hpp"
#include "wrep/scaler.hpp"

namespace wrep {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
  if (patience < 1) throw std::invalid_argument("train: patience must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("train: delta must be > 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("train: learning_rate must be >= 0");
  }
}

SampleWeights SampleWeights::uniform(std::size_t n) {
  return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

double SampleWeights::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

void write_history_csv(const TrainHistory& h, std::ostream& out) {
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < h.val_loss.size(); ++e) {
    out << (e + 1) << ',' << csv::format_double(h.train_loss[e]) << ',' << csv::format_double(h.val_loss[e]) << '\n';
  }
}

int residual_sign(Position residual) { return residual.x + residual.y >= 0.0 ? 1 : -1; }

SampleWeights compute_sample_weights(std::span<const Position> residuals) {
  if (residuals.empty()) throw std::invalid_argument("compute_sample_weights: no residuals");
  std::size_t n_pos = 0;
  for (const auto& r : residuals) n_pos += residual_sign(r) > 0 ? 1 : 0;
  const std::size_t n_neg = residuals.size() - n_pos;
  const double majority = static_cast<double>(std::max(n_pos, n_neg));

  std::vector<double> raw(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const std::size_t own = residual_sign(residuals[i]) > 0 ? n_pos : n_neg;
    raw[i] = majority / static_cast<double>(own);
  }
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  for (double& w : raw) w /= total;
  return {std::move(raw)};
}

double mean_huber_loss(const PositioningModel& m, const Dataset& d, double delta) {
  if (d.empty()) throw std::invalid_argument("mean_huber_loss: empty dataset");
  const auto preds = m.predict(d);
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total += huber(d[i].position.x - preds[i].x, delta) + huber(d[i].position.y - preds[i].y, delta);
  }
  return total / static_cast<double>(d.size());
}

namespace {

// Consecutive batches over `order`; a trailing batch smaller than 2 is merged
// into the previous one.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t start = 0; start < n; start += batch_size) ranges.emplace_back(start, std::min(n, start + batch_size));
  if (ranges.size() > 1 && ranges.back().second - ranges.back().first < 2) {
    ranges[ranges.size() - 2].second = ranges.back().second;
    ranges.pop_back();
  }
  return ranges;
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset& val, const std::optional<SampleWeights>& weights,
                  const TrainConfig& cfg, const KanConfig& kan_cfg, const std::optional<RobustScalerParams>& scaler) {
  cfg.validate();
  kan_cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: training set is empty");
  if (val.empty()) throw std::invalid_argument("train: validation set is empty");
  if (train_set.size() < 2) throw std::invalid_argument("train: need at least 2 training samples");
  if (train_set.n_features() != kan_cfg.n_inputs || val.n_features() != kan_cfg.n_inputs) {
    throw std::invalid_argument("train: dataset feature count does not match kan n_inputs");
  }
  if (weights && weights->values.size() != train_set.size()) {
    throw std::invalid_argument("train: weight count does not match training set");
  }

  TrainResult result;
  result.weights = weights ? *weights : SampleWeights::uniform(train_set.size());
  result.model.scaler = scaler ? *scaler : fit_scaler(train_set.features());
  if (result.model.scaler.n_features() != kan_cfg.n_inputs) throw std::invalid_argument("train: scaler width mismatch");
  result.model.network = init_kan(kan_cfg);

  KanParams& net = result.model.network;
  const Matrix x_all = transform(result.model.scaler, train_set.features());
  const std::vector<double>& w = result.weights.values;

  std::vector<std::size_t> sizes;
  for (const auto& b : trainable_blocks(net)) sizes.push_back(b.size());
  OptimizerState opt(sizes, AdamConfig{cfg.learning_rate});

  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  Rng dropout_rng(derive_seed(cfg.seed, 2));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto ranges = batch_ranges(order.size(), cfg.batch_size);

  TrainHistory& history = result.history;
  PositioningModel best = result.model;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  KanParams grads = zeros_like(net);
  KanCache cache;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.index(i)]);

    double epoch_loss = 0.0;
    for (const auto& [begin, end] : ranges) {
      const std::size_t n = end - begin;
      Matrix xb(n, kan_cfg.n_inputs);
      for (std::size_t k = 0; k < n; ++k) {
        const auto src = x_all.row(order[begin + k]);
        std::copy(src.begin(), src.end(), xb.row(k).begin());
      }
      const Matrix yhat = forward_batch(net, xb, Mode::Train, dropout_rng, &cache);

      Matrix dy(n, 2);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t idx = order[begin + k];
        const Position& y = train_set[idx].position;
        const double rx = y.x - yhat(k, 0);
        const double ry = y.y - yhat(k, 1);
        epoch_loss += w[idx] * (huber(rx, cfg.delta) + huber(ry, cfg.delta));
        dy(k, 0) = w[idx] * huber_grad(rx, cfg.delta);
        dy(k, 1) = w[idx] * huber_grad(ry, cfg.delta);
      }
      if (!std::isfinite(epoch_loss)) {
        throw NumericalError("training loss became non-finite at epoch " + std::to_string(epoch));
      }

      for (auto& b : trainable_blocks(grads)) std::fill(b.begin(), b.end(), 0.0);
      backward(net, cache, dy, grads);
      const auto param_blocks = trainable_blocks(net);
      const auto grad_blocks = trainable_blocks(std::as_const(grads));
      adam_step(param_blocks, grad_blocks, opt);
    }

    const double val_loss = mean_huber_loss(result.model, val, cfg.delta);
    if (!std::isfinite(val_loss)) {
      throw NumericalError("validation loss became non-finite at epoch " + std::to_string(epoch));
    }
    history.train_loss.push_back(epoch_loss);
    history.val_loss.push_back(val_loss);

    if (val_loss < best_val) {
      best_val = val_loss;
      best = result.model;
      history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      history.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  result.model = std::move(best);
  return result;
}

PipelineResult train_robust_pipeline(const Dataset& train_set, const Dataset& val, std::span<const AttackSpec> attacks,
                                     const TrainConfig& cfg, const KanConfig& kan_cfg) {
  PipelineResult out;
  out.base = train(train_set, val, std::nullopt, cfg, kan_cfg);

  const Dataset adversarial = augment_dataset(train_set, attacks);
  const Dataset robust_set = concat(train_set, adversarial);
  out.robust_train_size = robust_set.size();

  const auto preds = out.base.model.predict(robust_set);
  std::vector<Position> residuals(robust_set.size());
  for (std::size_t i = 0; i < robust_set.size(); ++i) {
    residuals[i] = {robust_set[i].position.x - preds[i].x, robust_set[i].position.y - preds[i].y};
  }
  const SampleWeights weights = compute_sample_weights(residuals);
  out.robust = train(robust_set, val, weights, cfg, kan_cfg, out.base.model.scaler);
  return out;
}

}  // namespace wrep
