#include "wrep/ensemble.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "wrep/csv_util.hpp"
#include "wrep/errors.hpp"
#include "wrep/evaluation.hpp"

namespace wrep {

Position blend(Position base, Position robust, double lambda) {
  return {(1.0 - lambda) * base.x + lambda * robust.x, (1.0 - lambda) * base.y + lambda * robust.y};
}

void EnsembleModel::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("ensemble: lambda must be in [0, 1]");
  if (base.network.config.n_inputs != robust.network.config.n_inputs) {
    throw std::invalid_argument("ensemble: base and robust models disagree on n_inputs");
  }
}

Position EnsembleModel::predict(std::span<const double> rssi) const {
  if (rssi.size() != base.network.config.n_inputs) throw std::invalid_argument("ensemble: feature count mismatch");
  return blend(base.predict(rssi), robust.predict(rssi), lambda);
}

std::vector<Position> EnsembleModel::predict(const Dataset& d) const {
  const auto b = base.predict(d);
  const auto r = robust.predict(d);
  std::vector<Position> out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = blend(b[i], r[i], lambda);
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(static_cast<double>(k) / 20.0);
  return grid;
}

LambdaTuning tune_lambda(const PositioningModel& base, const PositioningModel& robust, const Dataset& val,
                         std::span<const AttackSpec> objective, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("tune_lambda: empty grid");
  for (double l : grid) {
    if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("tune_lambda: grid point outside [0, 1]");
  }
  if (val.empty()) throw std::invalid_argument("tune_lambda: empty validation set");

  // Member predictions on each evaluation copy, computed once.
  struct Copy {
    std::vector<Position> base, robust;
  };
  std::vector<Copy> copies;
  copies.push_back({base.predict(val), robust.predict(val)});
  for (const auto& spec : objective) {
    const Dataset attacked = perturb(val, spec);
    copies.push_back({base.predict(attacked), robust.predict(attacked)});
  }
  const auto truths = val.positions();

  LambdaTuning out;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Position> blended(val.size());
  for (double l : grid) {
    double total = 0.0;
    for (const auto& c : copies) {
      for (std::size_t i = 0; i < val.size(); ++i) blended[i] = blend(c.base[i], c.robust[i], l);
      total += rmse(truths, blended);
    }
    const double score = total / static_cast<double>(copies.size());
    out.table.push_back({l, score});
    if (score < best || (score == best && l < out.best_lambda)) {
      best = score;
      out.best_lambda = l;
    }
  }
  return out;
}

void write_lambda_table_csv(const LambdaTuning& t, std::ostream& out) {
  out << "lambda,rmse\n";
  for (const auto& p : t.table) out << csv::format_double(p.lambda) << ',' << csv::format_double(p.rmse) << '\n';
}

nlohmann::json to_json(const EnsembleModel& e) {
  return {{"format_version", kModelFormatVersion},
          {"lambda", e.lambda},
          {"base", to_json(e.base)},
          {"robust", to_json(e.robust)}};
}

EnsembleModel ensemble_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("ensemble schema: document must be an object");
  for (const char* key : {"format_version", "lambda", "base", "robust"}) {
    if (!j.contains(key)) throw DataError(std::string("ensemble schema: missing field '") + key + "'");
  }
  if (!j["format_version"].is_number_integer() || j["format_version"].get<int>() != kModelFormatVersion) {
    throw DataError("ensemble schema: unsupported format_version");
  }
  if (!j["lambda"].is_number()) throw DataError("ensemble schema: field 'lambda' must be a number");
  EnsembleModel e;
  e.lambda = j["lambda"].get<double>();
  e.base = model_from_json(j["base"]);
  e.robust = model_from_json(j["robust"]);
  try {
    e.validate();
  } catch (const std::invalid_argument& err) {
    throw DataError(std::string("ensemble schema: ") + err.what());
  }
  return e;
}

void save_ensemble(const EnsembleModel& e, const std::filesystem::path& path) {
  write_text_file(path, dump_json(to_json(e)));
}

EnsembleModel load_ensemble(const std::filesystem::path& path) { return ensemble_from_json(read_json_file(path)); }

}  // namespace wrep
