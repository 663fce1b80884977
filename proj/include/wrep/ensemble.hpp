#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "wrep/attacks.hpp"
#include "wrep/dataset.hpp"
#include "wrep/model.hpp"

namespace wrep {

/// (1 - lambda) * base + lambda * robust, componentwise.
Position blend(Position base, Position robust, double lambda);

struct EnsembleModel {
  PositioningModel base;
  PositioningModel robust;
  double lambda = 0.5;

  /// Throws std::invalid_argument if lambda is outside [0, 1] or the
  /// members disagree on the input width.
  void validate() const;

  Position predict(std::span<const double> rssi) const;
  std::vector<Position> predict(const Dataset& d) const;
};

struct LambdaPoint {
  double lambda = 0.0;
  double rmse = 0.0;
};

struct LambdaTuning {
  double best_lambda = 0.0;
  std::vector<LambdaPoint> table;  // grid order
};

/// 0.00, 0.05, ..., 1.00
std::vector<double> default_lambda_grid();

/// Grid search for the blending coefficient. The objective is the mean RMSE
/// over the clean validation set and one perturbed copy per entry of
/// `objective` (each perturbed with its own seed); an empty objective means
/// clean-only. Ties resolve to the smallest lambda.
LambdaTuning tune_lambda(const PositioningModel& base, const PositioningModel& robust, const Dataset& val,
                         std::span<const AttackSpec> objective, std::span<const double> grid);

void write_lambda_table_csv(const LambdaTuning& t, std::ostream& out);

nlohmann::json to_json(const EnsembleModel& e);
EnsembleModel ensemble_from_json(const nlohmann::json& j);
void save_ensemble(const EnsembleModel& e, const std::filesystem::path& path);
EnsembleModel load_ensemble(const std::filesystem::path& path);

}  // namespace wrep
