#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "wrep/attacks.hpp"
#include "wrep/dataset.hpp"
#include "wrep/ensemble.hpp"

namespace wrep {

enum class ModelId { Base, Robust, Ensemble };

std::string_view to_string(ModelId id);
ModelId parse_model_id(std::string_view name);

/// sqrt(mean ||truth_i - pred_i||^2). Throws std::invalid_argument on empty
/// or mismatched input.
double rmse(std::span<const Position> truths, std::span<const Position> preds);

struct EvalCell {
  ModelId model = ModelId::Base;
  AttackKind attack = AttackKind::Spoofing;
  double strength = 0.0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;  // sample standard deviation over repeats; 0 for one repeat
  std::size_t n = 0;
  std::uint64_t seed = 0;  // cell seed; repeat r uses derive_seed(seed, r)

  friend bool operator==(const EvalCell&, const EvalCell&) = default;
};

struct EvalReport {
  std::vector<EvalCell> cells;

  /// Throws std::out_of_range if the cell is absent.
  const EvalCell& at(ModelId model, AttackKind attack, double strength) const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Seed of the (kind, strength) cell under `master_seed`.
std::uint64_t sweep_cell_seed(std::uint64_t master_seed, AttackKind kind, double strength);

/// For each strength, perturbs the test features `repeats` times (repeat r
/// uses derive_seed(cell seed, r)) and scores all three models on the same
/// perturbed copies. Cells are ordered by strength, then Base, Robust, Ensemble.
EvalReport attack_sweep(const EnsembleModel& ensemble, const Dataset& test, AttackKind kind,
                        std::span<const double> strengths, std::uint64_t master_seed, std::size_t repeats = 5);

/// Default sweep grids: sigma 0..4 step 0.5 dBm; alpha 0..0.40 step 0.05.
std::vector<double> default_sweep_strengths(AttackKind kind);
/// Reference strengths for summaries: sigma = 2 dBm, alpha = 0.2.
double default_reference_strength(AttackKind kind);

struct ScatterRecord {
  Position truth;
  Position pred;
  ModelId model = ModelId::Base;
  friend bool operator==(const ScatterRecord&, const ScatterRecord&) = default;
};

std::vector<ScatterRecord> scatter_export(const std::vector<Position>& predictions, const Dataset& test,
                                          ModelId model);
std::vector<ScatterRecord> scatter_export(const PositioningModel& model, const Dataset& test, ModelId id);
std::vector<ScatterRecord> scatter_export(const EnsembleModel& model, const Dataset& test);

struct SummaryRow {
  ModelId model = ModelId::Base;
  AttackKind attack = AttackKind::Spoofing;
  double strength = 0.0;
  double rmse = 0.0;
  double improvement_vs_base = 0.0;  // (rmse_base - rmse) / rmse_base
};

/// One row per (model, attack kind present in the report) at that kind's
/// reference strength. Throws std::invalid_argument if a reference strength
/// has no cells.
std::vector<SummaryRow> comparison_summary(const EvalReport& report,
                                           const std::map<AttackKind, double>& reference_strengths);

void write_report_csv(const EvalReport& r, std::ostream& out);
EvalReport read_report_csv(std::istream& in);
void write_scatter_csv(std::span<const ScatterRecord> records, std::ostream& out);
void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out);

}  // namespace wrep
