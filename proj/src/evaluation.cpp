#include "wrep/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "wrep/csv_util.hpp"
#include "wrep/errors.hpp"
#include "wrep/rng.hpp"

namespace wrep {

std::string_view to_string(ModelId id) {
  switch (id) {
    case ModelId::Base: return "base";
    case ModelId::Robust: return "robust";
    case ModelId::Ensemble: return "ensemble";
  }
  return "unknown";
}

ModelId parse_model_id(std::string_view name) {
  if (name == "base") return ModelId::Base;
  if (name == "robust") return ModelId::Robust;
  if (name == "ensemble") return ModelId::Ensemble;
  throw std::invalid_argument("unknown model id '" + std::string(name) + "'");
}

double rmse(std::span<const Position> truths, std::span<const Position> preds) {
  if (truths.empty()) throw std::invalid_argument("rmse: empty input");
  if (truths.size() != preds.size()) throw std::invalid_argument("rmse: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const double dx = truths[i].x - preds[i].x;
    const double dy = truths[i].y - preds[i].y;
    total += dx * dx + dy * dy;
  }
  return std::sqrt(total / static_cast<double>(truths.size()));
}

const EvalCell& EvalReport::at(ModelId model, AttackKind attack, double strength) const {
  for (const auto& c : cells) {
    if (c.model == model && c.attack == attack && c.strength == strength) return c;
  }
  throw std::out_of_range("report has no cell for " + std::string(to_string(model)) + "/" +
                          std::string(to_string(attack)) + " at strength " + csv::format_double(strength));
}

std::uint64_t sweep_cell_seed(std::uint64_t master_seed, AttackKind kind, double strength) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(kind) + 1, seed_key(strength));
}

EvalReport attack_sweep(const EnsembleModel& ensemble, const Dataset& test, AttackKind kind,
                        std::span<const double> strengths, std::uint64_t master_seed, std::size_t repeats) {
  ensemble.validate();
  if (strengths.empty()) throw std::invalid_argument("attack_sweep: no strengths");
  if (test.empty()) throw std::invalid_argument("attack_sweep: empty test set");
  if (repeats < 1) throw std::invalid_argument("attack_sweep: repeats must be >= 1");
  for (double s : strengths) validate_strength(kind, s);

  const auto truths = test.positions();
  EvalReport report;
  for (double s : strengths) {
    const std::uint64_t seed = sweep_cell_seed(master_seed, kind, s);
    std::vector<double> scores[3];
    for (std::size_t r = 0; r < repeats; ++r) {
      const Dataset attacked = perturb(test, {kind, s, derive_seed(seed, r)});
      const auto base = ensemble.base.predict(attacked);
      const auto robust = ensemble.robust.predict(attacked);
      std::vector<Position> blended(base.size());
      for (std::size_t i = 0; i < base.size(); ++i) blended[i] = blend(base[i], robust[i], ensemble.lambda);
      scores[0].push_back(rmse(truths, base));
      scores[1].push_back(rmse(truths, robust));
      scores[2].push_back(rmse(truths, blended));
    }
    for (int m = 0; m < 3; ++m) {
      const auto& v = scores[m];
      // Offsets from the first repeat keep the mean exact when all repeats agree.
      double offset = 0.0;
      for (double x : v) offset += x - v.front();
      const double mean = v.front() + offset / static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
      report.cells.push_back({static_cast<ModelId>(m), kind, s, mean, sd, test.size(), seed});
    }
  }
  return report;
}

std::vector<double> default_sweep_strengths(AttackKind kind) {
  std::vector<double> out;
  if (kind == AttackKind::Spoofing) {
    for (int k = 0; k <= 8; ++k) out.push_back(0.5 * k);
  } else {
    for (int k = 0; k <= 8; ++k) out.push_back(static_cast<double>(k) / 20.0);
  }
  return out;
}

double default_reference_strength(AttackKind kind) { return kind == AttackKind::Spoofing ? 2.0 : 0.2; }

std::vector<ScatterRecord> scatter_export(const std::vector<Position>& predictions, const Dataset& test,
                                          ModelId model) {
  if (test.empty()) throw std::invalid_argument("scatter_export: empty test set");
  if (predictions.size() != test.size()) throw std::invalid_argument("scatter_export: prediction count mismatch");
  std::vector<ScatterRecord> out;
  out.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) out.push_back({test[i].position, predictions[i], model});
  return out;
}

std::vector<ScatterRecord> scatter_export(const PositioningModel& model, const Dataset& test, ModelId id) {
  return scatter_export(model.predict(test), test, id);
}

std::vector<ScatterRecord> scatter_export(const EnsembleModel& model, const Dataset& test) {
  return scatter_export(model.predict(test), test, ModelId::Ensemble);
}

std::vector<SummaryRow> comparison_summary(const EvalReport& report,
                                           const std::map<AttackKind, double>& reference_strengths) {
  std::vector<AttackKind> kinds;
  for (const auto& c : report.cells) {
    if (std::find(kinds.begin(), kinds.end(), c.attack) == kinds.end()) kinds.push_back(c.attack);
  }
  std::vector<SummaryRow> rows;
  for (AttackKind kind : kinds) {
    auto ref = reference_strengths.find(kind);
    const double strength = ref != reference_strengths.end() ? ref->second : default_reference_strength(kind);
    double base_rmse = 0.0;
    try {
      base_rmse = report.at(ModelId::Base, kind, strength).rmse_mean;
    } catch (const std::out_of_range&) {
      throw std::invalid_argument("comparison_summary: reference strength " + csv::format_double(strength) +
                                  " missing for " + std::string(to_string(kind)));
    }
    for (ModelId m : {ModelId::Base, ModelId::Robust, ModelId::Ensemble}) {
      const double value = report.at(m, kind, strength).rmse_mean;
      const double improvement = base_rmse > 0.0 ? (base_rmse - value) / base_rmse : 0.0;
      rows.push_back({m, kind, strength, value, improvement});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

namespace {
constexpr std::string_view kReportHeader = "model,attack,strength,rmse_mean,rmse_std,n,seed";
}

void write_report_csv(const EvalReport& r, std::ostream& out) {
  out << kReportHeader << '\n';
  for (const auto& c : r.cells) {
    out << to_string(c.model) << ',' << to_string(c.attack) << ',' << csv::format_double(c.strength) << ','
        << csv::format_double(c.rmse_mean) << ',' << csv::format_double(c.rmse_std) << ',' << c.n << ',' << c.seed
        << '\n';
  }
}

EvalReport read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("report csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kReportHeader) throw DataError("report csv: unexpected header '" + line + "'");
  EvalReport report;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = csv::split_fields(line);
    if (f.size() == 1 && f[0].empty()) continue;
    const std::string where = "report csv line " + std::to_string(line_no);
    if (f.size() != 7) throw DataError(where + ": expected 7 columns");
    EvalCell c;
    unsigned long long n = 0, seed = 0;
    try {
      c.model = parse_model_id(f[0]);
      c.attack = parse_attack_kind(f[1]);
    } catch (const std::invalid_argument& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!csv::parse_double(f[2], c.strength) || !csv::parse_double(f[3], c.rmse_mean) ||
        !csv::parse_double(f[4], c.rmse_std) || !csv::parse_u64(f[5], n) || !csv::parse_u64(f[6], seed)) {
      throw DataError(where + ": malformed number");
    }
    if (!(c.rmse_mean >= 0.0) || !(c.rmse_std >= 0.0)) throw DataError(where + ": rmse must be >= 0");
    c.n = static_cast<std::size_t>(n);
    c.seed = seed;
    for (const auto& prev : report.cells) {
      if (prev.model == c.model && prev.attack == c.attack && prev.strength == c.strength) {
        throw DataError(where + ": duplicate cell");
      }
    }
    report.cells.push_back(c);
  }
  return report;
}

void write_scatter_csv(std::span<const ScatterRecord> records, std::ostream& out) {
  out << "true_x,true_y,pred_x,pred_y,model\n";
  for (const auto& r : records) {
    out << csv::format_double(r.truth.x) << ',' << csv::format_double(r.truth.y) << ','
        << csv::format_double(r.pred.x) << ',' << csv::format_double(r.pred.y) << ',' << to_string(r.model) << '\n';
  }
}

void write_summary_csv(std::span<const SummaryRow> rows, std::ostream& out) {
  out << "model,attack,reference_strength,rmse,improvement_vs_base\n";
  for (const auto& r : rows) {
    out << to_string(r.model) << ',' << to_string(r.attack) << ',' << csv::format_double(r.strength) << ','
        << csv::format_double(r.rmse) << ',' << csv::format_double(r.improvement_vs_base) << '\n';
  }
}

}  // namespace wrep
