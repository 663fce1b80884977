#include <doctest.h>

#include <cmath>
#include <sstream>

#include "test_util.hpp"
#include "wrep/attacks.hpp"
#include "wrep/ensemble.hpp"
#include "wrep/errors.hpp"
#include "wrep/evaluation.hpp"

using namespace wrep;

namespace {

double brute_rmse(const std::vector<Position>& t, const std::vector<Position>& p) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const long double dx = static_cast<long double>(t[i].x) - p[i].x;
    const long double dy = static_cast<long double>(t[i].y) - p[i].y;
    s += dx * dx + dy * dy;
  }
  return static_cast<double>(std::sqrt(s / static_cast<long double>(t.size())));
}

EnsembleModel fixture_ensemble(const Dataset& d) {
  return {testing::random_model(d, 11), testing::random_model(d, 12), 0.4};
}

}  // namespace

TEST_CASE("rmse examples") {
  const std::vector<Position> origin{{0, 0}};
  const std::vector<Position> p345{{3, 4}};
  CHECK(rmse(origin, p345) == 5.0);
  CHECK(rmse(p345, p345) == 0.0);
  const std::vector<Position> t2{{0, 0}, {0, 0}};
  const std::vector<Position> p2{{3, 0}, {0, 4}};
  CHECK(rmse(t2, p2) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK_THROWS_AS(rmse(std::vector<Position>{}, std::vector<Position>{}), std::invalid_argument);
  CHECK_THROWS_AS(rmse(t2, p345), std::invalid_argument);
}

TEST_CASE("rmse matches a brute-force loop") {
  Rng rng(31);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 1 + rng.index(100);
    std::vector<Position> t(n), p(n);
    for (std::size_t k = 0; k < n; ++k) {
      t[k] = {rng.uniform(0, 20), rng.uniform(0, 15)};
      p[k] = {rng.uniform(-5, 25), rng.uniform(-5, 20)};
    }
    CHECK(std::abs(rmse(t, p) - brute_rmse(t, p)) <= 1e-12);
  }
}

TEST_CASE("sweep layout, clean rows and replay") {
  const Dataset test = testing::small_synthetic(40, 21, 2.0);
  const EnsembleModel e = fixture_ensemble(test);
  const std::vector<double> strengths{0.0, 1.0, 3.0};
  const auto report = attack_sweep(e, test, AttackKind::Spoofing, strengths, 1234, 3);
  REQUIRE(report.cells.size() == 9);
  CHECK(report.cells[0].model == ModelId::Base);
  CHECK(report.cells[1].model == ModelId::Robust);
  CHECK(report.cells[2].model == ModelId::Ensemble);

  const auto truths = test.positions();
  CHECK(report.at(ModelId::Base, AttackKind::Spoofing, 0.0).rmse_mean == rmse(truths, e.base.predict(test)));
  CHECK(report.at(ModelId::Robust, AttackKind::Spoofing, 0.0).rmse_mean == rmse(truths, e.robust.predict(test)));
  CHECK(report.at(ModelId::Ensemble, AttackKind::Spoofing, 0.0).rmse_mean == rmse(truths, e.predict(test)));
  CHECK(report.at(ModelId::Base, AttackKind::Spoofing, 0.0).rmse_std == 0.0);

  // Replay each cell from its stored seed.
  for (const auto& cell : report.cells) {
    CHECK(cell.n == test.size());
    CHECK(cell.seed == sweep_cell_seed(1234, cell.attack, cell.strength));
    std::vector<double> values;
    for (std::size_t r = 0; r < 3; ++r) {
      const Dataset attacked = perturb(test, {cell.attack, cell.strength, derive_seed(cell.seed, r)});
      std::vector<Position> preds;
      if (cell.model == ModelId::Base) preds = e.base.predict(attacked);
      else if (cell.model == ModelId::Robust) preds = e.robust.predict(attacked);
      else preds = e.predict(attacked);
      values.push_back(brute_rmse(truths, preds));
    }
    const double mean = (values[0] + values[1] + values[2]) / 3.0;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    CHECK(std::abs(cell.rmse_mean - mean) <= 1e-12);
    CHECK(std::abs(cell.rmse_std - std::sqrt(var / 2.0)) <= 1e-12);
  }
  CHECK(attack_sweep(e, test, AttackKind::Spoofing, strengths, 1234, 3) == report);
  CHECK_FALSE(attack_sweep(e, test, AttackKind::Spoofing, strengths, 1235, 3) == report);
}

TEST_CASE("sweep argument errors") {
  const Dataset test = testing::small_synthetic(10, 1);
  const EnsembleModel e = fixture_ensemble(test);
  CHECK_THROWS_AS(attack_sweep(e, test, AttackKind::Spoofing, std::vector<double>{}, 1), std::invalid_argument);
  CHECK_THROWS_AS(attack_sweep(e, test, AttackKind::Manipulation, std::vector<double>{1.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(attack_sweep(e, test, AttackKind::Spoofing, std::vector<double>{-1.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(attack_sweep(e, Dataset(), AttackKind::Spoofing, std::vector<double>{1.0}, 1), std::invalid_argument);
}

TEST_CASE("default sweep grids") {
  const auto s = default_sweep_strengths(AttackKind::Spoofing);
  CHECK(s.size() == 9);
  CHECK(s.back() == 4.0);
  const auto m = default_sweep_strengths(AttackKind::Manipulation);
  CHECK(m.size() == 9);
  CHECK(m[4] == 0.2);
  CHECK(std::abs(m.back() - 0.4) < 1e-15);
  CHECK(default_reference_strength(AttackKind::Spoofing) == 2.0);
  CHECK(default_reference_strength(AttackKind::Manipulation) == 0.2);
}

TEST_CASE("scatter export") {
  const Dataset test = testing::small_synthetic(25, 4);
  const auto perfect = scatter_export(test.positions(), test, ModelId::Base);
  REQUIRE(perfect.size() == test.size());
  for (const auto& r : perfect) CHECK(r.truth == r.pred);

  const EnsembleModel e = fixture_ensemble(test);
  const auto a = scatter_export(e, test);
  CHECK(a.size() == test.size());
  CHECK(a == scatter_export(e, test));
  CHECK(a.front().model == ModelId::Ensemble);
  CHECK(scatter_export(e.base, test, ModelId::Base).front().pred == e.base.predict(test).front());
  CHECK_THROWS_AS(scatter_export(e, Dataset()), std::invalid_argument);

  std::ostringstream out;
  write_scatter_csv(std::vector<ScatterRecord>{{{1, 2}, {3, 4.5}, ModelId::Robust}}, out);
  CHECK(out.str() == "true_x,true_y,pred_x,pred_y,model\n1,2,3,4.5,robust\n");
}

TEST_CASE("comparison summary projects cells and recomputes improvement") {
  const Dataset test = testing::small_synthetic(30, 8, 2.0);
  const EnsembleModel e = fixture_ensemble(test);
  EvalReport report = attack_sweep(e, test, AttackKind::Spoofing, std::vector<double>{0.0, 2.0}, 5, 2);
  const auto manip = attack_sweep(e, test, AttackKind::Manipulation, std::vector<double>{0.2}, 5, 2);
  report.cells.insert(report.cells.end(), manip.cells.begin(), manip.cells.end());

  const auto rows = comparison_summary(report, {});
  REQUIRE(rows.size() == 6);
  for (const auto& row : rows) {
    const double cell = report.at(row.model, row.attack, row.strength).rmse_mean;
    const double base = report.at(ModelId::Base, row.attack, row.strength).rmse_mean;
    CHECK(row.rmse == cell);
    CHECK(std::abs(row.improvement_vs_base - (base - cell) / base) <= 1e-15);
  }
  CHECK(rows[0].improvement_vs_base == 0.0);
  CHECK_THROWS_AS(comparison_summary(report, {{AttackKind::Spoofing, 1.0}}), std::invalid_argument);
}

TEST_CASE("report csv round trip") {
  const Dataset test = testing::small_synthetic(15, 9, 2.0);
  const auto report = attack_sweep(fixture_ensemble(test), test, AttackKind::Manipulation,
                                   default_sweep_strengths(AttackKind::Manipulation), 77, 2);
  std::stringstream io;
  write_report_csv(report, io);
  CHECK(io.str().rfind("model,attack,strength,rmse_mean,rmse_std,n,seed\n", 0) == 0);
  CHECK(read_report_csv(io) == report);

  std::istringstream bad_header("model,attack\nbase,spoofing\n");
  CHECK_THROWS_AS(read_report_csv(bad_header), DataError);
  std::istringstream negative("model,attack,strength,rmse_mean,rmse_std,n,seed\nbase,spoofing,0,-1,0,3,4\n");
  CHECK_THROWS_AS(read_report_csv(negative), DataError);
  std::istringstream dup(
      "model,attack,strength,rmse_mean,rmse_std,n,seed\nbase,spoofing,0,1,0,3,4\nbase,spoofing,0,1,0,3,4\n");
  CHECK_THROWS_AS(read_report_csv(dup), DataError);
}
