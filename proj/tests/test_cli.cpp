#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "wrep/cli.hpp"
#include "wrep/ensemble.hpp"
#include "wrep/evaluation.hpp"

using namespace wrep;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kSmallConfig = R"({
  "seed": 7,
  "dataset": {"synthetic": {"n_samples": 240}},
  "kan": {"m_inner": 3, "inner_width": 6},
  "train": {"epochs": 4},
  "tune": {"lambda_grid": [0.0, 0.25, 0.5, 0.75, 1.0]},
  "sweep": {"spoofing": [0, 2], "manipulation": [0, 0.2], "repeats": 2}
})";

fs::path write_config(const testing::TempDir& dir, const std::string& text, const std::string& name = "cfg.json") {
  testing::write_file(dir / name, text);
  return dir / name;
}

std::vector<std::string> files_in(const fs::path& dir) {
  std::vector<std::string> names;
  if (!fs::exists(dir)) return names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

TEST_CASE("usage errors exit 1 and help exits 0") {
  CHECK(invoke({}).code == cli::kUsage);
  CHECK(invoke({"bogus"}).code == cli::kUsage);
  CHECK(invoke({"train"}).code == cli::kUsage);
  CHECK(invoke({"synth", "--config"}).code == cli::kUsage);
  CHECK(invoke({"--help"}).code == cli::kSuccess);
  CHECK(invoke({"train", "--help"}).code == cli::kSuccess);
}

TEST_CASE("synth writes the configured number of rows, reproducibly") {
  testing::TempDir dir;
  const auto cfg = write_config(dir, R"({"dataset": {"synthetic": {"n_samples": 1000}}})");
  REQUIRE(invoke({"synth", "--config", cfg.string(), "--out", (dir / "a").string()}).code == 0);
  REQUIRE(invoke({"synth", "--config", cfg.string(), "--out", (dir / "b").string()}).code == 0);
  const std::string a = testing::read_file(dir / "a" / "dataset.csv");
  CHECK(a == testing::read_file(dir / "b" / "dataset.csv"));
  CHECK(std::count(a.begin(), a.end(), '\n') == 1001);
  CHECK(load_csv(dir / "a" / "dataset.csv").size() == 1000);

  REQUIRE(invoke({"synth", "--config", cfg.string(), "--seed", "43", "--out", (dir / "c").string()}).code == 0);
  CHECK_FALSE(testing::read_file(dir / "c" / "dataset.csv") == a);
}

TEST_CASE("invalid synthetic parameters exit 3 naming the field") {
  testing::TempDir dir;
  const auto cfg = write_config(dir, R"({"dataset": {"synthetic": {"gamma": 0}}})");
  const auto r = invoke({"synth", "--config", cfg.string(), "--out", (dir / "o").string()});
  CHECK(r.code == cli::kDataSchema);
  CHECK(r.err.find("gamma") != std::string::npos);
  CHECK(files_in(dir / "o").empty());
}

TEST_CASE("config problems") {
  testing::TempDir dir;
  CHECK(invoke({"synth", "--config", (dir / "nope.json").string()}).code == cli::kInputOutput);
  const auto unknown = write_config(dir, R"({"sed": 1})", "u.json");
  const auto r = invoke({"synth", "--config", unknown.string()});
  CHECK(r.code == cli::kDataSchema);
  CHECK(r.err.find("sed") != std::string::npos);
  const auto broken = write_config(dir, "{", "b.json");
  CHECK(invoke({"synth", "--config", broken.string()}).code == cli::kDataSchema);
}

TEST_CASE("missing dataset file exits 2 without outputs") {
  testing::TempDir dir;
  const auto cfg = write_config(dir, R"({"dataset": {"csv": "absent.csv"}})");
  const auto out = dir / "out";
  CHECK(invoke({"train", "--config", cfg.string(), "--out", out.string()}).code == cli::kInputOutput);
  CHECK(files_in(out).empty());
}

TEST_CASE("train, tune and sweep end to end") {
  testing::TempDir dir;
  const auto cfg = write_config(dir, kSmallConfig);
  const auto out = (dir / "run").string();
  REQUIRE(invoke({"train", "--config", cfg.string(), "--out", out}).code == 0);
  CHECK(files_in(out) ==
        std::vector<std::string>{"base_history.csv", "base_model.json", "robust_history.csv", "robust_model.json"});

  const auto base = (dir / "run" / "base_model.json").string();
  const auto robust = (dir / "run" / "robust_model.json").string();
  const auto tuned = invoke({"tune", "--config", cfg.string(), "--out", out, "--base", base, "--robust", robust});
  REQUIRE(tuned.code == 0);
  const EnsembleModel e = load_ensemble(dir / "run" / "ensemble_model.json");

  // Recorded lambda is the argmin of the written table.
  std::istringstream table(testing::read_file(dir / "run" / "lambda_table.csv"));
  std::string line;
  std::getline(table, line);
  CHECK(line == "lambda,rmse");
  double best = 1e300, best_lambda = -1;
  while (std::getline(table, line)) {
    const auto comma = line.find(',');
    const double l = std::stod(line.substr(0, comma));
    const double v = std::stod(line.substr(comma + 1));
    if (v < best) {
      best = v;
      best_lambda = l;
    }
  }
  CHECK(e.lambda == best_lambda);

  const auto ens = (dir / "run" / "ensemble_model.json").string();
  REQUIRE(invoke({"sweep", "--config", cfg.string(), "--out", out, "--ensemble", ens}).code == 0);
  std::ifstream report_file(dir / "run" / "report.csv");
  const EvalReport report = read_report_csv(report_file);
  CHECK(report.cells.size() == 12);
  const auto summary = testing::read_file(dir / "run" / "summary.csv");
  CHECK(summary.rfind("model,attack,reference_strength,rmse,improvement_vs_base\n", 0) == 0);
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 7);

  // Rerun into a second directory: identical bytes.
  const auto out2 = (dir / "run2").string();
  REQUIRE(invoke({"train", "--config", cfg.string(), "--out", out2}).code == 0);
  REQUIRE(invoke({"tune", "--config", cfg.string(), "--out", out2, "--base", base, "--robust", robust}).code == 0);
  REQUIRE(invoke({"sweep", "--config", cfg.string(), "--out", out2, "--ensemble", ens}).code == 0);
  for (const auto& name : files_in(out)) {
    CHECK_MESSAGE(testing::read_file(dir / "run" / name) == testing::read_file(dir / "run2" / name), name);
  }
}

TEST_CASE("tune with a single-point grid and a corrupt model") {
  testing::TempDir dir;
  const auto cfg = write_config(dir, R"({
    "dataset": {"synthetic": {"n_samples": 120}},
    "kan": {"m_inner": 2, "inner_width": 4},
    "train": {"epochs": 2},
    "tune": {"lambda_grid": [0]}
  })");
  const auto out = (dir / "o").string();
  REQUIRE(invoke({"train", "--config", cfg.string(), "--out", out}).code == 0);
  const auto base = (dir / "o" / "base_model.json").string();
  const auto robust = (dir / "o" / "robust_model.json").string();
  REQUIRE(invoke({"tune", "--config", cfg.string(), "--out", out, "--base", base, "--robust", robust}).code == 0);
  CHECK(load_ensemble(dir / "o" / "ensemble_model.json").lambda == 0.0);

  testing::write_file(dir / "corrupt.json", R"({"format_version": 1, "config": {}})");
  const auto r = invoke({"tune", "--config", cfg.string(), "--out", (dir / "p").string(), "--base",
                         (dir / "corrupt.json").string(), "--robust", robust});
  CHECK(r.code == cli::kDataSchema);
  CHECK(r.err.find("schema") != std::string::npos);
  CHECK(files_in(dir / "p").empty());
}

TEST_CASE("diverging training exits 4") {
  testing::TempDir dir;
  const auto cfg = write_config(dir, R"({
    "dataset": {"synthetic": {"n_samples": 80}},
    "kan": {"m_inner": 2, "inner_width": 4},
    "train": {"epochs": 20, "learning_rate": 1e300}
  })");
  CHECK(invoke({"train", "--config", cfg.string(), "--out", (dir / "o").string()}).code == cli::kNumerical);
  CHECK(files_in(dir / "o").empty());
}
