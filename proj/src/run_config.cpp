#include "wrep/run_config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "wrep/ensemble.hpp"
#include "wrep/errors.hpp"
#include "wrep/evaluation.hpp"
#include "wrep/model.hpp"
#include "wrep/rng.hpp"

namespace wrep {

using nlohmann::json;

namespace {

// Stage keys for derive_seed.
enum SeedKey : std::uint64_t {
  kSynthKey = 1,
  kTestSplitKey,
  kValSplitKey,
  kKanKey,
  kTrainKey,
  kSweepKey,
  kAttackKey,
  kTuneKey,
};

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw DataError("config: '" + path + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      throw DataError("config: unknown field '" + (path.empty() ? it.key() : path + "." + it.key()) + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, const std::string& path, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw DataError("config: field '" + (path.empty() ? std::string(key) : path + "." + key) + "' has the wrong type");
  }
}

AttackEntry parse_attack(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "strength", "sigma", "alpha", "seed"});
  AttackEntry a;
  std::string kind;
  read(j, "kind", path, kind);
  try {
    a.kind = parse_attack_kind(kind);
  } catch (const std::invalid_argument&) {
    throw DataError("config: field '" + path + ".kind' must be \"spoofing\" or \"manipulation\"");
  }
  read(j, "strength", path, a.strength);
  read(j, a.kind == AttackKind::Spoofing ? "sigma" : "alpha", path, a.strength);
  if (j.contains("seed")) {
    std::uint64_t s = 0;
    read(j, "seed", path, s);
    a.seed = s;
  }
  return a;
}

std::vector<AttackEntry> parse_attacks(const json& j, const std::string& path) {
  if (!j.is_array()) throw DataError("config: '" + path + "' must be an array");
  std::vector<AttackEntry> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_attack(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

SynthConfig parse_synth(const json& j) {
  const std::string path = "dataset.synthetic";
  check_keys(j, path, {"ap_positions", "width", "height", "p0", "gamma", "d0", "noise_std", "n_samples"});
  SynthConfig s = standard_synth_config();
  if (j.contains("ap_positions")) {
    std::vector<std::array<double, 2>> aps;
    read(j, "ap_positions", path, aps);
    s.ap_positions.clear();
    for (const auto& p : aps) s.ap_positions.push_back({p[0], p[1]});
  }
  read(j, "width", path, s.width);
  read(j, "height", path, s.height);
  read(j, "p0", path, s.p0);
  read(j, "gamma", path, s.gamma);
  read(j, "d0", path, s.d0);
  read(j, "noise_std", path, s.noise_std);
  read(j, "n_samples", path, s.n_samples);
  return s;
}

std::vector<AttackSpec> resolve(const std::vector<AttackEntry>& entries, std::uint64_t master, std::uint64_t key) {
  std::vector<AttackSpec> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    out.push_back({e.kind, e.strength, e.seed ? *e.seed : derive_seed(master, key, i)});
  }
  return out;
}

}  // namespace

std::uint64_t RunConfig::synth_seed() const { return derive_seed(seed, kSynthKey); }
std::uint64_t RunConfig::test_split_seed() const { return derive_seed(seed, kTestSplitKey); }
std::uint64_t RunConfig::val_split_seed() const { return derive_seed(seed, kValSplitKey); }
std::uint64_t RunConfig::kan_seed() const { return derive_seed(seed, kKanKey); }
std::uint64_t RunConfig::train_seed() const { return derive_seed(seed, kTrainKey); }
std::uint64_t RunConfig::sweep_seed() const { return derive_seed(seed, kSweepKey); }

std::vector<AttackSpec> RunConfig::attack_specs() const { return resolve(attacks, seed, kAttackKey); }
std::vector<AttackSpec> RunConfig::tune_specs() const { return resolve(tune_objective, seed, kTuneKey); }

KanConfig RunConfig::kan_config(std::size_t n_inputs) const {
  KanConfig c = kan;
  c.n_inputs = n_inputs;
  c.kolmogorov_width = kolmogorov_width ? *kolmogorov_width : 2 * n_inputs + 1;
  c.seed = kan_seed();
  return c;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = train_seed();
  return t;
}

void RunConfig::validate() const {
  if (dataset_csv.has_value() == synthetic.has_value()) {
    throw std::invalid_argument("dataset: exactly one of 'csv' or 'synthetic' is required");
  }
  if (synthetic) synthetic->validate();
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw std::invalid_argument("split: test_fraction must be in [0, 1)");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw std::invalid_argument("split: val_fraction must be in [0, 1)");
  KanConfig probe = kan;
  probe.n_inputs = 1;
  probe.kolmogorov_width = kolmogorov_width.value_or(3);
  probe.validate();
  train.validate();
  if (attacks.empty()) throw std::invalid_argument("attacks: at least one augmentation attack is required");
  for (const auto& a : attacks) validate_strength(a.kind, a.strength);
  for (const auto& a : tune_objective) validate_strength(a.kind, a.strength);
  if (lambda_grid.empty()) throw std::invalid_argument("tune: lambda_grid must not be empty");
  for (double l : lambda_grid) {
    if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("tune: lambda_grid values must be in [0, 1]");
  }
  for (const auto& [kind, strengths] : sweep_strengths) {
    for (double s : strengths) validate_strength(kind, s);
  }
  if (sweep_repeats < 1) throw std::invalid_argument("sweep: repeats must be >= 1");
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "", {"seed", "dataset", "split", "kan", "train", "attacks", "tune", "sweep", "output_dir"});
  RunConfig c;
  c.kan = KanConfig{};
  read(j, "seed", "", c.seed);

  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    check_keys(d, "dataset", {"csv", "synthetic"});
    if (d.contains("csv")) {
      std::string p;
      read(d, "csv", "dataset", p);
      std::filesystem::path path(p);
      c.dataset_csv = path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    }
    if (d.contains("synthetic")) c.synthetic = parse_synth(d["synthetic"]);
  }

  if (j.contains("split")) {
    check_keys(j["split"], "split", {"test_fraction", "val_fraction"});
    read(j["split"], "test_fraction", "split", c.test_fraction);
    read(j["split"], "val_fraction", "split", c.val_fraction);
  }

  if (j.contains("kan")) {
    const json& k = j["kan"];
    check_keys(k, "kan", {"m_inner", "inner_width", "kolmogorov_width", "dropout_rate", "bn_momentum"});
    read(k, "m_inner", "kan", c.kan.m_inner);
    read(k, "inner_width", "kan", c.kan.inner_width);
    read(k, "dropout_rate", "kan", c.kan.dropout_rate);
    read(k, "bn_momentum", "kan", c.kan.bn_momentum);
    if (k.contains("kolmogorov_width")) {
      std::size_t w = 0;
      read(k, "kolmogorov_width", "kan", w);
      c.kolmogorov_width = w;
    }
  }

  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t, "train", {"epochs", "batch_size", "patience", "delta", "learning_rate"});
    read(t, "epochs", "train", c.train.epochs);
    read(t, "batch_size", "train", c.train.batch_size);
    read(t, "patience", "train", c.train.patience);
    read(t, "delta", "train", c.train.delta);
    read(t, "learning_rate", "train", c.train.learning_rate);
  }

  if (j.contains("attacks")) {
    c.attacks = parse_attacks(j["attacks"], "attacks");
  } else {
    c.attacks = {{AttackKind::Spoofing, 2.0, std::nullopt}, {AttackKind::Manipulation, 0.2, std::nullopt}};
  }

  c.lambda_grid = default_lambda_grid();
  c.tune_objective = {{AttackKind::Spoofing, default_reference_strength(AttackKind::Spoofing), std::nullopt},
                      {AttackKind::Manipulation, default_reference_strength(AttackKind::Manipulation), std::nullopt}};
  if (j.contains("tune")) {
    const json& t = j["tune"];
    check_keys(t, "tune", {"lambda_grid", "objective"});
    read(t, "lambda_grid", "tune", c.lambda_grid);
    if (t.contains("objective")) c.tune_objective = parse_attacks(t["objective"], "tune.objective");
  }

  for (AttackKind k : {AttackKind::Spoofing, AttackKind::Manipulation}) {
    c.sweep_strengths[k] = default_sweep_strengths(k);
    c.reference_strengths[k] = default_reference_strength(k);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, "sweep", {"spoofing", "manipulation", "repeats", "reference"});
    read(s, "spoofing", "sweep", c.sweep_strengths[AttackKind::Spoofing]);
    read(s, "manipulation", "sweep", c.sweep_strengths[AttackKind::Manipulation]);
    read(s, "repeats", "sweep", c.sweep_repeats);
    if (s.contains("reference")) {
      const json& r = s["reference"];
      check_keys(r, "sweep.reference", {"spoofing", "manipulation"});
      read(r, "spoofing", "sweep.reference", c.reference_strengths[AttackKind::Spoofing]);
      read(r, "manipulation", "sweep.reference", c.reference_strengths[AttackKind::Manipulation]);
    }
  }

  if (j.contains("output_dir")) {
    std::string out;
    read(j, "output_dir", "", out);
    c.output_dir = out;
  }

  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json_file(path), path.parent_path());
}

Dataset load_configured_dataset(const RunConfig& cfg) {
  if (cfg.dataset_csv) return load_csv(*cfg.dataset_csv);
  return generate_synthetic(*cfg.synthetic, cfg.synth_seed());
}

ExperimentSplits make_splits(const RunConfig& cfg, const Dataset& d) {
  DatasetSplit outer = split(d, cfg.test_fraction, cfg.test_split_seed());
  DatasetSplit inner = split(outer.train, cfg.val_fraction, cfg.val_split_seed());
  if (inner.train.size() < 2 || inner.val.empty() || outer.val.empty()) {
    throw DataError("dataset too small for the configured train/val/test split");
  }
  return {std::move(inner.train), std::move(inner.val), std::move(outer.val)};
}

}  // namespace wrep
