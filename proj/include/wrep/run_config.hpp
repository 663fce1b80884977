#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "wrep/attacks.hpp"
#include "wrep/dataset.hpp"
#include "wrep/kan.hpp"
#include "wrep/training.hpp"

namespace wrep {

/// Attack entry from the config; a missing seed is derived from the master seed.
struct AttackEntry {
  AttackKind kind = AttackKind::Spoofing;
  double strength = 0.0;
  std::optional<std::uint64_t> seed;
};

/// Everything an experiment needs, read from one JSON document.
struct RunConfig {
  std::uint64_t seed = 42;

  std::optional<std::filesystem::path> dataset_csv;
  std::optional<SynthConfig> synthetic;

  double test_fraction = 0.2;
  double val_fraction = 0.2;

  KanConfig kan;  // n_inputs is taken from the data
  std::optional<std::size_t> kolmogorov_width;  // default 2n+1
  TrainConfig train;

  std::vector<AttackEntry> attacks;         // robust-training augmentation
  std::vector<AttackEntry> tune_objective;  // lambda objective (clean is always included)
  std::vector<double> lambda_grid;

  std::map<AttackKind, std::vector<double>> sweep_strengths;
  std::map<AttackKind, double> reference_strengths;
  std::size_t sweep_repeats = 5;

  std::filesystem::path output_dir = ".";

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  // Seeds of each pipeline stage, all derived from `seed`.
  std::uint64_t synth_seed() const;
  std::uint64_t test_split_seed() const;
  std::uint64_t val_split_seed() const;
  std::uint64_t kan_seed() const;
  std::uint64_t train_seed() const;
  std::uint64_t sweep_seed() const;

  std::vector<AttackSpec> attack_specs() const;
  std::vector<AttackSpec> tune_specs() const;
  KanConfig kan_config(std::size_t n_inputs) const;
  TrainConfig train_config() const;
};

/// Parses a config document. Relative dataset paths resolve against `base_dir`.
/// Throws DataError (unknown key, wrong type) or std::invalid_argument (invalid value).
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Dataset described by the config: CSV or synthetic.
Dataset load_configured_dataset(const RunConfig& cfg);

struct ExperimentSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// test = split(D, test_fraction); then train/val = split(rest, val_fraction).
ExperimentSplits make_splits(const RunConfig& cfg, const Dataset& d);

}  // namespace wrep
