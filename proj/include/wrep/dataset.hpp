#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "wrep/matrix.hpp"

namespace wrep {

/// Planar coordinates in meters.
struct Position {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Position&, const Position&) = default;
};

/// One fingerprint: RSSI readings (dBm) from each access point and the
/// location where they were taken.
struct RssiSample {
  std::vector<double> rssi;
  Position position;
  friend bool operator==(const RssiSample&, const RssiSample&) = default;
};

/// Immutable collection of fingerprints sharing one feature count.
class Dataset {
 public:
  Dataset() = default;
  /// Throws DataError if any sample has the wrong length or a non-finite value.
  Dataset(std::size_t n_features, std::vector<RssiSample> samples);

  std::size_t n_features() const { return n_features_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  const std::vector<RssiSample>& samples() const { return samples_; }
  const RssiSample& operator[](std::size_t i) const { return samples_[i]; }

  /// N x n feature matrix.
  Matrix features() const;
  std::vector<Position> positions() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t n_features_ = 0;
  std::vector<RssiSample> samples_;
};

/// Appends `b` to `a`. Feature counts must match.
Dataset concat(const Dataset& a, const Dataset& b);

/// Log-distance path-loss scenario for synthetic fingerprints.
struct SynthConfig {
  std::vector<Position> ap_positions;
  double width = 20.0;   // meters
  double height = 15.0;  // meters
  double p0 = -40.0;     // dBm at d0
  double gamma = 2.0;
  double d0 = 1.0;       // meters
  double noise_std = 2.0;  // dBm
  std::size_t n_samples = 2000;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Eight access points on the walls of a 20 m x 15 m room.
SynthConfig standard_synth_config();

/// Mean received power at distance `distance` (no noise).
double path_loss_rssi(const SynthConfig& cfg, double distance);

Dataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

/// Reads "rssi_0,...,rssi_{n-1},x,y" CSV. Errors carry the 1-based line number.
Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> expected_features = {});
Dataset read_csv(std::istream& in, std::optional<std::size_t> expected_features = {});

void write_csv(const Dataset& d, std::ostream& out);
void write_csv(const Dataset& d, const std::filesystem::path& path);

struct DatasetSplit {
  Dataset train;
  Dataset val;
};

/// Seeded Fisher-Yates shuffle followed by a prefix/suffix cut;
/// |val| = round(val_fraction * |d|).
DatasetSplit split(const Dataset& d, double val_fraction, std::uint64_t seed);

}  // namespace wrep
