#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wrep/dataset.hpp"
#include "wrep/kan.hpp"
#include "wrep/scaler.hpp"

#include <json.hpp>

namespace wrep {

/// A trained regressor together with the scaler fitted on its training features.
struct PositioningModel {
  KanParams network;
  RobustScalerParams scaler;

  /// Scales raw RSSI then runs the network in Infer mode.
  Position predict(std::span<const double> rssi) const;
  std::vector<Position> predict(const Dataset& d) const;

  friend bool operator==(const PositioningModel&, const PositioningModel&) = default;
};

/// Model-file format version written by this build.
inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const PositioningModel& m);
/// Throws DataError naming the missing or malformed field.
PositioningModel model_from_json(const nlohmann::json& j);

/// Serializes a JSON document with every floating-point number printed at
/// 17 significant digits, so parsing it back is bit-exact.
std::string dump_json(const nlohmann::json& j);

/// Reads and parses a JSON file; IoError if unreadable, DataError if unparsable.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

void save_model(const PositioningModel& m, const std::filesystem::path& path);
PositioningModel load_model(const std::filesystem::path& path);

}  // namespace wrep
