#include "wrep/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wrep/csv_util.hpp"
#include "wrep/errors.hpp"

namespace wrep {

using nlohmann::json;

Position PositioningModel::predict(std::span<const double> rssi) const {
  return forward(network, transform(scaler, rssi));
}

std::vector<Position> PositioningModel::predict(const Dataset& d) const {
  if (d.empty()) return {};
  const Matrix y = forward_batch(network, transform(scaler, d.features()));
  std::vector<Position> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = {y(i, 0), y(i, 1)};
  return out;
}

// ---------------------------------------------------------------------------
// JSON encoding

namespace {

json layer_to_json(const LinearLayer& l) {
  return {{"in", l.in_features}, {"out", l.out_features}, {"weights", l.weights}, {"bias", l.bias}};
}

json config_to_json(const KanConfig& c) {
  return {{"n_inputs", c.n_inputs},       {"m_inner", c.m_inner},
          {"inner_width", c.inner_width}, {"kolmogorov_width", c.kolmogorov_width},
          {"dropout_rate", c.dropout_rate}, {"bn_momentum", c.bn_momentum},
          {"seed", c.seed}};
}

// Field access that reports the JSON path on failure.
const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw DataError("model schema: '" + path + "' must be an object");
  auto it = j.find(key);
  if (it == j.end()) throw DataError("model schema: missing field '" + path + "." + key + "'");
  return *it;
}

template <class T>
T get_as(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw DataError("model schema: field '" + path + "." + key + "' has the wrong type");
  }
}

std::vector<double> get_vector(const json& j, const std::string& key, const std::string& path, std::size_t size) {
  auto v = get_as<std::vector<double>>(j, key, path);
  if (v.size() != size) {
    throw DataError("model schema: field '" + path + "." + key + "' has " + std::to_string(v.size()) +
                    " values, expected " + std::to_string(size));
  }
  return v;
}

LinearLayer layer_from_json(const json& j, const std::string& path, std::size_t in, std::size_t out) {
  LinearLayer l(in, out);
  if (get_as<std::size_t>(j, "in", path) != in || get_as<std::size_t>(j, "out", path) != out) {
    throw DataError("model schema: layer '" + path + "' shape disagrees with config");
  }
  l.weights = get_vector(j, "weights", path, in * out);
  l.bias = get_vector(j, "bias", path, out);
  return l;
}

KanConfig config_from_json(const json& j) {
  const std::string path = "config";
  KanConfig c;
  c.n_inputs = get_as<std::size_t>(j, "n_inputs", path);
  c.m_inner = get_as<std::size_t>(j, "m_inner", path);
  c.inner_width = get_as<std::size_t>(j, "inner_width", path);
  c.kolmogorov_width = get_as<std::size_t>(j, "kolmogorov_width", path);
  c.dropout_rate = get_as<double>(j, "dropout_rate", path);
  c.bn_momentum = get_as<double>(j, "bn_momentum", path);
  c.seed = get_as<std::uint64_t>(j, "seed", path);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("model schema: ") + e.what());
  }
  return c;
}

}  // namespace

json to_json(const PositioningModel& m) {
  const KanParams& p = m.network;
  json inner = json::array();
  for (const auto& b : p.inner) {
    inner.push_back({{"dense", layer_to_json(b.dense)},
                     {"batchnorm",
                      {{"gain", b.norm.gain},
                       {"shift", b.norm.shift},
                       {"running_mean", b.norm.running_mean},
                       {"running_var", b.norm.running_var},
                       {"momentum", b.norm.momentum},
                       {"eps", b.norm.eps}}},
                     {"dropout_rate", b.dropout.rate}});
  }
  return {{"format_version", kModelFormatVersion},
          {"config", config_to_json(p.config)},
          {"scaler_params", {{"medians", m.scaler.medians}, {"iqrs", m.scaler.iqrs}}},
          {"parameters",
           {{"inner", inner}, {"kolmogorov", layer_to_json(p.kolmogorov)}, {"output", layer_to_json(p.output)}}}};
}

PositioningModel model_from_json(const json& j) {
  const int version = get_as<int>(j, "format_version", "model");
  if (version != kModelFormatVersion) {
    throw DataError("model schema: unsupported format_version " + std::to_string(version));
  }
  PositioningModel m;
  KanParams& p = m.network;
  p.config = config_from_json(field(j, "config", "model"));
  const KanConfig& c = p.config;

  const json& sc = field(j, "scaler_params", "model");
  m.scaler.medians = get_vector(sc, "medians", "scaler_params", c.n_inputs);
  m.scaler.iqrs = get_vector(sc, "iqrs", "scaler_params", c.n_inputs);
  for (double v : m.scaler.iqrs) {
    if (!(v > 0.0)) throw DataError("model schema: scaler_params.iqrs must be positive");
  }

  const json& params = field(j, "parameters", "model");
  const json& inner = field(params, "inner", "parameters");
  if (!inner.is_array() || inner.size() != c.m_inner) {
    throw DataError("model schema: parameters.inner must hold " + std::to_string(c.m_inner) + " branches");
  }
  for (std::size_t k = 0; k < c.m_inner; ++k) {
    const std::string path = "parameters.inner[" + std::to_string(k) + "]";
    const json& b = inner[k];
    InnerBranch branch;
    branch.dense = layer_from_json(field(b, "dense", path), path + ".dense", c.n_inputs, c.inner_width);
    const json& bn = field(b, "batchnorm", path);
    const std::string bn_path = path + ".batchnorm";
    branch.norm = BatchNormState(c.inner_width);
    branch.norm.gain = get_vector(bn, "gain", bn_path, c.inner_width);
    branch.norm.shift = get_vector(bn, "shift", bn_path, c.inner_width);
    branch.norm.running_mean = get_vector(bn, "running_mean", bn_path, c.inner_width);
    branch.norm.running_var = get_vector(bn, "running_var", bn_path, c.inner_width);
    branch.norm.momentum = get_as<double>(bn, "momentum", bn_path);
    branch.norm.eps = get_as<double>(bn, "eps", bn_path);
    branch.dropout.rate = get_as<double>(b, "dropout_rate", path);
    p.inner.push_back(std::move(branch));
  }
  p.kolmogorov = layer_from_json(field(params, "kolmogorov", "parameters"), "parameters.kolmogorov",
                                 c.m_inner * c.inner_width, c.kolmogorov_width);
  p.output = layer_from_json(field(params, "output", "parameters"), "parameters.output", c.kolmogorov_width, 2);
  return m;
}

// ---------------------------------------------------------------------------
// Text output

namespace {

void write_json(const json& j, std::ostringstream& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner_pad(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ",\n";
        first = false;
        out << inner_pad << json(it.key()).dump() << ": ";
        write_json(it.value(), out, indent + 1);
      }
      out << '\n' << pad << '}';
      return;
    }
    case json::value_t::array: {
      const bool scalar_array = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      if (scalar_array) {
        out << '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out << ", ";
          write_json(j[i], out, indent + 1);
        }
        out << ']';
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out << ",\n";
        out << inner_pad;
        write_json(j[i], out, indent + 1);
      }
      out << '\n' << pad << ']';
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw NumericalError("cannot serialize non-finite value");
      std::string text = csv::format_double(v);
      // Keep the value a JSON float even when it prints as an integer.
      if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
      out << text;
      return;
    }
    default:
      out << j.dump();
  }
}

}  // namespace

std::string dump_json(const json& j) {
  std::ostringstream out;
  write_json(j, out, 0);
  out << '\n';
  return out.str();
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void save_model(const PositioningModel& m, const std::filesystem::path& path) {
  write_text_file(path, dump_json(to_json(m)));
}

PositioningModel load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

}  // namespace wrep
