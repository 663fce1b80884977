#include "wrep/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "wrep/csv_util.hpp"
#include "wrep/errors.hpp"
#include "wrep/rng.hpp"

namespace wrep {

Dataset::Dataset(std::size_t n_features, std::vector<RssiSample> samples)
    : n_features_(n_features), samples_(std::move(samples)) {
  if (n_features_ == 0) throw DataError("dataset: feature count must be positive");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (s.rssi.size() != n_features_) {
      throw DataError("dataset: sample " + std::to_string(i) + " has " + std::to_string(s.rssi.size()) +
                      " features, expected " + std::to_string(n_features_));
    }
    const bool finite = std::all_of(s.rssi.begin(), s.rssi.end(), [](double v) { return std::isfinite(v); }) &&
                        std::isfinite(s.position.x) && std::isfinite(s.position.y);
    if (!finite) throw DataError("dataset: sample " + std::to_string(i) + " has a non-finite value");
  }
}

Matrix Dataset::features() const {
  Matrix m(samples_.size(), n_features_);
  for (std::size_t i = 0; i < samples_.size(); ++i) std::copy(samples_[i].rssi.begin(), samples_[i].rssi.end(), m.row(i).begin());
  return m;
}

std::vector<Position> Dataset::positions() const {
  std::vector<Position> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.position);
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.n_features() != b.n_features()) throw std::invalid_argument("concat: feature counts differ");
  std::vector<RssiSample> all = a.samples();
  all.insert(all.end(), b.samples().begin(), b.samples().end());
  return Dataset(a.n_features(), std::move(all));
}

// ---------------------------------------------------------------------------
// Synthetic generation

void SynthConfig::validate() const {
  if (ap_positions.empty()) throw std::invalid_argument("synthetic: ap_positions must not be empty");
  if (!(width > 0.0) || !std::isfinite(width)) throw std::invalid_argument("synthetic: width must be > 0");
  if (!(height > 0.0) || !std::isfinite(height)) throw std::invalid_argument("synthetic: height must be > 0");
  if (!std::isfinite(p0)) throw std::invalid_argument("synthetic: p0 must be finite");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("synthetic: gamma must be > 0");
  if (!(d0 > 0.0) || !std::isfinite(d0)) throw std::invalid_argument("synthetic: d0 must be > 0");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw std::invalid_argument("synthetic: noise_std must be >= 0");
  if (n_samples < 1) throw std::invalid_argument("synthetic: n_samples must be >= 1");
}

SynthConfig standard_synth_config() {
  SynthConfig cfg;
  cfg.width = 20.0;
  cfg.height = 15.0;
  cfg.ap_positions = {{0.0, 0.0},   {10.0, 0.0},  {20.0, 0.0}, {20.0, 7.5},
                      {20.0, 15.0}, {10.0, 15.0}, {0.0, 15.0}, {0.0, 7.5}};
  cfg.p0 = -40.0;
  cfg.gamma = 3.0;
  cfg.d0 = 1.0;
  cfg.noise_std = 2.0;
  cfg.n_samples = 2000;
  return cfg;
}

double path_loss_rssi(const SynthConfig& cfg, double distance) {
  return cfg.p0 - 10.0 * cfg.gamma * std::log10(std::max(distance, cfg.d0) / cfg.d0);
}

Dataset generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  std::vector<RssiSample> samples;
  samples.reserve(cfg.n_samples);
  for (std::size_t i = 0; i < cfg.n_samples; ++i) {
    RssiSample s;
    s.position.x = rng.uniform(0.0, cfg.width);
    s.position.y = rng.uniform(0.0, cfg.height);
    s.rssi.reserve(cfg.ap_positions.size());
    for (const auto& ap : cfg.ap_positions) {
      const double d = std::hypot(s.position.x - ap.x, s.position.y - ap.y);
      double v = path_loss_rssi(cfg, d);
      if (cfg.noise_std > 0.0) v += cfg.noise_std * rng.normal();
      s.rssi.push_back(v);
    }
    samples.push_back(std::move(s));
  }
  return Dataset(cfg.ap_positions.size(), std::move(samples));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

DataError row_error(std::size_t line, const std::string& what) {
  return DataError("csv line " + std::to_string(line) + ": " + what);
}

}  // namespace

Dataset read_csv(std::istream& in, std::optional<std::size_t> expected_features) {
  std::string line;
  std::size_t line_no = 0;
  // Header, skipping leading blank lines.
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::split_fields(line) != std::vector<std::string_view>{""}) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw DataError("empty dataset");

  const auto header = csv::split_fields(line);
  if (header.size() < 3 || header[header.size() - 2] != "x" || header.back() != "y") {
    throw row_error(line_no, "header must be rssi_0,...,rssi_{n-1},x,y");
  }
  const std::size_t n = header.size() - 2;
  for (std::size_t j = 0; j < n; ++j) {
    if (header[j] != "rssi_" + std::to_string(j)) {
      throw row_error(line_no, "header column " + std::to_string(j + 1) + " must be rssi_" + std::to_string(j));
    }
  }
  if (expected_features && *expected_features != n) {
    throw row_error(line_no, "header has " + std::to_string(n) + " rssi columns, expected " +
                                 std::to_string(*expected_features));
  }

  std::vector<RssiSample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = csv::split_fields(line);
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != n + 2) {
      throw row_error(line_no, "expected " + std::to_string(n + 2) + " columns, found " + std::to_string(fields.size()));
    }
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!csv::parse_double(fields[c], values[c])) {
        throw row_error(line_no, "malformed value '" + std::string(fields[c]) + "' in column " + std::to_string(c + 1));
      }
      if (!std::isfinite(values[c])) throw row_error(line_no, "non-finite value in column " + std::to_string(c + 1));
    }
    RssiSample s;
    s.rssi.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n));
    s.position = {values[n], values[n + 1]};
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw DataError("empty dataset");
  return Dataset(n, std::move(samples));
}

Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> expected_features) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  return read_csv(in, expected_features);
}

void write_csv(const Dataset& d, std::ostream& out) {
  for (std::size_t j = 0; j < d.n_features(); ++j) out << "rssi_" << j << ',';
  out << "x,y\n";
  for (const auto& s : d.samples()) {
    for (double v : s.rssi) out << csv::format_double(v) << ',';
    out << csv::format_double(s.position.x) << ',' << csv::format_double(s.position.y) << '\n';
  }
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_csv(d, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Split

DatasetSplit split(const Dataset& d, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw std::invalid_argument("split: val_fraction must be in [0, 1)");
  if (d.empty()) throw std::invalid_argument("split: dataset is empty");

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(d.size())));
  const std::size_t n_train = d.size() - n_val;
  std::vector<RssiSample> train, val;
  train.reserve(n_train);
  val.reserve(n_val);
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_train ? train : val).push_back(d[order[k]]);
  return {Dataset(d.n_features(), std::move(train)), Dataset(d.n_features(), std::move(val))};
}

}  // namespace wrep
