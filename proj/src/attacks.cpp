#include "wrep/attacks.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace wrep {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::Spoofing: return "spoofing";
    case AttackKind::Manipulation: return "manipulation";
  }
  return "unknown";
}

AttackKind parse_attack_kind(std::string_view name) {
  if (name == "spoofing") return AttackKind::Spoofing;
  if (name == "manipulation") return AttackKind::Manipulation;
  throw std::invalid_argument("unknown attack kind '" + std::string(name) + "'");
}

void validate_strength(AttackKind kind, double strength) {
  if (kind == AttackKind::Spoofing) {
    if (!(strength >= 0.0) || !std::isfinite(strength)) throw std::invalid_argument("spoofing: sigma must be >= 0");
  } else {
    if (!(strength >= 0.0 && strength < 1.0)) throw std::invalid_argument("manipulation: alpha must be in [0, 1)");
  }
}

std::vector<double> spoof(std::span<const double> x, double sigma, Rng& rng) {
  validate_strength(AttackKind::Spoofing, sigma);
  std::vector<double> out(x.begin(), x.end());
  if (sigma == 0.0) return out;
  for (double& v : out) v += sigma * rng.normal();
  return out;
}

std::vector<double> manipulate(std::span<const double> x, double alpha, Rng& rng) {
  validate_strength(AttackKind::Manipulation, alpha);
  std::vector<double> out(x.begin(), x.end());
  if (alpha == 0.0) return out;
  for (double& v : out) v *= 1.0 + rng.uniform(-alpha, alpha);
  return out;
}

std::vector<double> apply_attack(std::span<const double> x, AttackKind kind, double strength, Rng& rng) {
  return kind == AttackKind::Spoofing ? spoof(x, strength, rng) : manipulate(x, strength, rng);
}

Dataset perturb(const Dataset& d, const AttackSpec& spec) {
  spec.validate();
  std::vector<RssiSample> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    Rng rng(derive_seed(spec.seed, i));
    out.push_back({apply_attack(d[i].rssi, spec.kind, spec.strength, rng), d[i].position});
  }
  return Dataset(d.n_features(), std::move(out));
}

Dataset augment_dataset(const Dataset& d, std::span<const AttackSpec> specs) {
  if (d.empty()) throw std::invalid_argument("augment_dataset: dataset is empty");
  if (specs.empty()) throw std::invalid_argument("augment_dataset: no attack specs");
  std::vector<RssiSample> all;
  all.reserve(d.size() * specs.size());
  for (const auto& spec : specs) {
    Dataset copy = perturb(d, spec);
    all.insert(all.end(), copy.samples().begin(), copy.samples().end());
  }
  return Dataset(d.n_features(), std::move(all));
}

}  // namespace wrep
