#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "wrep/dataset.hpp"
#include "wrep/rng.hpp"

namespace wrep {

enum class AttackKind {
  Spoofing,      // additive Gaussian noise, strength = sigma (dBm)
  Manipulation,  // multiplicative uniform gain, strength = alpha
};

std::string_view to_string(AttackKind kind);
/// Accepts "spoofing" / "manipulation". Throws std::invalid_argument.
AttackKind parse_attack_kind(std::string_view name);

/// Validates a strength value for the given family. Throws std::invalid_argument.
void validate_strength(AttackKind kind, double strength);

struct AttackSpec {
  AttackKind kind = AttackKind::Spoofing;
  double strength = 0.0;
  std::uint64_t seed = 0;

  static AttackSpec spoofing(double sigma, std::uint64_t seed) { return {AttackKind::Spoofing, sigma, seed}; }
  static AttackSpec manipulation(double alpha, std::uint64_t seed) {
    return {AttackKind::Manipulation, alpha, seed};
  }

  void validate() const { validate_strength(kind, strength); }
  friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

/// x + eps, eps ~ N(0, sigma^2 I). sigma = 0 returns x unchanged.
std::vector<double> spoof(std::span<const double> x, double sigma, Rng& rng);

/// x * (1 + u), u ~ U(-alpha, alpha) per component. alpha = 0 returns x unchanged.
std::vector<double> manipulate(std::span<const double> x, double alpha, Rng& rng);

std::vector<double> apply_attack(std::span<const double> x, AttackKind kind, double strength, Rng& rng);

/// One perturbed copy of `d`. Sample i draws from the substream
/// derive_seed(spec.seed, i), so the result does not depend on iteration order.
/// Positions are copied unchanged.
Dataset perturb(const Dataset& d, const AttackSpec& spec);

/// Concatenation of perturb(d, spec) for each spec, in order: |A| = |specs| * |d|.
Dataset augment_dataset(const Dataset& d, std::span<const AttackSpec> specs);

}  // namespace wrep
