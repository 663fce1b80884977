#pragma once

#include <span>
#include <vector>

#include "wrep/matrix.hpp"

namespace wrep {

/// Per-feature median and interquartile range. Every stored iqr is > 0:
/// zero-spread columns are stored with iqr = 1.
struct RobustScalerParams {
  std::vector<double> medians;
  std::vector<double> iqrs;

  std::size_t n_features() const { return medians.size(); }
  friend bool operator==(const RobustScalerParams&, const RobustScalerParams&) = default;
};

/// Linear-interpolation quantile at rank p*(N-1) of an ascending sequence.
double quantile_sorted(std::span<const double> sorted, double p);

RobustScalerParams fit_scaler(const Matrix& x);

std::vector<double> transform(const RobustScalerParams& p, std::span<const double> x);
Matrix transform(const RobustScalerParams& p, const Matrix& x);

}  // namespace wrep
