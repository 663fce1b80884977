#include "wrep/scaler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wrep {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty input");
  const double rank = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

RobustScalerParams fit_scaler(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("fit_scaler: empty matrix");
  RobustScalerParams p;
  p.medians.resize(x.cols());
  p.iqrs.resize(x.cols());
  std::vector<double> column(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      column[r] = x(r, c);
      if (!std::isfinite(column[r])) throw std::invalid_argument("fit_scaler: non-finite entry");
    }
    std::sort(column.begin(), column.end());
    p.medians[c] = quantile_sorted(column, 0.5);
    const double iqr = quantile_sorted(column, 0.75) - quantile_sorted(column, 0.25);
    p.iqrs[c] = iqr > 0.0 ? iqr : 1.0;
  }
  return p;
}

std::vector<double> transform(const RobustScalerParams& p, std::span<const double> x) {
  if (x.size() != p.medians.size()) throw std::invalid_argument("transform: feature count mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - p.medians[j]) / p.iqrs[j];
  return out;
}

Matrix transform(const RobustScalerParams& p, const Matrix& x) {
  if (x.cols() != p.medians.size()) throw std::invalid_argument("transform: feature count mismatch");
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) out(r, j) = (x(r, j) - p.medians[j]) / p.iqrs[j];
  return out;
}

}  // namespace wrep
