#pragma once

// Survey-quality degradations applied to clean synthetic curves, always in
// the order noise -> outliers -> decimation.

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ebmorph/curve.hpp"
#include "ebmorph/error.hpp"
#include "ebmorph/random.hpp"

namespace ebmorph {

struct AugmentConfig {
  double noise_sigma = 0.001;
  std::size_t outlier_count = 2;
  double outlier_scale = 10.0;
  std::size_t target_points = 100;

  // Gaia G and TESS: sigma 0.001; I: 0.005. Gaia keeps 50 of 100 points.
  static AugmentConfig for_passband(Passband band);

  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

// Outliers need a visible offset even when no noise is configured.
inline constexpr double kMinOutlierSigma = 1e-3;

template <std::uniform_random_bit_generator G>
PhasedCurve add_noise(const PhasedCurve& curve, double sigma, G& gen) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise sigma must be >= 0");
  PhasedCurve out = curve;
  out.normalized = false;
  if (sigma == 0.0) {
    out.normalized = curve.normalized;
    return out;
  }
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& f : out.fluxes) f += noise(gen);
  return out;
}

template <std::uniform_random_bit_generator G>
PhasedCurve inject_outliers(const PhasedCurve& curve, std::size_t count, double scale,
                            double sigma, G& gen) {
  if (count > curve.n_points() / 10) {
    throw Error(ErrorKind::TooManyOutliers,
                std::to_string(count) + " outliers for " + std::to_string(curve.n_points()) +
                    " points");
  }
  PhasedCurve out = curve;
  if (count == 0) return out;
  out.normalized = false;
  const double offset = scale * std::max(sigma, kMinOutlierSigma);
  // partial Fisher-Yates: the first `count` slots are a uniform random subset
  std::vector<std::size_t> idx(curve.n_points());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t j = k + uniform_index(gen, idx.size() - k);
    std::swap(idx[k], idx[j]);
    const double sign = uniform01(gen) < 0.5 ? -1.0 : 1.0;
    out.fluxes[idx[k]] += sign * offset;
  }
  return out;
}

template <std::uniform_random_bit_generator G>
PhasedCurve decimate(const PhasedCurve& curve, std::size_t target_points, G& gen) {
  const std::size_t n = curve.n_points();
  if (target_points > n) {
    throw Error(ErrorKind::TargetExceedsLength,
                std::to_string(target_points) + " > " + std::to_string(n));
  }
  if (target_points == n) return curve;
  // Selection sampling keeps the retained points in their original order.
  PhasedCurve out;
  out.phases.reserve(target_points);
  out.fluxes.reserve(target_points);
  std::size_t needed = target_points;
  for (std::size_t i = 0; i < n && needed > 0; ++i) {
    const double remaining = static_cast<double>(n - i);
    if (uniform01(gen) * remaining < static_cast<double>(needed)) {
      out.phases.push_back(curve.phases[i]);
      out.fluxes.push_back(curve.fluxes[i]);
      --needed;
    }
  }
  return out;
}

template <std::uniform_random_bit_generator G>
PhasedCurve apply_augmentations(const PhasedCurve& curve, const AugmentConfig& cfg, G& gen) {
  cfg.validate();
  auto noisy = add_noise(curve, cfg.noise_sigma, gen);
  auto spiked = inject_outliers(noisy, cfg.outlier_count, cfg.outlier_scale, cfg.noise_sigma, gen);
  return decimate(spiked, std::min(cfg.target_points, spiked.n_points()), gen);
}

}  // namespace ebmorph
