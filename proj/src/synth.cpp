#include "ebmorph/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ebmorph/error.hpp"

namespace ebmorph {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

double eggleton(double x) {
  const double x23 = std::cbrt(x * x);
  return 0.49 * x23 / (0.6 * x23 + std::log1p(std::cbrt(x)));
}

}  // namespace

std::string_view to_string(Morphology m) {
  return m == Morphology::Detached ? "detached" : "overcontact";
}

Morphology parse_morphology(std::string_view text) {
  if (text == "detached") return Morphology::Detached;
  if (text == "overcontact") return Morphology::Overcontact;
  throw Error(ErrorKind::InvalidArgument, "unknown morphology '" + std::string(text) + "'");
}

std::string_view to_string(Component c) {
  return c == Component::Primary ? "primary" : "secondary";
}

Component parse_component(std::string_view text) {
  if (text == "primary") return Component::Primary;
  if (text == "secondary") return Component::Secondary;
  throw Error(ErrorKind::InvalidArgument, "unknown component '" + std::string(text) + "'");
}

const ParameterRanges& ranges_for(Morphology m) {
  return m == Morphology::Detached ? kDetachedRanges : kOvercontactRanges;
}

double roche_lobe_radius(double q) {
  if (!(q > 0.0) || !std::isfinite(q)) {
    throw Error(ErrorKind::NonPositiveQ, "mass ratio must be positive");
  }
  return eggleton(q);
}

RadiusEstimate radius_from_potential(double potential, double q, Morphology morphology,
                                     Component star) {
  // q = 0 is the point-companion limit; the lobe cap needs q > 0.
  if (!(q >= 0.0) || (morphology == Morphology::Detached && q == 0.0)) {
    throw Error(ErrorKind::NonPositiveQ, "mass ratio must be positive");
  }
  if (!(potential - q > 1.0)) {
    throw Error(ErrorKind::InvalidPotential,
                "potential - q must exceed 1 (got " + std::to_string(potential - q) + ")");
  }
  RadiusEstimate est{1.0 / (potential - q), false};
  if (morphology == Morphology::Detached) {
    // q = m2/m1: the primary's lobe is set by m1/m2 = 1/q.
    const double lobe = roche_lobe_radius(star == Component::Primary ? 1.0 / q : q);
    if (est.radius > lobe) {
      est.radius = 0.95 * lobe;
      est.clamped = true;
    }
  }
  return est;
}

double circle_overlap_area(double r1, double r2, double d) {
  d = std::abs(d);
  if (d >= r1 + r2) return 0.0;
  const double rmin = std::min(r1, r2);
  if (d <= std::abs(r1 - r2)) return kPi * rmin * rmin;
  const double c1 = std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0);
  const double c2 = std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0);
  const double k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
  return r1 * r1 * std::acos(c1) + r2 * r2 * std::acos(c2) - 0.5 * std::sqrt(std::max(k, 0.0));
}

BinaryLightModel::BinaryLightModel(const BinaryParams& params,
                                   const std::optional<SpotParams>& spot)
    : params_(params), spot_(spot) {
  if (!(params.temp_ratio > 0.0) || !std::isfinite(params.inclination)) {
    throw Error(ErrorKind::InvalidParams, "temperature ratio and inclination must be valid");
  }
  sin_i_ = std::sin(params.inclination * kDeg);
  cos_i_ = std::cos(params.inclination * kDeg);
  const double t2_over_t1 = 1.0 / params.temp_ratio;

  try {
    auto e1 = radius_from_potential(params.potential1, params.mass_ratio, params.morphology,
                                    Component::Primary);
    auto e2 = radius_from_potential(params.potential2, params.mass_ratio, params.morphology,
                                    Component::Secondary);
    r1_ = e1.radius;
    r2_ = e2.radius;
    clamped_ = e1.clamped || e2.clamped;
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidParams, e.what());
  }

  if (params.morphology == Morphology::Detached) {
    surface1_ = 1.0;
    surface2_ = std::pow(t2_over_t1, 4);
    total_light_ = kPi * (r1_ * r1_ * surface1_ + r2_ * r2_ * surface2_);
  } else {
    depth1_ = kOvercontactDepth * sin_i_ * sin_i_;
    depth2_ = depth1_ * std::pow(t2_over_t1, 4);
    width_ = kOvercontactWidth0 + kOvercontactWidth1 * (5.0 - params.potential1) / 3.0;
    ellipsoidal_ = kOvercontactEllipsoidal * sin_i_ * sin_i_;
  }

  if (spot_) {
    const double r = spot_->radius / 30.0;
    spot_amplitude_ = (1.0 - spot_->temp_factor) * r * r;
    // The secondary faces the observer half an orbit later than the primary.
    spot_longitude_ =
        spot_->longitude * kDeg + (spot_->host == Component::Secondary ? kPi : 0.0);
    spot_projection_ = std::sin(spot_->latitude * kDeg);
  }
}

double BinaryLightModel::separation(double phase) const {
  const double theta = 2.0 * kPi * phase;
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  return std::sqrt(s * s + c * c * cos_i_ * cos_i_);
}

double BinaryLightModel::base_flux(double phase) const {
  if (params_.morphology == Morphology::Detached) {
    const double overlap = circle_overlap_area(r1_, r2_, separation(phase));
    if (overlap == 0.0) return 1.0;
    // Star 2 is in front around phase 0, star 1 around phase 0.5.
    const bool secondary_in_front = std::cos(2.0 * kPi * phase) > 0.0;
    const double lost = overlap * (secondary_in_front ? surface1_ : surface2_);
    return (total_light_ - lost) / total_light_;
  }
  auto dip = [this](double p, double centre) {
    const double s = std::sin(kPi * (p - centre));
    return std::exp(-(s * s) / (2.0 * width_ * width_));
  };
  return 1.0 - depth1_ * dip(phase, 0.0) - depth2_ * dip(phase, 0.5) +
         ellipsoidal_ * (1.0 - std::cos(4.0 * kPi * phase)) / 2.0 - ellipsoidal_;
}

double BinaryLightModel::spot_modulation(double phase) const {
  if (!spot_) return 1.0;
  const double visible = std::max(0.0, std::cos(2.0 * kPi * phase - spot_longitude_));
  return 1.0 - spot_amplitude_ * visible * spot_projection_;
}

double BinaryLightModel::flux(double phase) const {
  return base_flux(phase) * spot_modulation(phase);
}

SyntheticCurve generate_curve(const BinaryParams& params, const std::optional<SpotParams>& spot,
                              std::size_t n_phases) {
  if (n_phases < 16) throw Error(ErrorKind::InvalidArgument, "n_phases must be >= 16");
  BinaryLightModel model(params, spot);
  SyntheticCurve out;
  out.label = {params.morphology, spot.has_value()};
  auto& c = out.curve;
  c.phases.resize(n_phases);
  c.fluxes.resize(n_phases);
  const double n = static_cast<double>(n_phases);
  for (std::size_t j = 0; j < n_phases; ++j) {
    c.phases[j] = (static_cast<double>(j) + 0.5) / n;
    c.fluxes[j] = model.flux(c.phases[j]);
  }
  const double mx = *std::max_element(c.fluxes.begin(), c.fluxes.end());
  if (!(mx > 0.0)) throw Error(ErrorKind::InvalidParams, "model flux is not positive");
  for (auto& f : c.fluxes) f /= mx;
  c.normalized = true;
  return out;
}

}  // namespace ebmorph
