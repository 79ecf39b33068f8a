#pragma once

// Synthetic light curves for detached and overcontact binaries.
//
// Detached systems use two uniform disks on a circular orbit; the flux loss
// during eclipse is the exact circle-circle overlap area weighted by the
// surface brightness of the eclipsed star. Overcontact systems use a smooth
// two-dip model plus an ellipsoidal term, which has no out-of-eclipse plateau.
// Spots multiply either model by a longitude-dependent dimming.

#include <optional>
#include <random>
#include <string_view>

#include "ebmorph/curve.hpp"
#include "ebmorph/random.hpp"

namespace ebmorph {

enum class Morphology { Detached = 0, Overcontact = 1 };
enum class Component { Primary, Secondary };

std::string_view to_string(Morphology m);
Morphology parse_morphology(std::string_view text);
std::string_view to_string(Component c);
Component parse_component(std::string_view text);

struct Interval {
  double lo;
  double hi;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Parameter ranges of the synthetic training population.
struct ParameterRanges {
  Interval period;
  Interval inclination;
  Interval mass_ratio;
  Interval potential;
  Interval temp_ratio;
};

inline constexpr ParameterRanges kDetachedRanges{
    {0.1, 2.0}, {30.0, 90.0}, {0.01, 2.0}, {2.0, 6.0}, {0.7, 5.0}};
inline constexpr ParameterRanges kOvercontactRanges{
    {0.1, 1.5}, {30.0, 90.0}, {0.01, 2.0}, {2.0, 5.0}, {1.0, 1.4}};

inline constexpr Interval kSpotLongitude{30.0, 330.0};
inline constexpr Interval kSpotLatitude{0.0, 180.0};
inline constexpr Interval kSpotRadius{5.0, 30.0};
inline constexpr double kSpotTemperatureFactor = 0.8;

const ParameterRanges& ranges_for(Morphology m);

struct BinaryParams {
  double period = 1.0;        // days
  double inclination = 90.0;  // degrees
  double mass_ratio = 1.0;    // q = m2/m1
  double potential1 = 4.0;
  double potential2 = 4.0;
  double temp_ratio = 1.0;  // T1/T2
  Morphology morphology = Morphology::Detached;

  bool operator==(const BinaryParams&) const = default;
};

struct SpotParams {
  double longitude = 90.0;  // degrees
  double latitude = 90.0;   // degrees, measured as colatitude
  double radius = 10.0;     // angular radius, degrees
  double temp_factor = kSpotTemperatureFactor;
  Component host = Component::Primary;

  bool operator==(const SpotParams&) const = default;
};

struct SynthLabel {
  Morphology morphology = Morphology::Detached;
  bool has_spot = false;

  bool operator==(const SynthLabel&) const = default;
};

template <std::uniform_random_bit_generator G>
BinaryParams sample_binary_params(Morphology morphology, G& gen) {
  const auto& r = ranges_for(morphology);
  BinaryParams p;
  p.morphology = morphology;
  p.period = uniform(gen, r.period.lo, r.period.hi);
  p.inclination = uniform(gen, r.inclination.lo, r.inclination.hi);
  p.mass_ratio = uniform(gen, r.mass_ratio.lo, r.mass_ratio.hi);
  p.potential1 = uniform(gen, r.potential.lo, r.potential.hi);
  // A common envelope shares one potential.
  p.potential2 = morphology == Morphology::Overcontact
                     ? p.potential1
                     : uniform(gen, r.potential.lo, r.potential.hi);
  p.temp_ratio = uniform(gen, r.temp_ratio.lo, r.temp_ratio.hi);
  return p;
}

template <std::uniform_random_bit_generator G>
SpotParams sample_spot_params(G& gen) {
  SpotParams s;
  s.longitude = uniform(gen, kSpotLongitude.lo, kSpotLongitude.hi);
  s.latitude = uniform(gen, kSpotLatitude.lo, kSpotLatitude.hi);
  s.radius = uniform(gen, kSpotRadius.lo, kSpotRadius.hi);
  s.temp_factor = kSpotTemperatureFactor;
  s.host = uniform01(gen) < 0.5 ? Component::Primary : Component::Secondary;
  return s;
}

// Eggleton's fit for the volume-equivalent Roche lobe radius in units of the
// separation; q is the mass of the star over the mass of its companion.
double roche_lobe_radius(double q);

struct RadiusEstimate {
  double radius = 0.0;
  bool clamped = false;
};

// First-order spherical estimate r = 1 / (potential - q). For detached
// systems the result is capped at 0.95 of the component's Roche lobe when it
// overflows it. With q = m2/m1 the primary's lobe is roche_lobe_radius(1/q)
// and the secondary's is roche_lobe_radius(q).
RadiusEstimate radius_from_potential(double potential, double q,
                                     Morphology morphology = Morphology::Overcontact,
                                     Component star = Component::Primary);

// Area of intersection of two disks with radii r1, r2 whose centres are d apart.
double circle_overlap_area(double r1, double r2, double d);

// Continuous (unnormalized) flux model; generate_curve samples it.
class BinaryLightModel {
 public:
  BinaryLightModel(const BinaryParams& params, const std::optional<SpotParams>& spot);

  double flux(double phase) const;
  double base_flux(double phase) const;
  double spot_modulation(double phase) const;

  // Sky-projected separation in units of the orbital separation.
  double separation(double phase) const;
  double spot_amplitude() const { return spot_amplitude_; }
  double primary_depth() const { return depth1_; }

  double r1() const { return r1_; }
  double r2() const { return r2_; }
  bool clamped() const { return clamped_; }

 private:
  BinaryParams params_;
  std::optional<SpotParams> spot_;
  double sin_i_ = 1.0;
  double cos_i_ = 0.0;
  // detached
  double r1_ = 0.0, r2_ = 0.0;
  double surface1_ = 1.0, surface2_ = 1.0;
  double total_light_ = 0.0;
  bool clamped_ = false;
  // overcontact
  double depth1_ = 0.0, depth2_ = 0.0, width_ = 0.0, ellipsoidal_ = 0.0;
  // spot
  double spot_amplitude_ = 0.0, spot_longitude_ = 0.0, spot_projection_ = 0.0;
};

// Shape constants of the overcontact model.
inline constexpr double kOvercontactDepth = 0.35;
inline constexpr double kOvercontactWidth0 = 0.08;
inline constexpr double kOvercontactWidth1 = 0.10;
inline constexpr double kOvercontactEllipsoidal = 0.12;

struct SyntheticCurve {
  PhasedCurve curve;
  SynthLabel label;
};

// Samples the model at phases (j + 0.5) / n and renormalizes to unit maximum.
SyntheticCurve generate_curve(const BinaryParams& params, const std::optional<SpotParams>& spot,
                              std::size_t n_phases = 100);

}  // namespace ebmorph
