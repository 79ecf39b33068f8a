#pragma once

// Photometry ingestion, phase folding, normalization, binning and minimum
// alignment. Everything here is a pure function of its arguments.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace ebmorph {

enum class Passband { GaiaG, I, TESS };

std::string_view to_string(Passband band);
// Accepts the CLI spellings "gaia_g", "i", "tess".
Passband parse_passband(std::string_view text);

struct LightCurve {
  std::vector<double> times;
  std::vector<double> fluxes;
  std::optional<std::vector<double>> flux_errors;
  Passband passband = Passband::GaiaG;

  std::size_t size() const { return times.size(); }
  // Throws FormatError if any invariant is violated.
  void validate() const;
};

enum class EpochKind { MinimumFlux, MaximumFlux };

struct Ephemeris {
  double period = 1.0;
  double epoch = 0.0;
  EpochKind epoch_kind = EpochKind::MinimumFlux;
};

struct PhasedCurve {
  std::vector<double> phases;
  std::vector<double> fluxes;
  bool normalized = false;

  std::size_t n_points() const { return phases.size(); }
  bool empty() const { return phases.empty(); }
  void validate() const;
};

struct ParsedPhotometry {
  LightCurve curve;
  std::size_t dropped_rows = 0;
};

// Delimited text: columns time, flux, [flux_error]; separators may be commas,
// semicolons, tabs or spaces. Lines starting with '#' are comments and a
// leading non-numeric line is taken as a header. Rows with a non-finite or
// non-positive time/flux, or a repeated time stamp, are dropped and counted.
ParsedPhotometry parse_photometry(const std::filesystem::path& path, Passband band);

PhasedCurve phase_fold(const LightCurve& curve, const Ephemeris& eph);

PhasedCurve normalize_max_flux(const PhasedCurve& curve);

// Mean flux per bin [b/n, (b+1)/n), reported at the bin centre. Empty bins
// are filled by linear interpolation between the nearest non-empty bins,
// wrapping around phase 1 -> 0.
PhasedCurve bin_phases(const PhasedCurve& curve, std::size_t n_bins = 100);

// Rotates phases so the (first) minimum-flux point lands at phase 0.
PhasedCurve align_minimum(const PhasedCurve& curve);

// Two-column "phase,flux" text files used for synthetic datasets.
void write_phased_curve(const std::filesystem::path& path, const PhasedCurve& curve);
PhasedCurve read_phased_curve(const std::filesystem::path& path);

}  // namespace ebmorph
