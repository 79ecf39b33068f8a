#include "ebmorph/curve.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>

#include "ebmorph/error.hpp"

namespace ebmorph {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_sep = [](char c) {
    return c == ',' || c == ';' || c == ' ' || c == '\t' || c == '\r';
  };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_sep(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> parse_number(std::string_view field) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

bool is_blank_or_comment(std::string_view line) {
  auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string_view::npos || line[pos] == '#';
}

// Reads the numeric rows of a delimited text file. A first non-comment line
// whose leading field is not numeric is skipped as a header.
std::vector<std::vector<double>> read_rows(const std::filesystem::path& path,
                                           std::size_t min_columns) {
  std::ifstream in(path);
  if (!in) {
    throw Error(std::filesystem::exists(path) ? ErrorKind::IoError : ErrorKind::FileNotFound,
                path.string());
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first_content = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) continue;
    auto fields = split_fields(line);
    if (first_content) {
      first_content = false;
      if (!fields.empty() && !parse_number(fields.front())) continue;
    }
    if (fields.size() < min_columns) {
      throw Error(ErrorKind::FormatError, path.string() + ":" + std::to_string(line_no) +
                                              ": expected at least " +
                                              std::to_string(min_columns) + " numeric columns");
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) {
      auto v = parse_number(f);
      if (!v) {
        throw Error(ErrorKind::FormatError, path.string() + ":" + std::to_string(line_no) +
                                                ": not a number '" + std::string(f) + "'");
      }
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double wrap_unit(double x) {
  double p = x - std::floor(x);
  // floor can leave exactly 1.0 for tiny negative inputs
  return p >= 1.0 ? 0.0 : p;
}

PhasedCurve sorted_by_phase(std::vector<double> phases, std::vector<double> fluxes,
                            bool normalized) {
  std::vector<std::size_t> order(phases.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return phases[a] < phases[b]; });
  PhasedCurve out;
  out.normalized = normalized;
  out.phases.reserve(order.size());
  out.fluxes.reserve(order.size());
  for (auto i : order) {
    out.phases.push_back(phases[i]);
    out.fluxes.push_back(fluxes[i]);
  }
  return out;
}

}  // namespace

std::string_view to_string(Passband band) {
  switch (band) {
    case Passband::GaiaG: return "gaia_g";
    case Passband::I: return "i";
    case Passband::TESS: return "tess";
  }
  return "gaia_g";
}

Passband parse_passband(std::string_view text) {
  if (text == "gaia_g") return Passband::GaiaG;
  if (text == "i") return Passband::I;
  if (text == "tess") return Passband::TESS;
  throw Error(ErrorKind::InvalidArgument, "unknown passband '" + std::string(text) + "'");
}

void LightCurve::validate() const {
  if (fluxes.size() != times.size() || (flux_errors && flux_errors->size() != times.size())) {
    throw Error(ErrorKind::FormatError, "light curve sequences differ in length");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(fluxes[i]) || fluxes[i] <= 0.0) {
      throw Error(ErrorKind::FormatError, "non-finite or non-positive sample");
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw Error(ErrorKind::FormatError, "times not strictly increasing");
    }
  }
}

void PhasedCurve::validate() const {
  if (phases.size() != fluxes.size()) {
    throw Error(ErrorKind::FormatError, "phased curve sequences differ in length");
  }
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (!(phases[i] >= 0.0 && phases[i] < 1.0) || !std::isfinite(fluxes[i])) {
      throw Error(ErrorKind::FormatError, "phase outside [0, 1) or non-finite flux");
    }
    if (i > 0 && phases[i] < phases[i - 1]) {
      throw Error(ErrorKind::FormatError, "phases not sorted");
    }
  }
  if (normalized && !phases.empty()) {
    double mx = *std::max_element(fluxes.begin(), fluxes.end());
    if (std::abs(mx - 1.0) > 1e-12) {
      throw Error(ErrorKind::FormatError, "normalized curve does not peak at 1");
    }
  }
}

ParsedPhotometry parse_photometry(const std::filesystem::path& path, Passband band) {
  auto rows = read_rows(path, 2);

  struct Row {
    double t, f, e;
  };
  std::vector<Row> kept;
  kept.reserve(rows.size());
  std::size_t dropped = 0;
  bool have_errors = !rows.empty();
  for (const auto& r : rows) {
    if (!std::isfinite(r[0]) || !std::isfinite(r[1]) || r[1] <= 0.0) {
      ++dropped;
      continue;
    }
    have_errors = have_errors && r.size() >= 3;
    kept.push_back({r[0], r[1], r.size() >= 3 ? r[2] : 0.0});
  }
  if (kept.empty()) throw Error(ErrorKind::EmptyCurve, path.string() + ": no valid rows");

  std::stable_sort(kept.begin(), kept.end(), [](const Row& a, const Row& b) { return a.t < b.t; });

  ParsedPhotometry out;
  out.curve.passband = band;
  if (have_errors) out.curve.flux_errors.emplace();
  for (const auto& r : kept) {
    if (!out.curve.times.empty() && r.t == out.curve.times.back()) {
      ++dropped;
      continue;
    }
    out.curve.times.push_back(r.t);
    out.curve.fluxes.push_back(r.f);
    if (have_errors) out.curve.flux_errors->push_back(r.e);
  }
  out.dropped_rows = dropped;
  return out;
}

PhasedCurve phase_fold(const LightCurve& curve, const Ephemeris& eph) {
  if (!(eph.period > 0.0) || !std::isfinite(eph.period)) {
    throw Error(ErrorKind::InvalidPeriod, "period must be positive and finite");
  }
  if (!std::isfinite(eph.epoch)) throw Error(ErrorKind::InvalidPeriod, "epoch must be finite");
  std::vector<double> phases(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) {
    phases[i] = wrap_unit((curve.times[i] - eph.epoch) / eph.period);
  }
  return sorted_by_phase(std::move(phases), curve.fluxes, false);
}

PhasedCurve normalize_max_flux(const PhasedCurve& curve) {
  if (curve.empty()) throw Error(ErrorKind::EmptyCurve, "normalize_max_flux");
  double mx = *std::max_element(curve.fluxes.begin(), curve.fluxes.end());
  if (!(mx > 0.0)) throw Error(ErrorKind::NonPositiveMax, "maximum flux must be positive");
  PhasedCurve out = curve;
  for (auto& f : out.fluxes) f /= mx;
  out.normalized = true;
  return out;
}

PhasedCurve bin_phases(const PhasedCurve& curve, std::size_t n_bins) {
  if (curve.empty()) throw Error(ErrorKind::EmptyCurve, "bin_phases");
  if (n_bins < 2) throw Error(ErrorKind::InvalidArgument, "n_bins must be >= 2");

  const double n = static_cast<double>(n_bins);
  std::vector<double> sums(n_bins, 0.0);
  std::vector<std::size_t> counts(n_bins, 0);
  for (std::size_t i = 0; i < curve.n_points(); ++i) {
    auto b = static_cast<std::size_t>(curve.phases[i] * n);
    b = std::min(b, n_bins - 1);
    sums[b] += curve.fluxes[i];
    ++counts[b];
  }

  std::vector<double> means(n_bins, 0.0);
  std::vector<std::size_t> filled;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b] > 0) {
      means[b] = sums[b] / static_cast<double>(counts[b]);
      filled.push_back(b);
    }
  }

  // Walk each circular gap between consecutive filled bins.
  for (std::size_t k = 0; k < filled.size(); ++k) {
    std::size_t a = filled[k];
    std::size_t b = filled[(k + 1) % filled.size()];
    std::size_t gap = (b + n_bins - a) % n_bins;
    if (gap == 0) gap = n_bins;
    for (std::size_t step = 1; step < gap; ++step) {
      double t = static_cast<double>(step) / static_cast<double>(gap);
      means[(a + step) % n_bins] = means[a] + t * (means[b] - means[a]);
    }
  }

  PhasedCurve out;
  out.phases.resize(n_bins);
  out.fluxes = std::move(means);
  for (std::size_t b = 0; b < n_bins; ++b) out.phases[b] = (static_cast<double>(b) + 0.5) / n;
  return out;
}

PhasedCurve align_minimum(const PhasedCurve& curve) {
  if (curve.empty()) throw Error(ErrorKind::EmptyCurve, "align_minimum");
  // Input is phase-sorted, so the first minimum is also the smallest phase.
  auto it = std::min_element(curve.fluxes.begin(), curve.fluxes.end());
  const double shift = curve.phases[static_cast<std::size_t>(it - curve.fluxes.begin())];
  std::vector<double> phases(curve.n_points());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    double p = curve.phases[i] - shift;
    if (p < 0.0) p += 1.0;
    if (p >= 1.0) p = std::nextafter(1.0, 0.0);
    phases[i] = p;
  }
  return sorted_by_phase(std::move(phases), curve.fluxes, curve.normalized);
}

void write_phased_curve(const std::filesystem::path& path, const PhasedCurve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << "phase,flux\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < curve.n_points(); ++i) {
    out << curve.phases[i] << ',' << curve.fluxes[i] << '\n';
  }
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

PhasedCurve read_phased_curve(const std::filesystem::path& path) {
  auto rows = read_rows(path, 2);
  if (rows.empty()) throw Error(ErrorKind::EmptyCurve, path.string());
  std::vector<double> phases, fluxes;
  for (const auto& r : rows) {
    if (!(r[0] >= 0.0 && r[0] < 1.0) || !std::isfinite(r[1])) {
      throw Error(ErrorKind::FormatError, path.string() + ": phase outside [0, 1)");
    }
    phases.push_back(r[0]);
    fluxes.push_back(r[1]);
  }
  return sorted_by_phase(std::move(phases), std::move(fluxes), false);
}

}  // namespace ebmorph
