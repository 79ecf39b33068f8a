#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "ebmorph/curve.hpp"
#include "ebmorph/error.hpp"
#include "support.hpp"

using namespace ebmorph;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no exception");
  return ErrorKind::InvalidArgument;
}

// ((t - epoch) mod P) / P with the negative remainder folded back explicitly.
double oracle_phase(double t, double epoch, double period) {
  double r = std::fmod(t - epoch, period);
  if (r < 0) r += period;
  double p = r / period;
  if (p >= 1.0) p -= 1.0;
  return p;
}

PhasedCurve make_curve(std::vector<double> phases, std::vector<double> fluxes) {
  PhasedCurve c;
  c.phases = std::move(phases);
  c.fluxes = std::move(fluxes);
  return c;
}

}  // namespace

TEST_SUITE("curve") {

TEST_CASE("parse: three-row csv with header") {
  testing::TempDir dir;
  testing::write_text(dir / "lc.csv", "t,f,e\n0,1,0.01\n1,0.9,0.01\n2,1,0.01\n");
  auto parsed = parse_photometry(dir / "lc.csv", Passband::TESS);
  CHECK(parsed.dropped_rows == 0);
  CHECK(parsed.curve.times == std::vector<double>{0, 1, 2});
  CHECK(parsed.curve.fluxes == std::vector<double>{1, 0.9, 1});
  REQUIRE(parsed.curve.flux_errors);
  CHECK(parsed.curve.flux_errors->size() == 3);
  CHECK(parsed.curve.passband == Passband::TESS);
}

TEST_CASE("parse: NaN row is dropped and counted") {
  testing::TempDir dir;
  std::string text = "# comment\n";
  for (int i = 0; i < 10; ++i) {
    text += std::to_string(i) + " " + (i == 4 ? std::string("nan") : std::string("1.5")) + "\n";
  }
  testing::write_text(dir / "lc.txt", text);
  auto parsed = parse_photometry(dir / "lc.txt", Passband::GaiaG);
  CHECK(parsed.curve.size() == 9);
  CHECK(parsed.dropped_rows == 1);
  CHECK_FALSE(parsed.curve.flux_errors);
}

TEST_CASE("parse: shuffled times match an independent sort") {
  testing::TempDir dir;
  std::mt19937_64 gen(11);
  std::vector<std::pair<double, double>> rows;
  for (int i = 0; i < 200; ++i) rows.push_back({1000.0 + i * 0.37, 1.0 + 0.001 * i});
  std::shuffle(rows.begin(), rows.end(), gen);
  std::string text;
  for (auto [t, f] : rows) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g;%.17g\n", t, f);
    text += buf;
  }
  testing::write_text(dir / "lc.csv", text);
  auto parsed = parse_photometry(dir / "lc.csv", Passband::I);

  auto expected = rows;
  std::sort(expected.begin(), expected.end());
  REQUIRE(parsed.curve.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(parsed.curve.times[i] == expected[i].first);
    CHECK(parsed.curve.fluxes[i] == expected[i].second);
  }
  CHECK(std::adjacent_find(parsed.curve.times.begin(), parsed.curve.times.end(),
                           std::greater_equal<>()) == parsed.curve.times.end());
}

TEST_CASE("parse: tab separated, duplicate time and non-positive flux dropped") {
  testing::TempDir dir;
  testing::write_text(dir / "lc.tsv", "1\t2\n1\t3\n2\t-1\n3\t0\n4\t5\n");
  auto parsed = parse_photometry(dir / "lc.tsv", Passband::GaiaG);
  CHECK(parsed.curve.times == std::vector<double>{1, 4});
  CHECK(parsed.dropped_rows == 3);
}

TEST_CASE("parse: errors") {
  testing::TempDir dir;
  CHECK(kind_of([&] { parse_photometry(dir / "missing.csv", Passband::GaiaG); }) ==
        ErrorKind::FileNotFound);
  testing::write_text(dir / "one.csv", "1\n2\n3\n");
  CHECK(kind_of([&] { parse_photometry(dir / "one.csv", Passband::GaiaG); }) ==
        ErrorKind::FormatError);
  testing::write_text(dir / "empty.csv", "t,f\n# nothing\n");
  CHECK(kind_of([&] { parse_photometry(dir / "empty.csv", Passband::GaiaG); }) ==
        ErrorKind::EmptyCurve);
  testing::write_text(dir / "bad.csv", "t,f\nnan,1\n1,inf\n");
  CHECK(kind_of([&] { parse_photometry(dir / "bad.csv", Passband::GaiaG); }) ==
        ErrorKind::EmptyCurve);
}

TEST_CASE("passband names") {
  for (auto b : {Passband::GaiaG, Passband::I, Passband::TESS}) {
    CHECK(parse_passband(to_string(b)) == b);
  }
  CHECK(to_string(Passband::GaiaG) == "gaia_g");
  CHECK_THROWS_AS(parse_passband("V"), Error);
}

TEST_CASE("phase_fold: integer cycles and quarter") {
  LightCurve lc;
  const double epoch = 2450000.5, period = 0.731;
  for (int k = 0; k < 5; ++k) {
    lc.times.push_back(epoch + k * period);
    lc.fluxes.push_back(1.0 + k);
  }
  auto pc = phase_fold(lc, {period, epoch, EpochKind::MinimumFlux});
  for (double p : pc.phases) CHECK(std::min(p, 1.0 - p) < 1e-9);

  LightCurve q;
  q.times = {epoch + 0.25 * period};
  q.fluxes = {1.0};
  // a large epoch limits the representable phase to ~1e-10
  CHECK(std::abs(phase_fold(q, {period, epoch, EpochKind::MinimumFlux}).phases[0] - 0.25) < 1e-9);
}

TEST_CASE("phase_fold: modulo oracle on random times") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> t(-500.0, 5000.0), per(0.05, 30.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double period = per(gen), epoch = t(gen);
    LightCurve lc;
    for (int i = 0; i < 1000; ++i) lc.times.push_back(t(gen));
    std::sort(lc.times.begin(), lc.times.end());
    lc.times.erase(std::unique(lc.times.begin(), lc.times.end()), lc.times.end());
    lc.fluxes.assign(lc.times.size(), 1.0);
    std::iota(lc.fluxes.begin(), lc.fluxes.end(), 1.0);

    auto pc = phase_fold(lc, {period, epoch, EpochKind::MinimumFlux});
    REQUIRE(pc.n_points() == lc.size());
    CHECK(std::is_sorted(pc.phases.begin(), pc.phases.end()));
    // fluxes are distinct so they identify the source row
    double worst = 0.0;
    for (std::size_t i = 0; i < pc.n_points(); ++i) {
      const auto src = static_cast<std::size_t>(pc.fluxes[i]) - 1;
      const double want = oracle_phase(lc.times[src], epoch, period);
      double d = std::abs(pc.phases[i] - want);
      d = std::min(d, 1.0 - d);  // 0 and 1 are the same phase
      worst = std::max(worst, d);
      CHECK(pc.phases[i] >= 0.0);
      CHECK(pc.phases[i] < 1.0);
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("phase_fold: translation by whole periods") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  LightCurve lc;
  for (int i = 0; i < 300; ++i) lc.times.push_back(i * 0.3331 + u(gen) * 1e-3);
  lc.fluxes.assign(lc.times.size(), 1.0);
  std::iota(lc.fluxes.begin(), lc.fluxes.end(), 1.0);
  const double period = 1.7;
  auto a = phase_fold(lc, {period, 0.2, EpochKind::MinimumFlux});
  for (int k : {-3, 1, 7}) {
    LightCurve shifted = lc;
    for (auto& t : shifted.times) t += k * period;
    auto b = phase_fold(shifted, {period, 0.2, EpochKind::MinimumFlux});
    REQUIRE(b.n_points() == a.n_points());
    for (std::size_t i = 0; i < a.n_points(); ++i) {
      double d = std::abs(a.phases[i] - b.phases[i]);
      CHECK(std::min(d, 1.0 - d) < 1e-12);
    }
  }
}

TEST_CASE("phase_fold: invalid period") {
  LightCurve lc;
  lc.times = {1.0};
  lc.fluxes = {1.0};
  for (double p : {0.0, -1.0, std::nan(""), HUGE_VAL}) {
    CHECK(kind_of([&] { phase_fold(lc, {p, 0.0, EpochKind::MinimumFlux}); }) ==
          ErrorKind::InvalidPeriod);
  }
}

TEST_CASE("normalize_max_flux") {
  auto c = normalize_max_flux(make_curve({0.1, 0.2, 0.3}, {2, 1, 2}));
  CHECK(c.fluxes == std::vector<double>{1, 0.5, 1});
  CHECK(c.normalized);
  CHECK(normalize_max_flux(make_curve({0.1, 0.2, 0.3}, {3, 3, 3})).fluxes ==
        std::vector<double>{1, 1, 1});

  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> f(0.01, 50.0);
  std::vector<double> ph, fl;
  for (int i = 0; i < 500; ++i) {
    ph.push_back(i / 500.0);
    fl.push_back(f(gen));
  }
  const double mx = *std::max_element(fl.begin(), fl.end());
  auto n = normalize_max_flux(make_curve(ph, fl));
  CHECK(*std::max_element(n.fluxes.begin(), n.fluxes.end()) == 1.0);
  for (std::size_t i = 0; i < fl.size(); ++i) CHECK(n.fluxes[i] == fl[i] / mx);
  CHECK(normalize_max_flux(n).fluxes == n.fluxes);

  CHECK(kind_of([] { normalize_max_flux(make_curve({0.1, 0.2}, {0.0, -1.0})); }) ==
        ErrorKind::NonPositiveMax);
  CHECK(kind_of([] { normalize_max_flux(PhasedCurve{}); }) == ErrorKind::EmptyCurve);
}

TEST_CASE("bin_phases: fixed point and mean of two") {
  std::vector<double> ph, fl;
  for (int b = 0; b < 100; ++b) {
    ph.push_back((b + 0.5) / 100.0);
    fl.push_back(std::sin(b * 0.1) + 2.0);
  }
  auto once = bin_phases(make_curve(ph, fl), 100);
  CHECK(once.fluxes == fl);
  CHECK(once.phases == ph);
  CHECK(bin_phases(once, 100).fluxes == once.fluxes);

  std::vector<double> ph2, fl2, want;
  for (int b = 0; b < 100; ++b) {
    const double a = 1.0 + b * 0.01, c = 2.0 - b * 0.003;
    ph2.push_back((b + 0.2) / 100.0);
    ph2.push_back((b + 0.7) / 100.0);
    fl2.push_back(a);
    fl2.push_back(c);
    want.push_back((a + c) / 2.0);
  }
  auto two = bin_phases(make_curve(ph2, fl2), 100);
  REQUIRE(two.n_points() == 100);
  for (int b = 0; b < 100; ++b) CHECK(two.fluxes[b] == doctest::Approx(want[b]).epsilon(1e-15));
}

TEST_CASE("bin_phases: sparse curve matches per-bin mean and circular interpolation") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> ph, fl;
    for (int i = 0; i < 30; ++i) ph.push_back(u(gen));
    std::sort(ph.begin(), ph.end());
    for (std::size_t i = 0; i < ph.size(); ++i) fl.push_back(0.5 + u(gen));
    const int n = 100;
    auto out = bin_phases(make_curve(ph, fl), n);

    // brute force: per-bin membership by scanning all points
    std::vector<double> mean(n, 0.0);
    std::vector<bool> has(n, false);
    for (int b = 0; b < n; ++b) {
      double s = 0;
      int c = 0;
      for (std::size_t i = 0; i < ph.size(); ++i) {
        if (ph[i] >= b / double(n) && ph[i] < (b + 1) / double(n)) {
          s += fl[i];
          ++c;
        }
      }
      if (c) {
        mean[b] = s / c;
        has[b] = true;
      }
    }
    for (int b = 0; b < n; ++b) {
      double want;
      if (has[b]) {
        want = mean[b];
      } else {
        int lo = b, hi = b, dl = 0, dh = 0;
        while (!has[lo]) { lo = (lo + n - 1) % n; ++dl; }
        while (!has[hi]) { hi = (hi + 1) % n; ++dh; }
        want = mean[lo] + (mean[hi] - mean[lo]) * dl / double(dl + dh);
      }
      CHECK(out.fluxes[b] == doctest::Approx(want).epsilon(1e-12));
      CHECK(out.phases[b] == (b + 0.5) / n);
    }
  }
}

TEST_CASE("bin_phases: single point fills every bin; errors") {
  auto out = bin_phases(make_curve({0.42}, {0.7}), 10);
  for (double f : out.fluxes) CHECK(f == 0.7);
  CHECK(kind_of([] { bin_phases(PhasedCurve{}, 100); }) == ErrorKind::EmptyCurve);
  CHECK_THROWS_AS(bin_phases(make_curve({0.1}, {1.0}), 1), Error);
}

TEST_CASE("align_minimum") {
  auto id = make_curve({0.0, 0.25, 0.5, 0.75}, {0.5, 1.0, 0.8, 1.0});
  auto same = align_minimum(id);
  CHECK(same.phases == id.phases);
  CHECK(same.fluxes == id.fluxes);

  std::vector<double> ph, fl;
  for (int b = 0; b < 100; ++b) {
    ph.push_back(b / 100.0);
    fl.push_back(1.0 - 0.4 * std::exp(-std::pow((b - 30) / 3.0, 2)));  // min at 0.3
  }
  auto binned = make_curve(ph, fl);
  auto al = align_minimum(binned);
  const auto argmin = static_cast<std::size_t>(
      std::min_element(fl.begin(), fl.end()) - fl.begin());
  const double shift = ph[argmin];
  CHECK(shift == doctest::Approx(0.3));
  CHECK(al.phases[0] == 0.0);
  CHECK(al.fluxes[0] == fl[argmin]);
  CHECK(std::is_sorted(al.phases.begin(), al.phases.end()));
  for (std::size_t i = 0; i < al.n_points(); ++i) {
    const std::size_t src = (argmin + i) % fl.size();
    CHECK(al.fluxes[i] == fl[src]);
    double want = ph[src] - shift;
    if (want < 0) want += 1.0;
    CHECK(al.phases[i] == doctest::Approx(want).epsilon(1e-12));
  }
  auto ties = align_minimum(make_curve({0.1, 0.3, 0.6, 0.8}, {0.2, 1.0, 0.2, 1.0}));
  CHECK(ties.fluxes == std::vector<double>{0.2, 1.0, 0.2, 1.0});
  CHECK(ties.phases[2] == doctest::Approx(0.5));
  CHECK(kind_of([] { align_minimum(PhasedCurve{}); }) == ErrorKind::EmptyCurve);
}

TEST_CASE("align_minimum puts the minimum at index 0 for random curves") {
  std::mt19937_64 gen(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ph, fl;
    for (int i = 0; i < 60; ++i) {
      ph.push_back(u(gen));
      fl.push_back(u(gen));
    }
    std::sort(ph.begin(), ph.end());
    auto al = align_minimum(make_curve(ph, fl));
    const auto it = std::min_element(al.fluxes.begin(), al.fluxes.end());
    CHECK(it == al.fluxes.begin());
    CHECK(al.phases.front() == 0.0);
    CHECK(al.phases.back() < 1.0);
  }
}

TEST_CASE("phased curve file round-trip") {
  testing::TempDir dir;
  auto c = make_curve({0.0, 0.1234567890123, 0.9}, {1.0, 0.987654321, 0.5});
  write_phased_curve(dir / "c.csv", c);
  auto back = read_phased_curve(dir / "c.csv");
  CHECK(back.phases == c.phases);
  CHECK(back.fluxes == c.fluxes);
}

}  // TEST_SUITE
