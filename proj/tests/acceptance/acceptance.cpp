// Acceptance checks 1-9. Prints one PASS/FAIL line per check and exits
// nonzero if any selected check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ebmorph/dataset.hpp"
#include "ebmorph/error.hpp"
#include "ebmorph/hier.hpp"
#include "ebmorph/imaging.hpp"
#include "ebmorph/metrics.hpp"
#include "ebmorph/model.hpp"
#include "ebmorph/synth.hpp"
#include "ebmorph/training.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ebmorph;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::string cli;
  std::size_t n_per_class = 4000;
  std::size_t val_per_class = 1000;
  std::size_t epochs = 10;
  std::uint64_t seed = 2025;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 --------------------------------------------------------------------------

Outcome metric_fixtures() {
  const auto t0 = std::chrono::steady_clock::now();
  int bad = 0, rows = 0;
  std::string worst;
  auto check = [&](const fixtures::MetricRow& row) {
    ++rows;
    const auto r = report({row.tn, row.fp, row.fn, row.tp});
    for (auto [got, want] : {std::pair{r.accuracy, row.accuracy}, {r.precision, row.precision},
                             {r.recall, row.recall}, {r.f1, row.f1}}) {
      if (std::abs(got - want) > fixtures::kRoundingTolerance) {
        ++bad;
        worst = row.name;
      }
    }
  };
  for (const auto& row : fixtures::kMorphologyRows) check(row);
  for (const auto& row : fixtures::kSpotRows) check(row);
  const double secs = seconds_since(t0);
  return {bad == 0 && rows == 16 && secs < 1.0,
          fmt("%d rows, %d mismatched values%s, %.3f s", rows, bad,
              worst.empty() ? "" : (" (e.g. " + worst + ")").c_str(), secs)};
}

// 2 --------------------------------------------------------------------------

struct GradPair {
  CompactCnn<double> net;
  ImageRaster image;
  int label;
};

GradPair grad_pair(std::uint64_t seed) {
  Rng gen(derive_seed(seed, 0));
  GradPair p{CompactCnn<double>::glorot(gen()), {}, 0};
  auto w = p.net.parameters();
  for (const auto& c : kLayout.conv) {
    for (std::size_t i = 0; i < c.out_channels; ++i) w[c.bias_offset + i] = uniform(gen, -0.1, 0.1);
  }
  const SynthLabel cls{gen() % 2 ? Morphology::Overcontact : Morphology::Detached, false};
  const auto sys = sample_system(cls, 100, gen);
  p.image = quantized(curve_to_image(
      apply_augmentations(sys.clean, AugmentConfig::for_passband(Passband::GaiaG), gen)));
  p.label = cls.morphology == Morphology::Overcontact ? 1 : 0;
  return p;
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t compared = 0, skipped = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto pair = grad_pair(s);
    GradCheckOptions opt;
    opt.seed = s;
    const auto r = grad_check(pair.net, pair.image, pair.label, opt);
    worst = std::max(worst, r.max_relative_error);
    compared += r.checked.size();
    skipped += r.skipped_at_kinks;
  }
  const auto pair = grad_pair(99);
  GradCheckOptions mutated;
  mutated.seed = 99;
  mutated.corrupt_gradient = [](std::span<double> g) {
    for (std::size_t i = kLayout.conv[0].weight_offset; i < kLayout.conv[0].bias_offset; ++i) {
      g[i] = -g[i];
    }
  };
  // more draws so that several of the 72 corrupted weights are among them
  mutated.n_params = 400;
  const double mutation = grad_check(pair.net, pair.image, pair.label, mutated).max_relative_error;
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && compared >= 20 * 200 && mutation > 1e-2 && secs < 120.0,
          fmt("worst %.3g over 20 pairs (%zu parameters, %zu kink probes skipped); mutation %.3g; "
              "%.1f s",
              worst, compared, skipped, mutation, secs)};
}

// 3 --------------------------------------------------------------------------

Outcome raster_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t point_mismatch = 0, pixel_mismatch = 0, count_mismatch = 0;
  for (std::size_t G : {8u, 24u, 48u}) {
    HexLattice lat(G);
    PolarPoints pts;
    for (int i = 0; i < 1000; ++i) pts.xy.push_back({u(gen), u(gen)});
    const auto grid = hexbin_counts(pts, G);
    std::vector<std::uint32_t> want(lat.size(), 0);
    for (auto p : pts.xy) {
      const auto o = oracle::nearest_center(G, p.x, p.y);
      ++want[o];
      point_mismatch += lat.nearest(p.x, p.y) != o;
    }
    count_mismatch += grid.counts != want;
    const auto par = assign_pixels(lat, kImageSize);
    const auto ser = assign_pixels_serial(lat, kImageSize);
    for (std::size_t r = 0; r < kImageSize; ++r) {
      for (std::size_t c = 0; c < kImageSize; ++c) {
        const auto p = pixel_center(r, c, kImageSize);
        const auto o = oracle::nearest_center(G, p.x, p.y);
        pixel_mismatch += par[r * kImageSize + c] != o || ser[r * kImageSize + c] != o;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {point_mismatch == 0 && pixel_mismatch == 0 && count_mismatch == 0 && secs < 60.0,
          fmt("G in {8,24,48}: %zu point, %zu pixel, %zu histogram mismatches; %.1f s",
              point_mismatch, pixel_mismatch, count_mismatch, secs)};
}

// 4 --------------------------------------------------------------------------

double circular_gap(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

Outcome transform_invariants() {
  Rng gen(4);
  std::size_t radius_bad = 0, count_bad = 0, mirror_checked = 0;
  double fold_err = 0.0, mirror_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const SynthLabel cls{i % 2 ? Morphology::Overcontact : Morphology::Detached, i % 4 >= 2};
    const auto sys = sample_system(cls, 100, gen);
    const auto band = static_cast<Passband>(i % 3);
    const auto observed = apply_augmentations(sys.clean, AugmentConfig::for_passband(band), gen);

    const auto polar = to_polar(observed);
    for (auto q : polar.xy) {
      const double r = std::hypot(q.x, q.y);
      radius_bad += r < kMinPolarRadius - 1e-12 || r > kMaxPolarRadius + 1e-12;
    }
    const std::size_t G = std::vector<std::size_t>{8, 24, 48}[i % 3];
    count_bad += hexbin_counts(polar, G).total() != observed.n_points();

    // unfold onto a time axis, then fold each time stamp with translated
    // ephemerides (one point at a time, since folding re-sorts by phase)
    const double period = uniform(gen, 0.2, 5.0), t0 = uniform(gen, -50.0, 50.0);
    const auto k = static_cast<double>(uniform_index(gen, 21)) - 10.0;
    const double delta = uniform(gen, -20.0, 20.0);
    auto fold_one = [](double t, double p, double e) {
      return phase_fold(LightCurve{{t}, {1.0}, std::nullopt, Passband::GaiaG}, {p, e}).phases[0];
    };
    for (std::size_t j = 0; j < observed.n_points(); ++j) {
      const auto cycle = static_cast<double>(uniform_index(gen, 40));
      const double t = t0 + (cycle + observed.phases[j]) * period;
      const double base = fold_one(t, period, t0);
      fold_err = std::max(fold_err, circular_gap(base, fold_one(t, period, t0 + k * period)));
      fold_err = std::max(fold_err, circular_gap(base, fold_one(t + delta, period, t0 + delta)));
    }

    // phase-mirror symmetry of unspotted curves carried to the polar plane
    if (!cls.has_spot) {
      const auto clean = generate_curve(sys.params, std::nullopt).curve;
      const auto pts = to_polar(clean);
      const std::size_t n = pts.xy.size();
      for (std::size_t j = 0; j < n; ++j) {
        const auto a = pts.xy[j], b = pts.xy[n - 1 - j];
        mirror_err = std::max({mirror_err, std::abs(a.x + b.x), std::abs(a.y - b.y)});
      }
      ++mirror_checked;
    }
  }
  return {radius_bad == 0 && count_bad == 0 && fold_err < 1e-12 && mirror_err < 1e-9,
          fmt("1000 curves: %zu radii out of range, %zu count violations, fold shift %.2g, "
              "mirror %.2g over %zu curves",
              radius_bad, count_bad, fold_err, mirror_err, mirror_checked)};
}

// 5 and 6 --------------------------------------------------------------------

Outcome desk_scale(const Options& o, Task task, double threshold) {
  const auto t0 = std::chrono::steady_clock::now();
  GenerationConfig cfg;
  cfg.passband = Passband::GaiaG;
  cfg.n_per_class = o.n_per_class;
  cfg.val_per_class = o.val_per_class;
  cfg.seed = o.seed + static_cast<std::uint64_t>(task);
  switch (task) {
    case Task::Binary:
      cfg.morphology = MorphologySelection::Both;
      cfg.spots = SpotMode::None;
      break;
    case Task::DetachedSpot:
      cfg.morphology = MorphologySelection::Detached;
      cfg.spots = SpotMode::Mixed;
      break;
    case Task::OvercontactSpot:
      cfg.morphology = MorphologySelection::Overcontact;
      cfg.spots = SpotMode::Mixed;
      break;
  }
  testing::TempDir dir;
  const auto m = build_dataset(cfg, dir.path());
  const auto train_set = load_task_images(m, dir.path(), task, Split::Train);
  const auto val_set = load_task_images(m, dir.path(), task, Split::Validation);
  std::cerr << to_string(task) << ": " << train_set.size() << " train / " << val_set.size()
            << " validation images in " << fmt("%.0f s", seconds_since(t0)) << std::endl;

  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.seed = o.seed;
  TrainingMetadata meta;
  meta.task = std::string(to_string(task));
  const auto ckpt = train(train_set, &val_set, tc, meta, [&](std::size_t e, const EpochRecord& r) {
    std::cerr << fmt("  epoch %zu loss %.4f train %.4f validation %.4f  %.0f s\n", e + 1,
                     r.train_loss, r.train_accuracy, r.validation_accuracy.value_or(0.0),
                     seconds_since(t0));
  });
  const auto r = evaluate_model(ckpt.model(), val_set);
  std::string routing;
  bool routing_ok = true;
  if (task == Task::Binary) {
    // End to end through the two-stage classifier: fresh detached, unspotted
    // curves must come out Detached.
    GenerationConfig fresh = cfg;
    fresh.morphology = MorphologySelection::Detached;
    fresh.n_per_class = 200;
    fresh.val_per_class = 0;
    fresh.seed = o.seed + 100;
    const auto fm = build_dataset(fresh, dir / "fresh");
    Checkpoint zero;
    zero.weights.assign(kParameterCount, 0.0f);
    std::size_t correct = 0;
    for (const auto& e : fm.entries) {
      const auto curve = read_phased_curve(dir / "fresh" / e.curve_file);
      correct += classify_hierarchical(ckpt, zero, zero, curve).morphology == Morphology::Detached;
    }
    const double frac = static_cast<double>(correct) / static_cast<double>(fm.entries.size());
    routing_ok = frac >= 0.90;
    routing = fmt("; two-stage morphology correct on %zu/%zu fresh detached curves", correct,
                  fm.entries.size());
  }
  return {r.accuracy >= threshold && routing_ok,
          fmt("%s validation accuracy %.4f (need >= %.2f), AUC %.4f, %zu/class x %zu epochs, "
              "%.0f s",
              std::string(to_string(task)).c_str(), r.accuracy, threshold, r.auc.value_or(0.0),
              o.n_per_class, o.epochs, seconds_since(t0)) + routing};
}

// 7 --------------------------------------------------------------------------

Outcome auc_oracle() {
  std::mt19937_64 gen(7);
  double worst = 0.0;
  for (int set = 0; set < 100; ++set) {
    const std::size_t n = 10 + gen() % 190;
    std::vector<double> scores(n);
    std::vector<int> truths(n);
    do {
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = set % 2 ? static_cast<double>(gen() % 7) / 6.0
                            : std::uniform_real_distribution<double>(0, 1)(gen);
        truths[i] = static_cast<int>(gen() % 2);
      }
    } while (std::count(truths.begin(), truths.end(), 1) == 0 ||
             std::count(truths.begin(), truths.end(), 0) == 0);
    worst = std::max(worst, std::abs(auc(scores, truths) - oracle::roc_auc(scores, truths)));
  }
  std::vector<int> t{0, 1, 0, 1, 1, 0};
  std::vector<double> tied(6, 0.3), separated{0.1, 0.9, 0.2, 0.8, 0.7, 0.3};
  const double a_tied = auc(tied, t), a_sep = auc(separated, t);
  return {worst < 1e-12 && a_tied == 0.5 && a_sep == 1.0,
          fmt("max deviation %.2g over 100 sets; tied %.17g, separated %.17g", worst, a_tied, a_sep)};
}

// 8 --------------------------------------------------------------------------

int run(const std::string& cmd) {
  std::cerr << "$ " << cmd << std::endl;
  return std::system(cmd.c_str());
}

Outcome cli_determinism(const Options& o) {
  if (o.cli.empty() || !fs::exists(o.cli)) return {false, "CLI binary not found: " + o.cli};
  testing::TempDir dir;
  std::vector<std::string> files;
  for (const char* tag : {"a", "b"}) {
    const auto root = dir / tag;
    // the two runs use different thread caps
    const std::string env = std::string("EBMORPH_THREADS=") + (tag[0] == 'a' ? "1" : "2") + " ";
    const std::string q = "'" + o.cli + "'";
    const std::string d = "'" + root.string() + "'";
    if (run(env + q + " generate --morphology both --spots mixed --passband gaia_g "
                      "--n-per-class 12 --val-per-class 4 --seed 17 --out " + d + "/data > /dev/null") != 0 ||
        run(env + q + " train --manifest " + d + "/data/manifest.jsonl --task binary --epochs 2 "
                      "--batch 32 --lr 0.001 --seed 5 --out " + d + "/binary.ckpt > /dev/null") != 0 ||
        run(env + q + " evaluate --manifest " + d + "/data/manifest.jsonl --ckpt " + d +
            "/binary.ckpt --report " + d + "/report.json > /dev/null") != 0) {
      return {false, "a CLI step failed"};
    }
  }
  std::size_t compared = 0, differing = 0;
  for (const auto& ent : fs::recursive_directory_iterator(dir / "a")) {
    if (!ent.is_regular_file()) continue;
    const auto rel = fs::relative(ent.path(), dir / "a");
    ++compared;
    if (testing::read_bytes(ent.path()) != testing::read_bytes(dir / "b" / rel)) ++differing;
  }
  return {differing == 0 && compared > 0,
          fmt("%zu files compared (manifest, curves, images, checkpoint, report), %zu differ",
              compared, differing)};
}

// 9 --------------------------------------------------------------------------

std::size_t longest_plateau(const std::vector<double>& f, double tol) {
  const std::size_t n = f.size();
  std::size_t best = 0, run = 0;
  for (std::size_t k = 0; k < 2 * n; ++k) {
    run = std::abs(f[k % n] - 1.0) < tol ? run + 1 : 0;
    best = std::max(best, run);
  }
  return std::min(best, n);
}

Outcome morphology_properties() {
  Rng gen(9);
  std::size_t plateau_fail = 0, plateau_n = 0, excluded = 0;
  while (plateau_n < 500) {
    const auto sys = sample_system({Morphology::Detached, false}, 100, gen);
    BinaryLightModel m(sys.params, std::nullopt);
    if (m.r1() + m.r2() >= 0.8 * m.separation(0.25)) {
      ++excluded;
      continue;
    }
    plateau_fail += longest_plateau(generate_curve(sys.params, std::nullopt).curve.fluxes, 1e-6) < 20;
    ++plateau_n;
  }

  std::size_t quad_fail = 0, spot_fail = 0, lat_fail = 0;
  double worst_quad = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto sys = sample_system({Morphology::Overcontact, false}, 100, gen);
    BinaryLightModel clean(sys.params, std::nullopt);
    const double dq = std::abs(clean.flux(0.25) - clean.flux(0.75));
    worst_quad = std::max(worst_quad, dq);
    quad_fail += !(dq < 1e-12);

    auto spot = sample_spot_params(gen);
    spot.longitude = 90.0;
    const double colat = spot.latitude;
    spot.latitude = 90.0;  // equatorial
    BinaryLightModel eq(sys.params, spot);
    spot_fail += std::abs(eq.flux(0.25) - eq.flux(0.75)) < 0.5 * eq.spot_amplitude();

    // at the sampled latitude the bound scales with sin(colatitude)
    spot.latitude = colat;
    BinaryLightModel any(sys.params, spot);
    const double bound = 0.5 * any.spot_amplitude() * std::sin(colat * std::numbers::pi / 180.0);
    lat_fail += std::abs(any.flux(0.25) - any.flux(0.75)) < bound;
  }
  return {plateau_fail == 0 && quad_fail == 0 && spot_fail == 0 && lat_fail == 0,
          fmt("plateau: %zu/500 fail (%zu systems above the 0.8 separation limit skipped); "
              "quadratures: %zu/500 fail (worst %.2g); lon=90 spot: %zu/500 equatorial, "
              "%zu/500 sampled-latitude fail",
              plateau_fail, excluded, quad_fail, worst_quad, spot_fail, lat_fail)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  Options o;
  app.add_option("--criterion", selected, "checks to run (default: all)")->check(CLI::Range(1, 9));
  app.add_option("--cli", o.cli, "path to the ebmorph executable");
  app.add_option("--n-per-class", o.n_per_class)->capture_default_str();
  app.add_option("--val-per-class", o.val_per_class)->capture_default_str();
  app.add_option("--epochs", o.epochs)->capture_default_str();
  app.add_option("--seed", o.seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"metric fixtures", metric_fixtures},
      {"gradient correctness", gradient_correctness},
      {"raster oracle equivalence", raster_oracle},
      {"transform invariants", transform_invariants},
      {"desk-scale binary", [&] { return desk_scale(o, Task::Binary, 0.90); }},
      {"desk-scale spot models",
       [&] {
         const auto d = desk_scale(o, Task::DetachedSpot, 0.65);
         const auto c = desk_scale(o, Task::OvercontactSpot, 0.60);
         return Outcome{d.pass && c.pass, d.detail + "; " + c.detail};
       }},
      {"AUC oracle", auc_oracle},
      {"determinism", [&] { return cli_determinism(o); }},
      {"synthetic morphology", morphology_properties},
  };

  bool all = true;
  for (int n : selected) {
    Outcome out;
    try {
      out = checks[static_cast<std::size_t>(n - 1)].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    all = all && out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << n << " ("
              << checks[static_cast<std::size_t>(n - 1)].first << "): " << out.detail << std::endl;
  }
  return all ? 0 : 1;
}
