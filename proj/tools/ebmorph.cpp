#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ebmorph/dataset.hpp"
#include "ebmorph/error.hpp"
#include "ebmorph/hier.hpp"
#include "ebmorph/model.hpp"
#include "ebmorph/training.hpp"

using namespace ebmorph;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

void apply_thread_cap() {
  const char* env = std::getenv("EBMORPH_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) {
    throw Error(ErrorKind::InvalidArgument, "EBMORPH_THREADS must be a positive integer");
  }
  omp_set_num_threads(static_cast<int>(n));
}

struct GenerateArgs {
  std::string morphology = "both", spots = "none", passband = "gaia_g";
  std::size_t n_per_class = 10, val_per_class = 0, gridsize = kDefaultGridsize;
  std::uint64_t seed = 0;
  std::string out;
};

void run_generate(const GenerateArgs& a) {
  GenerationConfig cfg;
  cfg.morphology = parse_morphology_selection(a.morphology);
  cfg.spots = parse_spot_mode(a.spots);
  cfg.passband = parse_passband(a.passband);
  cfg.n_per_class = a.n_per_class;
  cfg.val_per_class = a.val_per_class;
  cfg.gridsize = a.gridsize;
  cfg.seed = a.seed;
  const auto m = build_dataset(cfg, a.out);
  std::cout << "wrote " << m.entries.size() << " samples to " << a.out << "\n";
}

struct TransformArgs {
  std::string in, out;
  std::size_t gridsize = kDefaultGridsize;
};

void run_transform(const TransformArgs& a) {
  const auto n = transform_curves(a.in, a.gridsize, a.out);
  std::cout << "wrote " << n << " images to " << a.out << "\n";
}

struct TrainArgs {
  std::string manifest, task = "binary", out, optimizer = "adam";
  std::size_t epochs = 10, batch = 32;
  double lr = 0.001;
  std::uint64_t seed = 0;
};

void run_train(const TrainArgs& a) {
  const Task task = parse_task(a.task);
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.learning_rate = a.lr;
  cfg.seed = a.seed;
  cfg.optimizer = parse_optimizer(a.optimizer);
  cfg.validate();

  const fs::path manifest_path(a.manifest);
  const auto m = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  validate_manifest(m, base);
  const auto train_set = load_task_images(m, base, task, Split::Train);
  const auto val_set = load_task_images(m, base, task, Split::Validation);

  TrainingMetadata meta;
  meta.task = std::string(to_string(task));
  meta.manifest_hash = file_hash(manifest_path);
  const auto ckpt = train(train_set, val_set.empty() ? nullptr : &val_set, cfg, meta,
                          [](std::size_t e, const EpochRecord& r) {
                            std::cout << "epoch " << e + 1 << " loss " << r.train_loss
                                      << " accuracy " << r.train_accuracy;
                            if (r.validation_accuracy) {
                              std::cout << " validation " << *r.validation_accuracy;
                            }
                            std::cout << std::endl;
                          });
  save_checkpoint(a.out, ckpt);
}

struct EvaluateArgs {
  std::string manifest, ckpt, report, split = "auto";
};

void run_evaluate(const EvaluateArgs& a) {
  const auto ckpt = load_checkpoint(a.ckpt);
  const Task task = parse_task(ckpt.metadata.task);
  const fs::path manifest_path(a.manifest);
  const auto m = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  std::optional<Split> split;
  if (a.split == "auto") {
    const bool has_val = std::any_of(m.entries.begin(), m.entries.end(),
                                     [](const auto& e) { return e.split == Split::Validation; });
    if (has_val) split = Split::Validation;
  } else if (a.split != "all") {
    split = parse_split(a.split);
  }
  const auto set = load_task_images(m, base, task, split);
  if (set.empty()) throw Error(ErrorKind::DegenerateDataset, "no images for task " + ckpt.metadata.task);
  const auto r = evaluate_model(ckpt.model(), set);
  write_file(a.report, to_json(r, ckpt.metadata.task) + "\n");
  std::cout << to_table(r, ckpt.metadata.task);
}

struct ClassifyArgs {
  std::string curve, epoch_kind = "min", binary, dspot, ospot, passband = "gaia_g";
  double period = 0.0, epoch = 0.0;
  std::size_t bins = 100, gridsize = kDefaultGridsize;
};

void run_classify(const ClassifyArgs& a) {
  const auto parsed = parse_photometry(a.curve, parse_passband(a.passband));
  Ephemeris eph;
  eph.period = a.period;
  eph.epoch = a.epoch;
  if (a.epoch_kind == "min") {
    eph.epoch_kind = EpochKind::MinimumFlux;
  } else if (a.epoch_kind == "max") {
    eph.epoch_kind = EpochKind::MaximumFlux;
  } else {
    throw Error(ErrorKind::InvalidArgument, "epoch kind must be min or max");
  }
  const auto curve = preprocess_observation(parsed.curve, eph, a.bins);
  ImagingConfig imaging;
  imaging.gridsize = a.gridsize;
  const auto label = classify_hierarchical(load_checkpoint(a.binary), load_checkpoint(a.dspot),
                                           load_checkpoint(a.ospot), curve, imaging);
  ordered_json j{{"curve", a.curve},
                 {"morphology", std::string(to_string(label.morphology))},
                 {"spot", label.has_spot},
                 {"p_overcontact", label.p_morph},
                 {"p_spot", label.p_spot},
                 {"dropped_rows", parsed.dropped_rows}};
  std::cout << j.dump() << "\n";
}

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::size_t params = 200;
};

void run_gradcheck(const GradcheckArgs& a) {
  Rng gen(derive_seed(a.seed, 0));
  auto net = CompactCnn<double>::glorot(gen());
  auto p = net.parameters();
  for (const auto& c : kLayout.conv) {
    for (std::size_t i = 0; i < c.out_channels; ++i) p[c.bias_offset + i] = uniform(gen, -0.1, 0.1);
  }
  const SynthLabel cls{gen() % 2 ? Morphology::Overcontact : Morphology::Detached, false};
  const auto sys = sample_system(cls, 100, gen);
  const auto image = curve_to_image(
      apply_augmentations(sys.clean, AugmentConfig::for_passband(Passband::GaiaG), gen));
  GradCheckOptions opt;
  opt.n_params = a.params;
  opt.seed = gen();
  const auto r = grad_check(net, image, cls.morphology == Morphology::Overcontact ? 1 : 0, opt);
  ordered_json j{{"seed", a.seed},
                 {"max_relative_error", r.max_relative_error},
                 {"worst_parameter", r.worst_parameter},
                 {"checked", r.checked.size()},
                 {"skipped_at_kinks", r.skipped_at_kinks}};
  std::cout << j.dump() << "\n";
  if (!(r.max_relative_error < 1e-4)) {
    throw Error(ErrorKind::InvalidArgument,
                "gradient check failed: max relative error " + std::to_string(r.max_relative_error));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eclipsing-binary morphology pipeline"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a labelled synthetic dataset");
  g->add_option("--morphology", gen.morphology, "detached, overcontact or both")->capture_default_str();
  g->add_option("--spots", gen.spots, "none, with or mixed")->capture_default_str();
  g->add_option("--passband", gen.passband, "gaia_g, i or tess")->capture_default_str();
  g->add_option("--n-per-class", gen.n_per_class, "training samples per class")->required();
  g->add_option("--val-per-class", gen.val_per_class, "validation samples per class")
      ->capture_default_str();
  g->add_option("--gridsize", gen.gridsize, "hexagons across the image")->capture_default_str();
  g->add_option("--seed", gen.seed, "master seed")->capture_default_str();
  g->add_option("--out", gen.out, "output directory")->required();

  TransformArgs tr;
  auto* t = app.add_subcommand("transform", "Render curve files as hexbin images");
  t->add_option("--in", tr.in, "curve file or directory of .csv curves")->required();
  t->add_option("--gridsize", tr.gridsize, "hexagons across the image")->capture_default_str();
  t->add_option("--out", tr.out, "output directory")->required();

  TrainArgs ta;
  auto* tn = app.add_subcommand("train", "Train one classifier");
  tn->add_option("--manifest", ta.manifest, "dataset manifest")->required();
  tn->add_option("--task", ta.task, "binary, detached_spot or overcontact_spot")->capture_default_str();
  tn->add_option("--epochs", ta.epochs)->capture_default_str();
  tn->add_option("--batch", ta.batch)->capture_default_str();
  tn->add_option("--lr", ta.lr)->capture_default_str();
  tn->add_option("--seed", ta.seed)->capture_default_str();
  tn->add_option("--optimizer", ta.optimizer, "adam or sgd")->capture_default_str();
  tn->add_option("--out", ta.out, "checkpoint path")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a checkpoint on a dataset");
  e->add_option("--manifest", ev.manifest, "dataset manifest")->required();
  e->add_option("--ckpt", ev.ckpt, "checkpoint")->required();
  e->add_option("--report", ev.report, "JSON report path")->required();
  e->add_option("--split", ev.split, "train, validation, all or auto")->capture_default_str();

  ClassifyArgs cl;
  auto* c = app.add_subcommand("classify", "Classify an observed light curve");
  c->add_option("--curve", cl.curve, "photometry file (time, flux[, error])")->required();
  c->add_option("--period", cl.period, "orbital period")->required();
  c->add_option("--epoch", cl.epoch, "reference epoch")->required();
  c->add_option("--epoch-kind", cl.epoch_kind, "min or max")->capture_default_str();
  c->add_option("--binary", cl.binary, "morphology checkpoint")->required();
  c->add_option("--dspot", cl.dspot, "detached spot checkpoint")->required();
  c->add_option("--ospot", cl.ospot, "overcontact spot checkpoint")->required();
  c->add_option("--bins", cl.bins, "phase bins, 0 to skip binning")->capture_default_str();
  c->add_option("--gridsize", cl.gridsize)->capture_default_str();
  c->add_option("--passband", cl.passband)->capture_default_str();

  GradcheckArgs gc;
  auto* gk = app.add_subcommand("gradcheck", "Compare backprop with finite differences");
  gk->add_option("--seed", gc.seed)->capture_default_str();
  gk->add_option("--params", gc.params, "parameters to compare")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::string msg = ex.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "ebmorph: " << msg << "\n";
    return 2;
  }

  try {
    apply_thread_cap();
    if (g->parsed()) run_generate(gen);
    if (t->parsed()) run_transform(tr);
    if (tn->parsed()) run_train(ta);
    if (e->parsed()) run_evaluate(ev);
    if (c->parsed()) run_classify(cl);
    if (gk->parsed()) run_gradcheck(gc);
  } catch (const std::exception& ex) {
    std::string msg = ex.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "ebmorph: " << msg << "\n";
    return 1;
  }
  return 0;
}
