#include "ebmorph/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "ebmorph/error.hpp"
#include "ebmorph/imaging.hpp"

namespace ebmorph {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view to_string(MorphologySelection m) {
  switch (m) {
    case MorphologySelection::Detached: return "detached";
    case MorphologySelection::Overcontact: return "overcontact";
    case MorphologySelection::Both: return "both";
  }
  return "both";
}

std::string_view to_string(SpotMode m) {
  switch (m) {
    case SpotMode::None: return "none";
    case SpotMode::With: return "with";
    case SpotMode::Mixed: return "mixed";
  }
  return "none";
}

std::string_view to_string(Split s) { return s == Split::Train ? "train" : "validation"; }

std::string_view to_string(Task t) {
  switch (t) {
    case Task::Binary: return "binary";
    case Task::DetachedSpot: return "detached_spot";
    case Task::OvercontactSpot: return "overcontact_spot";
  }
  return "binary";
}

MorphologySelection parse_morphology_selection(std::string_view text) {
  if (text == "detached") return MorphologySelection::Detached;
  if (text == "overcontact") return MorphologySelection::Overcontact;
  if (text == "both") return MorphologySelection::Both;
  throw Error(ErrorKind::InvalidArgument, "unknown morphology '" + std::string(text) + "'");
}

SpotMode parse_spot_mode(std::string_view text) {
  if (text == "none") return SpotMode::None;
  if (text == "with") return SpotMode::With;
  if (text == "mixed") return SpotMode::Mixed;
  throw Error(ErrorKind::InvalidArgument, "unknown spot mode '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "validation") return Split::Validation;
  throw Error(ErrorKind::InvalidArgument, "unknown split '" + std::string(text) + "'");
}

Task parse_task(std::string_view text) {
  if (text == "binary") return Task::Binary;
  if (text == "detached_spot") return Task::DetachedSpot;
  if (text == "overcontact_spot") return Task::OvercontactSpot;
  throw Error(ErrorKind::InvalidArgument, "unknown task '" + std::string(text) + "'");
}

void GenerationConfig::validate() const {
  if (n_per_class < 1) throw Error(ErrorKind::InvalidSpec, "n_per_class must be >= 1");
  if (gridsize < 4) throw Error(ErrorKind::InvalidSpec, "gridsize must be >= 4");
  if (n_phases < 16) throw Error(ErrorKind::InvalidSpec, "n_phases must be >= 16");
}

std::vector<SynthLabel> GenerationConfig::classes() const {
  std::vector<Morphology> morphs;
  if (morphology != MorphologySelection::Overcontact) morphs.push_back(Morphology::Detached);
  if (morphology != MorphologySelection::Detached) morphs.push_back(Morphology::Overcontact);
  std::vector<SynthLabel> out;
  for (auto m : morphs) {
    if (spots != SpotMode::With) out.push_back({m, false});
    if (spots != SpotMode::None) out.push_back({m, true});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest JSON

namespace {

ordered_json params_json(const BinaryParams& p) {
  return {{"period", p.period},         {"inclination", p.inclination},
          {"mass_ratio", p.mass_ratio}, {"potential1", p.potential1},
          {"potential2", p.potential2}, {"temp_ratio", p.temp_ratio}};
}

BinaryParams params_from(const ordered_json& j, Morphology m) {
  BinaryParams p;
  p.morphology = m;
  p.period = j.at("period").get<double>();
  p.inclination = j.at("inclination").get<double>();
  p.mass_ratio = j.at("mass_ratio").get<double>();
  p.potential1 = j.at("potential1").get<double>();
  p.potential2 = j.at("potential2").get<double>();
  p.temp_ratio = j.at("temp_ratio").get<double>();
  return p;
}

ordered_json spot_json(const std::optional<SpotParams>& s) {
  if (!s) return nullptr;
  return {{"longitude", s->longitude},     {"latitude", s->latitude},
          {"radius", s->radius},           {"temp_factor", s->temp_factor},
          {"host", std::string(to_string(s->host))}};
}

std::optional<SpotParams> spot_from(const ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  SpotParams s;
  s.longitude = j.at("longitude").get<double>();
  s.latitude = j.at("latitude").get<double>();
  s.radius = j.at("radius").get<double>();
  s.temp_factor = j.at("temp_factor").get<double>();
  s.host = parse_component(j.at("host").get<std::string>());
  return s;
}

ordered_json augment_json(const AugmentConfig& a) {
  return {{"noise_sigma", a.noise_sigma},
          {"outlier_count", a.outlier_count},
          {"outlier_scale", a.outlier_scale},
          {"target_points", a.target_points}};
}

AugmentConfig augment_from(const ordered_json& j) {
  AugmentConfig a;
  a.noise_sigma = j.at("noise_sigma").get<double>();
  a.outlier_count = j.at("outlier_count").get<std::size_t>();
  a.outlier_scale = j.at("outlier_scale").get<double>();
  a.target_points = j.at("target_points").get<std::size_t>();
  return a;
}

std::string class_name(const SynthLabel& c) {
  return std::string(to_string(c.morphology)) + (c.has_spot ? "-spot" : "-nospot");
}

}  // namespace

std::string serialize_manifest(const DatasetManifest& m) {
  std::string out;
  const auto& c = m.config;
  ordered_json header{{"kind", "header"},
                      {"schema_version", m.schema_version},
                      {"master_seed", m.master_seed},
                      {"morphology", std::string(to_string(c.morphology))},
                      {"spots", std::string(to_string(c.spots))},
                      {"passband", std::string(to_string(c.passband))},
                      {"n_per_class", c.n_per_class},
                      {"val_per_class", c.val_per_class},
                      {"gridsize", c.gridsize},
                      {"n_phases", c.n_phases},
                      {"entries", m.entries.size()}};
  out += header.dump() + "\n";
  for (const auto& e : m.entries) {
    ordered_json j{{"kind", "entry"},
                   {"sample_id", e.sample_id},
                   {"split", std::string(to_string(e.split))},
                   {"curve_file", e.curve_file},
                   {"image_file", e.image_file},
                   {"morphology", std::string(to_string(e.morphology))},
                   {"has_spot", e.has_spot},
                   {"passband", std::string(to_string(e.passband))},
                   {"params", params_json(e.params)},
                   {"spot", spot_json(e.spot)},
                   {"augment", augment_json(e.augment)},
                   {"seed", e.seed}};
    out += j.dump() + "\n";
  }
  return out;
}

DatasetManifest parse_manifest(std::string_view text) {
  DatasetManifest m;
  std::istringstream in{std::string(text)};
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t declared = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto j = ordered_json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "header") {
        if (have_header) throw Error(ErrorKind::FormatError, "duplicate manifest header");
        have_header = true;
        m.schema_version = j.at("schema_version").get<int>();
        if (m.schema_version != kManifestSchemaVersion) {
          throw Error(ErrorKind::FormatError,
                      "unsupported manifest schema " + std::to_string(m.schema_version));
        }
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        auto& c = m.config;
        c.seed = m.master_seed;
        c.morphology = parse_morphology_selection(j.at("morphology").get<std::string>());
        c.spots = parse_spot_mode(j.at("spots").get<std::string>());
        c.passband = parse_passband(j.at("passband").get<std::string>());
        c.n_per_class = j.at("n_per_class").get<std::size_t>();
        c.val_per_class = j.at("val_per_class").get<std::size_t>();
        c.gridsize = j.at("gridsize").get<std::size_t>();
        c.n_phases = j.at("n_phases").get<std::size_t>();
        declared = j.at("entries").get<std::size_t>();
      } else if (kind == "entry") {
        if (!have_header) throw Error(ErrorKind::FormatError, "entry before manifest header");
        ManifestEntry e;
        e.sample_id = j.at("sample_id").get<std::string>();
        e.split = parse_split(j.at("split").get<std::string>());
        e.curve_file = j.at("curve_file").get<std::string>();
        e.image_file = j.at("image_file").get<std::string>();
        e.morphology = parse_morphology(j.at("morphology").get<std::string>());
        e.has_spot = j.at("has_spot").get<bool>();
        e.passband = parse_passband(j.at("passband").get<std::string>());
        e.params = params_from(j.at("params"), e.morphology);
        e.spot = spot_from(j.at("spot"));
        e.augment = augment_from(j.at("augment"));
        e.seed = j.at("seed").get<std::uint64_t>();
        m.entries.push_back(std::move(e));
      } else {
        throw Error(ErrorKind::FormatError, "unknown record kind '" + kind + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError,
                "manifest line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!have_header) throw Error(ErrorKind::FormatError, "manifest has no header");
  if (declared != m.entries.size()) {
    throw Error(ErrorKind::FormatError, "manifest declares " + std::to_string(declared) +
                                            " entries but lists " +
                                            std::to_string(m.entries.size()));
  }
  return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << serialize_manifest(m);
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(fs::exists(path) ? ErrorKind::IoError : ErrorKind::FileNotFound, path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

void validate_manifest(const DatasetManifest& m, const fs::path& base_dir) {
  std::map<std::pair<Split, std::string>, std::size_t> per_class;
  for (const auto& e : m.entries) {
    ++per_class[{e.split, class_name({e.morphology, e.has_spot})}];
    if (e.has_spot != e.spot.has_value() || e.params.morphology != e.morphology) {
      throw Error(ErrorKind::InvalidSpec, e.sample_id + ": label disagrees with parameters");
    }
    for (const auto& f : {e.curve_file, e.image_file}) {
      if (!fs::exists(base_dir / f)) {
        throw Error(ErrorKind::FileNotFound, (base_dir / f).string());
      }
    }
  }
  for (Split s : {Split::Train, Split::Validation}) {
    std::optional<std::size_t> expected;
    for (const auto& [key, n] : per_class) {
      if (key.first != s) continue;
      if (expected && *expected != n) {
        throw Error(ErrorKind::InvalidSpec,
                    std::string("unbalanced classes in split ") + std::string(to_string(s)));
      }
      expected = n;
    }
  }
}

// ---------------------------------------------------------------------------
// Generation

bool is_eclipsing(const BinaryParams& params) {
  if (params.morphology == Morphology::Overcontact) return true;
  BinaryLightModel model(params, std::nullopt);
  return model.separation(0.0) < model.r1() + model.r2();
}

SampledSystem sample_system(const SynthLabel& cls, std::size_t n_phases, Rng& gen) {
  for (std::size_t attempt = 0; attempt < kMaxParameterDraws; ++attempt) {
    SampledSystem s;
    s.params = sample_binary_params(cls.morphology, gen);
    if (cls.has_spot) s.spot = sample_spot_params(gen);
    try {
      if (!is_eclipsing(s.params)) continue;
      s.clean = align_minimum(generate_curve(s.params, s.spot, n_phases).curve);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::InvalidParams) continue;
      throw;
    }
    return s;
  }
  throw Error(ErrorKind::InvalidSpec, "no valid parameter set found");
}

DatasetManifest build_dataset(const GenerationConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "curves", ec);
  fs::create_directories(out_dir / "images", ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest m;
  m.master_seed = cfg.seed;
  m.config = cfg;
  const auto classes = cfg.classes();
  const AugmentConfig augment = AugmentConfig::for_passband(cfg.passband);

  for (Split split : {Split::Train, Split::Validation}) {
    const std::size_t n = split == Split::Train ? cfg.n_per_class : cfg.val_per_class;
    for (const auto& cls : classes) {
      for (std::size_t i = 0; i < n; ++i) {
        ManifestEntry e;
        char id[96];
        std::snprintf(id, sizeof id, "%s-%s-%06zu", std::string(to_string(split)).c_str(),
                      class_name(cls).c_str(), i);
        e.sample_id = id;
        e.curve_file = "curves/" + e.sample_id + ".csv";
        e.image_file = "images/" + e.sample_id + ".pgm";
        e.morphology = cls.morphology;
        e.has_spot = cls.has_spot;
        e.passband = cfg.passband;
        e.augment = augment;
        e.split = split;
        e.seed = derive_seed(cfg.seed, m.entries.size());
        m.entries.push_back(std::move(e));
      }
    }
  }

  const auto total = static_cast<std::ptrdiff_t>(m.entries.size());
  std::vector<std::string> failures(m.entries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    auto& e = m.entries[static_cast<std::size_t>(k)];
    try {
      Rng gen(e.seed);
      auto sys = sample_system({e.morphology, e.has_spot}, cfg.n_phases, gen);
      e.params = sys.params;
      e.spot = sys.spot;
      auto observed = apply_augmentations(sys.clean, e.augment, gen);
      write_phased_curve(out_dir / e.curve_file, observed);
      write_pgm(out_dir / e.image_file, curve_to_image(observed, cfg.gridsize));
    } catch (const std::exception& ex) {
      failures[static_cast<std::size_t>(k)] = ex.what();
    }
  }
  for (const auto& f : failures) {
    if (!f.empty()) throw Error(ErrorKind::IoError, f);
  }
  write_manifest(out_dir / kManifestFileName, m);
  return m;
}

// ---------------------------------------------------------------------------
// Training / evaluation helpers

std::optional<int> task_label(Task task, const ManifestEntry& e) {
  switch (task) {
    case Task::Binary:
      return e.morphology == Morphology::Overcontact ? 1 : 0;
    case Task::DetachedSpot:
      if (e.morphology != Morphology::Detached) return std::nullopt;
      return e.has_spot ? 1 : 0;
    case Task::OvercontactSpot:
      if (e.morphology != Morphology::Overcontact) return std::nullopt;
      return e.has_spot ? 1 : 0;
  }
  return std::nullopt;
}

ImageSet load_task_images(const DatasetManifest& m, const fs::path& base_dir, Task task,
                          std::optional<Split> split) {
  ImageSet set;
  bool first = true;
  for (const auto& e : m.entries) {
    if (split && e.split != *split) continue;
    auto label = task_label(task, e);
    if (!label) continue;
    std::size_t w = 0, h = 0;
    auto bytes = read_pgm_bytes(base_dir / e.image_file, w, h);
    if (first) {
      set = ImageSet(w, h);
      first = false;
    }
    set.add(bytes, *label);
  }
  return set;
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

EvalReport evaluate_model(const CompactCnn<float>& model, const ImageSet& set) {
  const auto proba = predict_proba(model, set);
  std::vector<int> pred(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i) pred[i] = proba[i] > 0.5 ? 1 : 0;
  auto r = report(confusion(pred, set.labels()));
  if (set.count(0) > 0 && set.count(1) > 0) r.auc = auc(proba, set.labels());
  return r;
}

std::size_t transform_curves(const fs::path& input, std::size_t gridsize, const fs::path& out_dir) {
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& ent : fs::directory_iterator(input)) {
      if (ent.is_regular_file() && ent.path().extension() == ".csv") files.push_back(ent.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(input)) {
    files.push_back(input);
  } else {
    throw Error(ErrorKind::FileNotFound, input.string());
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + out_dir.string());
  for (const auto& f : files) {
    auto curve = read_phased_curve(f);
    write_pgm(out_dir / (f.stem().string() + ".pgm"), curve_to_image(curve, gridsize));
  }
  return files.size();
}

}  // namespace ebmorph
