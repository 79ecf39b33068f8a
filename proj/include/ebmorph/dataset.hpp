#pragma once

// Labelled synthetic datasets on disk: one curve file and one PGM image per
// sample, described by a line-delimited JSON manifest.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ebmorph/augment.hpp"
#include "ebmorph/curve.hpp"
#include "ebmorph/metrics.hpp"
#include "ebmorph/synth.hpp"
#include "ebmorph/training.hpp"

namespace ebmorph {

enum class MorphologySelection { Detached, Overcontact, Both };
enum class SpotMode { None, With, Mixed };
enum class Split { Train, Validation };
enum class Task { Binary, DetachedSpot, OvercontactSpot };

std::string_view to_string(MorphologySelection m);
std::string_view to_string(SpotMode m);
std::string_view to_string(Split s);
std::string_view to_string(Task t);
MorphologySelection parse_morphology_selection(std::string_view text);
SpotMode parse_spot_mode(std::string_view text);
Split parse_split(std::string_view text);
Task parse_task(std::string_view text);

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr std::size_t kMaxParameterDraws = 100000;

struct GenerationConfig {
  MorphologySelection morphology = MorphologySelection::Both;
  SpotMode spots = SpotMode::None;
  Passband passband = Passband::GaiaG;
  std::size_t n_per_class = 10;
  std::size_t val_per_class = 0;
  std::uint64_t seed = 0;
  std::size_t gridsize = kDefaultGridsize;
  std::size_t n_phases = 100;

  void validate() const;
  // The (morphology, spot) combinations that form the classes.
  std::vector<SynthLabel> classes() const;
  bool operator==(const GenerationConfig&) const = default;
};

struct ManifestEntry {
  std::string sample_id;
  std::string curve_file;  // relative to the manifest directory
  std::string image_file;
  Morphology morphology = Morphology::Detached;
  bool has_spot = false;
  Passband passband = Passband::GaiaG;
  BinaryParams params;
  std::optional<SpotParams> spot;
  AugmentConfig augment;
  std::uint64_t seed = 0;
  Split split = Split::Train;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  int schema_version = kManifestSchemaVersion;
  std::uint64_t master_seed = 0;
  GenerationConfig config;
  std::vector<ManifestEntry> entries;

  bool operator==(const DatasetManifest&) const = default;
};

std::string serialize_manifest(const DatasetManifest& m);
DatasetManifest parse_manifest(std::string_view text);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

// Equal class counts within each split and every referenced file present.
void validate_manifest(const DatasetManifest& m, const std::filesystem::path& base_dir);

// Draws parameters until the system is valid (and eclipsing, for detached
// systems), then renders the clean curve with its minimum at phase 0.
struct SampledSystem {
  BinaryParams params;
  std::optional<SpotParams> spot;
  PhasedCurve clean;
};
SampledSystem sample_system(const SynthLabel& cls, std::size_t n_phases, Rng& gen);

// True when the orbit brings the two disks into contact on the sky.
bool is_eclipsing(const BinaryParams& params);

// Generates curves/, images/ and manifest.jsonl under out_dir.
DatasetManifest build_dataset(const GenerationConfig& cfg, const std::filesystem::path& out_dir);

inline constexpr const char* kManifestFileName = "manifest.jsonl";

// Task label of an entry, or nothing if the entry does not belong to the task.
std::optional<int> task_label(Task task, const ManifestEntry& e);

ImageSet load_task_images(const DatasetManifest& m, const std::filesystem::path& base_dir,
                          Task task, std::optional<Split> split);

// 64-bit FNV-1a of a file, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

EvalReport evaluate_model(const CompactCnn<float>& model, const ImageSet& set);

// Curve files (*.csv) in `input` (a file or a directory) -> PGM images in out_dir.
std::size_t transform_curves(const std::filesystem::path& input, std::size_t gridsize,
                             const std::filesystem::path& out_dir);

}  // namespace ebmorph
