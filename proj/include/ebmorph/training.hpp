#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ebmorph/imaging.hpp"
#include "ebmorph/model.hpp"

namespace ebmorph {

enum class Optimizer { Sgd, Adam };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view text);

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 0.001;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;

  void validate() const;
};

// Adam moment decay rates and denominator offset.
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// Labelled images stored as the 8-bit values of their PGM files.
class ImageSet {
 public:
  ImageSet() = default;
  ImageSet(std::size_t width, std::size_t height) : width_(width), height_(height) {}

  void add(std::span<const std::uint8_t> pixels, int label);
  void add(const ImageRaster& image, int label);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  ImageRaster image(std::size_t i) const;
  std::size_t count(int label) const;

 private:
  std::size_t width_ = kImageSize;
  std::size_t height_ = kImageSize;
  std::vector<std::uint8_t> pixels_;
  std::vector<int> labels_;
};

struct EpochRecord {
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> validation_accuracy;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainingMetadata {
  std::string task;
  TrainConfig config;
  std::vector<EpochRecord> epochs;
  std::string manifest_hash;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
};

struct Checkpoint {
  std::string architecture = kArchitecture;
  std::vector<float> weights;
  TrainingMetadata metadata;

  // Throws ArchMismatch if the descriptor or weight count is wrong.
  CompactCnn<float> model() const;
};

using EpochCallback = std::function<void(std::size_t epoch, const EpochRecord&)>;

// Mini-batch training on the mean cross-entropy, shuffling every epoch. The result
// depends only on the data, the config and the seed.
Checkpoint train(const ImageSet& train_set, const ImageSet* validation, const TrainConfig& cfg,
                 TrainingMetadata metadata = {}, const EpochCallback& on_epoch = {});

// Fraction of images whose argmax prediction (ties -> class 0) matches.
double accuracy(const CompactCnn<float>& model, const ImageSet& set);
// P(class 1) for every image in the set.
std::vector<double> predict_proba(const CompactCnn<float>& model, const ImageSet& set);

double predict_proba(const Checkpoint& ckpt, const ImageRaster& image);

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ebmorph
