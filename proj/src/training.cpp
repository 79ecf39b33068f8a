#include "ebmorph/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "json.hpp"

#include "ebmorph/error.hpp"
#include "ebmorph/random.hpp"

namespace ebmorph {

using nlohmann::json;

std::string_view to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

Optimizer parse_optimizer(std::string_view text) {
  if (text == "sgd") return Optimizer::Sgd;
  if (text == "adam") return Optimizer::Adam;
  throw Error(ErrorKind::InvalidArgument, "unknown optimizer '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorKind::InvalidSpec, "batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorKind::InvalidSpec, "learning_rate must be finite and >= 0");
  }
}

void ImageSet::add(std::span<const std::uint8_t> pixels, int label) {
  if (pixels.size() != width_ * height_) {
    throw Error(ErrorKind::ShapeMismatch, "image does not match the set's shape");
  }
  if (label != 0 && label != 1) throw Error(ErrorKind::InvalidArgument, "label must be 0 or 1");
  pixels_.insert(pixels_.end(), pixels.begin(), pixels.end());
  labels_.push_back(label);
}

void ImageSet::add(const ImageRaster& image, int label) {
  if (image.width != width_ || image.height != height_) {
    throw Error(ErrorKind::ShapeMismatch, "image does not match the set's shape");
  }
  add(quantize(image), label);
}

ImageRaster ImageSet::image(std::size_t i) const {
  const std::size_t n = width_ * height_;
  return dequantize(std::span(pixels_).subspan(i * n, n), width_, height_);
}

std::size_t ImageSet::count(int label) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

CompactCnn<float> Checkpoint::model() const {
  if (architecture != kArchitecture) {
    throw Error(ErrorKind::ArchMismatch, "unknown architecture '" + architecture + "'");
  }
  return CompactCnn<float>(weights);
}

namespace {

int argmax(const Logits<float>& l) { return l[1] > l[0] ? 1 : 0; }

}  // namespace

std::vector<double> predict_proba(const CompactCnn<float>& model, const ImageSet& set) {
  std::vector<double> out(set.size());
  const auto n = static_cast<std::ptrdiff_t>(set.size());
#pragma omp parallel
  {
    Workspace<float> ws;
#pragma omp for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      out[k] = softmax(model.forward(set.image(k), ws, Exec::Serial))[1];
    }
  }
  return out;
}

double accuracy(const CompactCnn<float>& model, const ImageSet& set) {
  if (set.empty()) return 0.0;
  std::vector<int> pred(set.size());
  const auto n = static_cast<std::ptrdiff_t>(set.size());
#pragma omp parallel
  {
    Workspace<float> ws;
#pragma omp for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      pred[k] = argmax(model.forward(set.image(k), ws, Exec::Serial));
    }
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.size(); ++i) hits += pred[i] == set.label(i) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(set.size());
}

Checkpoint train(const ImageSet& train_set, const ImageSet* validation, const TrainConfig& cfg,
                 TrainingMetadata metadata, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.count(0) == 0 || train_set.count(1) == 0) {
    throw Error(ErrorKind::DegenerateDataset, "training set must contain both classes");
  }
  Rng gen(cfg.seed);
  auto model = CompactCnn<float>::glorot(gen());
  auto params = model.parameters();

  const std::size_t n = train_set.size();
  const std::size_t batch = cfg.batch_size;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // One gradient slot per batch position, summed in index order afterwards so
  // the update is the same for any thread count.
  std::vector<std::vector<float>> slot_grad(batch, std::vector<float>(kParameterCount));
  std::vector<float> slot_loss(batch);
  std::vector<int> slot_hit(batch);
  std::vector<float> grad(kParameterCount);
  std::vector<double> moment1, moment2;
  if (cfg.optimizer == Optimizer::Adam) {
    moment1.assign(kParameterCount, 0.0);
    moment2.assign(kParameterCount, 0.0);
  }
  std::uint64_t steps = 0;

  metadata.config = cfg;
  metadata.n_train = n;
  metadata.n_validation = validation ? validation->size() : 0;
  metadata.epochs.clear();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(gen, i)]);

    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t m = std::min(batch, n - start);
      const auto mm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel
      {
        Workspace<float> ws;
#pragma omp for schedule(dynamic)
        for (std::ptrdiff_t s = 0; s < mm; ++s) {
          const auto k = static_cast<std::size_t>(s);
          const std::size_t idx = order[start + k];
          auto& g = slot_grad[k];
          std::fill(g.begin(), g.end(), 0.0f);
          const auto logits = model.forward(train_set.image(idx), ws, Exec::Serial);
          const int label = train_set.label(idx);
          slot_hit[k] = argmax(logits) == label ? 1 : 0;
          slot_loss[k] = model.backward(ws, label, g, Exec::Serial);
        }
      }
      std::fill(grad.begin(), grad.end(), 0.0f);
      for (std::size_t k = 0; k < m; ++k) {
        const auto& g = slot_grad[k];
        for (std::size_t p = 0; p < kParameterCount; ++p) grad[p] += g[p];
        loss_sum += slot_loss[k];
        hits += static_cast<std::size_t>(slot_hit[k]);
      }
      const double inv_m = 1.0 / static_cast<double>(m);
      ++steps;
      if (cfg.optimizer == Optimizer::Sgd) {
        const auto step = static_cast<float>(cfg.learning_rate * inv_m);
        for (std::size_t p = 0; p < kParameterCount; ++p) params[p] -= step * grad[p];
      } else {
        const double t = static_cast<double>(steps);
        const double c1 = 1.0 - std::pow(kAdamBeta1, t);
        const double c2 = 1.0 - std::pow(kAdamBeta2, t);
        for (std::size_t p = 0; p < kParameterCount; ++p) {
          const double g = static_cast<double>(grad[p]) * inv_m;
          moment1[p] = kAdamBeta1 * moment1[p] + (1.0 - kAdamBeta1) * g;
          moment2[p] = kAdamBeta2 * moment2[p] + (1.0 - kAdamBeta2) * g * g;
          const double update =
              cfg.learning_rate * (moment1[p] / c1) / (std::sqrt(moment2[p] / c2) + kAdamEpsilon);
          params[p] -= static_cast<float>(update);
        }
      }
    }

    EpochRecord rec;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(n);
    if (validation && !validation->empty()) rec.validation_accuracy = accuracy(model, *validation);
    metadata.epochs.push_back(rec);
    if (on_epoch) on_epoch(epoch, rec);
  }

  Checkpoint ckpt;
  ckpt.weights.assign(params.begin(), params.end());
  ckpt.metadata = std::move(metadata);
  return ckpt;
}

double predict_proba(const Checkpoint& ckpt, const ImageRaster& image) {
  const auto model = ckpt.model();
  Workspace<float> ws;
  return softmax(model.forward(image, ws))[1];
}

// ---------------------------------------------------------------------------
// Checkpoint file:
//   "EBMCKPT\0" | u32 version | u32 len + architecture | u32 count + f32[count]
//   | u32 len + JSON metadata. All integers and floats little-endian.

namespace {

constexpr char kMagic[8] = {'E', 'B', 'M', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorKind::FormatError, "truncated checkpoint");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

json metadata_to_json(const TrainingMetadata& m) {
  json epochs = json::array();
  for (const auto& e : m.epochs) {
    json j{{"train_loss", e.train_loss}, {"train_accuracy", e.train_accuracy}};
    j["validation_accuracy"] =
        e.validation_accuracy ? json(*e.validation_accuracy) : json(nullptr);
    epochs.push_back(j);
  }
  return json{{"task", m.task},
              {"batch_size", m.config.batch_size},
              {"learning_rate", m.config.learning_rate},
              {"epochs", m.config.epochs},
              {"seed", m.config.seed},
              {"optimizer", to_string(m.config.optimizer)},
              {"history", epochs},
              {"manifest_hash", m.manifest_hash},
              {"n_train", m.n_train},
              {"n_validation", m.n_validation}};
}

TrainingMetadata metadata_from_json(const json& j) {
  TrainingMetadata m;
  m.task = j.at("task").get<std::string>();
  m.config.batch_size = j.at("batch_size").get<std::size_t>();
  m.config.learning_rate = j.at("learning_rate").get<double>();
  m.config.epochs = j.at("epochs").get<std::size_t>();
  m.config.seed = j.at("seed").get<std::uint64_t>();
  m.config.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  m.manifest_hash = j.at("manifest_hash").get<std::string>();
  m.n_train = j.at("n_train").get<std::size_t>();
  m.n_validation = j.at("n_validation").get<std::size_t>();
  for (const auto& e : j.at("history")) {
    EpochRecord r;
    r.train_loss = e.at("train_loss").get<double>();
    r.train_accuracy = e.at("train_accuracy").get<double>();
    if (!e.at("validation_accuracy").is_null()) {
      r.validation_accuracy = e.at("validation_accuracy").get<double>();
    }
    m.epochs.push_back(r);
  }
  return m;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.architecture.size()));
  out.insert(out.end(), ckpt.architecture.begin(), ckpt.architecture.end());
  put_u32(out, static_cast<std::uint32_t>(ckpt.weights.size()));
  for (float w : ckpt.weights) put_u32(out, std::bit_cast<std::uint32_t>(w));
  const std::string meta = metadata_to_json(ckpt.metadata).dump();
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out.insert(out.end(), meta.begin(), meta.end());
  return out;
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  if (in.str(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw Error(ErrorKind::FormatError, "not a checkpoint file");
  }
  if (auto v = in.u32(); v != kCheckpointVersion) {
    throw Error(ErrorKind::FormatError, "unsupported checkpoint version " + std::to_string(v));
  }
  Checkpoint ckpt;
  ckpt.architecture = in.str(in.u32());
  const std::uint32_t count = in.u32();
  if (ckpt.architecture != kArchitecture || count != kParameterCount) {
    throw Error(ErrorKind::ArchMismatch, "checkpoint architecture '" + ckpt.architecture +
                                             "' with " + std::to_string(count) + " weights");
  }
  ckpt.weights.resize(count);
  for (auto& w : ckpt.weights) w = std::bit_cast<float>(in.u32());
  try {
    ckpt.metadata = metadata_from_json(json::parse(in.str(in.u32())));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("checkpoint metadata: ") + e.what());
  }
  if (!in.done()) throw Error(ErrorKind::FormatError, "trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(std::filesystem::exists(path) ? ErrorKind::IoError : ErrorKind::FileNotFound,
                path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace ebmorph
