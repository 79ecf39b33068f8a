#pragma once

// CompactCnn: three conv3x3+ReLU+maxpool blocks (8, 16, 32 filters), global
// average pooling and a 32 -> 2 linear head. Parameters live in one flat
// vector so that checkpointing, SGD and gradient checking treat them alike.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ebmorph/imaging.hpp"
#include "ebmorph/kernels.hpp"

namespace ebmorph {

using kernels::Exec;

inline constexpr std::array<std::size_t, 3> kConvFilters{8, 16, 32};
inline constexpr std::size_t kNumClasses = 2;

// Offsets into the flat parameter vector, in storage order.
struct ParameterLayout {
  struct Conv {
    std::size_t in_channels, out_channels, weight_offset, bias_offset;
  };
  std::array<Conv, 3> conv;
  std::size_t fc_weight_offset;
  std::size_t fc_bias_offset;
  std::size_t total;
};

constexpr ParameterLayout make_layout() {
  ParameterLayout l{};
  std::size_t off = 0;
  std::size_t in = 1;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t out = kConvFilters[i];
    l.conv[i] = {in, out, off, off + out * in * 9};
    off += out * in * 9 + out;
    in = out;
  }
  l.fc_weight_offset = off;
  off += kNumClasses * in;
  l.fc_bias_offset = off;
  off += kNumClasses;
  l.total = off;
  return l;
}

inline constexpr ParameterLayout kLayout = make_layout();
inline constexpr std::size_t kParameterCount = kLayout.total;
static_assert(kParameterCount == 5954);

// Fixed input standardization, (pixel - mean) / std. The values sit between
// the pixel statistics of rendered 50-point and 100-point hexbin images.
inline constexpr double kInputMean = 0.05;
inline constexpr double kInputStd = 0.16;

inline constexpr const char* kArchitecture =
    "compact_cnn/2:in1,standardize(0.05,0.16);conv3x3-8,relu,pool2;conv3x3-16,relu,pool2;conv3x3-32,relu,pool2;gap;fc2";

// Forward stages; a perturbed parameter only invalidates its own stage and
// everything after it.
enum class Stage : int { Block1 = 0, Block2 = 1, Block3 = 2, Head = 3 };
Stage stage_of_parameter(std::size_t index);

template <typename T>
using Logits = std::array<T, kNumClasses>;

// Activations of one forward pass, kept for backprop.
template <typename T>
struct Workspace {
  std::size_t height = 0, width = 0;
  std::vector<T> input;
  std::array<std::vector<T>, 3> relu;  // post-ReLU conv output per block
  std::array<std::vector<T>, 3> pooled;
  std::array<std::vector<std::uint8_t>, 3> argmax;
  std::vector<T> features;  // global average pool, 32 values
  Logits<T> logits{};
  // backward scratch
  std::vector<T> grad_a, grad_b;

  void resize(std::size_t h, std::size_t w);
};

template <typename T>
class CompactCnn {
 public:
  CompactCnn() : params_(kParameterCount, T(0)) {}
  explicit CompactCnn(std::vector<T> params);

  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static CompactCnn glorot(std::uint64_t seed);

  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }

  // Throws ShapeMismatch unless the image is non-empty with sides divisible by 8.
  static void check_input(const ImageRaster& image);

  Logits<T> forward(const ImageRaster& image, Workspace<T>& ws, Exec exec = Exec::Parallel) const;
  // Re-runs the network from `from` onwards, reusing the cached activations
  // of the earlier stages in ws.
  Logits<T> forward_from(Stage from, Workspace<T>& ws, Exec exec = Exec::Parallel) const;

  // Adds d(loss)/d(params) for cross-entropy against `label` to grad and
  // returns the loss. Requires ws from a forward pass on this model.
  T backward(Workspace<T>& ws, int label, std::span<T> grad, Exec exec = Exec::Parallel) const;

 private:
  std::vector<T> params_;
};

extern template class CompactCnn<float>;
extern template class CompactCnn<double>;
extern template struct Workspace<float>;
extern template struct Workspace<double>;

template <typename T>
Logits<T> softmax(const Logits<T>& logits);

// Mean over the batch of -log softmax(logits)[label].
double cross_entropy(std::span<const Logits<double>> logits, std::span<const int> labels);

// Logits for every image, in order.
std::vector<Logits<float>> forward(const CompactCnn<float>& model,
                                   std::span<const ImageRaster> batch,
                                   Exec exec = Exec::Parallel);

struct GradCheckOptions {
  std::size_t n_params = 200;
  double step = 1e-4;
  std::uint64_t seed = 0;
  // A +-step probe that flips a ReLU or max-pool decision straddles a kink.
  // Such a parameter is retried with the step divided by 10, up to
  // step_reductions times, and rejected if every step flips a decision.
  // Rejected parameters are replaced so that n_params are still compared.
  bool skip_kinks = true;
  std::size_t step_reductions = 2;
  // Applied to the analytic gradient before comparison; lets tests inject a
  // known backprop bug.
  std::function<void(std::span<double>)> corrupt_gradient;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;
  std::vector<std::size_t> checked;
  std::size_t skipped_at_kinks = 0;
  std::size_t reduced_step = 0;  // compared at a step below options.step
  std::vector<double> analytic;  // full analytic gradient
};

// Central finite differences on randomly chosen parameters versus backprop,
// in double precision. Error is |ga - gn| / max(|ga|, |gn|, 1e-8).
GradCheckResult grad_check(const CompactCnn<double>& model, const ImageRaster& image, int label,
                           const GradCheckOptions& options = {});

}  // namespace ebmorph
