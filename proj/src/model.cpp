#include "ebmorph/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ebmorph/error.hpp"
#include "ebmorph/random.hpp"

namespace ebmorph {

namespace {

std::size_t block_height(std::size_t h, std::size_t block) { return h >> block; }

template <typename T>
T loss_of(const Logits<T>& logits, int label) {
  const T m = std::max(logits[0], logits[1]);
  const T lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
  return lse - logits[static_cast<std::size_t>(label)];
}

}  // namespace

Stage stage_of_parameter(std::size_t index) {
  if (index < kLayout.conv[1].weight_offset) return Stage::Block1;
  if (index < kLayout.conv[2].weight_offset) return Stage::Block2;
  if (index < kLayout.fc_weight_offset) return Stage::Block3;
  return Stage::Head;
}

template <typename T>
void Workspace<T>::resize(std::size_t h, std::size_t w) {
  if (h == height && w == width) return;
  height = h;
  width = w;
  input.assign(h * w, T(0));
  for (std::size_t b = 0; b < 3; ++b) {
    const std::size_t c = kConvFilters[b];
    const std::size_t hb = block_height(h, b), wb = block_height(w, b);
    relu[b].assign(c * hb * wb, T(0));
    pooled[b].assign(c * (hb / 2) * (wb / 2), T(0));
    argmax[b].assign(c * (hb / 2) * (wb / 2), 0);
  }
  features.assign(kConvFilters[2], T(0));
  grad_a.assign(2 * h * w, T(0));
  grad_b.assign(kConvFilters[0] * h * w, T(0));
}

template <typename T>
CompactCnn<T>::CompactCnn(std::vector<T> params) : params_(std::move(params)) {
  if (params_.size() != kParameterCount) {
    throw Error(ErrorKind::ArchMismatch, "expected " + std::to_string(kParameterCount) +
                                             " parameters, got " + std::to_string(params_.size()));
  }
}

template <typename T>
CompactCnn<T> CompactCnn<T>::glorot(std::uint64_t seed) {
  CompactCnn<T> net;
  Rng gen(seed);
  auto fill = [&](std::size_t offset, std::size_t count, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < count; ++i) {
      net.params_[offset + i] = static_cast<T>(uniform(gen, -limit, limit));
    }
  };
  for (const auto& c : kLayout.conv) {
    fill(c.weight_offset, c.out_channels * c.in_channels * 9,
         static_cast<double>(c.in_channels * 9), static_cast<double>(c.out_channels * 9));
  }
  fill(kLayout.fc_weight_offset, kNumClasses * kConvFilters[2],
       static_cast<double>(kConvFilters[2]), static_cast<double>(kNumClasses));
  return net;
}

template <typename T>
void CompactCnn<T>::check_input(const ImageRaster& image) {
  if (image.width == 0 || image.height == 0 || image.width % 8 != 0 || image.height % 8 != 0 ||
      image.pixels.size() != image.width * image.height) {
    throw Error(ErrorKind::ShapeMismatch,
                "input must be a single-channel image with sides divisible by 8, got " +
                    std::to_string(image.width) + "x" + std::to_string(image.height));
  }
}

template <typename T>
Logits<T> CompactCnn<T>::forward(const ImageRaster& image, Workspace<T>& ws, Exec exec) const {
  check_input(image);
  ws.resize(image.height, image.width);
  std::transform(image.pixels.begin(), image.pixels.end(), ws.input.begin(),
                 [](float v) { return static_cast<T>((v - kInputMean) / kInputStd); });
  return forward_from(Stage::Block1, ws, exec);
}

template <typename T>
Logits<T> CompactCnn<T>::forward_from(Stage from, Workspace<T>& ws, Exec exec) const {
  const T* p = params_.data();
  for (std::size_t b = static_cast<std::size_t>(from); b < 3; ++b) {
    const auto& c = kLayout.conv[b];
    const std::size_t hb = block_height(ws.height, b), wb = block_height(ws.width, b);
    const T* in = b == 0 ? ws.input.data() : ws.pooled[b - 1].data();
    kernels::conv3x3_relu_forward(in, c.in_channels, hb, wb, p + c.weight_offset,
                                  p + c.bias_offset, c.out_channels, ws.relu[b].data(), exec);
    kernels::maxpool2x2_forward(ws.relu[b].data(), c.out_channels, hb, wb, ws.pooled[b].data(),
                                ws.argmax[b].data(), exec);
  }
  const std::size_t area = (ws.height / 8) * (ws.width / 8);
  for (std::size_t c = 0; c < kConvFilters[2]; ++c) {
    ws.features[c] = kernels::plane_sum(ws.pooled[2].data() + c * area, area) / static_cast<T>(area);
  }
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    T acc = p[kLayout.fc_bias_offset + k];
    const T* row = p + kLayout.fc_weight_offset + k * kConvFilters[2];
    for (std::size_t c = 0; c < kConvFilters[2]; ++c) acc += row[c] * ws.features[c];
    ws.logits[k] = acc;
  }
  return ws.logits;
}

template <typename T>
T CompactCnn<T>::backward(Workspace<T>& ws, int label, std::span<T> grad, Exec exec) const {
  if (grad.size() != kParameterCount) throw Error(ErrorKind::ArchMismatch, "gradient size");
  if (label < 0 || label >= static_cast<int>(kNumClasses)) {
    throw Error(ErrorKind::InvalidArgument, "label must be 0 or 1");
  }
  const T* p = params_.data();
  T* g = grad.data();
  const auto prob = softmax(ws.logits);
  Logits<T> dlogit{prob[0], prob[1]};
  dlogit[static_cast<std::size_t>(label)] -= T(1);

  const std::size_t nf = kConvFilters[2];
  const std::size_t area = (ws.height / 8) * (ws.width / 8);
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    for (std::size_t c = 0; c < nf; ++c) {
      g[kLayout.fc_weight_offset + k * nf + c] += dlogit[k] * ws.features[c];
    }
    g[kLayout.fc_bias_offset + k] += dlogit[k];
  }
  // d(loss)/d(pooled block 3), spread evenly by the average pool
  for (std::size_t c = 0; c < nf; ++c) {
    T dfeat = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      dfeat += p[kLayout.fc_weight_offset + k * nf + c] * dlogit[k];
    }
    std::fill_n(ws.grad_a.begin() + static_cast<std::ptrdiff_t>(c * area), area,
                dfeat / static_cast<T>(area));
  }

  for (std::size_t b = 3; b-- > 0;) {
    const auto& c = kLayout.conv[b];
    const std::size_t hb = block_height(ws.height, b), wb = block_height(ws.width, b);
    kernels::maxpool2x2_relu_backward(ws.grad_a.data(), ws.argmax[b].data(), ws.relu[b].data(),
                                      c.out_channels, hb, wb, ws.grad_b.data(), exec);
    const T* in = b == 0 ? ws.input.data() : ws.pooled[b - 1].data();
    kernels::conv3x3_backward_weights(in, ws.grad_b.data(), c.in_channels, c.out_channels, hb, wb,
                                      g + c.weight_offset, g + c.bias_offset, exec);
    if (b > 0) {
      kernels::conv3x3_backward_input(ws.grad_b.data(), c.in_channels, c.out_channels, hb, wb,
                                      p + c.weight_offset, ws.grad_a.data(), exec);
    }
  }
  return loss_of(ws.logits, label);
}

template <typename T>
Logits<T> softmax(const Logits<T>& logits) {
  const T m = std::max(logits[0], logits[1]);
  const T e0 = std::exp(logits[0] - m);
  const T e1 = std::exp(logits[1] - m);
  const T s = e0 + e1;
  return {e0 / s, e1 / s};
}

template Logits<float> softmax(const Logits<float>&);
template Logits<double> softmax(const Logits<double>&);

template class CompactCnn<float>;
template class CompactCnn<double>;
template struct Workspace<float>;
template struct Workspace<double>;

double cross_entropy(std::span<const Logits<double>> logits, std::span<const int> labels) {
  if (logits.size() != labels.size()) {
    throw Error(ErrorKind::LengthMismatch, "logits and labels differ in length");
  }
  if (logits.empty()) throw Error(ErrorKind::InvalidArgument, "empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorKind::InvalidArgument, "labels must be 0 or 1");
    }
    total += loss_of(logits[i], labels[i]);
  }
  return total / static_cast<double>(logits.size());
}

std::vector<Logits<float>> forward(const CompactCnn<float>& model,
                                   std::span<const ImageRaster> batch, Exec exec) {
  if (batch.empty()) throw Error(ErrorKind::ShapeMismatch, "empty batch");
  for (const auto& img : batch) CompactCnn<float>::check_input(img);
  std::vector<Logits<float>> out(batch.size());
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  if (exec == Exec::Serial) {
    Workspace<float> ws;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] =
          model.forward(batch[static_cast<std::size_t>(i)], ws, Exec::Serial);
    }
    return out;
  }
  // Images are independent and each runs the serial kernels, so the result
  // does not depend on the thread count.
#pragma omp parallel
  {
    Workspace<float> ws;
#pragma omp for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] =
          model.forward(batch[static_cast<std::size_t>(i)], ws, Exec::Serial);
    }
  }
  return out;
}

namespace {

// Which side of every ReLU and max-pool decision the network is on. A finite
// difference is only a derivative estimate when both probes keep it intact.
struct ActivationPattern {
  std::array<std::vector<std::uint8_t>, 3> active;
  std::array<std::vector<std::uint8_t>, 3> argmax;
};

ActivationPattern pattern_of(const Workspace<double>& ws) {
  ActivationPattern p;
  for (std::size_t b = 0; b < 3; ++b) {
    p.active[b].resize(ws.relu[b].size());
    for (std::size_t i = 0; i < ws.relu[b].size(); ++i) p.active[b][i] = ws.relu[b][i] > 0.0;
    p.argmax[b] = ws.argmax[b];
  }
  return p;
}

bool same_pattern(const ActivationPattern& base, const Workspace<double>& ws, Stage from) {
  for (auto b = static_cast<std::size_t>(from); b < 3; ++b) {
    if (ws.argmax[b] != base.argmax[b]) return false;
    for (std::size_t i = 0; i < ws.relu[b].size(); ++i) {
      if ((ws.relu[b][i] > 0.0) != static_cast<bool>(base.active[b][i])) return false;
    }
  }
  return true;
}

}  // namespace

GradCheckResult grad_check(const CompactCnn<double>& model, const ImageRaster& image, int label,
                           const GradCheckOptions& options) {
  GradCheckResult result;
  Workspace<double> ws;
  model.forward(image, ws);
  const ActivationPattern base = pattern_of(ws);
  result.analytic.assign(kParameterCount, 0.0);
  model.backward(ws, label, result.analytic);
  if (options.corrupt_gradient) options.corrupt_gradient(result.analytic);

  // Candidates in random order; rejected ones are replaced by the next.
  Rng gen(options.seed);
  std::vector<std::size_t> order(kParameterCount);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    std::swap(order[k], order[k + uniform_index(gen, kParameterCount - k)]);
  }
  const std::size_t want = std::min(options.n_params, kParameterCount);

  CompactCnn<double> probe = model;
  auto params = probe.parameters();
  std::size_t next = 0;
  while (result.checked.size() < want && next < order.size()) {
    const std::size_t take = std::min(want - result.checked.size(), order.size() - next);
    std::vector<std::size_t> round(order.begin() + static_cast<std::ptrdiff_t>(next),
                                   order.begin() + static_cast<std::ptrdiff_t>(next + take));
    next += take;
    // Later stages first: earlier cached activations then never go stale.
    std::sort(round.begin(), round.end(), std::greater<>());
    for (std::size_t i : round) {
      const double saved = params[i];
      const Stage stage = stage_of_parameter(i);
      double step = options.step, up = 0.0, down = 0.0;
      bool smooth = false;
      for (std::size_t attempt = 0; attempt <= options.step_reductions; ++attempt) {
        params[i] = saved + step;
        up = loss_of(probe.forward_from(stage, ws), label);
        smooth = same_pattern(base, ws, stage);
        params[i] = saved - step;
        down = loss_of(probe.forward_from(stage, ws), label);
        smooth = smooth && same_pattern(base, ws, stage);
        if (smooth || !options.skip_kinks || attempt == options.step_reductions) break;
        step /= 10.0;
      }
      params[i] = saved;
      if (options.skip_kinks && !smooth) {
        ++result.skipped_at_kinks;
        continue;
      }
      if (step != options.step) ++result.reduced_step;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = result.analytic[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double err = std::abs(analytic - numeric) / denom;
      if (result.checked.empty() || err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = i;
      }
      result.checked.push_back(i);
    }
    probe.forward_from(Stage::Block1, ws);  // drop the perturbed activations
  }
  return result;
}

}  // namespace ebmorph
