#pragma once

// Dense kernels behind CompactCnn. Every kernel comes as a serial reference
// and an OpenMP version selected by Exec. Both run the same per-channel inner
// loop with the same summation order, so their outputs are bitwise equal;
// the OpenMP version only distributes whole channels across threads.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace ebmorph::kernels {

enum class Exec { Serial, Parallel };

// dst[y][x] += sum_{a,b} k[3a+b] * src[y+a-1][x+b-1], zero padding outside.
template <typename T>
void accumulate_conv3x3(const T* src, T* dst, std::size_t h, std::size_t w, const T* k,
                        const T* zero_row) {
  for (std::size_t y = 0; y < h; ++y) {
    const T* s0 = y > 0 ? src + (y - 1) * w : zero_row;
    const T* s1 = src + y * w;
    const T* s2 = y + 1 < h ? src + (y + 1) * w : zero_row;
    T* d = dst + y * w;
    const T k0 = k[0], k1 = k[1], k2 = k[2];
    const T k3 = k[3], k4 = k[4], k5 = k[5];
    const T k6 = k[6], k7 = k[7], k8 = k[8];
    d[0] += k1 * s0[0] + k2 * s0[1] + k4 * s1[0] + k5 * s1[1] + k7 * s2[0] + k8 * s2[1];
#pragma omp simd
    for (std::size_t x = 1; x < w - 1; ++x) {
      d[x] += k0 * s0[x - 1] + k1 * s0[x] + k2 * s0[x + 1] + k3 * s1[x - 1] + k4 * s1[x] +
              k5 * s1[x + 1] + k6 * s2[x - 1] + k7 * s2[x] + k8 * s2[x + 1];
    }
    const std::size_t e = w - 1;
    d[e] += k0 * s0[e - 1] + k1 * s0[e] + k3 * s1[e - 1] + k4 * s1[e] + k6 * s2[e - 1] +
            k7 * s2[e];
  }
}

// k[3a+b] += sum_{y,x} grad[y][x] * src[y+a-1][x+b-1]
template <typename T>
void accumulate_kernel_grad(const T* src, const T* grad, std::size_t h, std::size_t w, T* k) {
  for (std::size_t a = 0; a < 3; ++a) {
    const std::size_t y0 = a == 0 ? 1 : 0;
    const std::size_t y1 = a == 2 ? h - 1 : h;
    for (std::size_t b = 0; b < 3; ++b) {
      const std::size_t x0 = b == 0 ? 1 : 0;
      const std::size_t x1 = b == 2 ? w - 1 : w;
      T total = 0;
      for (std::size_t y = y0; y < y1; ++y) {
        const T* g = grad + y * w;
        const T* s = src + (y + a - 1) * w + b;
        T row = 0;
#pragma omp simd reduction(+ : row)
        for (std::size_t x = x0; x < x1; ++x) row += g[x] * s[x - 1];
        total += row;
      }
      k[3 * a + b] += total;
    }
  }
}

template <typename T>
T plane_sum(const T* p, std::size_t n) {
  T s = 0;
#pragma omp simd reduction(+ : s)
  for (std::size_t i = 0; i < n; ++i) s += p[i];
  return s;
}

namespace detail {

template <typename T>
void conv_forward_channel(const T* in, std::size_t c_in, std::size_t h, std::size_t w,
                          const T* weights, T bias, std::size_t co, T* out,
                          const T* zero_row) {
  const std::size_t plane = h * w;
  T* o = out + co * plane;
  std::fill(o, o + plane, bias);
  for (std::size_t ci = 0; ci < c_in; ++ci) {
    accumulate_conv3x3(in + ci * plane, o, h, w, weights + (co * c_in + ci) * 9, zero_row);
  }
  for (std::size_t i = 0; i < plane; ++i) o[i] = o[i] > T(0) ? o[i] : T(0);
}

template <typename T>
void conv_backward_input_channel(const T* grad_out, std::size_t c_in, std::size_t c_out,
                                 std::size_t h, std::size_t w, const T* weights, std::size_t ci,
                                 T* grad_in, const T* zero_row) {
  const std::size_t plane = h * w;
  T* gi = grad_in + ci * plane;
  std::fill(gi, gi + plane, T(0));
  for (std::size_t co = 0; co < c_out; ++co) {
    const T* k = weights + (co * c_in + ci) * 9;
    const T flipped[9] = {k[8], k[7], k[6], k[5], k[4], k[3], k[2], k[1], k[0]};
    accumulate_conv3x3(grad_out + co * plane, gi, h, w, flipped, zero_row);
  }
}

template <typename T>
void conv_backward_weight_channel(const T* in, const T* grad_out, std::size_t c_in,
                                  std::size_t h, std::size_t w, std::size_t co, T* grad_w,
                                  T* grad_b) {
  const std::size_t plane = h * w;
  const T* g = grad_out + co * plane;
  for (std::size_t ci = 0; ci < c_in; ++ci) {
    accumulate_kernel_grad(in + ci * plane, g, h, w, grad_w + (co * c_in + ci) * 9);
  }
  grad_b[co] += plane_sum(g, plane);
}

}  // namespace detail

// out = relu(conv3x3(in) + bias); in is c_in x h x w, out is c_out x h x w.
template <typename T>
void conv3x3_relu_forward(const T* in, std::size_t c_in, std::size_t h, std::size_t w,
                          const T* weights, const T* bias, std::size_t c_out, T* out,
                          Exec exec) {
  const std::vector<T> zero_row(w, T(0));
  const auto n = static_cast<std::ptrdiff_t>(c_out);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t co = 0; co < n; ++co) {
      detail::conv_forward_channel(in, c_in, h, w, weights, bias[co],
                                   static_cast<std::size_t>(co), out, zero_row.data());
    }
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co = 0; co < n; ++co) {
    detail::conv_forward_channel(in, c_in, h, w, weights, bias[co], static_cast<std::size_t>(co),
                                 out, zero_row.data());
  }
}

// Gradient w.r.t. the conv input (overwrites grad_in).
template <typename T>
void conv3x3_backward_input(const T* grad_out, std::size_t c_in, std::size_t c_out,
                            std::size_t h, std::size_t w, const T* weights, T* grad_in,
                            Exec exec) {
  const std::vector<T> zero_row(w, T(0));
  const auto n = static_cast<std::ptrdiff_t>(c_in);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t ci = 0; ci < n; ++ci) {
      detail::conv_backward_input_channel(grad_out, c_in, c_out, h, w, weights,
                                          static_cast<std::size_t>(ci), grad_in, zero_row.data());
    }
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < n; ++ci) {
    detail::conv_backward_input_channel(grad_out, c_in, c_out, h, w, weights,
                                        static_cast<std::size_t>(ci), grad_in, zero_row.data());
  }
}

// Accumulates weight and bias gradients (+=).
template <typename T>
void conv3x3_backward_weights(const T* in, const T* grad_out, std::size_t c_in,
                              std::size_t c_out, std::size_t h, std::size_t w, T* grad_w,
                              T* grad_b, Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(c_out);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t co = 0; co < n; ++co) {
      detail::conv_backward_weight_channel(in, grad_out, c_in, h, w,
                                           static_cast<std::size_t>(co), grad_w, grad_b);
    }
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co = 0; co < n; ++co) {
    detail::conv_backward_weight_channel(in, grad_out, c_in, h, w, static_cast<std::size_t>(co),
                                         grad_w, grad_b);
  }
}

// 2x2 max pool, stride 2. which[i] records the winning slot (row-major in the
// window, first maximum wins).
template <typename T>
void maxpool2x2_forward(const T* in, std::size_t channels, std::size_t h, std::size_t w, T* out,
                        std::uint8_t* which, Exec exec) {
  const std::size_t oh = h / 2, ow = w / 2;
  auto one = [&](std::size_t c) {
    const T* src = in + c * h * w;
    T* dst = out + c * oh * ow;
    std::uint8_t* sel = which + c * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      const T* r0 = src + 2 * y * w;
      const T* r1 = r0 + w;
      for (std::size_t x = 0; x < ow; ++x) {
        T best = r0[2 * x];
        std::uint8_t slot = 0;
        if (r0[2 * x + 1] > best) { best = r0[2 * x + 1]; slot = 1; }
        if (r1[2 * x] > best) { best = r1[2 * x]; slot = 2; }
        if (r1[2 * x + 1] > best) { best = r1[2 * x + 1]; slot = 3; }
        dst[y * ow + x] = best;
        sel[y * ow + x] = slot;
      }
    }
  };
  const auto n = static_cast<std::ptrdiff_t>(channels);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t c = 0; c < n; ++c) one(static_cast<std::size_t>(c));
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n; ++c) one(static_cast<std::size_t>(c));
}

// Routes pooled gradients back to the winning inputs and applies the ReLU
// mask of the pre-pool activations (which are post-ReLU, so active == > 0).
template <typename T>
void maxpool2x2_relu_backward(const T* grad_out, const std::uint8_t* which, const T* activ,
                              std::size_t channels, std::size_t h, std::size_t w, T* grad_in,
                              Exec exec) {
  const std::size_t oh = h / 2, ow = w / 2;
  auto one = [&](std::size_t c) {
    T* gi = grad_in + c * h * w;
    const T* act = activ + c * h * w;
    std::fill(gi, gi + h * w, T(0));
    const T* go = grad_out + c * oh * ow;
    const std::uint8_t* sel = which + c * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const std::uint8_t s = sel[y * ow + x];
        const std::size_t pos = (2 * y + (s >> 1)) * w + 2 * x + (s & 1);
        if (act[pos] > T(0)) gi[pos] = go[y * ow + x];
      }
    }
  };
  const auto n = static_cast<std::ptrdiff_t>(channels);
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t c = 0; c < n; ++c) one(static_cast<std::size_t>(c));
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n; ++c) one(static_cast<std::size_t>(c));
}

}  // namespace ebmorph::kernels
