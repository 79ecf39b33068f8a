#pragma once

#include <concepts>
#include <cstdint>
#include <random>

namespace ebmorph {

// Default generator for every stochastic stage of the pipeline.
using Rng = std::mt19937_64;

// Uniform draw in [0, 1) from the top 53 bits of a 64-bit word. A generator
// that always returns its minimum yields exactly 0, which the samplers rely on
// to map onto interval lower bounds.
template <std::uniform_random_bit_generator G>
double uniform01(G& gen) {
  using R = typename G::result_type;
  const auto span = static_cast<std::uint64_t>(G::max() - G::min());
  const auto raw = static_cast<std::uint64_t>(static_cast<R>(gen() - G::min()));
  if (span == ~std::uint64_t{0}) {
    return static_cast<double>(raw >> 11) * 0x1.0p-53;
  }
  return static_cast<double>(raw) / (static_cast<double>(span) + 1.0);
}

template <std::uniform_random_bit_generator G>
double uniform(G& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

// Index in [0, n).
template <std::uniform_random_bit_generator G>
std::size_t uniform_index(G& gen, std::size_t n) {
  auto i = static_cast<std::size_t>(uniform01(gen) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

// Per-sample seed from a master seed and a sample index, so samples can be
// generated independently (and in parallel) yet reproducibly.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master),
                    static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace ebmorph
