#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "zoflow/linalg.hpp"

namespace zoflow {

using Rng = std::mt19937_64;

/// Named sub-streams derived from one master seed. Each (seed, stream,
/// index...) tuple yields an independent, reproducible generator, so work
/// can be distributed across threads without changing the draws.
enum class Stream : std::uint32_t {
  kTruth = 1,
  kInit = 2,
  kMonteCarlo = 3,
  kCodec = 4,
  kAux = 5,
};

inline Rng make_rng(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> index = {}) {
  std::seed_seq::result_type words[16];
  std::size_t n = 0;
  words[n++] = static_cast<std::uint32_t>(seed);
  words[n++] = static_cast<std::uint32_t>(seed >> 32);
  words[n++] = static_cast<std::uint32_t>(stream);
  for (auto i : index) {
    if (n + 2 > 16) break;
    words[n++] = static_cast<std::uint32_t>(i);
    words[n++] = static_cast<std::uint32_t>(i >> 32);
  }
  std::seed_seq seq(words, words + n);
  return Rng(seq);
}

inline Vec standard_normal(Rng& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace zoflow
