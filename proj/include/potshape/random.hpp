#pragma once

#include <random>
#include <stdexcept>
#include <vector>

#include "potshape/mdp.hpp"

namespace potshape {

/// Decorrelated streams derived from one experiment seed, so that model
/// initialisation never perturbs environment sampling.
inline std::mt19937_64 env_stream(uint64_t seed) { return std::mt19937_64(seed * 2654435761ULL + 1); }
inline std::mt19937_64 model_stream(uint64_t seed) {
  return std::mt19937_64(seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);
}

/// Samples an index proportional to the (nonnegative) weights.
template <typename Rng>
int sample_categorical(const Vector& weights, Rng& rng) {
  double total = weights.sum();
  if (!(total > 0.0)) throw std::invalid_argument("sample_categorical: weights sum to zero");
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * total;
  double acc = 0.0;
  int last = 0;
  for (int i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

}  // namespace potshape
