#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tsroute {

using Rng = std::mt19937_64;

// Independent, reproducible sub-stream for one component of a run
// (e.g. "selection", "environment", "training").
Rng make_stream(std::uint64_t seed, std::string_view label);

// Seed for a nested component, derived the same way as make_stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// Uniform in [0, 1).
inline double uniform01(Rng& rng) {
  return std::generate_canonical<double, 53>(rng);
}

}  // namespace tsroute
