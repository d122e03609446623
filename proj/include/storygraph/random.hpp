#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace storygraph {

// mt19937_64 output is fixed by the standard, but the std distributions are
// not; everything that must reproduce across toolchains goes through these.
using Rng = std::mt19937_64;

/// Uniform integer in [0, bound). bound must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

/// Uniform real in [0, 1) with 53 random bits.
double uniform_unit(Rng& rng);

double uniform_real(Rng& rng, double lo, double hi);

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// FNV-1a over bytes, chained from `basis`.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 14695981039346656037ULL);

/// Stable per-stream seed: mixes the master seed with a sequence of labels
/// (project name, component name, ...).
std::uint64_t derive_seed(std::uint64_t master, std::string_view a, std::string_view b = {});

}  // namespace storygraph
