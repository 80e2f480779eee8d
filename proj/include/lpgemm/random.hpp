#pragma once

#include <cstdint>
#include <random>

#include "lpgemm/core.hpp"

namespace lpgemm {

/// Seeded generator with a fixed, platform-independent output sequence:
/// std::mt19937 words mapped to floats through their top 24 bits. (The
/// standard distributions are implementation-defined and are avoided.)
class SeededRng {
 public:
  explicit SeededRng(std::uint32_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  float unit() { return static_cast<float>(engine_() >> 8) * 0x1.0p-24f; }

  /// Uniform in [lo, hi).
  float uniform(float lo, float hi) { return lo + (hi - lo) * unit(); }

  /// Uniform integer in [lo, hi].
  std::size_t index(std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(engine_() % static_cast<std::uint32_t>(hi - lo + 1));
  }

  std::uint32_t next() { return engine_(); }

 private:
  std::mt19937 engine_;
};

inline void fill_uniform(MatrixView m, SeededRng& rng, float lo = -1.0f, float hi = 1.0f) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(lo, hi);
  }
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, SeededRng& rng, float lo = -1.0f,
                            float hi = 1.0f) {
  Matrix m(rows, cols);
  fill_uniform(m.view(), rng, lo, hi);
  return m;
}

}  // namespace lpgemm
