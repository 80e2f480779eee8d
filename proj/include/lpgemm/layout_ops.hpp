#pragma once

// Elementwise and row-wise operators on canonical views and directly on the
// propagated layout. Propagated variants walk one mr-row panel at a time so the
// interleaved rows of each micro-tile are processed together; per-row results
// are bit-identical to the canonical variants.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "lpgemm/core.hpp"

namespace lpgemm {

/// Calls fn(tile, i0, j0, live_rows, live_cols) for every micro-tile that
/// holds logical elements, in row-panel-major order.
template <typename T, typename Fn>
void for_each_logical_tile(const BasicPropagatedView<T>& x, Fn&& fn) {
  const std::size_t mr = x.params().mr;
  const std::size_t nr = x.params().nr;
  for (std::size_t i0 = 0; i0 < x.rows(); i0 += mr) {
    const std::size_t rl = std::min(mr, x.rows() - i0);
    for (std::size_t j0 = 0; j0 < x.cols(); j0 += nr) {
      fn(x.tile(i0, j0), i0, j0, rl, std::min(nr, x.cols() - j0));
    }
  }
}

// ---------------------------------------------------------------------------
// Scale / ReLU

inline void scale_inplace(MatrixView x, float s) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    float* row = x.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) row[j] *= s;
  }
}

inline void scale_inplace(const PropagatedView& x, float s) {
  const std::size_t mr = x.params().mr;
  for_each_logical_tile(x, [&](float* t, std::size_t, std::size_t, std::size_t rl, std::size_t cl) {
    for (std::size_t c = 0; c < cl; ++c) {
      for (std::size_t r = 0; r < rl; ++r) t[c * mr + r] *= s;
    }
  });
}

inline void relu_inplace(MatrixView x) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    float* row = x.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) row[j] = row[j] > 0.0f ? row[j] : 0.0f;
  }
}

inline void relu_inplace(const PropagatedView& x) {
  const std::size_t mr = x.params().mr;
  for_each_logical_tile(x, [&](float* t, std::size_t, std::size_t, std::size_t rl, std::size_t cl) {
    for (std::size_t c = 0; c < cl; ++c) {
      for (std::size_t r = 0; r < rl; ++r) t[c * mr + r] = t[c * mr + r] > 0.0f ? t[c * mr + r] : 0.0f;
    }
  });
}

// ---------------------------------------------------------------------------
// Softmax

/// Row-causal mask: element (i, j) is masked when j > i + offset.
struct CausalMask {
  std::size_t offset = 0;
  bool masked(std::size_t i, std::size_t j) const noexcept { return j > i + offset; }
};

/// Row-wise softmax with max subtraction. Masked entries act as -inf and
/// come out as exactly 0; a row with every entry masked becomes all zeros.
inline void softmax_rows(MatrixView x, std::optional<CausalMask> mask = std::nullopt) {
  std::vector<double> e(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    float* row = x.row(i);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (!(mask && mask->masked(i, j))) m = std::max(m, static_cast<double>(row[j]));
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      e[j] = (mask && mask->masked(i, j)) ? 0.0 : std::exp(static_cast<double>(row[j]) - m);
      sum += e[j];
    }
    for (std::size_t j = 0; j < x.cols(); ++j) {
      row[j] = sum > 0.0 ? static_cast<float>(e[j] / sum) : 0.0f;
    }
  }
}

inline void softmax_rows(const PropagatedView& x, std::optional<CausalMask> mask = std::nullopt) {
  const std::size_t mr = x.params().mr;
  const std::size_t nr = x.params().nr;
  const std::size_t cols = x.cols();
  std::vector<double> m(mr), sum(mr), e(mr * cols);
  for (std::size_t i0 = 0; i0 < x.rows(); i0 += mr) {
    const std::size_t rl = std::min(mr, x.rows() - i0);
    std::fill(m.begin(), m.end(), -std::numeric_limits<double>::infinity());
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t j0 = 0; j0 < cols; j0 += nr) {
      const float* t = x.tile(i0, j0);
      const std::size_t cl = std::min(nr, cols - j0);
      for (std::size_t c = 0; c < cl; ++c) {
        for (std::size_t r = 0; r < rl; ++r) {
          if (!(mask && mask->masked(i0 + r, j0 + c))) {
            m[r] = std::max(m[r], static_cast<double>(t[c * mr + r]));
          }
        }
      }
    }
    for (std::size_t j0 = 0; j0 < cols; j0 += nr) {
      const float* t = x.tile(i0, j0);
      const std::size_t cl = std::min(nr, cols - j0);
      for (std::size_t c = 0; c < cl; ++c) {
        for (std::size_t r = 0; r < rl; ++r) {
          const std::size_t j = j0 + c;
          const double v = (mask && mask->masked(i0 + r, j))
                               ? 0.0
                               : std::exp(static_cast<double>(t[c * mr + r]) - m[r]);
          e[r * cols + j] = v;
          sum[r] += v;
        }
      }
    }
    for (std::size_t j0 = 0; j0 < cols; j0 += nr) {
      float* t = x.tile(i0, j0);
      const std::size_t cl = std::min(nr, cols - j0);
      for (std::size_t c = 0; c < cl; ++c) {
        for (std::size_t r = 0; r < rl; ++r) {
          t[c * mr + r] = sum[r] > 0.0 ? static_cast<float>(e[r * cols + j0 + c] / sum[r]) : 0.0f;
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// RoPE

inline constexpr double kDefaultRopeTheta = 10000.0;

namespace detail {

/// cos/sin of pos * theta^(-2d / head_dim) for every row and pair index d.
struct RopeTable {
  std::size_t pairs = 0;
  std::vector<double> cos_v, sin_v;

  RopeTable(std::span<const std::size_t> positions, std::size_t head_dim, double theta_base)
      : pairs(head_dim / 2), cos_v(positions.size() * pairs), sin_v(positions.size() * pairs) {
    for (std::size_t d = 0; d < pairs; ++d) {
      const double freq = std::pow(theta_base, -2.0 * static_cast<double>(d) / static_cast<double>(head_dim));
      for (std::size_t i = 0; i < positions.size(); ++i) {
        const double angle = static_cast<double>(positions[i]) * freq;
        cos_v[i * pairs + d] = std::cos(angle);
        sin_v[i * pairs + d] = std::sin(angle);
      }
    }
  }
};

inline void rope_check(std::size_t rows, std::size_t cols, std::size_t head_dim,
                       std::span<const std::size_t> positions) {
  if (head_dim == 0 || head_dim % 2 != 0) throw ContractError("rope: head_dim must be even and non-zero");
  if (cols % head_dim != 0) throw ContractError("rope: column count is not a multiple of head_dim");
  if (positions.size() != rows) throw ContractError("rope: one position per row required");
}

inline void rotate(float& x, float& y, double c, double s) {
  const double xd = x;
  const double yd = y;
  x = static_cast<float>(xd * c - yd * s);
  y = static_cast<float>(xd * s + yd * c);
}

}  // namespace detail

/// Rotates each within-head adjacent pair (2d, 2d+1) of row i by
/// positions[i] * theta_base^(-2d / head_dim).
inline void rope_inplace(MatrixView x, std::size_t head_dim, std::span<const std::size_t> positions,
                         double theta_base = kDefaultRopeTheta) {
  detail::rope_check(x.rows(), x.cols(), head_dim, positions);
  const detail::RopeTable tab(positions, head_dim, theta_base);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    float* row = x.row(i);
    for (std::size_t h0 = 0; h0 < x.cols(); h0 += head_dim) {
      for (std::size_t d = 0; d < tab.pairs; ++d) {
        detail::rotate(row[h0 + 2 * d], row[h0 + 2 * d + 1], tab.cos_v[i * tab.pairs + d],
                       tab.sin_v[i * tab.pairs + d]);
      }
    }
  }
}

inline void rope_inplace(const PropagatedView& x, std::size_t head_dim,
                         std::span<const std::size_t> positions, double theta_base = kDefaultRopeTheta) {
  detail::rope_check(x.rows(), x.cols(), head_dim, positions);
  const detail::RopeTable tab(positions, head_dim, theta_base);
  const std::size_t mr = x.params().mr;
  const std::size_t nr = x.params().nr;
  auto column = [&](std::size_t i0, std::size_t j) { return x.tile(i0, j - j % nr) + (j % nr) * mr; };
  for (std::size_t i0 = 0; i0 < x.rows(); i0 += mr) {
    const std::size_t rl = std::min(mr, x.rows() - i0);
    for (std::size_t h0 = 0; h0 < x.cols(); h0 += head_dim) {
      for (std::size_t d = 0; d < tab.pairs; ++d) {
        float* xs = column(i0, h0 + 2 * d);
        float* ys = column(i0, h0 + 2 * d + 1);
        for (std::size_t r = 0; r < rl; ++r) {
          const std::size_t k = (i0 + r) * tab.pairs + d;
          detail::rotate(xs[r], ys[r], tab.cos_v[k], tab.sin_v[k]);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// RMSNorm

inline constexpr float kDefaultRmsEpsilon = 1e-5f;

inline void rmsnorm_rows(MatrixView x, std::span<const float> gain, float epsilon = kDefaultRmsEpsilon) {
  if (gain.size() != x.cols()) throw ContractError("rmsnorm: gain length must equal column count");
  for (std::size_t i = 0; i < x.rows(); ++i) {
    float* row = x.row(i);
    double ss = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) ss += static_cast<double>(row[j]) * row[j];
    const double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.cols()) + epsilon);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      row[j] = static_cast<float>(static_cast<double>(row[j]) * inv * gain[j]);
    }
  }
}

inline void rmsnorm_rows(const PropagatedView& x, std::span<const float> gain,
                         float epsilon = kDefaultRmsEpsilon) {
  if (gain.size() != x.cols()) throw ContractError("rmsnorm: gain length must equal column count");
  const std::size_t mr = x.params().mr;
  const std::size_t nr = x.params().nr;
  std::vector<double> ss(mr), inv(mr);
  for (std::size_t i0 = 0; i0 < x.rows(); i0 += mr) {
    const std::size_t rl = std::min(mr, x.rows() - i0);
    std::fill(ss.begin(), ss.end(), 0.0);
    for (std::size_t j0 = 0; j0 < x.cols(); j0 += nr) {
      const float* t = x.tile(i0, j0);
      const std::size_t cl = std::min(nr, x.cols() - j0);
      for (std::size_t c = 0; c < cl; ++c) {
        for (std::size_t r = 0; r < rl; ++r) ss[r] += static_cast<double>(t[c * mr + r]) * t[c * mr + r];
      }
    }
    for (std::size_t r = 0; r < rl; ++r) {
      inv[r] = 1.0 / std::sqrt(ss[r] / static_cast<double>(x.cols()) + epsilon);
    }
    for (std::size_t j0 = 0; j0 < x.cols(); j0 += nr) {
      float* t = x.tile(i0, j0);
      const std::size_t cl = std::min(nr, x.cols() - j0);
      for (std::size_t c = 0; c < cl; ++c) {
        for (std::size_t r = 0; r < rl; ++r) {
          t[c * mr + r] = static_cast<float>(static_cast<double>(t[c * mr + r]) * inv[r] * gain[j0 + c]);
        }
      }
    }
  }
}

}  // namespace lpgemm
