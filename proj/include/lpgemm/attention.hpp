#pragma once

// Multi-head attention (grouped K/V heads, RoPE, optional causal mask) and a
// two-GEMM MLP block, each available as
//   *_reference  canonical layouts, 64-bit naive GEMMs (the oracle)
//   *_baseline   canonical layouts, gemm_default at every GEMM
//   *_lp         layout-propagating kernels end to end

#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "lpgemm/core.hpp"
#include "lpgemm/kernels.hpp"
#include "lpgemm/layout_ops.hpp"
#include "lpgemm/random.hpp"

namespace lpgemm {

struct AttentionConfig {
  std::size_t n_tokens = 16;
  std::size_t embed_dim = 64;
  std::size_t n_heads = 4;
  std::size_t n_kv_heads = 2;
  std::size_t head_dim = 16;
  bool causal = true;
  double theta_base = kDefaultRopeTheta;
  std::uint32_t seed = 42;

  std::size_t kv_dim() const noexcept { return n_kv_heads * head_dim; }
  std::size_t group_size() const noexcept { return n_heads / n_kv_heads; }
  /// K/V head feeding query head h.
  std::size_t kv_head_of(std::size_t h) const noexcept { return h / group_size(); }

  void validate() const {
    if (n_tokens == 0 || n_heads == 0 || n_kv_heads == 0 || head_dim == 0) {
      throw ContractError("attention config: counts must be positive");
    }
    if (embed_dim != n_heads * head_dim) throw ContractError("attention config: embed_dim != n_heads * head_dim");
    if (n_heads % n_kv_heads != 0) throw ContractError("attention config: n_heads not a multiple of n_kv_heads");
    if (head_dim % 2 != 0) throw ContractError("attention config: head_dim must be even");
  }
};

/// Projection weights, row-major, applied as X * W.
struct AttentionWeights {
  Matrix wq;  // embed x embed
  Matrix wk;  // embed x kv_dim
  Matrix wv;  // embed x kv_dim
  Matrix wo;  // embed x embed

  /// Draws wq, wk, wv, wo in that order from SeededRng(cfg.seed), uniform in
  /// [-1/sqrt(embed), 1/sqrt(embed)).
  static AttentionWeights generate(const AttentionConfig& cfg) {
    cfg.validate();
    SeededRng rng(cfg.seed);
    const float a = 1.0f / std::sqrt(static_cast<float>(cfg.embed_dim));
    AttentionWeights w;
    w.wq = random_matrix(cfg.embed_dim, cfg.embed_dim, rng, -a, a);
    w.wk = random_matrix(cfg.embed_dim, cfg.kv_dim(), rng, -a, a);
    w.wv = random_matrix(cfg.embed_dim, cfg.kv_dim(), rng, -a, a);
    w.wo = random_matrix(cfg.embed_dim, cfg.embed_dim, rng, -a, a);
    return w;
  }

  void check(const AttentionConfig& cfg) const {
    const std::size_t e = cfg.embed_dim;
    if (wq.rows() != e || wq.cols() != e || wk.rows() != e || wk.cols() != cfg.kv_dim() || wv.rows() != e ||
        wv.cols() != cfg.kv_dim() || wo.rows() != e || wo.cols() != e) {
      throw ContractError("attention weights do not match config");
    }
  }
};

/// Input activations: SeededRng(cfg.seed + 1), uniform in [-1, 1).
inline Matrix attention_input(const AttentionConfig& cfg) {
  SeededRng rng(cfg.seed + 1);
  return random_matrix(cfg.n_tokens, cfg.embed_dim, rng);
}

namespace detail {

inline void check_attention_input(const AttentionConfig& cfg, const AttentionWeights& w, ConstMatrixView x) {
  cfg.validate();
  w.check(cfg);
  if (x.rows() != cfg.n_tokens || x.cols() != cfg.embed_dim) {
    throw ContractError("attention input must be n_tokens x embed_dim");
  }
}

inline std::vector<std::size_t> token_positions(std::size_t n) {
  std::vector<std::size_t> pos(n);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  return pos;
}

inline float attention_scale(const AttentionConfig& cfg) {
  return 1.0f / std::sqrt(static_cast<float>(cfg.head_dim));
}

inline std::optional<CausalMask> attention_mask(const AttentionConfig& cfg) {
  return cfg.causal ? std::optional<CausalMask>(CausalMask{}) : std::nullopt;
}

/// Canonical attention with K and V explicitly replicated head-wise.
template <typename Gemm>
Matrix attention_canonical(const AttentionConfig& cfg, const AttentionWeights& w, ConstMatrixView x, Gemm&& gemm) {
  check_attention_input(cfg, w, x);
  const std::size_t t = cfg.n_tokens;
  const std::size_t hd = cfg.head_dim;
  const std::vector<std::size_t> pos = token_positions(t);

  Matrix q = gemm(x, w.wq.cview());
  Matrix k = gemm(x, w.wk.cview());
  Matrix v = gemm(x, w.wv.cview());
  rope_inplace(q.view(), hd, pos, cfg.theta_base);
  rope_inplace(k.view(), hd, pos, cfg.theta_base);

  Matrix k_rep(t, cfg.embed_dim);
  Matrix v_rep(t, cfg.embed_dim);
  for (std::size_t h = 0; h < cfg.n_heads; ++h) {
    const std::size_t g = cfg.kv_head_of(h);
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t d = 0; d < hd; ++d) {
        k_rep(i, h * hd + d) = k(i, g * hd + d);
        v_rep(i, h * hd + d) = v(i, g * hd + d);
      }
    }
  }

  Matrix y(t, cfg.embed_dim);
  for (std::size_t h = 0; h < cfg.n_heads; ++h) {
    const Matrix k_t = transpose(k_rep.cview().sub(0, h * hd, t, hd));
    Matrix scores = gemm(q.cview().sub(0, h * hd, t, hd), k_t.cview());
    scale_inplace(scores.view(), attention_scale(cfg));
    softmax_rows(scores.view(), attention_mask(cfg));
    const Matrix yh = gemm(scores.cview(), v_rep.cview().sub(0, h * hd, t, hd));
    for (std::size_t i = 0; i < t; ++i) {
      std::copy_n(yh.cview().row(i), hd, y.view().row(i) + h * hd);
    }
  }
  return gemm(y.cview(), w.wo.cview());
}

}  // namespace detail

inline Matrix attention_reference(const AttentionConfig& cfg, const AttentionWeights& w, ConstMatrixView x) {
  return detail::attention_canonical(cfg, w, x, [](ConstMatrixView a, ConstMatrixView b) { return gemm_naive(a, b); });
}

inline Matrix attention_baseline(const AttentionConfig& cfg, const AttentionWeights& w, ConstMatrixView x,
                                 const TileParams& params, PackCounters& counters) {
  GemmWorkspace ws;
  return detail::attention_canonical(cfg, w, x, [&](ConstMatrixView a, ConstMatrixView b) {
    Matrix c(a.rows(), b.cols());
    gemm_default({a.rows(), b.cols(), a.cols()}, a, b, c.view(), params, counters, ws);
    return c;
  });
}

/// Per-head context Y (n_tokens x embed, before the output projection) in the
/// propagated layout, computed for the listed heads only; columns of other
/// heads stay zero.
///
/// Q is produced by gemm_ini and stays propagated: RoPE, the score GEMM (mid),
/// scale, mask and softmax all run on propagated buffers, and each head's
/// weighted sum is written by gemm_mid straight into its column slice of Y
/// through a strided StoreSpec. K and V are multiplicands and are kept
/// canonical for sb packing. Requires head_dim to be a multiple of nr.
inline PropagatedMatrix attention_lp_context(const AttentionConfig& cfg, const AttentionWeights& w,
                                             ConstMatrixView x, const TileParams& params, PackCounters& counters,
                                             std::span<const std::size_t> heads) {
  detail::check_attention_input(cfg, w, x);
  params.validate();
  const std::size_t t = cfg.n_tokens;
  const std::size_t hd = cfg.head_dim;
  const std::vector<std::size_t> pos = detail::token_positions(t);
  GemmWorkspace ws;

  PropagatedMatrix q = gemm_ini(x, w.wq.cview(), params, StoreSpec{}, counters, ws);
  rope_inplace(q.view(), hd, pos, cfg.theta_base);

  Matrix k(t, cfg.kv_dim());
  gemm_default({t, cfg.kv_dim(), cfg.embed_dim}, x, w.wk.cview(), k.view(), params, counters, ws);
  rope_inplace(k.view(), hd, pos, cfg.theta_base);
  const Matrix k_t = transpose(k.cview());
  Matrix v(t, cfg.kv_dim());
  gemm_default({t, cfg.kv_dim(), cfg.embed_dim}, x, w.wv.cview(), v.view(), params, counters, ws);

  PropagatedMatrix y(t, cfg.embed_dim, params);
  const float scale = detail::attention_scale(cfg);
  for (const std::size_t h : heads) {
    if (h >= cfg.n_heads) throw ContractError("head index out of range");
    const std::size_t g = cfg.kv_head_of(h);
    const ConstPropagatedView q_h = column_slice(q.cview(), h * hd, hd);
    PropagatedMatrix scores = gemm_mid(q_h, k_t.cview().sub(g * hd, 0, hd, t), params, StoreSpec{}, counters, ws);
    scale_inplace(scores.view(), scale);
    softmax_rows(scores.view(), detail::attention_mask(cfg));
    const PropagatedView y_h = column_slice(y.view(), h * hd, hd);
    gemm_mid_into(scores.cview(), v.cview().sub(0, g * hd, t, hd), y_h, params, counters, ws);
  }
  return y;
}

inline PropagatedMatrix attention_lp_context(const AttentionConfig& cfg, const AttentionWeights& w,
                                             ConstMatrixView x, const TileParams& params, PackCounters& counters) {
  const std::vector<std::size_t> all = detail::token_positions(cfg.n_heads);
  return attention_lp_context(cfg, w, x, params, counters, all);
}

inline Matrix attention_lp(const AttentionConfig& cfg, const AttentionWeights& w, ConstMatrixView x,
                           const TileParams& params, PackCounters& counters) {
  const PropagatedMatrix y = attention_lp_context(cfg, w, x, params, counters);
  Matrix out(cfg.n_tokens, cfg.embed_dim);
  gemm_end(y.cview(), w.wo.cview(), out.view(), params, counters);
  return out;
}

// ---------------------------------------------------------------------------
// MLP

/// X * up -> activation -> * down.
struct MlpWeights {
  Matrix up;    // embed x hidden
  Matrix down;  // hidden x embed
  Activation activation = Activation::relu();

  static MlpWeights generate(std::size_t embed, std::size_t hidden, std::uint32_t seed) {
    SeededRng rng(seed);
    MlpWeights w;
    const float a_up = 1.0f / std::sqrt(static_cast<float>(embed));
    const float a_down = 1.0f / std::sqrt(static_cast<float>(hidden));
    w.up = random_matrix(embed, hidden, rng, -a_up, a_up);
    w.down = random_matrix(hidden, embed, rng, -a_down, a_down);
    return w;
  }

  ChainSpec chain(ConstMatrixView x) const {
    if (up.cols() != down.rows() || x.cols() != up.rows()) throw ContractError("mlp weights do not conform");
    return ChainSpec{x, {{up.cview(), activation}, {down.cview(), Activation::none()}}};
  }
};

inline Matrix mlp_block(const MlpWeights& w, ConstMatrixView x, const TileParams& params, PackCounters& counters) {
  return chain_gemm(w.chain(x), params, counters);
}

inline Matrix mlp_baseline(const MlpWeights& w, ConstMatrixView x, const TileParams& params,
                           PackCounters& counters) {
  return chain_default(w.chain(x), params, counters);
}

inline Matrix mlp_reference(const MlpWeights& w, ConstMatrixView x) { return chain_naive(w.chain(x)); }

}  // namespace lpgemm
