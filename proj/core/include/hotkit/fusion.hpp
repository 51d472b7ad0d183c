#pragma once

#include <cstddef>
#include <string>

#include "hotkit/numerics.hpp"

namespace hotkit {

/// Cross-modal co-attention between text and image hyperedges:
///
///   A   = softmax_rows(W ∘ (E_text W_text_c)(E_img W_img_c)ᵀ)
///   z_m = (E_text W_text_m)ᵀ A (E_img W_img_m)
///
/// W is learned per (text edge, image edge) pair, so both edge counts are
/// fixed when the parameters are created.
struct CoAttentionParams {
  Matrix gate;        // W, N_text × N_img
  Matrix text_coatt;  // W_text_c, d × d_c
  Matrix img_coatt;   // W_img_c, d × d_c
  Matrix text_fuse;   // W_text_m, d × d_m
  Matrix img_fuse;    // W_img_m, d × d_m

  [[nodiscard]] std::size_t num_text_edges() const noexcept { return gate.rows(); }
  [[nodiscard]] std::size_t num_img_edges() const noexcept { return gate.cols(); }
  [[nodiscard]] std::size_t dim() const noexcept { return text_coatt.rows(); }
  [[nodiscard]] std::size_t d_m() const noexcept { return text_fuse.cols(); }

  /// W starts at all-ones (plain inner-product attention); projections Xavier.
  static CoAttentionParams init(std::size_t n_text, std::size_t n_img, std::size_t d,
                                std::size_t d_c, std::size_t d_m, SplitMix64& rng);
  void validate() const;
};

template <ParamsOf<CoAttentionParams> Self, class F>
void for_each_tensor(Self& p, F&& f, const std::string& prefix = {}) {
  f(prefix + "W", p.gate.values());
  f(prefix + "W_text_c", p.text_coatt.values());
  f(prefix + "W_img_c", p.img_coatt.values());
  f(prefix + "W_text_m", p.text_fuse.values());
  f(prefix + "W_img_m", p.img_fuse.values());
}

struct CoAttentionCache {
  Matrix text_proj;  // E_text W_text_c
  Matrix img_proj;   // E_img W_img_c
  Matrix scores;     // (E_text W_text_c)(E_img W_img_c)ᵀ, before the W gate
  Matrix attention;  // A
};

Matrix coattention(const Matrix& text_edges, const Matrix& img_edges, const CoAttentionParams& p,
                   CoAttentionCache* cache = nullptr);

struct FuseCache {
  Matrix text_fused;  // E_text W_text_m
  Matrix img_fused;   // E_img W_img_m
};

/// z_m, d_m × d_m.
Matrix fuse(const Matrix& text_edges, const Matrix& img_edges, const Matrix& attention,
            const CoAttentionParams& p, FuseCache* cache = nullptr);

struct FuseGradients {
  Matrix grad_text_edges;
  Matrix grad_img_edges;
  Matrix grad_attention;
};

/// Accumulates W_text_m / W_img_m gradients into `grads`.
FuseGradients fuse_backward(const Matrix& grad_z, const Matrix& text_edges,
                            const Matrix& img_edges, const Matrix& attention,
                            const CoAttentionParams& p, const FuseCache& cache,
                            CoAttentionParams& grads);

struct CoAttentionGradients {
  Matrix grad_text_edges;
  Matrix grad_img_edges;
};

/// Accumulates W / W_text_c / W_img_c gradients into `grads`.
CoAttentionGradients coattention_backward(const Matrix& grad_attention, const Matrix& text_edges,
                                          const Matrix& img_edges, const CoAttentionParams& p,
                                          const CoAttentionCache& cache,
                                          CoAttentionParams& grads);

/// Gate between a text sequence H (seq × d) and the fused cross-modal summary:
///
///   Z = flatten(z_m) · proj_z          (1 × d, broadcast over rows)
///   λ = logistic(H · gate_text + Z · gate_z + gate_bias)
///   out = (1 − λ) ⊙ H + λ ⊙ Z
struct GateFusionParams {
  Matrix proj_z;     // d_m² × d
  Matrix gate_text;  // d × d
  Matrix gate_z;     // d × d
  Vector gate_bias;  // d

  static GateFusionParams init(std::size_t d_m, std::size_t d, SplitMix64& rng);
  void validate() const;
};

template <ParamsOf<GateFusionParams> Self, class F>
void for_each_tensor(Self& p, F&& f, const std::string& prefix = {}) {
  f(prefix + "proj_z", p.proj_z.values());
  f(prefix + "gate_text", p.gate_text.values());
  f(prefix + "gate_z", p.gate_z.values());
  f(prefix + "gate_bias", std::span(p.gate_bias));
}

struct GateCache {
  Matrix text;      // H
  Matrix z_flat;    // 1 × d_m²
  Matrix z_proj;    // Z, 1 × d
  Matrix gate;      // λ, seq × d
  std::size_t z_rows = 0;
  std::size_t z_cols = 0;
};

Matrix gate_fuse(const Matrix& text, const Matrix& z, const GateFusionParams& p,
                 GateCache* cache = nullptr);

struct GateGradients {
  Matrix grad_text;
  Matrix grad_z;
};

GateGradients gate_fuse_backward(const Matrix& grad_out, const GateFusionParams& p,
                                 const GateCache& cache, GateFusionParams& grads);

}  // namespace hotkit
