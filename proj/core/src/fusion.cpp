#include "hotkit/fusion.hpp"

#include <cmath>

namespace hotkit {

namespace {

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(what + " must be " + std::to_string(rows) + "x" + std::to_string(cols) +
                     ", got " + m.shape_string());
  }
}

void require_edges(const Matrix& text_edges, const Matrix& img_edges, const CoAttentionParams& p) {
  if (text_edges.rows() != p.num_text_edges() || img_edges.rows() != p.num_img_edges()) {
    throw ShapeError("co-attention configured for " + std::to_string(p.num_text_edges()) +
                     " text / " + std::to_string(p.num_img_edges()) + " image hyperedges, got " +
                     std::to_string(text_edges.rows()) + " / " + std::to_string(img_edges.rows()));
  }
  require_shape(text_edges, p.num_text_edges(), p.dim(), "E_text");
  require_shape(img_edges, p.num_img_edges(), p.dim(), "E_img");
}

double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

CoAttentionParams CoAttentionParams::init(std::size_t n_text, std::size_t n_img, std::size_t d,
                                          std::size_t d_c, std::size_t d_m, SplitMix64& rng) {
  if (n_text == 0 || n_img == 0) throw std::invalid_argument("co-attention: edge counts must be >= 1");
  CoAttentionParams p;
  p.gate = Matrix(n_text, n_img, 1.0);
  p.text_coatt = xavier_init(d, d_c, rng);
  p.img_coatt = xavier_init(d, d_c, rng);
  p.text_fuse = xavier_init(d, d_m, rng);
  p.img_fuse = xavier_init(d, d_m, rng);
  return p;
}

void CoAttentionParams::validate() const {
  const std::size_t d = dim();
  if (gate.empty()) throw ShapeError("co-attention: W is empty");
  require_shape(img_coatt, d, text_coatt.cols(), "W_img_c");
  require_shape(img_fuse, d, text_fuse.cols(), "W_img_m");
  require_shape(text_fuse, d, text_fuse.cols(), "W_text_m");
}

Matrix coattention(const Matrix& text_edges, const Matrix& img_edges, const CoAttentionParams& p,
                   CoAttentionCache* cache) {
  p.validate();
  require_edges(text_edges, img_edges, p);
  CoAttentionCache local;
  CoAttentionCache& c = cache ? *cache : local;
  c.text_proj = matmul(text_edges, p.text_coatt);
  c.img_proj = matmul(img_edges, p.img_coatt);
  c.scores = matmul_nt(c.text_proj, c.img_proj);
  c.attention = row_softmax(hadamard(p.gate, c.scores));
  return c.attention;
}

Matrix fuse(const Matrix& text_edges, const Matrix& img_edges, const Matrix& attention,
            const CoAttentionParams& p, FuseCache* cache) {
  p.validate();
  require_edges(text_edges, img_edges, p);
  require_shape(attention, p.num_text_edges(), p.num_img_edges(), "A");
  FuseCache local;
  FuseCache& c = cache ? *cache : local;
  c.text_fused = matmul(text_edges, p.text_fuse);
  c.img_fused = matmul(img_edges, p.img_fuse);
  return matmul_tn(c.text_fused, matmul(attention, c.img_fused));
}

FuseGradients fuse_backward(const Matrix& grad_z, const Matrix& text_edges,
                            const Matrix& img_edges, const Matrix& attention,
                            const CoAttentionParams& p, const FuseCache& c,
                            CoAttentionParams& grads) {
  if (c.text_fused.rows() != text_edges.rows() || c.img_fused.rows() != img_edges.rows()) {
    throw CacheError("fuse_backward: cache does not match inputs");
  }
  require_shape(grad_z, p.d_m(), p.d_m(), "grad z_m");
  // z = Mtᵀ A Mi  ⇒  dMt = A Mi dzᵀ,  dA = Mt dz Miᵀ,  dMi = Aᵀ Mt dz
  const Matrix a_mi = matmul(attention, c.img_fused);
  const Matrix d_text_fused = matmul_nt(a_mi, grad_z);
  const Matrix mt_dz = matmul(c.text_fused, grad_z);
  FuseGradients g;
  g.grad_attention = matmul_nt(mt_dz, c.img_fused);
  const Matrix d_img_fused = matmul_tn(attention, mt_dz);

  add_inplace(grads.text_fuse, matmul_tn(text_edges, d_text_fused));
  add_inplace(grads.img_fuse, matmul_tn(img_edges, d_img_fused));
  g.grad_text_edges = matmul_nt(d_text_fused, p.text_fuse);
  g.grad_img_edges = matmul_nt(d_img_fused, p.img_fuse);
  return g;
}

CoAttentionGradients coattention_backward(const Matrix& grad_attention, const Matrix& text_edges,
                                          const Matrix& img_edges, const CoAttentionParams& p,
                                          const CoAttentionCache& c, CoAttentionParams& grads) {
  if (c.attention.rows() != p.num_text_edges() || c.attention.cols() != p.num_img_edges()) {
    throw CacheError("coattention_backward: cache does not match parameters");
  }
  require_shape(grad_attention, p.num_text_edges(), p.num_img_edges(), "grad A");
  const Matrix d_logits = row_softmax_backward(c.attention, grad_attention);
  add_inplace(grads.gate, hadamard(d_logits, c.scores));
  const Matrix d_scores = hadamard(d_logits, p.gate);
  const Matrix d_text_proj = matmul(d_scores, c.img_proj);
  const Matrix d_img_proj = matmul_tn(d_scores, c.text_proj);
  add_inplace(grads.text_coatt, matmul_tn(text_edges, d_text_proj));
  add_inplace(grads.img_coatt, matmul_tn(img_edges, d_img_proj));
  return {matmul_nt(d_text_proj, p.text_coatt), matmul_nt(d_img_proj, p.img_coatt)};
}

GateFusionParams GateFusionParams::init(std::size_t d_m, std::size_t d, SplitMix64& rng) {
  GateFusionParams p;
  p.proj_z = xavier_init(d_m * d_m, d, rng);
  p.gate_text = xavier_init(d, d, rng);
  p.gate_z = xavier_init(d, d, rng);
  p.gate_bias = Vector(d, 0.0);
  return p;
}

void GateFusionParams::validate() const {
  const std::size_t d = proj_z.cols();
  require_shape(gate_text, d, d, "gate_text");
  require_shape(gate_z, d, d, "gate_z");
  if (gate_bias.size() != d) throw ShapeError("gate_bias must have length " + std::to_string(d));
}

Matrix gate_fuse(const Matrix& text, const Matrix& z, const GateFusionParams& p, GateCache* cache) {
  p.validate();
  const std::size_t d = p.proj_z.cols();
  if (z.size() != p.proj_z.rows()) {
    throw ShapeError("gate_fuse: z_m " + z.shape_string() + " does not flatten to " +
                     std::to_string(p.proj_z.rows()));
  }
  if (text.cols() != d) {
    throw ShapeError("gate_fuse: text width " + std::to_string(text.cols()) + " != " +
                     std::to_string(d));
  }
  GateCache local;
  GateCache& c = cache ? *cache : local;
  c.text = text;
  c.z_flat = Matrix::row_vector(z.values());
  c.z_rows = z.rows();
  c.z_cols = z.cols();
  c.z_proj = matmul(c.z_flat, p.proj_z);
  const Matrix z_gate = matmul(c.z_proj, p.gate_z);
  c.gate = matmul(text, p.gate_text);
  Matrix out(text.rows(), d);
  for (std::size_t r = 0; r < text.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double lambda = logistic(c.gate(r, j) + z_gate(0, j) + p.gate_bias[j]);
      c.gate(r, j) = lambda;
      out(r, j) = (1.0 - lambda) * text(r, j) + lambda * c.z_proj(0, j);
    }
  }
  return out;
}

GateGradients gate_fuse_backward(const Matrix& grad_out, const GateFusionParams& p,
                                 const GateCache& c, GateFusionParams& grads) {
  const std::size_t d = p.proj_z.cols();
  if (grad_out.rows() != c.text.rows() || grad_out.cols() != d || c.gate.rows() != c.text.rows()) {
    throw CacheError("gate_fuse_backward: gradient " + grad_out.shape_string() +
                     " does not match cached forward");
  }
  const std::size_t rows = c.text.rows();
  Matrix d_text(rows, d);
  Matrix d_pre(rows, d);
  Matrix d_z_proj(1, d);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double lambda = c.gate(r, j);
      const double g = grad_out(r, j);
      d_text(r, j) = g * (1.0 - lambda);
      d_z_proj(0, j) += g * lambda;
      d_pre(r, j) = g * (c.z_proj(0, j) - c.text(r, j)) * lambda * (1.0 - lambda);
    }
  }
  const Vector d_pre_sum = column_sums(d_pre);
  add_inplace(std::span(grads.gate_bias), std::span<const double>(d_pre_sum));
  add_inplace(grads.gate_text, matmul_tn(c.text, d_pre));
  add_inplace(d_text, matmul_nt(d_pre, p.gate_text));

  const Matrix d_z_gate = Matrix::row_vector(d_pre_sum);
  add_inplace(grads.gate_z, matmul_tn(c.z_proj, d_z_gate));
  add_inplace(d_z_proj, matmul_nt(d_z_gate, p.gate_z));

  add_inplace(grads.proj_z, matmul_tn(c.z_flat, d_z_proj));
  const Matrix d_z_flat = matmul_nt(d_z_proj, p.proj_z);
  Matrix d_z(c.z_rows, c.z_cols,
             std::vector<double>(d_z_flat.values().begin(), d_z_flat.values().end()));
  return {std::move(d_text), std::move(d_z)};
}

}  // namespace hotkit
