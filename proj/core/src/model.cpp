#include "hotkit/model.hpp"

#include <stdexcept>

namespace hotkit {

void ModelDims::validate() const {
  if (d == 0 || d_c == 0 || d_m == 0) throw std::invalid_argument("model dims must be >= 1");
  if (heads == 0 || d % heads != 0) {
    throw std::invalid_argument("heads (" + std::to_string(heads) + ") must divide d (" +
                                std::to_string(d) + ")");
  }
  if (layers < 1) throw std::invalid_argument("layers must be >= 1");
  if (n_text < 1 || n_img < 1) throw std::invalid_argument("hyperedge counts must be >= 1");
}

HotModelParams HotModelParams::init(const ModelDims& dims, SplitMix64& rng) {
  dims.validate();
  const EncoderConfig enc{dims.layers, dims.share_encoder_blocks,
                          IsolatedVertexPolicy::keep_previous};
  HotModelParams p;
  p.text_encoder = EncoderParams::init(enc, dims.d, dims.heads, rng);
  p.image_encoder = EncoderParams::init(enc, dims.d, dims.heads, rng);
  p.coattention = CoAttentionParams::init(dims.n_text, dims.n_img, dims.d, dims.d_c, dims.d_m, rng);
  p.gate = GateFusionParams::init(dims.d_m, dims.d, rng);
  return p;
}

HotModelParams HotModelParams::zeros_like(const HotModelParams& p) {
  HotModelParams z = p;
  zero_parameters(z);
  return z;
}

StackOutputs forward_stack(const StackInputs& in, const HotModelParams& p, StackCache* cache) {
  StackOutputs out;
  out.text = encode(in.text_nodes, in.text_graph, p.text_encoder, cache ? &cache->text : nullptr);
  out.image = encode(in.patches, in.image_graph, p.image_encoder, cache ? &cache->image : nullptr);
  out.attention = coattention(out.text.edges, out.image.edges, p.coattention,
                              cache ? &cache->coattention : nullptr);
  out.z = fuse(out.text.edges, out.image.edges, out.attention, p.coattention,
               cache ? &cache->fuse : nullptr);
  out.fused = gate_fuse(in.text_sequence, out.z, p.gate, cache ? &cache->gate : nullptr);
  return out;
}

StackGradients backward_stack(const Matrix& grad_fused, const StackOutputs& out,
                              const HotModelParams& p, const StackCache& cache) {
  StackGradients g;
  g.params = HotModelParams::zeros_like(p);

  GateGradients gate = gate_fuse_backward(grad_fused, p.gate, cache.gate, g.params.gate);
  g.grad_text_sequence = std::move(gate.grad_text);

  FuseGradients fused = fuse_backward(gate.grad_z, out.text.edges, out.image.edges, out.attention,
                                      p.coattention, cache.fuse, g.params.coattention);
  CoAttentionGradients att =
      coattention_backward(fused.grad_attention, out.text.edges, out.image.edges, p.coattention,
                           cache.coattention, g.params.coattention);
  add_inplace(fused.grad_text_edges, att.grad_text_edges);
  add_inplace(fused.grad_img_edges, att.grad_img_edges);

  EncodeGradients text = encode_backward(Matrix(), fused.grad_text_edges, p.text_encoder, cache.text);
  EncodeGradients image =
      encode_backward(Matrix(), fused.grad_img_edges, p.image_encoder, cache.image);
  g.params.text_encoder = std::move(text.params);
  g.params.image_encoder = std::move(image.params);
  g.grad_text_nodes = std::move(text.grad_input);
  g.grad_patches = std::move(image.grad_input);
  return g;
}

ReluSignature relu_signature(const StackCache& cache) {
  ReluSignature sig;
  add_relu_signature(sig, cache.text);
  add_relu_signature(sig, cache.image);
  return sig;
}

}  // namespace hotkit
