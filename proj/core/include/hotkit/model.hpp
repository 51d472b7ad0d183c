#pragma once

#include <cstddef>
#include <string>

#include "hotkit/allset.hpp"
#include "hotkit/fusion.hpp"
#include "hotkit/gradcheck.hpp"
#include "hotkit/hypergraph.hpp"

namespace hotkit {

struct ModelDims {
  std::size_t d = 32;
  std::size_t d_c = 32;
  std::size_t d_m = 32;
  std::size_t heads = 4;
  std::size_t layers = 1;
  std::size_t n_text = 8;  // text hyperedges
  std::size_t n_img = 8;   // image hyperedges (k-means m)
  bool share_encoder_blocks = false;

  void validate() const;
};

/// Everything learned on the representation path: one AllSet encoder per
/// modality, co-attention, and the gate.
struct HotModelParams {
  EncoderParams text_encoder;
  EncoderParams image_encoder;
  CoAttentionParams coattention;
  GateFusionParams gate;

  static HotModelParams init(const ModelDims& dims, SplitMix64& rng);
  static HotModelParams zeros_like(const HotModelParams& p);
};

template <ParamsOf<HotModelParams> Self, class F>
void for_each_tensor(Self& p, F&& f, const std::string& prefix = {}) {
  for_each_tensor(p.text_encoder, f, prefix + "text_encoder.");
  for_each_tensor(p.image_encoder, f, prefix + "image_encoder.");
  for_each_tensor(p.coattention, f, prefix + "coattention.");
  for_each_tensor(p.gate, f, prefix + "gate.");
}

struct StackInputs {
  const Matrix& text_nodes;     // X, |𝒱_text| × d
  const Hypergraph& text_graph;
  const Matrix& patches;        // P, p × d
  const Hypergraph& image_graph;
  const Matrix& text_sequence;  // H_text, seq × d
};

struct StackOutputs {
  EncodeResult text;
  EncodeResult image;
  Matrix attention;  // A
  Matrix z;          // z_m
  Matrix fused;      // gate_fuse(H_text, z_m)
};

struct StackCache {
  EncodeCache text;
  EncodeCache image;
  CoAttentionCache coattention;
  FuseCache fuse;
  GateCache gate;
};

StackOutputs forward_stack(const StackInputs& in, const HotModelParams& p,
                           StackCache* cache = nullptr);

struct StackGradients {
  HotModelParams params;
  Matrix grad_text_nodes;
  Matrix grad_patches;
  Matrix grad_text_sequence;
};

StackGradients backward_stack(const Matrix& grad_fused, const StackOutputs& out,
                              const HotModelParams& p, const StackCache& cache);

ReluSignature relu_signature(const StackCache& cache);

}  // namespace hotkit
