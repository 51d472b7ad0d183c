#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hotkit/gradcheck.hpp"
#include "hotkit/hypergraph.hpp"
#include "hotkit/numerics.hpp"

namespace hotkit {

/// Parameters of one AllSet Transformer multiset function
///
///   f(S) = LN₂(Y + MLP(Y)),   Y = LN₁(θ + ‖ᵢ σ(θ⁽ⁱ⁾ K⁽ⁱ⁾ᵀ) V⁽ⁱ⁾)
///   K⁽ⁱ⁾ = MLP^{K,i}(S),      V⁽ⁱ⁾ = MLP^{V,i}(S)
///
/// with σ the softmax over the |S| set elements and θ = ‖ᵢ θ⁽ⁱ⁾ a learned
/// 1 × (h·d_h) seed. The model width d is h·d_h.
struct AllSetBlockParams {
  std::size_t heads = 0;
  std::size_t head_dim = 0;
  Matrix theta;                       // 1 × d
  std::vector<MlpParams> key_mlps;    // d → d → d_h, one per head
  std::vector<MlpParams> value_mlps;  // d → d → d_h, one per head
  MlpParams out_mlp;                  // d → d → d
  LayerNormParams ln1;
  LayerNormParams ln2;

  [[nodiscard]] std::size_t dim() const noexcept { return heads * head_dim; }

  /// Xavier weights, zero biases, identity layer norms. Throws unless
  /// heads divides d.
  static AllSetBlockParams init(std::size_t d, std::size_t heads, SplitMix64& rng);
  static AllSetBlockParams zeros_like(const AllSetBlockParams& p);
  void validate() const;
};

template <ParamsOf<AllSetBlockParams> Self, class F>
void for_each_tensor(Self& p, F&& f, const std::string& prefix = {}) {
  f(prefix + "theta", p.theta.values());
  for (std::size_t i = 0; i < p.heads; ++i) {
    for_each_tensor(p.key_mlps[i], f, prefix + "key" + std::to_string(i) + ".");
    for_each_tensor(p.value_mlps[i], f, prefix + "value" + std::to_string(i) + ".");
  }
  for_each_tensor(p.out_mlp, f, prefix + "out.");
  for_each_tensor(p.ln1, f, prefix + "ln1.");
  for_each_tensor(p.ln2, f, prefix + "ln2.");
}

struct PoolCache {
  std::vector<MlpCache> key_caches;
  std::vector<MlpCache> value_caches;
  std::vector<Matrix> keys;    // |S| × d_h per head
  std::vector<Matrix> values;  // |S| × d_h per head
  std::vector<Vector> weights;  // attention over the |S| elements, per head
  LayerNormCache ln1;
  Vector y;
  MlpCache out_cache;
  LayerNormCache ln2;
};

/// f(S) for S given as |S| × d rows. Rows are multiset elements: the result
/// is invariant to row order but not to duplication.
Vector multiset_pool(const Matrix& set, const AllSetBlockParams& p, PoolCache* cache = nullptr);

/// Returns ∂L/∂S; accumulates parameter gradients into `grads`.
Matrix multiset_pool_backward(std::span<const double> grad_out, const AllSetBlockParams& p,
                              const PoolCache& cache, AllSetBlockParams& grads);

struct NodeToEdgeCache {
  std::size_t num_vertices = 0;
  std::vector<std::vector<std::size_t>> members;  // deduplicated, ascending
  std::vector<PoolCache> pools;
};

/// Row j = f over the rows of X belonging to hyperedge j.
Matrix node_to_edge(const Matrix& nodes, const Hypergraph& h, const AllSetBlockParams& p,
                    NodeToEdgeCache* cache = nullptr);

Matrix node_to_edge_backward(const Matrix& grad_edges, const AllSetBlockParams& p,
                             const NodeToEdgeCache& cache, AllSetBlockParams& grads);

enum class IsolatedVertexPolicy { keep_previous };

struct EdgeToNodeCache {
  std::size_t num_edges = 0;
  std::vector<std::vector<std::size_t>> stars;
  std::vector<PoolCache> pools;  // empty entry for isolated vertices
  std::vector<VertexId> isolated;
};

/// Row v = f over the rows of E for edges containing v. A vertex in no edge
/// keeps its row of `previous`.
Matrix edge_to_node(const Matrix& edges, const Hypergraph& h, const Matrix& previous,
                    const AllSetBlockParams& p, EdgeToNodeCache* cache = nullptr);

struct EdgeToNodeGradients {
  Matrix grad_edges;
  Matrix grad_previous;
};

EdgeToNodeGradients edge_to_node_backward(const Matrix& grad_nodes, const AllSetBlockParams& p,
                                          const EdgeToNodeCache& cache,
                                          AllSetBlockParams& grads);

struct EncoderConfig {
  std::size_t num_layers = 1;
  /// One block serves both directions instead of separate V→E and E→V blocks.
  bool share_parameters = false;
  IsolatedVertexPolicy isolated_vertex_policy = IsolatedVertexPolicy::keep_previous;
};

struct EncoderLayerParams {
  AllSetBlockParams node_to_edge;
  AllSetBlockParams edge_to_node;  // unused when shared
};

struct EncoderParams {
  bool shared = false;
  std::vector<EncoderLayerParams> layers;

  static EncoderParams init(const EncoderConfig& cfg, std::size_t d, std::size_t heads,
                            SplitMix64& rng);
  static EncoderParams zeros_like(const EncoderParams& p);

  [[nodiscard]] const AllSetBlockParams& v2e(std::size_t layer) const {
    return layers[layer].node_to_edge;
  }
  [[nodiscard]] const AllSetBlockParams& e2v(std::size_t layer) const {
    return shared ? layers[layer].node_to_edge : layers[layer].edge_to_node;
  }
  AllSetBlockParams& e2v(std::size_t layer) {
    return shared ? layers[layer].node_to_edge : layers[layer].edge_to_node;
  }
  [[nodiscard]] std::size_t dim() const { return layers.front().node_to_edge.dim(); }
};

template <ParamsOf<EncoderParams> Self, class F>
void for_each_tensor(Self& p, F&& f, const std::string& prefix = {}) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const std::string base = prefix + "layer" + std::to_string(l) + ".";
    for_each_tensor(p.layers[l].node_to_edge, f, base + "v2e.");
    if (!p.shared) for_each_tensor(p.layers[l].edge_to_node, f, base + "e2v.");
  }
}

struct EncodeCache {
  std::vector<NodeToEdgeCache> node_to_edge;
  std::vector<EdgeToNodeCache> edge_to_node;
};

struct EncodeResult {
  Matrix nodes;  // X_L, |𝒱| × d
  Matrix edges;  // E_L, |ℰ| × d
  std::size_t isolated_vertices = 0;
};

/// L rounds of node_to_edge followed by edge_to_node.
EncodeResult encode(const Matrix& x0, const Hypergraph& h, const EncoderParams& p,
                    EncodeCache* cache = nullptr);

struct EncodeGradients {
  EncoderParams params;
  Matrix grad_input;
};

/// Either upstream gradient may be an empty (0×0) matrix, meaning zero.
EncodeGradients encode_backward(const Matrix& grad_nodes, const Matrix& grad_edges,
                                const EncoderParams& p, const EncodeCache& cache);

void add_relu_signature(ReluSignature& sig, const PoolCache& cache);
void add_relu_signature(ReluSignature& sig, const EncodeCache& cache);

}  // namespace hotkit
