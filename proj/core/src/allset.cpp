#include "hotkit/allset.hpp"

#include <stdexcept>

namespace hotkit {

AllSetBlockParams AllSetBlockParams::init(std::size_t d, std::size_t heads, SplitMix64& rng) {
  if (heads == 0 || d == 0 || d % heads != 0) {
    throw std::invalid_argument("allset: heads (" + std::to_string(heads) +
                                ") must divide model dim (" + std::to_string(d) + ")");
  }
  AllSetBlockParams p;
  p.heads = heads;
  p.head_dim = d / heads;
  p.theta = xavier_init(1, d, rng);
  for (std::size_t i = 0; i < heads; ++i) {
    p.key_mlps.push_back(MlpParams::xavier(d, d, p.head_dim, rng));
    p.value_mlps.push_back(MlpParams::xavier(d, d, p.head_dim, rng));
  }
  p.out_mlp = MlpParams::xavier(d, d, d, rng);
  p.ln1 = LayerNormParams::identity(d);
  p.ln2 = LayerNormParams::identity(d);
  return p;
}

AllSetBlockParams AllSetBlockParams::zeros_like(const AllSetBlockParams& p) {
  AllSetBlockParams z = p;
  zero_parameters(z);
  return z;
}

void AllSetBlockParams::validate() const {
  const std::size_t d = dim();
  if (d == 0) throw ShapeError("allset: empty block");
  if (theta.rows() != 1 || theta.cols() != d) {
    throw ShapeError("allset: theta must be 1x" + std::to_string(d) + ", got " +
                     theta.shape_string());
  }
  if (key_mlps.size() != heads || value_mlps.size() != heads) {
    throw ShapeError("allset: expected one key/value MLP per head");
  }
  for (std::size_t i = 0; i < heads; ++i) {
    for (const MlpParams* m : {&key_mlps[i], &value_mlps[i]}) {
      m->validate();
      if (m->d_in() != d || m->d_out() != head_dim) {
        throw ShapeError("allset: head MLP must map " + std::to_string(d) + " -> " +
                         std::to_string(head_dim));
      }
    }
  }
  out_mlp.validate();
  if (out_mlp.d_in() != d || out_mlp.d_out() != d) throw ShapeError("allset: output MLP must be d -> d");
  if (ln1.gamma.size() != d || ln1.beta.size() != d || ln2.gamma.size() != d ||
      ln2.beta.size() != d) {
    throw ShapeError("allset: layer norm width must equal d");
  }
}

Vector multiset_pool(const Matrix& set, const AllSetBlockParams& p, PoolCache* cache) {
  p.validate();
  const std::size_t n = set.rows();
  const std::size_t d = p.dim();
  const std::size_t dh = p.head_dim;
  if (n == 0) throw std::invalid_argument("multiset_pool: empty multiset");
  if (set.cols() != d) {
    throw ShapeError("multiset_pool: set rows have width " + std::to_string(set.cols()) +
                     ", model dim is " + std::to_string(d));
  }

  PoolCache local;
  PoolCache& c = cache ? *cache : local;
  c.key_caches.assign(p.heads, {});
  c.value_caches.assign(p.heads, {});
  c.keys.assign(p.heads, {});
  c.values.assign(p.heads, {});
  c.weights.assign(p.heads, {});

  Vector pre1(p.theta.values().begin(), p.theta.values().end());
  for (std::size_t i = 0; i < p.heads; ++i) {
    c.keys[i] = mlp_forward(set, p.key_mlps[i], &c.key_caches[i]);
    c.values[i] = mlp_forward(set, p.value_mlps[i], &c.value_caches[i]);
    Matrix logits(1, n);
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dh; ++k) acc += p.theta(0, i * dh + k) * c.keys[i](j, k);
      logits(0, j) = acc;
    }
    const Matrix w = row_softmax(logits);
    c.weights[i].assign(w.values().begin(), w.values().end());
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < dh; ++k) pre1[i * dh + k] += c.weights[i][j] * c.values[i](j, k);
  }

  c.y = layer_norm(pre1, p.ln1.gamma, p.ln1.beta, kLayerNormEps, &c.ln1);
  const Matrix mlp_out = mlp_forward(Matrix::row_vector(c.y), p.out_mlp, &c.out_cache);
  Vector pre2 = c.y;
  add_inplace(std::span(pre2), mlp_out.row(0));
  return layer_norm(pre2, p.ln2.gamma, p.ln2.beta, kLayerNormEps, &c.ln2);
}

Matrix multiset_pool_backward(std::span<const double> grad_out, const AllSetBlockParams& p,
                              const PoolCache& c, AllSetBlockParams& grads) {
  const std::size_t d = p.dim();
  const std::size_t dh = p.head_dim;
  if (grad_out.size() != d || c.keys.size() != p.heads || c.y.size() != d) {
    throw CacheError("multiset_pool_backward: cache does not match parameters");
  }
  const std::size_t n = c.keys.front().rows();

  const Vector d_pre2 = layer_norm_backward(grad_out, c.ln2, p.ln2.gamma, grads.ln2);
  Vector d_y = d_pre2;
  const Matrix d_y_mlp =
      mlp_backward(Matrix::row_vector(d_pre2), p.out_mlp, c.out_cache, grads.out_mlp);
  add_inplace(std::span(d_y), d_y_mlp.row(0));
  const Vector d_pre1 = layer_norm_backward(d_y, c.ln1, p.ln1.gamma, grads.ln1);

  // θ enters directly through the residual and per head through the logits.
  add_inplace(grads.theta.values(), std::span<const double>(d_pre1));

  Matrix d_set(n, d);
  for (std::size_t i = 0; i < p.heads; ++i) {
    const Matrix& keys = c.keys[i];
    const Matrix& values = c.values[i];
    const Vector& w = c.weights[i];

    Matrix d_values(n, dh);
    Matrix d_weights(1, n);
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < dh; ++k) {
        const double g = d_pre1[i * dh + k];
        d_values(j, k) = w[j] * g;
        acc += g * values(j, k);
      }
      d_weights(0, j) = acc;
    }
    const Matrix d_logits = row_softmax_backward(Matrix::row_vector(w), d_weights);

    Matrix d_keys(n, dh);
    for (std::size_t j = 0; j < n; ++j) {
      const double g = d_logits(0, j);
      for (std::size_t k = 0; k < dh; ++k) {
        grads.theta(0, i * dh + k) += g * keys(j, k);
        d_keys(j, k) = g * p.theta(0, i * dh + k);
      }
    }
    add_inplace(d_set, mlp_backward(d_keys, p.key_mlps[i], c.key_caches[i], grads.key_mlps[i]));
    add_inplace(d_set,
                mlp_backward(d_values, p.value_mlps[i], c.value_caches[i], grads.value_mlps[i]));
  }
  return d_set;
}

Matrix node_to_edge(const Matrix& nodes, const Hypergraph& h, const AllSetBlockParams& p,
                    NodeToEdgeCache* cache) {
  require_encodable(h);
  if (nodes.rows() != h.num_vertices) {
    throw ShapeError("node_to_edge: " + std::to_string(nodes.rows()) + " node rows for " +
                     std::to_string(h.num_vertices) + " vertices");
  }
  Matrix out(h.num_edges(), p.dim());
  if (cache) {
    cache->num_vertices = h.num_vertices;
    cache->members.assign(h.num_edges(), {});
    cache->pools.assign(h.num_edges(), {});
  }
  for (std::size_t e = 0; e < h.num_edges(); ++e) {
    const auto set = h.edges[e].member_set();
    std::vector<std::size_t> rows(set.begin(), set.end());
    const Vector pooled =
        multiset_pool(gather_rows(nodes, rows), p, cache ? &cache->pools[e] : nullptr);
    std::copy(pooled.begin(), pooled.end(), out.row(e).begin());
    if (cache) cache->members[e] = std::move(rows);
  }
  return out;
}

Matrix node_to_edge_backward(const Matrix& grad_edges, const AllSetBlockParams& p,
                             const NodeToEdgeCache& cache, AllSetBlockParams& grads) {
  if (grad_edges.rows() != cache.members.size() || grad_edges.cols() != p.dim()) {
    throw CacheError("node_to_edge_backward: gradient " + grad_edges.shape_string() +
                     " does not match cached forward");
  }
  Matrix d_nodes(cache.num_vertices, p.dim());
  for (std::size_t e = 0; e < cache.members.size(); ++e) {
    const Matrix d_set = multiset_pool_backward(grad_edges.row(e), p, cache.pools[e], grads);
    for (std::size_t r = 0; r < cache.members[e].size(); ++r)
      add_inplace(d_nodes.row(cache.members[e][r]), d_set.row(r));
  }
  return d_nodes;
}

Matrix edge_to_node(const Matrix& edges, const Hypergraph& h, const Matrix& previous,
                    const AllSetBlockParams& p, EdgeToNodeCache* cache) {
  if (edges.rows() != h.num_edges()) {
    throw ShapeError("edge_to_node: " + std::to_string(edges.rows()) + " edge rows for " +
                     std::to_string(h.num_edges()) + " hyperedges");
  }
  if (previous.rows() != h.num_vertices || previous.cols() != p.dim()) {
    throw ShapeError("edge_to_node: previous node matrix is " + previous.shape_string());
  }
  auto stars = vertex_stars(h);
  Matrix out(h.num_vertices, p.dim());
  std::vector<PoolCache> pools(cache ? h.num_vertices : 0);
  std::vector<VertexId> isolated;
  for (std::size_t v = 0; v < h.num_vertices; ++v) {
    if (stars[v].empty()) {
      isolated.push_back(static_cast<VertexId>(v));
      auto src = previous.row(v);
      std::copy(src.begin(), src.end(), out.row(v).begin());
      continue;
    }
    const Vector pooled =
        multiset_pool(gather_rows(edges, stars[v]), p, cache ? &pools[v] : nullptr);
    std::copy(pooled.begin(), pooled.end(), out.row(v).begin());
  }
  if (cache) {
    cache->num_edges = h.num_edges();
    cache->stars = std::move(stars);
    cache->pools = std::move(pools);
    cache->isolated = std::move(isolated);
  }
  return out;
}

EdgeToNodeGradients edge_to_node_backward(const Matrix& grad_nodes, const AllSetBlockParams& p,
                                          const EdgeToNodeCache& cache,
                                          AllSetBlockParams& grads) {
  if (grad_nodes.rows() != cache.stars.size() || grad_nodes.cols() != p.dim()) {
    throw CacheError("edge_to_node_backward: gradient " + grad_nodes.shape_string() +
                     " does not match cached forward");
  }
  EdgeToNodeGradients g{Matrix(cache.num_edges, p.dim()), Matrix(cache.stars.size(), p.dim())};
  for (std::size_t v = 0; v < cache.stars.size(); ++v) {
    const auto& star = cache.stars[v];
    if (star.empty()) {
      add_inplace(g.grad_previous.row(v), grad_nodes.row(v));
      continue;
    }
    const Matrix d_set = multiset_pool_backward(grad_nodes.row(v), p, cache.pools[v], grads);
    for (std::size_t r = 0; r < star.size(); ++r) add_inplace(g.grad_edges.row(star[r]), d_set.row(r));
  }
  return g;
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, std::size_t d, std::size_t heads,
                                  SplitMix64& rng) {
  if (cfg.num_layers < 1) throw std::invalid_argument("encoder: num_layers must be >= 1");
  EncoderParams p;
  p.shared = cfg.share_parameters;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    EncoderLayerParams layer;
    layer.node_to_edge = AllSetBlockParams::init(d, heads, rng);
    if (!p.shared) layer.edge_to_node = AllSetBlockParams::init(d, heads, rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

EncoderParams EncoderParams::zeros_like(const EncoderParams& p) {
  EncoderParams z = p;
  zero_parameters(z);
  return z;
}

EncodeResult encode(const Matrix& x0, const Hypergraph& h, const EncoderParams& p,
                    EncodeCache* cache) {
  if (p.layers.empty()) throw std::invalid_argument("encode: no layers");
  if (x0.cols() != p.dim()) {
    throw ShapeError("encode: input width " + std::to_string(x0.cols()) + " != model dim " +
                     std::to_string(p.dim()));
  }
  if (cache) {
    cache->node_to_edge.assign(p.layers.size(), {});
    cache->edge_to_node.assign(p.layers.size(), {});
  }
  EncodeResult r;
  r.nodes = x0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    r.edges = node_to_edge(r.nodes, h, p.v2e(l), cache ? &cache->node_to_edge[l] : nullptr);
    EdgeToNodeCache local;
    EdgeToNodeCache& e2n = cache ? cache->edge_to_node[l] : local;
    r.nodes = edge_to_node(r.edges, h, r.nodes, p.e2v(l), &e2n);
    r.isolated_vertices = e2n.isolated.size();
  }
  return r;
}

EncodeGradients encode_backward(const Matrix& grad_nodes, const Matrix& grad_edges,
                                const EncoderParams& p, const EncodeCache& cache) {
  const std::size_t layers = p.layers.size();
  if (cache.node_to_edge.size() != layers || cache.edge_to_node.size() != layers) {
    throw CacheError("encode_backward: cache has a different layer count");
  }
  const std::size_t d = p.dim();
  const std::size_t num_vertices = cache.node_to_edge.back().num_vertices;
  const std::size_t num_edges = cache.node_to_edge.back().members.size();

  EncodeGradients g{EncoderParams::zeros_like(p), Matrix()};
  Matrix d_nodes = grad_nodes.empty() ? Matrix(num_vertices, d) : grad_nodes;
  Matrix d_edges_top = grad_edges.empty() ? Matrix(num_edges, d) : grad_edges;
  if (d_nodes.rows() != num_vertices || d_nodes.cols() != d) {
    throw CacheError("encode_backward: node gradient " + d_nodes.shape_string() +
                     " does not match cached forward");
  }
  if (d_edges_top.rows() != num_edges || d_edges_top.cols() != d) {
    throw CacheError("encode_backward: edge gradient " + d_edges_top.shape_string() +
                     " does not match cached forward");
  }

  for (std::size_t l = layers; l-- > 0;) {
    auto e2n = edge_to_node_backward(d_nodes, p.e2v(l), cache.edge_to_node[l], g.params.e2v(l));
    if (l + 1 == layers) add_inplace(e2n.grad_edges, d_edges_top);
    Matrix d_prev = node_to_edge_backward(e2n.grad_edges, p.v2e(l), cache.node_to_edge[l],
                                          g.params.layers[l].node_to_edge);
    add_inplace(d_prev, e2n.grad_previous);
    d_nodes = std::move(d_prev);
  }
  g.grad_input = std::move(d_nodes);
  return g;
}

void add_relu_signature(ReluSignature& sig, const PoolCache& cache) {
  for (const auto& c : cache.key_caches) sig.add(c);
  for (const auto& c : cache.value_caches) sig.add(c);
  if (!cache.y.empty()) sig.add(cache.out_cache);
}

void add_relu_signature(ReluSignature& sig, const EncodeCache& cache) {
  for (const auto& layer : cache.node_to_edge)
    for (const auto& pool : layer.pools) add_relu_signature(sig, pool);
  for (const auto& layer : cache.edge_to_node)
    for (const auto& pool : layer.pools) add_relu_signature(sig, pool);
}

}  // namespace hotkit
