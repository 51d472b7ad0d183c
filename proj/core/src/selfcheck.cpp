#include "hotkit/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <utility>

#include "hotkit/io.hpp"
#include "hotkit/textual_hot.hpp"
#include "hotkit/visual_hot.hpp"

namespace hotkit {

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

template <class P>
void jitter(P& p, SplitMix64& rng, double scale) {
  for_each_tensor(p, [&](const std::string&, std::span<double> t) {
    for (double& v : t) v += scale * rng.normal();
  });
}

/// `edges` hyperedges of 1..3 distinct members over `vertices` vertices.
Hypergraph random_hypergraph(std::size_t vertices, std::size_t edges, SplitMix64& rng) {
  Hypergraph h;
  h.num_vertices = vertices;
  std::vector<VertexId> order(vertices);
  for (std::size_t v = 0; v < vertices; ++v) order[v] = static_cast<VertexId>(v);
  for (std::size_t e = 0; e < edges; ++e) {
    rng.shuffle(order);
    const std::size_t size = 1 + rng.choice(std::min<std::size_t>(3, vertices));
    Hyperedge edge;
    edge.members.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(size));
    h.edges.push_back(std::move(edge));
  }
  return h;
}

std::string format(const char* fmt, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

std::string describe(const GradCheckReport& r) {
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "%zu coords, %zu kink-excluded, max rel err %.3g (coord %zu: analytic %.6g, numeric %.6g)",
                r.checked, r.excluded, r.max_relative_error, r.worst_index, r.worst_analytic,
                r.worst_numeric);
  return buf;
}

CheckResult permutation_invariance(SplitMix64& rng) {
  constexpr std::size_t d = 16;
  const AllSetBlockParams p = AllSetBlockParams::init(d, 4, rng);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.choice(10);
    const Matrix set = random_matrix(n, d, rng);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    const Vector a = multiset_pool(set, p);
    const Vector b = multiset_pool(gather_rows(set, perm), p);
    for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
  }
  return {"multiset_pool permutation invariance", worst <= 1e-12,
          format("50 sets, max |diff| %.3g", worst)};
}

CheckResult pool_weights_are_distributions(SplitMix64& rng) {
  constexpr std::size_t d = 16;
  const AllSetBlockParams p = AllSetBlockParams::init(d, 4, rng);
  double worst = 0.0;
  bool nonnegative = true;
  for (int trial = 0; trial < 50; ++trial) {
    PoolCache cache;
    multiset_pool(random_matrix(1 + rng.choice(10), d, rng), p, &cache);
    for (const Vector& w : cache.weights) {
      double sum = 0.0;
      for (double x : w) {
        sum += x;
        nonnegative = nonnegative && x >= 0.0;
      }
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  return {"pooling attention weights sum to 1", worst <= 1e-9 && nonnegative,
          format("max |sum - 1| %.3g", worst)};
}

CheckResult coattention_row_stochastic(SplitMix64& rng) {
  constexpr std::size_t d = 8;
  double worst = 0.0;
  double min_entry = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t nt = 1 + rng.choice(8);
    const std::size_t ni = 1 + rng.choice(8);
    CoAttentionParams p = CoAttentionParams::init(nt, ni, d, d, 4, rng);
    p.gate = random_matrix(nt, ni, rng, 2.0);
    const Matrix a = coattention(random_matrix(nt, d, rng), random_matrix(ni, d, rng), p);
    for (std::size_t r = 0; r < nt; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < ni; ++c) {
        sum += a(r, c);
        min_entry = std::min(min_entry, a(r, c));
      }
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  return {"co-attention rows stochastic", worst <= 1e-9 && min_entry >= 0.0,
          format("100 pairs, max |row sum - 1| %.3g, min entry %.3g", worst, min_entry)};
}

/// Minimum SSE over every split of the rows into two nonempty clusters.
double best_two_partition(const Matrix& x) {
  const std::size_t p = x.rows();
  double best = std::numeric_limits<double>::infinity();
  // Row 0 always sits in cluster 0; the mask picks cluster-1 rows among the rest.
  for (std::uint32_t mask = 1; mask < (1u << (p - 1)); ++mask) {
    double sse = 0.0;
    for (int cluster = 0; cluster < 2; ++cluster) {
      Vector mean(x.cols(), 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < p; ++i) {
        const bool in1 = i > 0 && ((mask >> (i - 1)) & 1u);
        if (in1 != (cluster == 1)) continue;
        ++count;
        for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += x(i, c);
      }
      for (double& v : mean) v /= static_cast<double>(count);
      for (std::size_t i = 0; i < p; ++i) {
        const bool in1 = i > 0 && ((mask >> (i - 1)) & 1u);
        if (in1 != (cluster == 1)) continue;
        for (std::size_t c = 0; c < x.cols(); ++c) sse += (x(i, c) - mean[c]) * (x(i, c) - mean[c]);
      }
    }
    best = std::min(best, sse);
  }
  return best;
}

CheckResult kmeans_matches_brute_force(SplitMix64& rng) {
  std::size_t optimal = 0;
  bool monotone = true;
  for (int instance = 0; instance < 10; ++instance) {
    const std::size_t p = 2 + rng.choice(7);
    const Matrix x = random_matrix(p, 2, rng);
    const KMeansResult r = kmeans(x, KMeansConfig{2, 100, 0.0, rng.next()});
    if (std::abs(r.objective - best_two_partition(x)) <= 1e-9) ++optimal;
    const auto& t = r.objective_trace;
    for (std::size_t i = 1; i < t.size(); ++i) monotone = monotone && t[i] <= t[i - 1] + 1e-12;
  }
  return {"k-means reaches exhaustive optimum", optimal >= 8 && monotone,
          std::to_string(optimal) + "/10 optimal, trace " + (monotone ? "monotone" : "NOT monotone")};
}

CheckResult walk_validity(SplitMix64& rng) {
  constexpr std::size_t kVertices = 50;
  ThoughtGraph g;
  for (std::size_t v = 0; v < kVertices; ++v) g.thoughts.push_back("v" + std::to_string(v));
  for (int t = 0; t < 120; ++t) {
    g.triples.push_back({static_cast<VertexId>(rng.choice(kVertices)), "r" + std::to_string(t % 5),
                         static_cast<VertexId>(rng.choice(kVertices))});
  }
  std::set<std::pair<VertexId, VertexId>> adjacency;
  std::vector<bool> has_out(kVertices, false);
  for (const Triple& t : g.triples) {
    adjacency.insert({t.head, t.tail});
    has_out[t.head] = true;
  }

  std::size_t bad = 0;
  std::size_t walks = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto start = static_cast<VertexId>(rng.choice(kVertices));
    const std::size_t k = 1 + rng.choice(4);
    const auto walk = random_walk(g, start, k, rng);
    if (!walk) {
      bad += has_out[start] ? 1 : 0;
      continue;
    }
    ++walks;
    bool ok = walk->vertices.front() == start && walk->hops() >= 1 && walk->hops() <= k &&
              walk->vertices.size() == walk->hops() + 1;
    for (std::size_t h = 0; ok && h < walk->hops(); ++h) {
      const Triple& t = g.triples.at(walk->triples[h]);
      ok = t.head == walk->vertices[h] && t.tail == walk->vertices[h + 1] &&
           adjacency.count({walk->vertices[h], walk->vertices[h + 1]}) == 1;
    }
    if (ok && walk->hops() < k) ok = !has_out[walk->vertices.back()];
    if (ok && walk->hops() == k) {
      const std::set<VertexId> members(walk->vertices.begin(), walk->vertices.end());
      ok = members.size() <= k + 1;
    }
    bad += ok ? 0 : 1;
  }
  return {"walks follow triples", bad == 0,
          std::to_string(walks) + " walks, " + std::to_string(bad) + " invalid"};
}

CheckResult degenerate_views(SplitMix64& rng) {
  constexpr std::size_t kVertices = 12;
  ThoughtGraph g;
  for (std::size_t v = 0; v < kVertices; ++v) g.thoughts.push_back("v" + std::to_string(v));
  // A cycle keeps every vertex reachable; the extra triples add branching.
  for (std::size_t v = 0; v < kVertices; ++v) {
    g.triples.push_back({static_cast<VertexId>(v), "next", static_cast<VertexId>((v + 1) % kVertices)});
  }
  for (int t = 0; t < 8; ++t) {
    const auto a = static_cast<VertexId>(rng.choice(kVertices));
    const auto b = static_cast<VertexId>((a + 2 + rng.choice(kVertices - 3)) % kVertices);
    g.triples.push_back({a, "jump", b});
  }
  WalkConfig wc;
  wc.k = 1;
  wc.n = 400;
  wc.seed = rng.next();
  const TextualHot one_hop = build_textual_hot(g, wc);
  std::set<std::vector<VertexId>> got_sets;
  std::set<std::vector<VertexId>> want_sets;
  for (const auto& e : one_hop.hypergraph.edges) got_sets.insert(e.member_set());
  for (const Triple& t : g.triples) {
    want_sets.insert({std::min(t.head, t.tail), std::max(t.head, t.tail)});
  }
  bool ok = got_sets == want_sets;
  std::string detail = ok ? "k=1 edges mirror triples" : "k=1 edges differ from triples";

  wc.k = 3;
  wc.n = 10;
  const Hypergraph h = build_textual_hot(g, wc).hypergraph;
  const Hypergraph cot = degenerate_view(h, DegenerateMode::cot);
  const bool cot_ok = cot.num_edges() == 1 && cot.edges[0] == h.edges[0];

  const Hypergraph tot = degenerate_view(h, DegenerateMode::tot);
  bool tot_ok = !tot.edges.empty() && tot.edges[0] == h.edges[0];
  std::vector<bool> used(kVertices, false);
  for (const auto& e : tot.edges) {
    tot_ok = tot_ok && std::find(h.edges.begin(), h.edges.end(), e) != h.edges.end();
    for (VertexId v : e.member_set()) {
      tot_ok = tot_ok && !used[v];
      used[v] = true;
    }
  }
  const Hypergraph gv = degenerate_view(h, DegenerateMode::got);
  bool got_ok = true;
  std::set<std::pair<VertexId, VertexId>> pairs;
  for (const auto& e : gv.edges) {
    got_ok = got_ok && e.members.size() == 2 && e.members[0] != e.members[1];
    if (e.members.size() == 2) {
      got_ok = got_ok && pairs.insert(std::minmax(e.members[0], e.members[1])).second;
    }
  }
  std::set<std::pair<VertexId, VertexId>> expected;
  for (const auto& e : h.edges) {
    for (std::size_t i = 0; i + 1 < e.members.size(); ++i) {
      if (e.members[i] != e.members[i + 1]) expected.insert(std::minmax(e.members[i], e.members[i + 1]));
    }
  }
  got_ok = got_ok && pairs == expected;
  ok = ok && cot_ok && tot_ok && got_ok;
  detail += std::string("; cot ") + (cot_ok ? "ok" : "FAIL") + ", tot " + (tot_ok ? "ok" : "FAIL") +
            ", got " + (got_ok ? "ok" : "FAIL");
  return {"degenerate views", ok, detail};
}

CheckResult matrix_round_trip(SplitMix64& rng) {
  Matrix m = random_matrix(5, 7, rng, 1e3);
  m(0, 0) = 0.1;
  m(1, 1) = -0.0;
  m(2, 2) = std::numeric_limits<double>::denorm_min();
  const Matrix bin = decode_matrix_binary(encode_matrix_binary(m));
  const Matrix csv = decode_matrix_csv(encode_matrix_csv(m));
  const bool ok = bin == m && csv == m && std::signbit(bin(1, 1));
  return {"matrix file round trip", ok, ok ? "binary and csv exact" : "mismatch"};
}

CheckResult gradient_entry(const char* name, const GradCheckReport& r) {
  return {name, r.passed(1e-4), describe(r)};
}

}  // namespace

GradCheckReport check_stack_gradient(std::uint64_t seed, bool inject_fault,
                                     const StackCheckSizes& s, double step) {
  SplitMix64 rng(seed);
  ModelDims dims;
  dims.d = s.d;
  dims.d_c = s.d_c;
  dims.d_m = s.d_m;
  dims.heads = s.heads;
  dims.layers = 1;
  dims.n_text = s.text_edges;
  dims.n_img = s.image_edges;
  HotModelParams params = HotModelParams::init(dims, rng);
  jitter(params, rng, 0.1);

  const Matrix text_nodes = random_matrix(s.vertices, s.d, rng);
  const Matrix patches = random_matrix(s.vertices, s.d, rng);
  const Hypergraph text_graph = random_hypergraph(s.vertices, s.text_edges, rng);
  const Hypergraph image_graph = random_hypergraph(s.vertices, s.image_edges, rng);
  const Matrix sequence = random_matrix(s.sequence, s.d, rng);
  const Matrix weight = random_matrix(s.sequence, s.d, rng);
  const StackInputs in{text_nodes, text_graph, patches, image_graph, sequence};

  auto loss_of = [&](const Matrix& fused) {
    double loss = 0.0;
    for (std::size_t i = 0; i < fused.size(); ++i) loss += weight.values()[i] * fused.values()[i];
    return loss;
  };

  StackCache cache;
  const StackOutputs out = forward_stack(in, params, &cache);
  HotModelParams backward_params = params;
  if (inject_fault) jitter(backward_params, rng, 0.05);
  const Vector analytic = flatten_parameters(backward_stack(weight, out, backward_params, cache).params);

  HotModelParams probe_params = params;
  const ProbeFunction probe = [&](std::span<const double> theta) {
    assign_parameters(probe_params, theta);
    StackCache c;
    const StackOutputs o = forward_stack(in, probe_params, &c);
    return Probe{loss_of(o.fused), relu_signature(c).value()};
  };
  return check_gradient(probe, flatten_parameters(params), analytic, step);
}

GradCheckReport check_encoder_gradient(std::uint64_t seed, bool inject_fault, double step) {
  SplitMix64 rng(seed);
  constexpr std::size_t d = 6;
  const EncoderConfig cfg{2, false, IsolatedVertexPolicy::keep_previous};
  EncoderParams params = EncoderParams::init(cfg, d, 2, rng);
  jitter(params, rng, 0.1);
  const Matrix x0 = random_matrix(5, d, rng);
  const Hypergraph h = random_hypergraph(5, 3, rng);
  const Matrix r = random_matrix(5, d, rng);
  const Matrix s = random_matrix(3, d, rng);
  auto loss_of = [&](const EncodeResult& e) {
    double loss = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) loss += r.values()[i] * e.nodes.values()[i];
    for (std::size_t i = 0; i < s.size(); ++i) loss += s.values()[i] * e.edges.values()[i];
    return loss;
  };

  EncodeCache cache;
  encode(x0, h, params, &cache);
  EncoderParams backward_params = params;
  if (inject_fault) jitter(backward_params, rng, 0.05);
  const Vector analytic = flatten_parameters(encode_backward(r, s, backward_params, cache).params);

  EncoderParams probe_params = params;
  const ProbeFunction probe = [&](std::span<const double> theta) {
    assign_parameters(probe_params, theta);
    EncodeCache c;
    const EncodeResult e = encode(x0, h, probe_params, &c);
    ReluSignature sig;
    add_relu_signature(sig, c);
    return Probe{loss_of(e), sig.value()};
  };
  return check_gradient(probe, flatten_parameters(params), analytic, step);
}

std::vector<SelfCheckEntry> run_selfcheck(const SelfCheckOptions& options,
                                          const std::function<void(const SelfCheckEntry&)>& on_result) {
  SplitMix64 rng(options.seed);
  std::vector<std::function<CheckResult()>> checks = {
      [&] { return permutation_invariance(rng); },
      [&] { return pool_weights_are_distributions(rng); },
      [&] { return coattention_row_stochastic(rng); },
      [&] {
        return gradient_entry("full-stack gradient vs finite differences",
                              check_stack_gradient(rng.next(), options.inject_fault));
      },
      [&] {
        return gradient_entry("encoder gradient vs finite differences (L=2)",
                              check_encoder_gradient(rng.next(), options.inject_fault));
      },
      [&] { return kmeans_matches_brute_force(rng); },
      [&] { return walk_validity(rng); },
      [&] { return degenerate_views(rng); },
      [&] { return matrix_round_trip(rng); },
  };
  std::vector<SelfCheckEntry> entries;
  for (const auto& check : checks) {
    const auto start = std::chrono::steady_clock::now();
    SelfCheckEntry entry;
    try {
      entry.result = check();
    } catch (const std::exception& e) {
      entry.result = {"(check threw)", false, e.what()};
    }
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_result) on_result(entry);
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace hotkit
