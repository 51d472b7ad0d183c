#include "hotkit/textual_hot.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace hotkit {

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<VertexId> first_occurrence_order(const std::vector<VertexId>& vertices) {
  std::vector<VertexId> out;
  for (VertexId v : vertices)
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

}  // namespace

void ThoughtGraph::validate() const {
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& t = triples[i];
    if (t.head >= thoughts.size() || t.tail >= thoughts.size()) {
      throw std::invalid_argument("triple " + std::to_string(i) + ": vertex out of range (" +
                                  std::to_string(thoughts.size()) + " thoughts)");
    }
    if (t.relation.empty()) {
      throw std::invalid_argument("triple " + std::to_string(i) + ": empty relation");
    }
  }
}

std::vector<std::vector<std::size_t>> ThoughtGraph::out_triples() const {
  std::vector<std::vector<std::size_t>> out(thoughts.size());
  for (std::size_t i = 0; i < triples.size(); ++i) out[triples[i].head].push_back(i);
  return out;
}

void WalkConfig::validate() const {
  if (k < 1) throw std::invalid_argument("walk config: k must be >= 1");
  if (n < 1) throw std::invalid_argument("walk config: n must be >= 1");
}

std::string WalkPath::describe(const ThoughtGraph& g) const {
  std::string s = "(";
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (i > 0) s += ", " + g.triples[triples[i - 1]].relation + ", ";
    s += g.thoughts[vertices[i]];
  }
  return s + ")";
}

namespace {

std::optional<WalkPath> walk_with(const ThoughtGraph& g,
                                  const std::vector<std::vector<std::size_t>>& out,
                                  VertexId start, std::size_t k, SplitMix64& rng) {
  if (out[start].empty()) return std::nullopt;
  WalkPath path;
  path.vertices.push_back(start);
  VertexId current = start;
  for (std::size_t hop = 0; hop < k; ++hop) {
    const auto& choices = out[current];
    if (choices.empty()) break;
    const std::size_t t = choices[rng.choice(choices.size())];
    path.triples.push_back(t);
    current = g.triples[t].tail;
    path.vertices.push_back(current);
  }
  return path;
}

}  // namespace

std::optional<WalkPath> random_walk(const ThoughtGraph& g, VertexId start, std::size_t k,
                                    SplitMix64& rng) {
  if (start >= g.thoughts.size()) {
    throw std::out_of_range("random_walk: start vertex " + std::to_string(start) +
                            " out of range");
  }
  if (k < 1) throw std::invalid_argument("random_walk: k must be >= 1");
  return walk_with(g, g.out_triples(), start, k, rng);
}

TextualHot build_textual_hot(const ThoughtGraph& g, const WalkConfig& cfg) {
  g.validate();
  cfg.validate();
  const auto out = g.out_triples();
  std::vector<VertexId> live;
  for (VertexId v = 0; v < out.size(); ++v)
    if (!out[v].empty()) live.push_back(v);
  if (live.empty()) throw std::invalid_argument("build_textual_hot: no vertex has an out-triple");

  SplitMix64 rng(cfg.seed);
  TextualHot result;
  result.hypergraph.num_vertices = g.thoughts.size();
  std::set<std::vector<VertexId>> seen;

  auto draw_start = [&]() -> VertexId {
    for (std::size_t attempt = 0; attempt <= cfg.max_retries; ++attempt) {
      const auto v = static_cast<VertexId>(rng.choice(g.thoughts.size()));
      if (!out[v].empty()) return v;
    }
    return live[rng.choice(live.size())];
  };

  auto draw_one = [&]() {
    const VertexId start = draw_start();
    WalkPath path = *walk_with(g, out, start, cfg.k, rng);
    ++result.walks_drawn;
    Hyperedge edge{first_occurrence_order(path.vertices), path.describe(g)};
    if (cfg.dedupe && !seen.insert(edge.member_set()).second) {
      ++result.duplicates_dropped;
      return;
    }
    result.hypergraph.edges.push_back(std::move(edge));
    result.paths.push_back(std::move(path));
  };

  for (std::size_t i = 0; i < cfg.n; ++i) draw_one();

  if (cfg.fill_to_n) {
    const std::size_t budget = cfg.n * (cfg.max_retries + 1);
    for (std::size_t extra = 0; extra < budget && result.hypergraph.edges.size() < cfg.n; ++extra)
      draw_one();
    const std::size_t distinct = result.hypergraph.edges.size();
    for (std::size_t i = 0; result.hypergraph.edges.size() < cfg.n; ++i) {
      result.hypergraph.edges.push_back(result.hypergraph.edges[i % distinct]);
      result.paths.push_back(result.paths[i % distinct]);
      ++result.padded;
    }
  }
  return result;
}

NodeSequence format_node_sequence(const ThoughtGraph& g) {
  if (g.thoughts.empty()) throw std::invalid_argument("format_node_sequence: no thoughts");
  NodeSequence seq;
  seq.tokens.reserve(3 * g.thoughts.size());
  for (const auto& thought : g.thoughts) {
    seq.marker_positions.push_back(seq.tokens.size());
    seq.tokens.emplace_back(kNodeOpen);
    seq.tokens.push_back(thought);
    seq.tokens.emplace_back(kNodeClose);
  }
  return seq;
}

Matrix extract_marker_embeddings(const Matrix& encoder_output,
                                 const std::vector<std::size_t>& marker_positions) {
  for (std::size_t p : marker_positions) {
    if (p >= encoder_output.rows()) {
      throw std::out_of_range("marker position " + std::to_string(p) +
                              " beyond sequence length " + std::to_string(encoder_output.rows()));
    }
  }
  return gather_rows(encoder_output, marker_positions);
}

Matrix stub_embed(const std::vector<std::string>& texts, std::size_t d, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("stub_embed: d must be >= 1");
  Matrix out(texts.size(), d);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    SplitMix64 rng(fnv1a(texts[i]) ^ splitmix_next(seed).first);
    auto row = out.row(i);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : row) {
        v = rng.normal();
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : row) v /= norm;
  }
  return out;
}

Matrix stub_encode_sequence(const std::vector<std::string>& tokens, std::size_t d,
                            std::uint64_t seed) {
  const Matrix base = stub_embed(tokens, d, seed);
  Matrix out(tokens.size(), d);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto row = out.row(t);
    auto self = base.row(t);
    std::copy(self.begin(), self.end(), row.begin());
    if (t + 1 < tokens.size()) add_inplace(row, base.row(t + 1));
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& v : row) v /= norm;
  }
  return out;
}

}  // namespace hotkit
