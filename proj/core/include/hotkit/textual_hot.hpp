#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hotkit/hypergraph.hpp"
#include "hotkit/numerics.hpp"

namespace hotkit {

/// A directed (head, relation, tail) fact between two thoughts.
struct Triple {
  VertexId head = 0;
  std::string relation;
  VertexId tail = 0;

  bool operator==(const Triple&) const = default;
};

/// Thoughts (vertices) plus relation-labelled directed triples.
struct ThoughtGraph {
  std::vector<std::string> thoughts;
  std::vector<Triple> triples;

  /// Throws std::invalid_argument naming the first bad triple.
  void validate() const;
  /// Triple indices leaving each vertex, in triple order.
  [[nodiscard]] std::vector<std::vector<std::size_t>> out_triples() const;

  bool operator==(const ThoughtGraph&) const = default;
};

struct WalkConfig {
  std::size_t k = 2;  // hops per walk
  std::size_t n = 8;  // hyperedges to draw
  std::uint64_t seed = 0;
  std::size_t max_retries = 16;
  bool dedupe = true;
  /// Keep drawing walks until exactly `n` edges exist (see build_textual_hot).
  bool fill_to_n = false;

  void validate() const;
};

/// v₀ r₁ v₁ … r_j v_j; vertices.size() == triples.size() + 1.
struct WalkPath {
  std::vector<VertexId> vertices;
  std::vector<std::size_t> triples;  // indices into ThoughtGraph::triples

  [[nodiscard]] std::size_t hops() const noexcept { return triples.size(); }
  /// "(v₀, r₁, v₁, …)" using the thought and relation texts.
  [[nodiscard]] std::string describe(const ThoughtGraph& g) const;

  bool operator==(const WalkPath&) const = default;
};

/// Follows up to k directed triples from `start`, each chosen uniformly among
/// the current vertex's out-triples. Stops early at a dead end. Returns
/// nullopt when `start` has no out-triples.
std::optional<WalkPath> random_walk(const ThoughtGraph& g, VertexId start, std::size_t k,
                                    SplitMix64& rng);

struct TextualHot {
  Hypergraph hypergraph;
  std::vector<WalkPath> paths;  // paths[j] produced hypergraph.edges[j]
  std::size_t walks_drawn = 0;
  std::size_t duplicates_dropped = 0;
  std::size_t padded = 0;  // edges repeated to reach n under fill_to_n
};

/// Hypergraph over all thoughts with one hyperedge per walk.
///
/// Start vertices come from rng.choice(|V|); a start without out-triples is
/// redrawn up to max_retries times, after which the draw is restricted to
/// vertices with out-degree ≥ 1. With dedupe, walks whose member set equals an
/// earlier edge's are dropped, so fewer than n edges may result. fill_to_n
/// keeps drawing (up to n·(max_retries+1) extra walks) and, if distinct walks
/// run out, repeats earlier edges cyclically so the result has exactly n.
TextualHot build_textual_hot(const ThoughtGraph& g, const WalkConfig& cfg);

inline constexpr const char* kNodeOpen = "<s>";
inline constexpr const char* kNodeClose = "</s>";

struct NodeSequence {
  std::vector<std::string> tokens;
  std::vector<std::size_t> marker_positions;
};

/// [<s>, n₀, </s>, …, <s>, n_j, </s>]; marker_positions[i] indexes the i-th <s>.
NodeSequence format_node_sequence(const ThoughtGraph& g);

/// Row i of the result is encoder_output.row(marker_positions[i]).
Matrix extract_marker_embeddings(const Matrix& encoder_output,
                                 const std::vector<std::size_t>& marker_positions);

/// Deterministic unit-norm vector per text; equal texts give equal rows.
Matrix stub_embed(const std::vector<std::string>& texts, std::size_t d, std::uint64_t seed);

/// Stand-in for a frozen text encoder: row t is the normalized sum of the
/// stub embeddings of tokens t and t+1, so each <s> row carries its thought.
Matrix stub_encode_sequence(const std::vector<std::string>& tokens, std::size_t d,
                            std::uint64_t seed);

}  // namespace hotkit
