#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hotkit/numerics.hpp"

namespace hotkit {

using VertexId = std::uint32_t;

struct Hyperedge {
  /// Ordered as produced (walk order for text, patch index for images). May
  /// repeat a vertex; membership semantics use member_set().
  std::vector<VertexId> members;
  std::string label;

  /// Distinct members, ascending.
  [[nodiscard]] std::vector<VertexId> member_set() const;

  bool operator==(const Hyperedge&) const = default;
};

/// 𝒢 = (𝒱, ℰ) over vertices 0..num_vertices-1.
struct Hypergraph {
  std::size_t num_vertices = 0;
  std::vector<Hyperedge> edges;

  [[nodiscard]] std::size_t num_edges() const noexcept { return edges.size(); }
  bool operator==(const Hypergraph&) const = default;
};

struct Violation {
  enum class Kind { out_of_range, empty_edge, duplicate_member };
  Kind kind;
  std::size_t edge;
  std::string detail;
};

class InvalidHypergraph : public std::invalid_argument {
 public:
  explicit InvalidHypergraph(std::vector<Violation> violations);
  [[nodiscard]] const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Every violation in edge order; empty means valid.
std::vector<Violation> validate(const Hypergraph& h);

/// Like validate() but only checks what encoding needs: ids in range and no
/// empty edges. Duplicate members are tolerated (walks may revisit).
void require_encodable(const Hypergraph& h);

/// num_vertices × |ℰ| 0/1 matrix.
Matrix incidence(const Hypergraph& h);

/// Edges containing v, ascending.
std::vector<std::size_t> vertex_star(const Hypergraph& h, VertexId v);

/// vertex_star for every vertex in one pass.
std::vector<std::vector<std::size_t>> vertex_stars(const Hypergraph& h);

enum class DegenerateMode { cot, tot, got };

/// Restrictions of a hypergraph-of-thought to simpler reasoning shapes:
///   cot: first hyperedge only (one reasoning path);
///   tot: greedy pairwise vertex-disjoint subset in scan order;
///   got: consecutive-pair 2-edges of every hyperedge, deduplicated.
Hypergraph degenerate_view(const Hypergraph& h, DegenerateMode mode);

DegenerateMode parse_degenerate_mode(const std::string& name);

}  // namespace hotkit
