#include "hotkit/hypergraph.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace hotkit {

namespace {

std::string describe(const std::vector<Violation>& violations) {
  std::string msg = "invalid hypergraph:";
  for (const auto& v : violations) msg += " [edge " + std::to_string(v.edge) + "] " + v.detail + ";";
  return msg;
}

}  // namespace

std::vector<VertexId> Hyperedge::member_set() const {
  std::vector<VertexId> set = members;
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  return set;
}

InvalidHypergraph::InvalidHypergraph(std::vector<Violation> violations)
    : std::invalid_argument(describe(violations)), violations_(std::move(violations)) {}

std::vector<Violation> validate(const Hypergraph& h) {
  std::vector<Violation> out;
  for (std::size_t e = 0; e < h.edges.size(); ++e) {
    const auto& members = h.edges[e].members;
    if (members.empty()) {
      out.push_back({Violation::Kind::empty_edge, e, "empty hyperedge"});
      continue;
    }
    std::set<VertexId> seen;
    for (VertexId v : members) {
      if (v >= h.num_vertices) {
        out.push_back({Violation::Kind::out_of_range, e,
                       "vertex " + std::to_string(v) + " out of range [0, " +
                           std::to_string(h.num_vertices) + ")"});
      } else if (!seen.insert(v).second) {
        out.push_back({Violation::Kind::duplicate_member, e,
                       "vertex " + std::to_string(v) + " repeated"});
      }
    }
  }
  return out;
}

void require_encodable(const Hypergraph& h) {
  auto violations = validate(h);
  std::erase_if(violations,
                [](const Violation& v) { return v.kind == Violation::Kind::duplicate_member; });
  if (!violations.empty()) throw InvalidHypergraph(std::move(violations));
}

Matrix incidence(const Hypergraph& h) {
  require_encodable(h);
  Matrix m(h.num_vertices, h.edges.size());
  for (std::size_t e = 0; e < h.edges.size(); ++e)
    for (VertexId v : h.edges[e].members) m(v, e) = 1.0;
  return m;
}

std::vector<std::size_t> vertex_star(const Hypergraph& h, VertexId v) {
  if (v >= h.num_vertices) {
    throw std::out_of_range("vertex_star: vertex " + std::to_string(v) + " out of range");
  }
  std::vector<std::size_t> star;
  for (std::size_t e = 0; e < h.edges.size(); ++e) {
    const auto& m = h.edges[e].members;
    if (std::find(m.begin(), m.end(), v) != m.end()) star.push_back(e);
  }
  return star;
}

std::vector<std::vector<std::size_t>> vertex_stars(const Hypergraph& h) {
  require_encodable(h);
  std::vector<std::vector<std::size_t>> stars(h.num_vertices);
  for (std::size_t e = 0; e < h.edges.size(); ++e)
    for (VertexId v : h.edges[e].member_set()) stars[v].push_back(e);
  return stars;
}

Hypergraph degenerate_view(const Hypergraph& h, DegenerateMode mode) {
  require_encodable(h);
  if (h.edges.empty()) throw std::invalid_argument("degenerate_view: hypergraph has no edges");
  Hypergraph out{h.num_vertices, {}};
  switch (mode) {
    case DegenerateMode::cot:
      out.edges.push_back(h.edges.front());
      break;
    case DegenerateMode::tot: {
      std::set<VertexId> used;
      for (const auto& e : h.edges) {
        const auto members = e.member_set();
        const bool disjoint = std::none_of(members.begin(), members.end(),
                                           [&](VertexId v) { return used.contains(v); });
        if (!disjoint) continue;
        used.insert(members.begin(), members.end());
        out.edges.push_back(e);
      }
      break;
    }
    case DegenerateMode::got: {
      std::set<std::pair<VertexId, VertexId>> seen;
      for (const auto& e : h.edges) {
        for (std::size_t i = 0; i + 1 < e.members.size(); ++i) {
          const VertexId a = e.members[i];
          const VertexId b = e.members[i + 1];
          // a walk that revisits a vertex can step a→a; that is not a 2-edge.
          if (a == b) continue;
          if (!seen.insert({std::min(a, b), std::max(a, b)}).second) continue;
          out.edges.push_back({{a, b}, {}});
        }
      }
      break;
    }
  }
  return out;
}

DegenerateMode parse_degenerate_mode(const std::string& name) {
  if (name == "cot") return DegenerateMode::cot;
  if (name == "tot") return DegenerateMode::tot;
  if (name == "got") return DegenerateMode::got;
  throw std::invalid_argument("unknown degeneration mode '" + name + "' (expected cot|tot|got)");
}

}  // namespace hotkit
