#include <gtest/gtest.h>

#include <random>
#include <set>

#include "hotkit/hypergraph.hpp"

namespace hotkit {
namespace {

Hypergraph make(std::size_t n, std::vector<std::vector<VertexId>> edges) {
  Hypergraph h{n, {}};
  for (auto& e : edges) h.edges.push_back({std::move(e), {}});
  return h;
}

std::vector<std::vector<VertexId>> members(const Hypergraph& h) {
  std::vector<std::vector<VertexId>> out;
  for (const auto& e : h.edges) out.push_back(e.members);
  return out;
}

TEST(Validate, PathGraphIsValid) {
  EXPECT_TRUE(validate(make(3, {{0, 1}, {1, 2}})).empty());
}

TEST(Validate, OutOfRangeVertex) {
  const auto v = validate(make(3, {{0, 5}}));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Violation::Kind::out_of_range);
  EXPECT_EQ(v[0].edge, 0u);
}

TEST(Validate, EmptyEdge) {
  const auto v = validate(make(3, {{0, 1}, {}}));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Violation::Kind::empty_edge);
  EXPECT_EQ(v[0].edge, 1u);
}

TEST(Validate, RepeatedMemberIsReportedButEncodable) {
  const Hypergraph h = make(3, {{0, 1, 0}});
  const auto v = validate(h);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Violation::Kind::duplicate_member);
  EXPECT_NO_THROW(require_encodable(h));
  EXPECT_THROW(require_encodable(make(2, {{0, 2}})), InvalidHypergraph);
}

TEST(Incidence, PathGraph) {
  const Matrix b = incidence(make(3, {{0, 1}, {1, 2}}));
  EXPECT_EQ(b, Matrix::from_rows({{1, 0}, {1, 1}, {0, 1}}));
}

TEST(Incidence, SingleEdgeOverAllVertices) {
  const Matrix b = incidence(make(4, {{3, 1, 0, 2}}));
  ASSERT_EQ(b.cols(), 1u);
  for (std::size_t v = 0; v < 4; ++v) EXPECT_EQ(b(v, 0), 1.0);
}

TEST(Incidence, ColumnSumsEqualDistinctEdgeSizes) {
  std::mt19937_64 gen(31);
  std::uniform_int_distribution<VertexId> vertex(0, 9);
  std::uniform_int_distribution<int> size(1, 6);
  Hypergraph h{10, {}};
  for (int e = 0; e < 12; ++e) {
    Hyperedge edge;
    const int s = size(gen);
    for (int i = 0; i < s; ++i) edge.members.push_back(vertex(gen));
    h.edges.push_back(edge);
  }
  const Vector sums = column_sums(incidence(h));
  for (std::size_t e = 0; e < h.edges.size(); ++e) {
    const std::set<VertexId> distinct(h.edges[e].members.begin(), h.edges[e].members.end());
    EXPECT_EQ(sums[e], static_cast<double>(distinct.size())) << "edge " << e;
  }
}

TEST(VertexStar, SharedVertex) {
  const Hypergraph h = make(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(vertex_star(h, 1), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(vertex_stars(h)[1], (std::vector<std::size_t>{0, 1}));
}

TEST(VertexStar, IsolatedVertex) {
  const Hypergraph h = make(4, {{0, 1}, {1, 2}});
  EXPECT_TRUE(vertex_star(h, 3).empty());
  EXPECT_THROW(vertex_star(h, 4), std::out_of_range);
}

TEST(Degenerate, GotSplitsPathIntoPairs) {
  const Hypergraph g = degenerate_view(make(3, {{0, 1, 2}}), DegenerateMode::got);
  EXPECT_EQ(members(g), (std::vector<std::vector<VertexId>>{{0, 1}, {1, 2}}));
}

TEST(Degenerate, GotDeduplicatesPairs) {
  const Hypergraph g = degenerate_view(make(4, {{0, 1, 2}, {2, 1, 3}}), DegenerateMode::got);
  EXPECT_EQ(members(g), (std::vector<std::vector<VertexId>>{{0, 1}, {1, 2}, {1, 3}}));
}

TEST(Degenerate, TotKeepsGreedyDisjointEdges) {
  const Hypergraph t = degenerate_view(make(5, {{0, 1}, {2, 3}, {1, 4}}), DegenerateMode::tot);
  EXPECT_EQ(members(t), (std::vector<std::vector<VertexId>>{{0, 1}, {2, 3}}));
}

TEST(Degenerate, CotKeepsOneEdge) {
  const Hypergraph c = degenerate_view(make(5, {{3, 4}, {0, 1, 2}, {1, 4}}), DegenerateMode::cot);
  EXPECT_EQ(members(c), (std::vector<std::vector<VertexId>>{{3, 4}}));
}

TEST(Degenerate, ModeNames) {
  EXPECT_EQ(parse_degenerate_mode("tot"), DegenerateMode::tot);
  EXPECT_THROW(parse_degenerate_mode("hot"), std::invalid_argument);
  EXPECT_THROW(degenerate_view(make(2, {}), DegenerateMode::cot), std::invalid_argument);
}

}  // namespace
}  // namespace hotkit
