#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "hotkit/textual_hot.hpp"
#include "test_support.hpp"

namespace hotkit {
namespace {

ThoughtGraph messi_chain() {
  return {{"Lionel Messi", "Rosario", "Republic of Argentina"},
          {{0, "place of birth", 1}, {1, "is located in", 2}}};
}

ThoughtGraph chain(std::size_t n) {
  ThoughtGraph g;
  for (std::size_t i = 0; i < n; ++i) g.thoughts.push_back("v" + std::to_string(i));
  for (std::size_t i = 0; i + 1 < n; ++i)
    g.triples.push_back({static_cast<VertexId>(i), "next", static_cast<VertexId>(i + 1)});
  return g;
}

TEST(RandomWalk, SingleTripleOneHop) {
  const ThoughtGraph g{{"Lionel Messi", "Rosario"}, {{0, "place of birth", 1}}};
  SplitMix64 rng(0);
  const auto path = random_walk(g, 0, 1, rng);
  ASSERT_TRUE(path);
  EXPECT_EQ(path->vertices, (std::vector<VertexId>{0, 1}));
  EXPECT_EQ(path->describe(g), "(Lionel Messi, place of birth, Rosario)");
}

TEST(RandomWalk, MessiTwoHop) {
  const ThoughtGraph g = messi_chain();
  SplitMix64 rng(5);
  const auto path = random_walk(g, 0, 2, rng);
  ASSERT_TRUE(path);
  EXPECT_EQ(path->describe(g),
            "(Lionel Messi, place of birth, Rosario, is located in, Republic of Argentina)");
}

TEST(RandomWalk, TruncatesAtDeadEnd) {
  const ThoughtGraph g = chain(4);
  SplitMix64 rng(1);
  const auto path = random_walk(g, 0, 5, rng);
  ASSERT_TRUE(path);
  EXPECT_EQ(path->hops(), 3u);
  EXPECT_EQ(path->vertices.back(), 3u);
  // no triple leaves vertex 3, so a fourth hop is impossible
  for (const auto& t : g.triples) EXPECT_NE(t.head, 3u);
}

TEST(RandomWalk, StartWithoutOutTriplesSignalsEmpty) {
  const ThoughtGraph g = chain(3);
  SplitMix64 rng(2);
  EXPECT_FALSE(random_walk(g, 2, 2, rng).has_value());
  EXPECT_THROW(random_walk(g, 7, 2, rng), std::out_of_range);
}

TEST(RandomWalk, HopsFollowTriplesOnRandomGraph) {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<VertexId> vertex(0, 19);
  ThoughtGraph g;
  for (int i = 0; i < 20; ++i) g.thoughts.push_back("t" + std::to_string(i));
  std::set<std::pair<VertexId, VertexId>> adjacency;
  for (int i = 0; i < 40; ++i) {
    const VertexId a = vertex(gen);
    const VertexId b = vertex(gen);
    g.triples.push_back({a, "r" + std::to_string(i % 3), b});
    adjacency.insert({a, b});
  }
  SplitMix64 rng(9);
  for (VertexId start = 0; start < 20; ++start) {
    const auto path = random_walk(g, start, 4, rng);
    if (!path) continue;
    for (std::size_t h = 0; h < path->hops(); ++h) {
      const Triple& t = g.triples[path->triples[h]];
      EXPECT_EQ(t.head, path->vertices[h]);
      EXPECT_EQ(t.tail, path->vertices[h + 1]);
      EXPECT_TRUE(adjacency.contains({path->vertices[h], path->vertices[h + 1]}));
    }
  }
}

TEST(BuildTextualHot, OneHopDedupeMirrorsTriples) {
  // every vertex reachable, every triple a distinct pair
  const ThoughtGraph g{{"a", "b", "c", "d"},
                       {{0, "r", 1}, {1, "r", 2}, {2, "r", 3}, {3, "r", 0}, {0, "s", 2}}};
  WalkConfig cfg;
  cfg.k = 1;
  cfg.n = 400;
  cfg.seed = 3;
  const TextualHot hot = build_textual_hot(g, cfg);
  std::set<std::vector<VertexId>> got;
  for (const auto& e : hot.hypergraph.edges) got.insert(e.member_set());
  std::set<std::vector<VertexId>> expected;
  for (const auto& t : g.triples)
    expected.insert({std::min(t.head, t.tail), std::max(t.head, t.tail)});
  EXPECT_EQ(got, expected);
  EXPECT_EQ(hot.hypergraph.num_edges(), expected.size());
}

TEST(BuildTextualHot, SingleTripleSingleEdge) {
  const ThoughtGraph g{{"x", "y"}, {{0, "r", 1}}};
  WalkConfig cfg;
  cfg.k = 1;
  cfg.n = 1;
  const TextualHot hot = build_textual_hot(g, cfg);
  ASSERT_EQ(hot.hypergraph.num_edges(), 1u);
  EXPECT_EQ(hot.hypergraph.edges[0].member_set(), (std::vector<VertexId>{0, 1}));
}

TEST(BuildTextualHot, SameSeedIsIdentical) {
  const ThoughtGraph g = messi_chain();
  WalkConfig cfg;
  cfg.n = 5;
  cfg.seed = 42;
  cfg.dedupe = false;
  EXPECT_EQ(build_textual_hot(g, cfg).hypergraph, build_textual_hot(g, cfg).hypergraph);
}

TEST(BuildTextualHot, FillReachesExactlyN) {
  const ThoughtGraph g = messi_chain();
  WalkConfig cfg;
  cfg.k = 1;
  cfg.n = 5;
  cfg.fill_to_n = true;
  const TextualHot hot = build_textual_hot(g, cfg);
  EXPECT_EQ(hot.hypergraph.num_edges(), 5u);
  EXPECT_EQ(hot.paths.size(), 5u);
  EXPECT_EQ(hot.padded, 3u);  // only two distinct one-hop edges exist

  cfg.fill_to_n = false;
  EXPECT_LE(build_textual_hot(g, cfg).hypergraph.num_edges(), 2u);
}

TEST(BuildTextualHot, EdgesBoundedByHops) {
  const ThoughtGraph g = chain(10);
  WalkConfig cfg;
  cfg.k = 3;
  cfg.n = 30;
  cfg.dedupe = false;
  const TextualHot hot = build_textual_hot(g, cfg);
  for (const auto& e : hot.hypergraph.edges) EXPECT_LE(e.members.size(), cfg.k + 1);
}

TEST(BuildTextualHot, RejectsGraphWithoutTriples) {
  const ThoughtGraph g{{"lonely"}, {}};
  EXPECT_THROW(build_textual_hot(g, WalkConfig{}), std::invalid_argument);
}

TEST(NodeSequence, TwoThoughts) {
  const NodeSequence s = format_node_sequence({{"a", "b"}, {}});
  EXPECT_EQ(s.tokens, (std::vector<std::string>{"<s>", "a", "</s>", "<s>", "b", "</s>"}));
  EXPECT_EQ(s.marker_positions, (std::vector<std::size_t>{0, 3}));
}

TEST(NodeSequence, SingleThought) {
  const NodeSequence s = format_node_sequence({{"only"}, {}});
  EXPECT_EQ(s.tokens.size(), 3u);
  EXPECT_EQ(s.marker_positions, (std::vector<std::size_t>{0}));
}

TEST(NodeSequence, CountsAndPositions) {
  ThoughtGraph g;
  for (int i = 0; i < 17; ++i) g.thoughts.push_back("t" + std::to_string(i));
  const NodeSequence s = format_node_sequence(g);
  EXPECT_EQ(s.tokens.size(), 3u * 17);
  for (std::size_t i = 0; i < 17; ++i) {
    EXPECT_EQ(s.marker_positions[i], 3 * i);
    EXPECT_EQ(s.tokens[3 * i], "<s>");
    EXPECT_EQ(s.tokens[3 * i + 1], g.thoughts[i]);
    EXPECT_EQ(s.tokens[3 * i + 2], "</s>");
  }
}

TEST(ExtractMarker, GathersRows) {
  Matrix h(6, 2);
  for (std::size_t r = 0; r < 6; ++r) h(r, 0) = h(r, 1) = static_cast<double>(r);
  const Matrix x = extract_marker_embeddings(h, {0, 3});
  EXPECT_EQ(x, Matrix::from_rows({{0, 0}, {3, 3}}));
}

TEST(ExtractMarker, IdentityOutputGivesOneHotRows) {
  const Matrix x = extract_marker_embeddings(Matrix::identity(6), {0, 3});
  for (std::size_t c = 0; c < 6; ++c) {
    EXPECT_EQ(x(0, c), c == 0 ? 1.0 : 0.0);
    EXPECT_EQ(x(1, c), c == 3 ? 1.0 : 0.0);
  }
}

TEST(ExtractMarker, MatchesRowCopy) {
  std::mt19937_64 gen(14);
  const Matrix h = testing::random_matrix(12, 5, gen);
  const std::vector<std::size_t> pos{0, 3, 6, 9, 11};
  const Matrix x = extract_marker_embeddings(h, pos);
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(x(i, c), h(pos[i], c));
  EXPECT_THROW(extract_marker_embeddings(h, {12}), std::out_of_range);
}

TEST(StubEmbed, EqualTextsEqualRows) {
  const Matrix e = stub_embed({"Rosario", "Spain", "Rosario"}, 16, 4);
  for (std::size_t c = 0; c < 16; ++c) EXPECT_EQ(e(0, c), e(2, c));
}

TEST(StubEmbed, UnitNorm) {
  const Matrix e = stub_embed({"a", "bb", "ccc", "dddd"}, 32, 1);
  for (std::size_t r = 0; r < e.rows(); ++r) {
    double sq = 0.0;
    for (double v : e.row(r)) sq += v * v;
    EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12);
  }
}

TEST(StubEmbed, DistinctTextsNearlyOrthogonal) {
  // 100 disjoint pairs; for random unit vectors in 64-d the cosine has
  // standard deviation 1/8, so |cos| >= 0.5 is a four-sigma event per pair
  std::vector<std::string> texts;
  for (int i = 0; i < 200; ++i) texts.push_back("thought number " + std::to_string(i));
  const Matrix e = stub_embed(texts, 64, 0);
  auto cosine = [&](std::size_t i, std::size_t j) {
    double dot = 0.0;
    for (std::size_t c = 0; c < 64; ++c) dot += e(i, c) * e(j, c);
    return dot;
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < 200; i += 2) worst = std::max(worst, std::abs(cosine(i, i + 1)));
  EXPECT_LT(worst, 0.5);

  // spread over all pairs matches the 1/sqrt(d) of isotropic directions
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t j = i + 1; j < 200; ++j, ++n) sq += cosine(i, j) * cosine(i, j);
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(n)), 0.125, 0.01);
}

TEST(StubEncodeSequence, MarkerRowsDependOnThought) {
  const NodeSequence s = format_node_sequence({{"alpha", "beta", "alpha"}, {}});
  const Matrix h = stub_encode_sequence(s.tokens, 8, 3);
  const Matrix x = extract_marker_embeddings(h, s.marker_positions);
  EXPECT_EQ(h.rows(), 9u);
  for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(x(0, c), x(2, c));
  EXPECT_GT(testing::max_abs_diff(Matrix::row_vector(x.row(0)), Matrix::row_vector(x.row(1))),
            1e-3);
}

}  // namespace
}  // namespace hotkit
