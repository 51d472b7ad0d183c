#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hotkit/fusion.hpp"
#include "test_support.hpp"

namespace hotkit {
namespace {

using testing::central_diff;
using testing::max_abs_diff;
using testing::naive_matmul;
using testing::naive_transpose;
using testing::random_matrix;
using testing::worst_relative;

CoAttentionParams random_coattention(std::size_t nt, std::size_t ni, std::size_t d,
                                     std::size_t dc, std::size_t dm, std::uint64_t seed) {
  SplitMix64 rng(seed);
  CoAttentionParams p = CoAttentionParams::init(nt, ni, d, dc, dm, rng);
  std::mt19937_64 gen(seed);
  p.gate = random_matrix(nt, ni, gen);
  return p;
}

Matrix oracle_attention(const Matrix& et, const Matrix& ei, const CoAttentionParams& p) {
  const Matrix s = naive_matmul(naive_matmul(et, p.text_coatt),
                                naive_transpose(naive_matmul(ei, p.img_coatt)));
  Matrix a(s.rows(), s.cols());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    std::vector<double> logits(s.cols());
    for (std::size_t c = 0; c < s.cols(); ++c) logits[c] = p.gate(r, c) * s(r, c);
    const auto w = testing::naive_softmax(logits);
    for (std::size_t c = 0; c < s.cols(); ++c) a(r, c) = w[c];
  }
  return a;
}

Matrix oracle_fuse(const Matrix& et, const Matrix& ei, const Matrix& a,
                   const CoAttentionParams& p) {
  return naive_matmul(naive_transpose(naive_matmul(et, p.text_fuse)),
                      naive_matmul(a, naive_matmul(ei, p.img_fuse)));
}

TEST(CoAttention, SingleEdgeEachSide) {
  CoAttentionParams p;
  p.gate = Matrix::from_rows({{1}});
  p.text_coatt = p.img_coatt = p.text_fuse = p.img_fuse = Matrix::from_rows({{1}});
  EXPECT_EQ(coattention(Matrix::from_rows({{0.7}}), Matrix::from_rows({{-2.0}}), p),
            Matrix::from_rows({{1}}));
}

TEST(CoAttention, ZeroGateGivesUniformRows) {
  CoAttentionParams p = random_coattention(3, 5, 4, 3, 2, 1);
  p.gate = Matrix(3, 5);
  std::mt19937_64 gen(1);
  const Matrix a = coattention(random_matrix(3, 4, gen), random_matrix(5, 4, gen), p);
  for (double v : a.values()) EXPECT_DOUBLE_EQ(v, 0.2);
}

TEST(CoAttention, MatchesComposedOracle) {
  std::mt19937_64 gen(2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const CoAttentionParams p = random_coattention(4, 3, 6, 4, 4, seed);
    const Matrix et = random_matrix(4, 6, gen);
    const Matrix ei = random_matrix(3, 6, gen);
    EXPECT_LE(max_abs_diff(coattention(et, ei, p), oracle_attention(et, ei, p)), 1e-12);
  }
}

TEST(CoAttention, RejectsWrongEdgeCount) {
  const CoAttentionParams p = random_coattention(2, 2, 4, 4, 4, 0);
  EXPECT_THROW(coattention(Matrix(3, 4), Matrix(2, 4), p), ShapeError);
}

TEST(Fuse, ScalarCase) {
  CoAttentionParams p;
  p.gate = Matrix::from_rows({{1}});
  p.text_coatt = p.img_coatt = Matrix::from_rows({{1}, {1}});
  p.text_fuse = Matrix::from_rows({{2}, {-1}});
  p.img_fuse = Matrix::from_rows({{0.5}, {3}});
  const Matrix et = Matrix::from_rows({{1, 4}});
  const Matrix ei = Matrix::from_rows({{2, 1}});
  const Matrix z = fuse(et, ei, Matrix::from_rows({{1}}), p);
  EXPECT_DOUBLE_EQ(z(0, 0), (1 * 2 + 4 * -1) * (2 * 0.5 + 1 * 3));
}

TEST(Fuse, ZeroImageEdgesGiveZero) {
  const CoAttentionParams p = random_coattention(3, 2, 5, 4, 3, 3);
  std::mt19937_64 gen(3);
  const Matrix et = random_matrix(3, 5, gen);
  const Matrix ei(2, 5);
  const Matrix z = fuse(et, ei, coattention(et, ei, p), p);
  for (double v : z.values()) EXPECT_EQ(v, 0.0);
}

TEST(Fuse, MatchesTwoStepOracle) {
  const CoAttentionParams p = random_coattention(4, 3, 6, 4, 5, 4);
  std::mt19937_64 gen(4);
  const Matrix et = random_matrix(4, 6, gen);
  const Matrix ei = random_matrix(3, 6, gen);
  const Matrix a = coattention(et, ei, p);
  const Matrix z = fuse(et, ei, a, p);
  EXPECT_EQ(z.rows(), 5u);
  EXPECT_EQ(z.cols(), 5u);
  EXPECT_LE(max_abs_diff(z, oracle_fuse(et, ei, a, p)), 1e-12);
}

TEST(Gate, ClosedGateReturnsText) {
  SplitMix64 rng(5);
  GateFusionParams p = GateFusionParams::init(3, 4, rng);
  for (double& b : p.gate_bias) b = -60.0;
  std::mt19937_64 gen(5);
  const Matrix h = random_matrix(6, 4, gen);
  EXPECT_LE(max_abs_diff(gate_fuse(h, random_matrix(3, 3, gen), p), h), 1e-6);
}

TEST(Gate, HalfGateAverages) {
  SplitMix64 rng(6);
  GateFusionParams p = GateFusionParams::init(2, 3, rng);
  p.gate_text = Matrix(3, 3);
  p.gate_z = Matrix(3, 3);
  p.gate_bias.assign(3, 0.0);
  std::mt19937_64 gen(6);
  const Matrix h = random_matrix(4, 3, gen);
  const Matrix z = random_matrix(2, 2, gen);
  const Matrix zp = naive_matmul(Matrix(1, 4, Vector(z.values().begin(), z.values().end())),
                                 p.proj_z);
  const Matrix out = gate_fuse(h, z, p);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out(r, c), 0.5 * (h(r, c) + zp(0, c)), 1e-15);
}

struct FusionFixture {
  std::size_t nt = 3, ni = 2, d = 6, dc = 4, dm = 4, seq = 5;
  CoAttentionParams co;
  GateFusionParams gate;
  Matrix et, ei, h, r;

  FusionFixture() {
    co = random_coattention(nt, ni, d, dc, dm, 7);
    SplitMix64 rng(8);
    gate = GateFusionParams::init(dm, d, rng);
    std::mt19937_64 gen(7);
    et = random_matrix(nt, d, gen);
    ei = random_matrix(ni, d, gen);
    h = random_matrix(seq, d, gen);
    r = random_matrix(seq, d, gen);
  }

  double loss(const CoAttentionParams& c, const GateFusionParams& g, const Matrix& t,
              const Matrix& i, const Matrix& text) const {
    const Matrix a = coattention(t, i, c);
    const Matrix out = gate_fuse(text, fuse(t, i, a, c), g);
    double acc = 0.0;
    for (std::size_t k = 0; k < out.values().size(); ++k) acc += out.values()[k] * r.values()[k];
    return acc;
  }
};

TEST(FusionBackward, MatchesFiniteDifferences) {
  const FusionFixture fx;
  CoAttentionCache cc;
  FuseCache fc;
  GateCache gc;
  const Matrix a = coattention(fx.et, fx.ei, fx.co, &cc);
  const Matrix z = fuse(fx.et, fx.ei, a, fx.co, &fc);
  gate_fuse(fx.h, z, fx.gate, &gc);

  CoAttentionParams d_co = fx.co;
  zero_parameters(d_co);
  GateFusionParams d_gate = fx.gate;
  zero_parameters(d_gate);
  const GateGradients gg = gate_fuse_backward(fx.r, fx.gate, gc, d_gate);
  const FuseGradients fg = fuse_backward(gg.grad_z, fx.et, fx.ei, a, fx.co, fc, d_co);
  const CoAttentionGradients cg =
      coattention_backward(fg.grad_attention, fx.et, fx.ei, fx.co, cc, d_co);
  Matrix d_et = fg.grad_text_edges;
  add_inplace(d_et, cg.grad_text_edges);
  Matrix d_ei = fg.grad_img_edges;
  add_inplace(d_ei, cg.grad_img_edges);

  // parameters
  const std::size_t n_co = parameter_count(fx.co);
  Vector at = flatten_parameters(fx.co);
  const Vector gate_flat = flatten_parameters(fx.gate);
  at.insert(at.end(), gate_flat.begin(), gate_flat.end());
  Vector analytic = flatten_parameters(d_co);
  const Vector d_gate_flat = flatten_parameters(d_gate);
  analytic.insert(analytic.end(), d_gate_flat.begin(), d_gate_flat.end());
  const auto numeric = central_diff(
      [&](const std::vector<double>& x) {
        CoAttentionParams c = fx.co;
        GateFusionParams g = fx.gate;
        assign_parameters(c, std::span(x).first(n_co));
        assign_parameters(g, std::span(x).subspan(n_co));
        return fx.loss(c, g, fx.et, fx.ei, fx.h);
      },
      at);
  EXPECT_LE(worst_relative(analytic, numeric), 1e-4);

  // inputs
  const auto by_text_edges = central_diff(
      [&](const std::vector<double>& x) {
        return fx.loss(fx.co, fx.gate, Matrix(fx.nt, fx.d, x), fx.ei, fx.h);
      },
      {fx.et.values().begin(), fx.et.values().end()});
  EXPECT_LE(worst_relative(d_et.values(), by_text_edges), 1e-4);
  const auto by_img_edges = central_diff(
      [&](const std::vector<double>& x) {
        return fx.loss(fx.co, fx.gate, fx.et, Matrix(fx.ni, fx.d, x), fx.h);
      },
      {fx.ei.values().begin(), fx.ei.values().end()});
  EXPECT_LE(worst_relative(d_ei.values(), by_img_edges), 1e-4);
  const auto by_text = central_diff(
      [&](const std::vector<double>& x) {
        return fx.loss(fx.co, fx.gate, fx.et, fx.ei, Matrix(fx.seq, fx.d, x));
      },
      {fx.h.values().begin(), fx.h.values().end()});
  EXPECT_LE(worst_relative(gg.grad_text.values(), by_text), 1e-4);
}

TEST(FusionBackward, AttentionGradientIsOuterProduct) {
  const FusionFixture fx;
  const Matrix a = coattention(fx.et, fx.ei, fx.co);
  FuseCache fc;
  fuse(fx.et, fx.ei, a, fx.co, &fc);
  const Matrix mt = naive_matmul(fx.et, fx.co.text_fuse);
  const Matrix mi = naive_matmul(fx.ei, fx.co.img_fuse);
  for (std::size_t u = 0; u < fx.dm; ++u)
    for (std::size_t v = 0; v < fx.dm; ++v) {
      Matrix dz(fx.dm, fx.dm);
      dz(u, v) = 1.0;
      CoAttentionParams sink = fx.co;
      const FuseGradients g = fuse_backward(dz, fx.et, fx.ei, a, fx.co, fc, sink);
      for (std::size_t i = 0; i < fx.nt; ++i)
        for (std::size_t j = 0; j < fx.ni; ++j)
          EXPECT_NEAR(g.grad_attention(i, j), mt(i, u) * mi(j, v), 1e-12);
      // z is linear in A, so a finite difference in A(0,0) is exact up to roundoff
      Matrix bumped = a;
      bumped(0, 0) += 1e-3;
      const double dz_num = (fuse(fx.et, fx.ei, bumped, fx.co)(u, v) - fuse(fx.et, fx.ei, a, fx.co)(u, v)) / 1e-3;
      EXPECT_NEAR(dz_num, g.grad_attention(0, 0), 1e-8);
    }
}

TEST(FusionBackward, ZeroUpstreamGivesZeroGradients) {
  const FusionFixture fx;
  CoAttentionCache cc;
  FuseCache fc;
  GateCache gc;
  const Matrix a = coattention(fx.et, fx.ei, fx.co, &cc);
  gate_fuse(fx.h, fuse(fx.et, fx.ei, a, fx.co, &fc), fx.gate, &gc);
  CoAttentionParams d_co = fx.co;
  zero_parameters(d_co);
  GateFusionParams d_gate = fx.gate;
  zero_parameters(d_gate);
  const GateGradients gg = gate_fuse_backward(Matrix(fx.seq, fx.d), fx.gate, gc, d_gate);
  const FuseGradients fg = fuse_backward(gg.grad_z, fx.et, fx.ei, a, fx.co, fc, d_co);
  const CoAttentionGradients cg = coattention_backward(fg.grad_attention, fx.et, fx.ei, fx.co, cc, d_co);
  for (double v : flatten_parameters(d_co)) EXPECT_EQ(v, 0.0);
  for (double v : flatten_parameters(d_gate)) EXPECT_EQ(v, 0.0);
  for (double v : cg.grad_text_edges.values()) EXPECT_EQ(v, 0.0);
  for (double v : fg.grad_img_edges.values()) EXPECT_EQ(v, 0.0);
}

TEST(FusionBackward, MismatchedCacheThrows) {
  const FusionFixture fx;
  const Matrix a = coattention(fx.et, fx.ei, fx.co);
  FuseCache fc;
  fuse(fx.et, fx.ei, a, fx.co, &fc);
  CoAttentionParams sink = fx.co;
  EXPECT_THROW(fuse_backward(Matrix(fx.dm, fx.dm), Matrix(2, fx.d), fx.ei, a, fx.co, fc, sink),
               CacheError);
}

}  // namespace
}  // namespace hotkit
