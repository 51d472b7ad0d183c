#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "hotkit/numerics.hpp"
#include "test_support.hpp"

namespace hotkit {
namespace {

using testing::max_abs_diff;
using testing::naive_matmul;
using testing::random_matrix;

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  const Matrix b = Matrix::from_rows({{3, 4}, {5, 6}});
  EXPECT_EQ(matmul(Matrix::identity(2), b), b);
}

TEST(Matmul, RowTimesColumn) {
  const Matrix c = matmul(Matrix::from_rows({{1, 2}}), Matrix::from_rows({{3}, {4}}));
  ASSERT_EQ(c.rows(), 1u);
  ASSERT_EQ(c.cols(), 1u);
  EXPECT_EQ(c(0, 0), 11.0);
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 gen(11);
  const Matrix a = random_matrix(5, 7, gen);
  const Matrix b = random_matrix(7, 3, gen);
  EXPECT_LE(max_abs_diff(matmul(a, b), naive_matmul(a, b)), 1e-12);
}

TEST(Matmul, TransposedVariantsMatchOracle) {
  std::mt19937_64 gen(12);
  const Matrix a = random_matrix(4, 3, gen);
  const Matrix b = random_matrix(4, 5, gen);
  const Matrix c = random_matrix(6, 3, gen);
  EXPECT_LE(max_abs_diff(matmul_tn(a, b), naive_matmul(testing::naive_transpose(a), b)), 1e-12);
  EXPECT_LE(max_abs_diff(matmul_nt(a, c), naive_matmul(a, testing::naive_transpose(c))), 1e-12);
}

TEST(Matmul, InnerDimensionMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
}

TEST(Softmax, UniformLogits) {
  const Matrix s = row_softmax(Matrix::from_rows({{0, 0, 0}}));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(s(0, j), 1.0 / 3.0);
}

TEST(Softmax, LargeLogitDoesNotOverflow) {
  const Matrix s = row_softmax(Matrix::from_rows({{1000, 0}}));
  EXPECT_TRUE(std::isfinite(s(0, 0)));
  EXPECT_NEAR(s(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(s(0, 1), 0.0, 1e-15);
}

TEST(Softmax, MatchesDirectFormula) {
  const Matrix s = row_softmax(Matrix::from_rows({{1, 2, 3}}));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(s(0, 0), std::exp(1.0) / z, 1e-12);
  EXPECT_NEAR(s(0, 1), std::exp(2.0) / z, 1e-12);
  EXPECT_NEAR(s(0, 2), std::exp(3.0) / z, 1e-12);
}

TEST(Softmax, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 gen(3);
  const Matrix logits = random_matrix(2, 4, gen);
  const Matrix r = random_matrix(2, 4, gen);
  auto loss = [&](const std::vector<double>& x) {
    const Matrix s = row_softmax(Matrix(2, 4, x));
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += s.values()[i] * r.values()[i];
    return acc;
  };
  const std::vector<double> x(logits.values().begin(), logits.values().end());
  const Matrix g = row_softmax_backward(row_softmax(logits), r);
  EXPECT_LE(testing::worst_relative(g.values(), testing::central_diff(loss, x)), 1e-6);
}

TEST(LayerNorm, ConstantVectorCollapsesToBeta) {
  const Vector out = layer_norm(Vector{5, 5, 5}, Vector{1, 1, 1}, Vector{0, 0, 0});
  for (double v : out) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, SymmetricTwoPoint) {
  // eps must stay positive; 1e-12 stands in for the eps -> 0 limit
  const Vector out = layer_norm(Vector{1, 3}, Vector{1, 1}, Vector{0, 0}, 1e-12);
  EXPECT_NEAR(out[0], -1.0, 1e-11);
  EXPECT_NEAR(out[1], 1.0, 1e-11);
  EXPECT_THROW(layer_norm(Vector{1, 3}, Vector{1, 1}, Vector{0, 0}, 0.0), std::invalid_argument);
}

TEST(LayerNorm, MatchesDirectFormula) {
  std::mt19937_64 gen(5);
  const Matrix x = random_matrix(1, 9, gen, 3.0);
  const Matrix g = random_matrix(1, 9, gen);
  const Matrix b = random_matrix(1, 9, gen);
  const std::vector<double> xs(x.values().begin(), x.values().end());
  const std::vector<double> gs(g.values().begin(), g.values().end());
  const std::vector<double> bs(b.values().begin(), b.values().end());
  const Vector out = layer_norm(xs, gs, bs);
  EXPECT_LE(max_abs_diff(out, testing::naive_layer_norm(xs, gs, bs, kLayerNormEps)), 1e-10);

  // with γ=1 the output mean equals the mean of β
  const Vector ones(9, 1.0);
  const Vector plain = layer_norm(xs, ones, bs);
  double mean_out = 0.0;
  double mean_beta = 0.0;
  for (std::size_t i = 0; i < 9; ++i) {
    mean_out += plain[i] / 9.0;
    mean_beta += bs[i] / 9.0;
  }
  EXPECT_NEAR(mean_out, mean_beta, 1e-10);
}

TEST(LayerNorm, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 gen(6);
  const Matrix x = random_matrix(1, 5, gen);
  const Matrix r = random_matrix(1, 5, gen);
  LayerNormParams p{{0.5, 1.5, -1.0, 2.0, 1.0}, {0.1, 0.2, 0.3, 0.4, 0.5}};
  LayerNormCache cache;
  layer_norm(x.values(), p.gamma, p.beta, kLayerNormEps, &cache);
  LayerNormParams grads = LayerNormParams::zeros(5);
  const Vector gx = layer_norm_backward(r.values(), cache, p.gamma, grads);

  auto loss_x = [&](const std::vector<double>& xs) {
    const Vector o = layer_norm(xs, p.gamma, p.beta);
    double acc = 0.0;
    for (std::size_t i = 0; i < 5; ++i) acc += o[i] * r(0, i);
    return acc;
  };
  const std::vector<double> xs(x.values().begin(), x.values().end());
  EXPECT_LE(testing::worst_relative(gx, testing::central_diff(loss_x, xs)), 1e-6);

  auto loss_gamma = [&](const std::vector<double>& gs) {
    const Vector o = layer_norm(xs, gs, p.beta);
    double acc = 0.0;
    for (std::size_t i = 0; i < 5; ++i) acc += o[i] * r(0, i);
    return acc;
  };
  EXPECT_LE(testing::worst_relative(grads.gamma, testing::central_diff(loss_gamma, p.gamma)), 1e-6);
  EXPECT_LE(max_abs_diff(grads.beta, r.values()), 1e-15);
}

TEST(Mlp, ZeroWeightsGiveOutputBias) {
  MlpParams p = MlpParams::zeros(3, 4, 2);
  p.b2 = {1.5, -2.0};
  const Matrix out = mlp_forward(Matrix::from_rows({{1, 2, 3}, {-4, 5, 6}}), p);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(out(r, 0), 1.5);
    EXPECT_EQ(out(r, 1), -2.0);
  }
}

TEST(Mlp, IdentityWeightsPassPositiveInputThrough) {
  MlpParams p = MlpParams::zeros(3, 3, 3);
  p.w1 = Matrix::identity(3);
  p.w2 = Matrix::identity(3);
  const Matrix x = Matrix::from_rows({{0.5, 2.0, 7.0}});
  EXPECT_EQ(mlp_forward(x, p), x);
}

TEST(Mlp, MatchesComposedOracle) {
  SplitMix64 rng(21);
  MlpParams p = MlpParams::xavier(5, 7, 3, rng);
  std::mt19937_64 gen(21);
  const Matrix b1 = random_matrix(1, 7, gen);
  p.b1.assign(b1.values().begin(), b1.values().end());
  const Matrix b2 = random_matrix(1, 3, gen);
  p.b2.assign(b2.values().begin(), b2.values().end());
  const Matrix x = random_matrix(4, 5, gen);
  EXPECT_LE(max_abs_diff(mlp_forward(x, p), testing::naive_mlp(x, p)), 1e-12);
}

TEST(MlpBackward, ReluSubgradient) {
  MlpParams p = MlpParams::zeros(1, 1, 1);
  p.w1(0, 0) = 1.0;
  p.w2(0, 0) = 1.0;
  for (const auto& [x, expected] : {std::pair{2.0, 1.0}, std::pair{-2.0, 0.0}}) {
    MlpCache cache;
    mlp_forward(Matrix::from_rows({{x}}), p, &cache);
    const MlpGradients g = mlp_backward(Matrix::from_rows({{1.0}}), p, cache);
    EXPECT_EQ(g.grad_input(0, 0), expected) << "x=" << x;
  }
}

TEST(MlpBackward, MatchesFiniteDifferences) {
  SplitMix64 rng(4);
  MlpParams p = MlpParams::xavier(4, 6, 3, rng);
  for (double& b : p.b1) b = 0.05;
  std::mt19937_64 gen(4);
  const Matrix x = random_matrix(3, 4, gen);
  const Matrix r = random_matrix(3, 3, gen);

  MlpCache cache;
  mlp_forward(x, p, &cache);
  const MlpGradients g = mlp_backward(r, p, cache);

  auto loss = [&](const std::vector<double>& flat) {
    MlpParams q = p;
    assign_parameters(q, flat);
    const Matrix out = testing::naive_mlp(x, q);
    double acc = 0.0;
    for (std::size_t i = 0; i < out.values().size(); ++i) acc += out.values()[i] * r.values()[i];
    return acc;
  };
  const Vector analytic = flatten_parameters(g.grad_params);
  const Vector numeric = testing::central_diff(loss, flatten_parameters(p));
  EXPECT_LE(testing::worst_relative(analytic, numeric), 1e-4);
  EXPECT_LE(testing::worst_relative(analytic, finite_diff_grad(
                                                  [&](std::span<const double> v) {
                                                    return loss({v.begin(), v.end()});
                                                  },
                                                  flatten_parameters(p))),
            1e-4);
}

TEST(MlpBackward, ZeroUpstreamGivesZeroGradients) {
  SplitMix64 rng(8);
  const MlpParams p = MlpParams::xavier(3, 4, 2, rng);
  MlpCache cache;
  mlp_forward(Matrix::from_rows({{1, -1, 2}}), p, &cache);
  const MlpGradients g = mlp_backward(Matrix(1, 2), p, cache);
  for (double v : flatten_parameters(g.grad_params)) EXPECT_EQ(v, 0.0);
  for (double v : g.grad_input.values()) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDiff, SquareAtThree) {
  const Vector g =
      finite_diff_grad([](std::span<const double> x) { return x[0] * x[0]; }, Vector{3.0}, 1e-5);
  EXPECT_NEAR(g[0], 6.0, 1e-6);
}

TEST(FiniteDiff, SumGivesOnes) {
  const Vector g = finite_diff_grad(
      [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
      },
      Vector{0.3, -1.0, 4.0, 2.5});
  for (double v : g) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(SplitMix, ReferenceFirstOutput) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
}

TEST(SplitMix, ChoiceOfOneIsZero) {
  SplitMix64 rng(99);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(rng.choice(1), 0u);
}

TEST(SplitMix, SameSeedSameStream) {
  SplitMix64 a(1234);
  SplitMix64 b(1234);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(SplitMix, ChoiceStaysInRangeAndCoversIt) {
  SplitMix64 rng(5);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const std::size_t c = rng.choice(7);
    ASSERT_LT(c, 7u);
    seen.insert(c);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(SplitMix, UniformInUnitInterval) {
  SplitMix64 rng(17);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Xavier, EntriesWithinBound) {
  SplitMix64 rng(2);
  const Matrix w = xavier_init(7, 5, rng);
  const double bound = std::sqrt(6.0 / 12.0);
  for (double v : w.values()) {
    EXPECT_LE(std::abs(v), bound);
  }
}

TEST(Xavier, OneByOneBound) {
  SplitMix64 rng(3);
  const Matrix w = xavier_init(1, 1, rng);
  EXPECT_LE(std::abs(w(0, 0)), std::sqrt(3.0));
}

TEST(Xavier, FixedSeedIsBitIdentical) {
  SplitMix64 a(77);
  SplitMix64 b(77);
  EXPECT_EQ(xavier_init(6, 4, a), xavier_init(6, 4, b));
}

TEST(Parameters, FlattenAssignRoundTrip) {
  SplitMix64 rng(9);
  const MlpParams p = MlpParams::xavier(3, 5, 2, rng);
  MlpParams q = MlpParams::zeros(3, 5, 2);
  assign_parameters(q, flatten_parameters(p));
  EXPECT_EQ(flatten_parameters(q), flatten_parameters(p));
  EXPECT_EQ(parameter_count(p), 3u * 5 + 5 + 5 * 2 + 2);
  Vector too_long = flatten_parameters(p);
  too_long.push_back(0.0);
  EXPECT_THROW(assign_parameters(q, too_long), ShapeError);
}

TEST(RequireFinite, RejectsNan) {
  Matrix m(2, 2);
  m(1, 0) = std::nan("");
  EXPECT_THROW(require_finite(m, "m"), NumericError);
}

}  // namespace
}  // namespace hotkit
