#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "activemask/operators.hpp"
#include "oracles.hpp"

using namespace activemask;

namespace {

RealField random_field(const DomainSpec& d, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  RealField f = RealField::zeros(d);
  for (auto& v : f.values) v = u(rng);
  return f;
}

Kernel random_positive_kernel(std::size_t rank, std::mt19937_64& rng) {
  std::vector<std::size_t> radii(rank);
  std::size_t total = 1;
  for (auto& r : radii) {
    r = rng() % 3;
    total *= 2 * r + 1;
  }
  std::uniform_real_distribution<double> u(0.05, 2.0);
  std::vector<double> w(total);
  for (auto& v : w) v = u(rng);
  return Kernel(radii, w);
}

DomainSpec random_padded(std::mt19937_64& rng) {
  if (rng() % 2) return DomainSpec::padded({1 + rng() % 7});
  return DomainSpec::padded({1 + rng() % 5, 1 + rng() % 5});
}

}  // namespace

TEST(Apply, DiracIsIdentity) {
  std::mt19937_64 rng(1);
  const auto d = DomainSpec::circular({3, 5});
  const auto f = random_field(d, rng);
  EXPECT_EQ(apply(VotingOperator::circular(dirac_filter(d)), f), f);
}

TEST(Apply, BoxWrapsAround) {
  const auto d = DomainSpec::circular({4});
  const auto out = apply(VotingOperator::circular(box_filter(d)), RealField(d, {1, 0, 1, 0}));
  EXPECT_EQ(out.values, (std::vector<double>{1, 2, 1, 2}));
}

TEST(Apply, CircularMatchesConvolutionOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = rng() % 2 ? DomainSpec::circular({1 + rng() % 7}) : DomainSpec::circular({1 + rng() % 5, 1 + rng() % 5});
    const auto g = random_field(d, rng);
    const auto f = random_field(d, rng);
    const auto out = apply(VotingOperator::circular(Filter(g)), f);
    const auto ref = oracle::circular_convolve(d, f.values, g.values);
    for (std::size_t n = 0; n < d.size(); ++n) EXPECT_NEAR(out[n], ref[n], 1e-12);
  }
}

TEST(Apply, StarMatchesNormalizedPaddedOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_padded(rng);
    const auto k = random_positive_kernel(d.rank(), rng);
    const auto f = random_field(d, rng);
    const auto out = apply(VotingOperator::star(d, k), f);
    const auto num = oracle::padded_convolve(d, f.values, k.radii, k.weights);
    const auto den = oracle::padded_convolve(d, std::vector<double>(d.size(), 1.0), k.radii, k.weights);
    for (std::size_t n = 0; n < d.size(); ++n) EXPECT_NEAR(out[n], num[n] / den[n], 1e-12);
    const auto plain = zero_padded_convolve(d, k, f);
    for (std::size_t n = 0; n < d.size(); ++n) EXPECT_NEAR(plain[n], num[n], 1e-12);
  }
}

TEST(Apply, StarNormalizesOnes) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_padded(rng);
    const auto out = apply(VotingOperator::star(d, random_positive_kernel(d.rank(), rng)), RealField::ones(d));
    for (double v : out.values) EXPECT_NEAR(v, 1.0, 1e-12);
  }
}

TEST(Apply, DenseIsMatrixVectorProduct) {
  const auto d = DomainSpec::padded({3});
  const auto op = VotingOperator::dense(d, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  EXPECT_EQ(apply(op, RealField(d, {1, 0, -1})).values, (std::vector<double>{-2, -2, -2}));
}

TEST(Apply, DomainMismatchThrows) {
  const auto op = VotingOperator::circular(box_filter(DomainSpec::circular({4})));
  EXPECT_THROW(apply(op, RealField::ones(DomainSpec::circular({5}))), DomainMismatch);
  EXPECT_THROW(apply(op, RealField::ones(DomainSpec::padded({4}))), DomainMismatch);
}

TEST(Construct, RejectsInadmissibleAndMisshapen) {
  const auto d = DomainSpec::padded({4});
  // Zero centre and zero neighbours reachable from the corner pixels only.
  EXPECT_THROW(VotingOperator::star(d, Kernel({2}, {1, 0, 0, 0, -1})), InvalidArgument);
  EXPECT_THROW(VotingOperator::star(d, Kernel({1}, {-1, 0, -1})), InvalidArgument);
  EXPECT_THROW(VotingOperator::star(DomainSpec::circular({4}), box_kernel(1)), Unsupported);
  EXPECT_THROW(VotingOperator::star(d, box_kernel(2)), DomainMismatch);
  EXPECT_THROW(VotingOperator::dense(d, {1, 2, 3}), InvalidArgument);
  EXPECT_THROW(VotingOperator::circular(Filter(RealField::ones(d))), Unsupported);
}

TEST(SelfAdjoint, Examples) {
  const auto z4 = DomainSpec::circular({4});
  EXPECT_TRUE(is_self_adjoint(VotingOperator::circular(box_filter(z4))));
  EXPECT_FALSE(is_self_adjoint(VotingOperator::circular(Filter(RealField::delta(z4, 1)))));
  EXPECT_FALSE(is_self_adjoint(VotingOperator::dense(DomainSpec::padded({2}), {0, 1, 0, 0})));
  EXPECT_TRUE(is_self_adjoint(VotingOperator::dense(DomainSpec::padded({2}), {2, 1, 1, 0})));
}

TEST(SelfAdjoint, StarAnswersLiterallyAndMatchesDense) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto d = random_padded(rng);
    const auto op = VotingOperator::star(d, random_positive_kernel(d.rank(), rng));
    const auto a = to_dense(op);
    EXPECT_EQ(is_self_adjoint(op), is_symmetric(a, d.size(), kDefaultTol));
  }
  // Box on [0,3): edge rows normalize by 2, the centre by 3.
  EXPECT_FALSE(is_self_adjoint(VotingOperator::star(DomainSpec::padded({3}), box_kernel(1))));
}

TEST(SelfAdjoint, AdjointIdentityProperty) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = DomainSpec::circular({1 + rng() % 6, 1 + rng() % 6});
    const auto g = random_field(d, rng);
    RealField rev = RealField::zeros(d);
    for (std::size_t i = 0; i < d.size(); ++i) rev[i] = g[d.negated(i)];
    const auto f = random_field(d, rng), h = random_field(d, rng);
    const double lhs = inner(apply(VotingOperator::circular(Filter(g)), f), h);
    const double rhs = inner(f, apply(VotingOperator::circular(Filter(rev)), h));
    EXPECT_NEAR(lhs, rhs, 1e-9);
  }
}

TEST(QuadraticForm, Examples) {
  const auto z3 = DomainSpec::circular({3});
  EXPECT_EQ(quadratic_form(VotingOperator::circular(dirac_filter(z3)), RealField(z3, {1, -1, 0})), 2.0);
  const auto z4 = DomainSpec::circular({4});
  const auto box = VotingOperator::circular(box_filter(z4));
  EXPECT_EQ(quadratic_form(box, RealField(z4, {1, -1, 1, -1})), -4.0);
  EXPECT_EQ(quadratic_form(box, RealField::zeros(z4)), 0.0);
}

TEST(QuadraticForm, AgreesWithSpectralRoute) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const auto d = DomainSpec::circular({1 + rng() % 8, 1 + rng() % 8});
    const auto g = random_field(d, rng), f = random_field(d, rng);
    EXPECT_NEAR(quadratic_form(VotingOperator::circular(Filter(g)), f), quadratic_form_spectral(Filter(g), f), 1e-9);
  }
}

TEST(ToDense, MatchesCirculantOracle) {
  std::mt19937_64 rng(8);
  const auto d = DomainSpec::circular({3, 4});
  const auto g = random_field(d, rng);
  const auto a = to_dense(VotingOperator::circular(Filter(g)));
  const auto ref = oracle::circulant(d, g.values);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j) EXPECT_NEAR(a[i * d.size() + j], ref[i][j], 1e-15);
}

// Bit-exact: per-pixel vote accumulation equals applying A to each mask.
TEST(AccumulateVotes, BitwiseEqualToApplyOnMasks) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t M = 1 + rng() % 5;
    VotingOperator op = VotingOperator::circular(dirac_filter(DomainSpec::circular({1})));
    DomainSpec d;
    switch (trial % 3) {
      case 0:
        d = DomainSpec::circular({1 + rng() % 6, 1 + rng() % 6});
        op = VotingOperator::circular(Filter(random_field(d, rng)));
        break;
      case 1:
        d = random_padded(rng);
        op = VotingOperator::star(d, random_positive_kernel(d.rank(), rng));
        break;
      default:
        d = DomainSpec::padded({1 + rng() % 6});
        op = VotingOperator::dense(d, random_field(DomainSpec::padded({d.size() * d.size()}), rng).values);
    }
    std::vector<Label> v(d.size());
    for (auto& l : v) l = static_cast<Label>(1 + rng() % M);
    const LabelField psi(d, M, v);
    std::vector<RealField> applied;
    for (std::size_t m = 1; m <= M; ++m) applied.push_back(apply(op, mask_of(psi, m)));
    std::vector<double> votes(M + 1);
    for (std::size_t n = 0; n < d.size(); ++n) {
      const auto c = d.coords(n);
      accumulate_votes(op, psi, n, c, votes);
      for (std::size_t m = 1; m <= M; ++m) ASSERT_EQ(votes[m], applied[m - 1][n]) << trial << " n=" << n << " m=" << m;
    }
  }
}

TEST(QuasiFactorize, StarGaussianOnInterval) {
  const auto d = DomainSpec::padded({4});
  const auto op = VotingOperator::star(d, sampled_gaussian(GaussianSpec::with_scale(1.0)));
  const auto q = quasi_factorize(op);
  ASSERT_TRUE(q.has_value());
  for (double l : q->lambda) EXPECT_GT(l, 0.0);
  EXPECT_TRUE(q->b_matrix_is_self_adjoint);
  EXPECT_TRUE(q->b_matrix_is_psd);
  EXPECT_GE(q->min_eigen_or_min_spectrum, 0.0);
}

// The 4x4 Toeplitz matrix of the scale-1 Gaussian, with its smallest
// eigenvalue from an independent power iteration on (c I - B).
TEST(QuasiFactorize, StarGaussianMinEigenMatchesPowerIteration) {
  const auto d = DomainSpec::padded({4});
  const auto op = VotingOperator::star(d, sampled_gaussian(GaussianSpec::with_scale(1.0)));
  double B[4][4];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) B[i][j] = std::exp(-(i - j) * (i - j) / 2.0);
  const double c = 4.0;
  std::vector<double> x{1, -0.7, 0.4, -0.2};
  double mu = 0.0;
  for (int it = 0; it < 2000; ++it) {
    std::vector<double> y(4, 0.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) y[i] += ((i == j ? c : 0.0) - B[i][j]) * x[j];
    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    double rq = 0.0;
    for (int i = 0; i < 4; ++i) rq += x[i] * y[i];
    mu = rq;
    for (int i = 0; i < 4; ++i) x[i] = y[i] / norm;
  }
  const double min_eig = c - mu;
  const auto q = quasi_factorize(op);
  ASSERT_TRUE(q.has_value());
  EXPECT_GT(min_eig, 0.0);
  EXPECT_NEAR(q->min_eigen_or_min_spectrum, min_eig, 1e-9);
  EXPECT_EQ(q->psd_method, "eigen");
}

TEST(QuasiFactorize, ReconstructsStarPointwise) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 40; ++trial) {
    const auto d = random_padded(rng);
    const auto k = random_positive_kernel(d.rank(), rng);
    const auto op = VotingOperator::star(d, k);
    const auto q = quasi_factorize(op);
    ASSERT_TRUE(q.has_value());
    const auto f = random_field(d, rng);
    const auto a = apply(op, f);
    const auto b = zero_padded_convolve(d, k, f);
    for (std::size_t n = 0; n < d.size(); ++n) EXPECT_NEAR(a[n], q->lambda[n] * b[n], 1e-12);
  }
}

TEST(QuasiFactorize, CircularIsTrivial) {
  const auto d = DomainSpec::circular({5});
  const auto q = quasi_factorize(VotingOperator::circular(box_filter(d)));
  ASSERT_TRUE(q.has_value());
  EXPECT_EQ(q->lambda, std::vector<double>(5, 1.0));
  EXPECT_TRUE(q->b_matrix_is_self_adjoint);
  EXPECT_FALSE(q->b_matrix_is_psd);  // 1 + 2cos(4 pi / 5) < 0
}

TEST(QuasiFactorize, DenseSymmetricAndRowScaled) {
  const auto d = DomainSpec::padded({2});
  const auto sym = quasi_factorize(VotingOperator::dense(d, {2, 1, 1, 2}));
  ASSERT_TRUE(sym.has_value());
  EXPECT_EQ(sym->lambda, (std::vector<double>{1, 1}));
  EXPECT_TRUE(sym->b_matrix_is_psd);
  // Row 2 of a symmetric PSD matrix scaled by 3.
  const auto scaled = quasi_factorize(VotingOperator::dense(d, {2, 1, 3, 6}));
  ASSERT_TRUE(scaled.has_value());
  EXPECT_NEAR(scaled->lambda[1] / scaled->lambda[0], 3.0, 1e-12);
  EXPECT_TRUE(scaled->b_matrix_is_psd);
}

// No positive lambda gives a_ij / lambda_i symmetric: the zero pattern is not
// symmetric in the first case, the off-diagonal signs differ in the second.
TEST(QuasiFactorize, DenseWithoutFactorization) {
  const auto d = DomainSpec::padded({2});
  EXPECT_FALSE(quasi_factorize(VotingOperator::dense(d, {1, 1, 0, 1})).has_value());
  EXPECT_FALSE(quasi_factorize(VotingOperator::dense(d, {1, 1, -1, 1})).has_value());
  // Three-cycle with inconsistent ratios.
  const auto d3 = DomainSpec::padded({3});
  EXPECT_FALSE(quasi_factorize(VotingOperator::dense(d3, {1, 1, 1, 2, 1, 1, 1, 1, 1})).has_value());
}

TEST(Psd, GershgorinAndEigen) {
  EXPECT_EQ(psd_check({2, 1, 1, 2}, 2).method, "gershgorin");
  const auto e = psd_check({1, 2, 2, 1}, 2);
  EXPECT_EQ(e.method, "eigen");
  EXPECT_FALSE(e.psd);
  EXPECT_NEAR(e.bound, -1.0, 1e-12);
  // Not diagonally dominant yet PSD: the all-ones matrix.
  const auto ones = psd_check(std::vector<double>(9, 1.0), 3);
  EXPECT_TRUE(ones.psd);
  EXPECT_NEAR(ones.bound, 0.0, 1e-12);
}

TEST(QuasiFactorize, LargeStarUsesFourierSeries) {
  const auto d = DomainSpec::padded({40, 40});
  const auto q = quasi_factorize(VotingOperator::star(d, sampled_gaussian(GaussianSpec::with_scale(2.0), 2)));
  ASSERT_TRUE(q.has_value());
  EXPECT_EQ(q->psd_method, "fourier-series");
  EXPECT_TRUE(q->b_matrix_is_psd);
}
