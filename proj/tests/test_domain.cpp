#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "activemask/domain.hpp"
#include "activemask/error.hpp"

using namespace activemask;

namespace {

LabelField labels(const DomainSpec& d, std::size_t M, std::vector<Label> v) { return LabelField(d, M, std::move(v)); }

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

std::set<std::pair<std::size_t, std::size_t>> unordered(const Pairs& p) {
  std::set<std::pair<std::size_t, std::size_t>> s;
  for (auto [a, b] : p) s.insert({std::min(a, b), std::max(a, b)});
  return s;
}

}  // namespace

TEST(Domain, SizeAndStrides) {
  const auto d = DomainSpec::circular({3, 4, 5});
  EXPECT_EQ(d.rank(), 3u);
  EXPECT_EQ(d.size(), 60u);
  EXPECT_EQ(d.strides(), (std::vector<std::size_t>{20, 5, 1}));
  EXPECT_EQ(d.shape_string(), "3x4x5");
}

TEST(Domain, RejectsDegenerateShapes) {
  EXPECT_THROW(DomainSpec::circular({}), InvalidArgument);
  EXPECT_THROW(DomainSpec::padded({4, 0}), InvalidArgument);
}

TEST(Domain, IndexCoordsRoundTrip) {
  const auto d = DomainSpec::padded({2, 3, 4});
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d.index(d.coords(i)), i);
  EXPECT_EQ(d.coords(23), (std::vector<std::size_t>{1, 2, 3}));
}

TEST(Domain, NegationIsAnInvolution) {
  const auto d = DomainSpec::circular({4, 5});
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d.negated(d.negated(i)), i);
  EXPECT_EQ(d.negated(0), 0u);
  EXPECT_EQ(d.negated(d.index(std::vector<std::size_t>{1, 2})), d.index(std::vector<std::size_t>{3, 3}));
}

TEST(LabelField, RejectsOutOfRangeLabels) {
  const auto d = DomainSpec::circular({4});
  EXPECT_THROW(labels(d, 2, {1, 2, 3, 1}), InvalidLabel);
  EXPECT_THROW(labels(d, 2, {0, 1, 1, 1}), InvalidLabel);
  EXPECT_THROW(labels(d, 2, {1, 1, 1}), InvalidArgument);
}

TEST(MaskOf, ConstantFieldSelectsAllOrNothing) {
  const auto d = DomainSpec::circular({4});
  const auto psi = LabelField::constant(d, 2, 1);
  EXPECT_EQ(mask_of(psi, 1).values, std::vector<double>(4, 1.0));
  EXPECT_EQ(mask_of(psi, 2).values, std::vector<double>(4, 0.0));
}

TEST(MaskOf, Alternating) {
  const auto psi = labels(DomainSpec::circular({4}), 2, {1, 2, 1, 2});
  EXPECT_EQ(mask_of(psi, 2).values, (std::vector<double>{0, 1, 0, 1}));
}

TEST(MaskOf, OutOfRangeLabelThrows) {
  const auto psi = labels(DomainSpec::circular({4}), 2, {1, 2, 1, 2});
  EXPECT_THROW(mask_of(psi, 0), InvalidLabel);
  EXPECT_THROW(mask_of(psi, 3), InvalidLabel);
}

TEST(MaskOf, PartitionOfUnityProperty) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t M = 1 + rng() % 6;
    const auto d = DomainSpec::padded({1 + rng() % 5, 1 + rng() % 5});
    std::vector<Label> v(d.size());
    for (auto& l : v) l = static_cast<Label>(1 + rng() % M);
    const LabelField psi(d, M, v);
    std::vector<double> sum(d.size(), 0.0);
    for (std::size_t m = 1; m <= M; ++m) {
      const auto mask = mask_of(psi, m);
      for (std::size_t n = 0; n < d.size(); ++n) {
        ASSERT_TRUE(mask[n] == 0.0 || mask[n] == 1.0);
        sum[n] += mask[n];
      }
    }
    EXPECT_EQ(sum, std::vector<double>(d.size(), 1.0));
  }
}

TEST(AdjacentPairs, CircularThree) {
  EXPECT_EQ(unordered(adjacent_pairs(DomainSpec::circular({3}))),
            (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}, {0, 2}}));
}

TEST(AdjacentPairs, PaddedThree) {
  EXPECT_EQ(unordered(adjacent_pairs(DomainSpec::padded({3}))),
            (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}}));
}

TEST(AdjacentPairs, CircularTwoCountsThePairOnce) {
  const auto p = adjacent_pairs(DomainSpec::circular({2}));
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(unordered(p), (std::set<std::pair<std::size_t, std::size_t>>{{0, 1}}));
}

TEST(AdjacentPairs, CircularOneHasNoPairs) { EXPECT_TRUE(adjacent_pairs(DomainSpec::circular({1})).empty()); }

// Each unordered pair appears exactly once, and the count matches the closed form.
TEST(AdjacentPairs, CountsMatchClosedForm) {
  for (std::size_t a = 1; a <= 5; ++a)
    for (std::size_t b = 1; b <= 5; ++b)
      for (Boundary bd : {Boundary::Circular, Boundary::ZeroPadded}) {
        const DomainSpec d({a, b}, bd);
        const auto p = adjacent_pairs(d);
        EXPECT_EQ(unordered(p).size(), p.size());
        auto edges = [&](std::size_t len) {
          if (bd == Boundary::ZeroPadded || len <= 2) return len - 1;
          return len;
        };
        EXPECT_EQ(p.size(), edges(a) * b + edges(b) * a) << a << "x" << b << " " << to_string(bd);
      }
}

TEST(BoundaryCrossings, Examples) {
  EXPECT_EQ(boundary_crossings(LabelField::constant(DomainSpec::circular({5, 5}), 3, 2)), 0u);
  EXPECT_EQ(boundary_crossings(labels(DomainSpec::circular({4}), 2, {1, 2, 1, 2})), 4u);
  EXPECT_EQ(boundary_crossings(labels(DomainSpec::padded({4}), 2, {1, 2, 1, 2})), 3u);
}

TEST(BoundaryCrossings, RelabelingInvariantAndZeroOnlyWhenConstant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t M = 2 + rng() % 4;
    const DomainSpec d({1 + rng() % 4, 1 + rng() % 4}, trial % 2 ? Boundary::Circular : Boundary::ZeroPadded);
    std::vector<Label> v(d.size());
    for (auto& l : v) l = static_cast<Label>(1 + rng() % M);
    std::vector<Label> perm(M);
    std::iota(perm.begin(), perm.end(), 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Label> w(v.size());
    for (std::size_t n = 0; n < v.size(); ++n) w[n] = perm[v[n] - 1];
    const LabelField psi(d, M, v), phi(d, M, w);
    EXPECT_EQ(boundary_crossings(psi), boundary_crossings(phi));
    const bool constant = std::all_of(v.begin(), v.end(), [&](Label l) { return l == v[0]; });
    EXPECT_EQ(boundary_crossings(psi) == 0, constant);
  }
}

TEST(Metrics, NonemptyMasksAndPixelsChanged) {
  const auto d = DomainSpec::circular({4});
  const auto a = labels(d, 5, {1, 2, 2, 5});
  const auto b = labels(d, 5, {1, 3, 2, 4});
  EXPECT_EQ(nonempty_masks(a), 3u);
  EXPECT_EQ(pixels_changed(a, b), 2u);
  EXPECT_EQ(pixels_changed(a, a), 0u);
}

TEST(RealField, InnerProductAndValidation) {
  const auto d = DomainSpec::circular({3});
  RealField a(d, {1, 2, 3}), b(d, {4, -5, 6});
  EXPECT_EQ(inner(a, b), 12.0);
  EXPECT_THROW(RealField(d, {1, 2}), InvalidArgument);
  EXPECT_THROW(inner(a, RealField::zeros(DomainSpec::padded({3}))), DomainMismatch);
}
