#include "bsmps/dense.hpp"
#include "bsmps/full_mps.hpp"

#include "oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace bsmps;

namespace {

std::vector<int> random_ranks(int K, Rng& rng, int rmax) {
  std::uniform_int_distribution<int> d(1, rmax);
  std::vector<int> r(static_cast<size_t>(K) + 1, 1);
  for (int b = 1; b < K; ++b) r[b] = d(rng);
  return r;
}

}  // namespace

TEST(FullMps, EvaluateMatchesEntrywiseContraction) {
  Rng rng(1);
  for (int K = 1; K <= 6; ++K) {
    const FullMPS x = random_full_mps(random_ranks(K, rng, 3), rng);
    EXPECT_LT((evaluate(x).data - oracle::contract(x)).norm(), 1e-12);
  }
}

TEST(FullMps, EvaluateRejectsLargeOrders) {
  Rng rng(1);
  const FullMPS x = random_full_mps(std::vector<int>(26, 1), rng);
  EXPECT_THROW(evaluate(x), ValidationError);
}

TEST(FullMps, ProductStateIsKroneckerProduct) {
  Vec a(2), b(2);
  a << 1, 2;
  b << 3, -1;
  const Vec t = evaluate(product_state({a, b})).data;
  EXPECT_DOUBLE_EQ(t(0), 3);
  EXPECT_DOUBLE_EQ(t(1), -1);
  EXPECT_DOUBLE_EQ(t(2), 6);
  EXPECT_DOUBLE_EQ(t(3), -2);
}

TEST(FullMps, StrongKroneckerChainsCores) {
  Rng rng(2);
  const FullMPS x = random_full_mps({1, 2, 3, 1}, rng);
  const Core c01 = strong_kronecker(x.cores[0], x.cores[1]);
  ASSERT_EQ(c01.slice.size(), 4u);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      EXPECT_LT((c01.slice[a * 2 + b] - x.cores[0].slice[a] * x.cores[1].slice[b]).norm(), 1e-14);
}

TEST(FullMps, ApplyMpoMatchesDenseMatrix) {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const int K = 2 + trial % 3;
    FullMPO m;
    for (int k = 0; k < K; ++k) {
      const int rl = k == 0 ? 1 : 2, rr = k == K - 1 ? 1 : 2;
      MPOCore c;
      for (int s = 0; s < 4; ++s) c.slice.push_back(random_normal(rng, rl, rr));
      m.cores.push_back(c);
    }
    const FullMPS x = random_full_mps(random_ranks(K, rng, 2), rng);
    const Vec y = oracle::contract(apply_mpo(m, x));
    EXPECT_LT((y - oracle::contract(m) * oracle::contract(x)).norm(), 1e-11 * std::max(1.0, y.norm()));
    EXPECT_LT((evaluate(m).data - oracle::contract(m)).norm(), 1e-12);
  }
}

TEST(FullMps, OrthogonalizePreservesTensorAndGauge) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 2 + trial % 5;
    const FullMPS x = random_full_mps(random_ranks(K, rng, 4), rng);
    const Vec t = oracle::contract(x);
    const FullMPS l = orthogonalize(x, Side::Left);
    const FullMPS r = orthogonalize(x, Side::Right);
    EXPECT_LT((oracle::contract(l) - t).norm(), 1e-10 * t.norm());
    EXPECT_LT((oracle::contract(r) - t).norm(), 1e-10 * t.norm());
    for (int k = 0; k + 1 < K; ++k) {
      const Mat u = l.cores[k].left_unfold();
      EXPECT_LT((u.transpose() * u - Mat::Identity(u.cols(), u.cols())).norm(), 1e-12);
    }
    for (int k = 1; k < K; ++k) {
      const Mat v = r.cores[k].right_unfold();
      EXPECT_LT((v * v.transpose() - Mat::Identity(v.rows(), v.rows())).norm(), 1e-12);
    }
  }
}

TEST(FullMps, TtSvdSpectraMatchMatricizations) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 2 + trial % 5;
    const FullMPS x = random_full_mps(random_ranks(K, rng, 3), rng);
    const Vec t = oracle::contract(x);
    const auto [y, spec] = tt_svd(x);
    EXPECT_LT((oracle::contract(y) - t).norm(), 1e-10 * t.norm());
    for (int b = 1; b < K; ++b) {
      const Vec ref = oracle::unfolding_spectrum(t, K, b);
      Vec s = spec.sigma[b];
      ASSERT_GE(s.size(), ref.size());
      EXPECT_LT((s.head(ref.size()) - ref).norm(), 1e-10 * t.norm());
      if (s.size() > ref.size()) {
        EXPECT_LT(s.tail(s.size() - ref.size()).norm(), 1e-10 * t.norm());
      }
    }
  }
}

TEST(FullMps, TruncationErrorBoundedByDiscardedValues) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 3 + trial % 4;
    const FullMPS x = random_full_mps(random_ranks(K, rng, 4), rng);
    const Vec t = oracle::contract(x);
    const auto [y, spec] = tt_svd(x);
    // rank caps
    std::vector<int> caps(static_cast<size_t>(K) + 1, 2);
    caps.front() = caps.back() = 1;
    const FullMPS z = truncate(y, spec, Truncation::with_caps(caps));
    double disc = 0.0;
    for (int b = 1; b < K; ++b)
      for (Eigen::Index i = caps[b]; i < spec.sigma[b].size(); ++i) disc += spec.sigma[b](i) * spec.sigma[b](i);
    EXPECT_LE((oracle::contract(z) - t).norm(), std::sqrt(disc) * (1 + 1e-10) + 1e-12);
    for (int b = 1; b < K; ++b) EXPECT_LE(z.ranks()[b], 2);
    // error budget
    const double eps = 0.1 * t.norm();
    const FullMPS e = truncate(y, spec, Truncation::with_eps(eps));
    EXPECT_LE((oracle::contract(e) - t).norm(), eps * (1 + 1e-10));
  }
}

TEST(FullMps, TruncationToZeroIsRejected) {
  Rng rng(7);
  const FullMPS x = random_full_mps({1, 2, 2, 1}, rng);
  const auto [y, spec] = tt_svd(x);
  EXPECT_THROW(truncate(y, spec, Truncation::with_eps(2 * norm(x))), ValidationError);
}

TEST(FullMps, InnerAndNorm) {
  Rng rng(8);
  const FullMPS x = random_full_mps({1, 2, 3, 2, 1}, rng);
  const FullMPS y = random_full_mps({1, 3, 1, 2, 1}, rng);
  EXPECT_NEAR(inner(x, y), oracle::contract(x).dot(oracle::contract(y)), 1e-12);
  EXPECT_NEAR(norm(x), oracle::contract(x).norm(), 1e-12);
  EXPECT_NEAR(norm(scale(x, -2.0)), 2 * norm(x), 1e-12);
}

TEST(FullMps, IdentityMpo) {
  Rng rng(9);
  const FullMPS x = random_full_mps({1, 2, 2, 1}, rng);
  EXPECT_LT((oracle::contract(apply_mpo(identity_mpo(3), x)) - oracle::contract(x)).norm(), 1e-14);
}

TEST(FullMps, ValidateRejectsMismatchedRanks) {
  FullMPS x;
  Core a, b;
  a.slice = {Mat::Ones(1, 2), Mat::Ones(1, 2)};
  b.slice = {Mat::Ones(3, 1), Mat::Ones(3, 1)};
  x.cores = {a, b};
  EXPECT_THROW(x.validate(), ValidationError);
}
