#include "bsmps/block_mps.hpp"
#include "bsmps/dense.hpp"
#include "bsmps/linalg.hpp"

#include "oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <bit>

using namespace bsmps;

namespace {

struct Case {
  int K, N, rho;
};

std::vector<Case> cases() {
  std::vector<Case> out;
  for (int K = 1; K <= 6; ++K)
    for (int N = 0; N <= K; ++N)
      for (int rho : {1, 2, 3}) out.push_back({K, N, rho});
  return out;
}

Vec sorted_desc(Vec v) {
  std::sort(v.data(), v.data() + v.size(), std::greater<>());
  return v;
}

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace

TEST(BlockMps, SectorRange) {
  const SectorRange r{6, 4, 3};
  EXPECT_EQ(r.lo(), 1);
  EXPECT_EQ(r.hi(), 3);
  EXPECT_FALSE(r.contains(0));
  EXPECT_EQ(r.bound(2), std::min(binomial(3, 2), binomial(3, 2)));
}

TEST(BlockMps, RandomTensorsLiveInTheirSector) {
  Rng rng(1);
  for (const Case& c : cases()) {
    const BlockMPS x = random_block_mps(c.K, c.N, SizeRule::constant(c.rho), rng);
    x.validate();
    EXPECT_TRUE(x.within_size_bounds());
    const Vec t = oracle::contract(x);
    EXPECT_LT((t.cwiseProduct(oracle::sector_mask(c.K, c.N)) - t).norm(), 1e-14);
    EXPECT_LT((oracle::contract(to_full(x)) - t).norm(), 1e-12 * std::max(1.0, t.norm()));
  }
}

TEST(BlockMps, MaxAdmissibleSizesEqualBounds) {
  const SizeTable t = make_size_table(6, 3, SizeRule::max_admissible());
  for (int b = 0; b <= 6; ++b)
    for (const auto& [n, s] : t[b]) EXPECT_EQ(s, SectorRange({6, 3, b}).bound(n));
  SizeTable bad = t;
  bad[3][1] += 1;
  EXPECT_THROW(make_size_table(6, 3, SizeRule::exact(bad)), ValidationError);
}

TEST(BlockMps, DeterminantIsUnitBasisVector) {
  const BlockMPS x = determinant(5, {0, 3});
  const Vec t = oracle::contract(x);
  const std::uint64_t s = oracle::bit(0, 5) | oracle::bit(3, 5);
  EXPECT_DOUBLE_EQ(t(static_cast<Eigen::Index>(s)), 1.0);
  EXPECT_DOUBLE_EQ(t.norm(), 1.0);
  EXPECT_EQ(x.ranks(), std::vector<int>(6, 1));
}

TEST(BlockMps, InnerMatchesDense) {
  Rng rng(2);
  for (const Case& c : cases()) {
    const BlockMPS x = random_block_mps(c.K, c.N, SizeRule::constant(c.rho), rng);
    const BlockMPS y = random_block_mps(c.K, c.N, SizeRule::constant(1 + c.rho % 2), rng);
    const double ref = oracle::contract(x).dot(oracle::contract(y));
    EXPECT_NEAR(inner(x, y), ref, 1e-10 * std::max(1.0, std::abs(ref)));
  }
}

TEST(BlockMps, OrthogonalizationPreservesTensorAndIsOrthogonal) {
  Rng rng(3);
  for (const Case& c : cases()) {
    const BlockMPS x = random_block_mps(c.K, c.N, SizeRule::constant(c.rho), rng);
    const Vec t = oracle::contract(x);
    for (Side side : {Side::Left, Side::Right}) {
      const BlockMPS y = orthogonalize_block(x, side);
      EXPECT_LT(rel(oracle::contract(y), t), 1e-10);
      EXPECT_TRUE(y.within_size_bounds());
      // check orthogonality through the full-format unfoldings
      const FullMPS f = to_full(y);
      if (side == Side::Left)
        for (int k = 0; k + 1 < c.K; ++k) {
          const Mat u = f.cores[k].left_unfold();
          EXPECT_LT((u.transpose() * u - Mat::Identity(u.cols(), u.cols())).norm(), 1e-12);
        }
      else
        for (int k = 1; k < c.K; ++k) {
          const Mat v = f.cores[k].right_unfold();
          EXPECT_LT((v * v.transpose() - Mat::Identity(v.rows(), v.rows())).norm(), 1e-12);
        }
    }
  }
}

TEST(BlockMps, TtSvdSpectraMatchDenseMatricizations) {
  Rng rng(4);
  for (const Case& c : cases()) {
    const BlockMPS x = random_block_mps(c.K, c.N, SizeRule::constant(c.rho), rng);
    const Vec t = oracle::contract(x);
    const auto [y, spec] = tt_svd_block(x);
    EXPECT_LT(rel(oracle::contract(y), t), 1e-10);
    for (int b = 1; b < c.K; ++b) {
      std::vector<double> all;
      for (const auto& [n, s] : spec.sigma[b])
        for (Eigen::Index i = 0; i < s.size(); ++i) all.push_back(s(i));
      Vec got = Eigen::Map<Vec>(all.data(), static_cast<Eigen::Index>(all.size()));
      got = sorted_desc(got);
      const Vec ref = oracle::unfolding_spectrum(t, c.K, b);
      ASSERT_GE(got.size(), ref.size());
      EXPECT_LT((got.head(ref.size()) - ref).norm(), 1e-10 * t.norm());
      if (got.size() > ref.size()) {
        EXPECT_LT(got.tail(got.size() - ref.size()).norm(), 1e-10 * t.norm());
      }
    }
  }
}

TEST(BlockMps, TruncationErrorIsBoundedAndSectorPreserved) {
  Rng rng(5);
  for (const Case& c : cases()) {
    if (c.K < 3) continue;
    const BlockMPS x = random_block_mps(c.K, c.N, SizeRule::constant(c.rho + 1), rng);
    const Vec t = oracle::contract(x);
    const auto [y, spec] = tt_svd_block(x);
    const double eps = 0.3 * t.norm();
    const BlockMPS z = truncate_block(y, spec, BlockTruncation::with_eps(eps));
    const Vec tz = oracle::contract(z);
    EXPECT_LE((tz - t).norm(), eps * (1 + 1e-10));
    EXPECT_LT((tz.cwiseProduct(oracle::sector_mask(c.K, c.N)) - tz).norm(), 1e-14);

    std::vector<int> caps(static_cast<size_t>(c.K) + 1, 2);
    const BlockMPS w = truncate_block(y, spec, BlockTruncation::with_bond_caps(caps));
    double disc = 0.0;
    for (int b = 1; b < c.K; ++b) {
      EXPECT_LE(w.rank(b), 2);
      std::vector<double> all;
      for (const auto& [n, s] : spec.sigma[b])
        for (Eigen::Index i = 0; i < s.size(); ++i) all.push_back(s(i));
      std::sort(all.begin(), all.end(), std::greater<>());
      for (size_t i = 2; i < all.size(); ++i) disc += all[i] * all[i];
    }
    EXPECT_LE((oracle::contract(w) - t).norm(), std::sqrt(disc) * (1 + 1e-10) + 1e-12);
  }
}

TEST(BlockMps, SectorCapsRespectFloor) {
  Rng rng(6);
  const BlockMPS x = random_block_mps(6, 3, SizeRule::max_admissible(), rng);
  const auto [y, spec] = tt_svd_block(x);
  std::vector<std::map<int, int>> caps(7);
  const BlockMPS z = truncate_block(y, spec, BlockTruncation::with_sector_caps(caps, 1));
  for (int b = 0; b <= 6; ++b)
    for (const auto& [n, s] : x.rho[b]) EXPECT_EQ(z.size(b, n), 1);
}

TEST(BlockMps, TruncationToZeroIsRejected) {
  Rng rng(7);
  const BlockMPS x = random_block_mps(4, 2, SizeRule::constant(2), rng);
  const auto [y, spec] = tt_svd_block(x);
  EXPECT_THROW(truncate_block(y, spec, BlockTruncation::with_eps(1.5 * norm(x))), ValidationError);
}

TEST(BlockMps, AddAndScale) {
  Rng rng(8);
  const BlockMPS x = random_block_mps(5, 2, SizeRule::constant(2), rng);
  const BlockMPS y = random_block_mps(5, 2, SizeRule::constant(1), rng);
  const BlockMPS z = add(x, scale(y, -3.0));
  for (int b = 0; b <= 5; ++b)
    for (const auto& [n, s] : z.rho[b]) EXPECT_EQ(s, b == 0 || b == 5 ? 1 : x.size(b, n) + y.size(b, n));
  EXPECT_LT(rel(oracle::contract(z), oracle::contract(x) - 3.0 * oracle::contract(y)), 1e-12);
  EXPECT_THROW(add(x, random_block_mps(5, 3, SizeRule::constant(1), rng)), ValidationError);
}

TEST(BlockMps, ParticleExpectationAndPartialEigenvectors) {
  Rng rng(9);
  for (int K = 2; K <= 6; ++K)
    for (int N = 0; N <= K; ++N) {
      const BlockMPS x = random_block_mps(K, N, SizeRule::constant(2), rng);
      EXPECT_NEAR(particle_expectation(x), N, 1e-12);
      for (int b = 0; b <= K; ++b) EXPECT_TRUE(verify_block_eigen(x, b));
    }
}

TEST(BlockMps, FromFullRecoversBlockStructure) {
  Rng rng(10);
  for (const Case& c : cases()) {
    const BlockMPS x = random_block_mps(c.K, c.N, SizeRule::constant(c.rho), rng);
    // hide the structure behind random bond gauges
    FullMPS f = to_full(x);
    for (int b = 1; b < c.K; ++b) {
      const int r = static_cast<int>(f.cores[b].rows());
      const Mat g = random_normal(rng, r, r) + 3.0 * Mat::Identity(r, r);
      const Mat gi = g.inverse();
      for (Mat& s : f.cores[b - 1].slice) s = (s * g).eval();
      for (Mat& s : f.cores[b].slice) s = (gi * s).eval();
    }
    const BlockMPS y = from_full(f);
    EXPECT_EQ(y.N, c.N);
    EXPECT_LT(rel(oracle::contract(y), oracle::contract(x)), 1e-10);
    EXPECT_TRUE(y.within_size_bounds());
  }
}

TEST(BlockMps, FromFullRejectsMixedParticleNumbers) {
  Rng rng(11);
  const BlockMPS a = random_block_mps(4, 1, SizeRule::constant(1), rng);
  const BlockMPS b = random_block_mps(4, 2, SizeRule::constant(1), rng);
  const FullMPS fa = to_full(a), fb = to_full(b);
  // direct sum of the two full representations
  FullMPS s;
  for (int k = 0; k < 4; ++k) {
    Core c;
    for (int a2 = 0; a2 < 2; ++a2) {
      const Mat& p = fa.cores[k].slice[a2];
      const Mat& q = fb.cores[k].slice[a2];
      if (k == 0) {
        Mat m(1, p.cols() + q.cols());
        m << p, q;
        c.slice.push_back(m);
      } else if (k == 3) {
        Mat m(p.rows() + q.rows(), 1);
        m << p, q;
        c.slice.push_back(m);
      } else {
        Mat m = Mat::Zero(p.rows() + q.rows(), p.cols() + q.cols());
        m.topLeftCorner(p.rows(), p.cols()) = p;
        m.bottomRightCorner(q.rows(), q.cols()) = q;
        c.slice.push_back(m);
      }
    }
    s.cores.push_back(c);
  }
  EXPECT_THROW(from_full(s), ValidationError);
}

TEST(BlockMps, WStateRanks) {
  // |100> + |010> + |001>
  FullMPS w;
  Core c0, c1, c2;
  c0.slice = {(Mat(1, 2) << 1, 0).finished(), (Mat(1, 2) << 0, 1).finished()};
  c1.slice = {(Mat(2, 2) << 1, 0, 0, 1).finished(), (Mat(2, 2) << 0, 1, 0, 0).finished()};
  c2.slice = {(Mat(2, 1) << 0, 1).finished(), (Mat(2, 1) << 1, 0).finished()};
  w.cores = {c0, c1, c2};
  const Vec t = oracle::contract(w);
  ASSERT_NEAR(t.sum(), 3.0, 1e-14);
  const BlockMPS b = from_full(w);
  EXPECT_EQ(b.N, 1);
  EXPECT_EQ(b.rank(1), 2);
  EXPECT_EQ(b.rank(2), 2);
}

TEST(BlockMps, UnfoldingsRoundTrip) {
  Rng rng(12);
  BlockMPS x = random_block_mps(5, 2, SizeRule::constant(2), rng);
  const BlockMPS x0 = x;
  for (int c = 0; c < 5; ++c) {
    for (const auto& [m, s] : x.rho[c + 1]) set_left_unfold(x, c, m, left_unfold(x, c, m));
    for (const auto& [n, s] : x.rho[c]) set_right_unfold(x, c, n, right_unfold(x, c, n));
  }
  EXPECT_EQ(oracle::contract(x), oracle::contract(x0));
}

TEST(BlockMps, ValidateRejectsInadmissibleSectors) {
  Rng rng(13);
  BlockMPS x = random_block_mps(4, 2, SizeRule::constant(1), rng);
  x.rho[1][5] = 1;
  EXPECT_THROW(x.validate(), ValidationError);
}
