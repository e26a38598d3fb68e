#include "bsmps/experiments.hpp"

#include "oracle.hpp"

#include <gtest/gtest.h>

using namespace bsmps;

TEST(Experiments, RankTableIsSeedIndependentForDenseCoefficients) {
  const RankTable a = rank_table(8, 1), b = rank_table(8, 2);
  EXPECT_EQ(a.one_compressed, b.one_compressed);
  EXPECT_EQ(a.two_compressed, b.two_compressed);
  EXPECT_EQ(a.two_compressed, a.two_compressed_sym);
  EXPECT_THROW(rank_table(7, 1), ValidationError);
}

TEST(Experiments, RoundingTensorHasPrescribedMiddleSpectrum) {
  Rng rng(1);
  const std::vector<double> sigma{6, 5, 4, 3, 2, 1, 0.5};
  const BlockMPS x = rounding_tensor(12, 6, sigma, rng);
  const Vec t = oracle::contract(x);
  const Vec s = oracle::unfolding_spectrum(t, 12, 6);
  ASSERT_EQ(s.size(), 7);
  for (int i = 0; i < 7; ++i) EXPECT_NEAR(s(i), sigma[i], 1e-12);
  for (int b = 0; b <= 12; ++b)
    for (const auto& [n, sz] : x.rho[b]) EXPECT_EQ(sz, 1);
}

TEST(Experiments, BlockRoundingConservesParticleNumber) {
  const auto rows = rounding_experiment(12, 6, 3, 50);
  ASSERT_EQ(rows.size(), 51u);
  for (const RoundingRow& r : rows) EXPECT_LE(r.dev_block, 1e-12);
  EXPECT_LE(rows.front().dev_full, 1e-12);
}

TEST(Experiments, ApplyProfilesAreSymmetricAndBounded) {
  const auto rows = apply_experiment(8, false, {0.0, 1e-12}, 1);
  ASSERT_EQ(rows.size(), 2u);
  const auto& r0 = rows[0].ranks;
  EXPECT_EQ(r0[3], 10);  // untruncated: MPO rank 10 times input rank 1
  for (size_t i = 0; i < r0.size(); ++i) {
    EXPECT_EQ(r0[i], r0[r0.size() - 1 - i]);
    EXPECT_LE(rows[1].ranks[i], r0[i]);
  }
}
