#include "bsmps/mpo.hpp"

#include "oracle.hpp"

#include <gtest/gtest.h>

using namespace bsmps;

namespace {

std::vector<int> one_body_table(int K) {
  std::vector<int> r;
  for (int b = 1; b < K; ++b) r.push_back(2 + 2 * std::min(b, K - b));
  return r;
}

double rel(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace

TEST(Mpo, LaplaceOperator) {
  const std::vector<double> lambda{0.5, -1.0, 2.0, 3.0};
  const FullMPO f = build_F(lambda);
  Mat ref = Mat::Zero(16, 16);
  for (int i = 0; i < 4; ++i) ref += lambda[i] * oracle::word_matrix({{i, true}, {i, false}}, 4);
  EXPECT_LT(rel(oracle::contract(f), ref), 1e-14);
  for (int r : mpo_rank_profile(f)) EXPECT_EQ(r, 2);
}

TEST(Mpo, OneBodyOperatorMatchesOracle) {
  Rng rng(1);
  for (int K : {2, 4, 6})
    for (int trial = 0; trial < 3; ++trial) {
      const OneBodyCoeffs t = random_onebody(K, rng);
      EXPECT_LT(rel(oracle::contract(build_S(t)), oracle::onebody(t.t, K)), 1e-12);
    }
}

TEST(Mpo, TwoBodyOperatorMatchesOracle) {
  Rng rng(2);
  for (int K : {2, 4, 6})
    for (int trial = 0; trial < 3; ++trial) {
      const TwoBodyCoeffs v = random_twobody(K, rng);
      EXPECT_LT(rel(oracle::contract(build_D(v)), oracle::twobody(v.v, K)), 1e-12);
    }
}

TEST(Mpo, OddOrderIsRejected) {
  Rng rng(3);
  EXPECT_THROW(sym_from_onebody(random_onebody(5, rng)), ValidationError);
}

TEST(Mpo, OneBodyRanks) {
  Rng rng(4);
  for (int K : {8, 16}) {
    const FullMPO s = build_S(random_onebody(K, rng));
    EXPECT_EQ(mpo_rank_profile(s), one_body_table(K));
    EXPECT_EQ(mpo_rank_profile(mpo_compress(s)), one_body_table(K));
  }
}

TEST(Mpo, TwoBodyRanksAtEightOrbitals) {
  Rng rng(5);
  const SymMPO d = sym_from_twobody(random_twobody(8, rng));
  EXPECT_EQ(mpo_rank_profile(d), (std::vector<int>{4, 24, 33, 46, 33, 24, 4}));
  EXPECT_EQ(mpo_rank_profile(sym_compress(d)), (std::vector<int>{4, 16, 33, 46, 33, 16, 4}));
  EXPECT_EQ(mpo_rank_profile(mpo_compress(to_dense_mpo(d))), (std::vector<int>{4, 16, 33, 46, 33, 16, 4}));
}

TEST(Mpo, CompressionPreservesOperator) {
  Rng rng(6);
  const TwoBodyCoeffs v = random_twobody(6, rng);
  const FullMPO d = build_D(v);
  const FullMPO c = mpo_compress(d);
  EXPECT_LT(rel(oracle::contract(c), oracle::contract(d)), 1e-11);
}

TEST(Mpo, BandedAndLocalBounds) {
  Rng rng(7);
  const auto s = mpo_rank_profile(sym_compress(sym_from_onebody(random_onebody(12, rng, 2))));
  for (int r : s) EXPECT_LE(r, 6);
  const auto d = mpo_rank_profile(sym_compress(sym_from_twobody(random_twobody(10, rng, 3))));
  for (int r : d) EXPECT_LE(r, 17);
}

TEST(Mpo, BandedOperatorMatchesOracle) {
  Rng rng(8);
  const OneBodyCoeffs t = random_onebody(6, rng, 1);
  const TwoBodyCoeffs v = random_twobody(6, rng, 2);
  EXPECT_LT(rel(oracle::contract(to_dense_mpo(sym_hamiltonian(t, v))),
                oracle::onebody(t.t, 6) + oracle::twobody(v.v, 6)),
            1e-12);
}

TEST(Mpo, HermitianCoefficientsGiveSymmetricOperator) {
  Rng rng(9);
  const TwoBodyCoeffs v = random_twobody(4, rng, -1, true);
  EXPECT_TRUE(v.is_hermitian());
  const Mat d = oracle::contract(build_D(v));
  EXPECT_LT((d - d.transpose()).norm(), 1e-12 * d.norm());
  EXPECT_FALSE(random_twobody(4, rng).is_hermitian());
}
