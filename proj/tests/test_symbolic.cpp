#include "bsmps/mpo.hpp"
#include "bsmps/symbolic.hpp"

#include "oracle.hpp"

#include <gtest/gtest.h>

using namespace bsmps;

namespace {

/// coeff * a^*_{c0} a^*_{c1} a_{a0} a_{a1} written with increasing index lists.
SymMPO normal_ordered(std::vector<int> cr, std::vector<int> an, double coeff, int K) {
  if (cr.size() == 2 && cr[0] > cr[1]) {
    std::swap(cr[0], cr[1]);
    coeff = -coeff;
  }
  if (an.size() == 2 && an[0] > an[1]) {
    std::swap(an[0], an[1]);
    coeff = -coeff;
  }
  return sym_rank_one(cr, an, coeff, K);
}

/// Sector sizes predicted independently: rho_out(b, n) = sum_j rho_x(b, n - f_j).
SizeTable expected_sizes(const SymMPO& m, const BlockMPS& x) {
  SizeTable t(static_cast<size_t>(x.K) + 1);
  for (int b = 0; b <= x.K; ++b) {
    const SectorRange r = x.range(b);
    for (int f : m.flux[b])
      for (const auto& [n, s] : x.rho[b])
        if (r.contains(n + f)) t[b][n + f] += s;
  }
  return t;
}

Mat dense_of(const SymMPO& m) { return oracle::contract(to_dense_mpo(m)); }

}  // namespace

TEST(Symbolic, ElementarySymbols) {
  EXPECT_EQ(elem_delta(Elem::A), -1);
  EXPECT_EQ(elem_delta(Elem::Ad), 1);
  EXPECT_EQ(elem_delta(Elem::S), 0);
  EXPECT_EQ(elem_delta(Elem::N), 0);
  EXPECT_EQ(elem_matrix(Elem::Ad), elem_matrix(Elem::A).transpose());
  EXPECT_EQ(elem_matrix(Elem::N), elem_matrix(Elem::Ad) * elem_matrix(Elem::A));
  EXPECT_EQ(symbol_name(Elem::Ad, 0), "A_l*");
  EXPECT_EQ(symbol_name(Elem::Ad, -1), "A_r*");
  EXPECT_EQ(symbol_name(Elem::A, 0), "A_l");
  EXPECT_EQ(symbol_name(Elem::A, 1), "A_r");
  EXPECT_EQ(symbol_name(Elem::S, 1), "S+");
  EXPECT_EQ(symbol_name(Elem::S, -1), "S-");
  EXPECT_EQ(symbol_name(Elem::Il, 0), "I_l");
  EXPECT_EQ(symbol_name(Elem::Ir, 0), "I_r");
  EXPECT_EQ(symbol_name(Elem::Il, 2), "I^{+2}");
}

TEST(Symbolic, SymCoreMergesEqualSymbols) {
  SymCore c{1, 1, {}};
  c.add(0, 0, 1.0, Elem::S);
  c.add(0, 0, 2.0, Elem::S);
  c.add(0, 0, 0.0, Elem::N);
  ASSERT_EQ(c.entries.at({0, 0}).size(), 1u);
  EXPECT_DOUBLE_EQ(c.entries.at({0, 0})[0].c, 3.0);
  EXPECT_EQ(c.entry_matrix(0, 0), 3.0 * elem_matrix(Elem::S));
}

TEST(Symbolic, RankOneProgramsMatchOracle) {
  const int K = 4;
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      const SymMPO m = sym_rank_one({i}, {j}, 1.5, K);
      m.validate();
      EXPECT_LT((dense_of(m) - 1.5 * oracle::word_matrix({{i, true}, {j, false}}, K)).norm(), 1e-14);
    }
  for (int i1 = 0; i1 < K; ++i1)
    for (int i2 = i1 + 1; i2 < K; ++i2)
      for (int j1 = 0; j1 < K; ++j1)
        for (int j2 = j1 + 1; j2 < K; ++j2) {
          const SymMPO m = sym_rank_one({i1, i2}, {j1, j2}, -0.5, K);
          const Mat ref = -0.5 * oracle::word_matrix({{i1, true}, {i2, true}, {j1, false}, {j2, false}}, K);
          EXPECT_LT((dense_of(m) - ref).norm(), 1e-14);
        }
  EXPECT_THROW(sym_rank_one({1, 0}, {0, 1}, 1.0, K), ValidationError);
  EXPECT_THROW(sym_rank_one({0}, {0, 1}, 1.0, K), ValidationError);
}

TEST(Symbolic, ApplyMatchesDenseActionAndFluxSizes) {
  Rng rng(1);
  int n_cases = 0;
  for (int K = 2; K <= 6; K += 2)
    for (int N = 0; N <= std::min(3, K); ++N)
      for (int trial = 0; trial < 3; ++trial, ++n_cases) {
        const OneBodyCoeffs t = random_onebody(K, rng);
        const TwoBodyCoeffs v = random_twobody(K, rng);
        for (const SymMPO& m : {sym_from_onebody(t), sym_from_twobody(v), sym_hamiltonian(t, v)}) {
          const BlockMPS x = random_block_mps(K, N, SizeRule::constant(2), rng);
          const BlockMPS y = apply_sym(m, x);
          const Vec ref = dense_of(m) * oracle::contract(x);
          EXPECT_LT((oracle::contract(y) - ref).norm(), 1e-10 * std::max(1.0, ref.norm()));
          const SizeTable s = expected_sizes(m, x);
          for (int b = 0; b <= K; ++b) {
            std::map<int, int> nz;
            for (const auto& [n, sz] : s[b])
              if (sz > 0) nz[n] = sz;
            EXPECT_EQ(y.rho[b], nz) << "bond " << b;
            EXPECT_EQ(apply_sizes(m, x)[b], nz);
          }
        }
      }
  EXPECT_GE(n_cases, 30);
}

TEST(Symbolic, CompressionPreservesOperatorAndNeverGrows) {
  Rng rng(2);
  for (int K : {4, 6}) {
    const SymMPO m = sym_add(sym_from_onebody(random_onebody(K, rng)), sym_from_twobody(random_twobody(K, rng)));
    const SymMPO c = sym_compress(m);
    c.validate();
    const Mat a = dense_of(m), b = dense_of(c);
    EXPECT_LT((a - b).norm(), 1e-10 * a.norm());
    const auto rm = m.ranks(), rc = c.ranks();
    for (size_t i = 0; i < rm.size(); ++i) EXPECT_LE(rc[i], rm[i]);
  }
}

TEST(Symbolic, SumOfProgramsIsSumOfOperators) {
  const int K = 4;
  const SymMPO a = sym_rank_one({0}, {3}, 2.0, K), b = sym_rank_one({1, 2}, {0, 3}, -1.0, K);
  const SymMPO s = sym_add(a, b);
  EXPECT_LT((dense_of(s) - dense_of(a) - dense_of(b)).norm(), 1e-14);
  EXPECT_EQ(s.ranks()[2], a.ranks()[2] + b.ranks()[2]);
}

TEST(Symbolic, AnticommutationThroughApplication) {
  // a_i^* a_j a_j^* a_k + a_i^* a_j^* a_j a_k = a_i^* a_k  (j distinct from i, k)
  Rng rng(3);
  const int K = 6;
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> d(0, K - 1);
    const int i = d(rng), k = d(rng);
    int j = d(rng);
    while (j == i || j == k) j = d(rng);
    const BlockMPS x = random_block_mps(K, 3, SizeRule::constant(2), rng);
    const BlockMPS lhs1 = apply_sym(sym_rank_one({i}, {j}, 1.0, K), apply_sym(sym_rank_one({j}, {k}, 1.0, K), x));
    const BlockMPS lhs2 = apply_sym(normal_ordered({i, j}, {j, k}, 1.0, K), x);
    const BlockMPS rhs = apply_sym(sym_rank_one({i}, {k}, 1.0, K), x);
    const Vec diff = oracle::contract(lhs1) + oracle::contract(lhs2) - oracle::contract(rhs);
    EXPECT_LT(diff.norm(), 1e-12 * std::max(1.0, oracle::contract(rhs).norm()));
  }
}

TEST(Symbolic, FluxInferenceOnHandBuiltProgram) {
  // a_0^* a_1 on two orbitals: [A*  ] x [A]
  SymMPO m;
  m.K = 2;
  SymCore c0{1, 1, {}}, c1{1, 1, {}};
  c0.add(0, 0, 1.0, Elem::Ad);
  c1.add(0, 0, 1.0, Elem::A);
  m.cores = {c0, c1};
  infer_flux(m);
  EXPECT_EQ(m.flux[1], std::vector<int>{1});
  m.validate();
  EXPECT_LT((dense_of(m) - oracle::word_matrix({{0, true}, {1, false}}, 2)).norm(), 1e-14);
  EXPECT_NE(dump(m).find("A_l*"), std::string::npos);

  SymMPO bad = m;
  bad.cores[1].entries.clear();
  bad.cores[1].add(0, 0, 1.0, Elem::Ad);
  EXPECT_THROW(infer_flux(bad), ValidationError);
}

TEST(Symbolic, DenseMaterializationCarriesFlux) {
  Rng rng(4);
  const SymMPO m = sym_from_onebody(random_onebody(4, rng));
  const FullMPO d = to_dense_mpo(m);
  EXPECT_EQ(d.flux, m.flux);
  EXPECT_EQ(d.ranks(), m.ranks());
}
