#include "bsmps/experiments.hpp"

#include "bsmps/full_mps.hpp"
#include "bsmps/linalg.hpp"
#include "bsmps/mpo.hpp"
#include "bsmps/symbolic.hpp"

#include <cmath>

namespace bsmps {

namespace {

std::vector<int> interior(const std::vector<int>& r) {
  return std::vector<int>(r.begin() + 1, r.end() - 1);
}

double particle_rq(const FullMPS& x, const FullMPO& p) {
  return inner(x, apply_mpo(p, x)) / inner(x, x);
}

/// The same tensor in a generic full-format gauge: every interior bond is
/// rotated by a random orthogonal matrix, so no block structure is visible.
FullMPS random_gauge(const FullMPS& x, Rng& rng) {
  FullMPS y = x;
  for (int b = 1; b < y.order(); ++b) {
    const int r = static_cast<int>(y.cores[b].rows());
    Mat q, unused;
    qr_thin(random_normal(rng, r, r), q, unused);
    for (Mat& s : y.cores[b - 1].slice) s = (s * q).eval();
    for (Mat& s : y.cores[b].slice) s = (q.transpose() * s).eval();
  }
  y.ortho = Ortho::None;
  return y;
}

}  // namespace

RankTable rank_table(int K, std::uint64_t seed, const CoeffShape& shape, bool two_body) {
  if (K < 2 || K % 2 != 0) throw ValidationError("rank_table: K must be even and >= 2");
  Rng rng(seed);
  const OneBodyCoeffs t = random_onebody(K, rng, shape.banded);
  RankTable out;
  const FullMPO s = build_S(t);
  out.one_constructed = mpo_rank_profile(s);
  out.one_compressed = mpo_rank_profile(mpo_compress(s));
  out.one_compressed_sym = mpo_rank_profile(sym_compress(sym_from_onebody(t)));
  if (two_body) {
    const TwoBodyCoeffs v = random_twobody(K, rng, shape.local);
    const SymMPO dsym = sym_from_twobody(v);
    const FullMPO d = to_dense_mpo(dsym);
    out.two_constructed = mpo_rank_profile(d);
    out.two_compressed = mpo_rank_profile(mpo_compress(d));
    out.two_compressed_sym = mpo_rank_profile(sym_compress(dsym));
  }
  return out;
}

BlockMPS rounding_tensor(int K, int N, const std::vector<double>& sigma, Rng& rng) {
  const int h = K / 2;
  BlockMPS x = random_block_mps(K, N, SizeRule::constant(1), rng);
  if (static_cast<int>(sigma.size()) != static_cast<int>(x.rho[h].size()))
    throw ValidationError("rounding_tensor: need one singular value per middle sector");
  for (int c = 0; c < h; ++c)
    for (const auto& [m, s] : x.rho[c + 1]) {
      const Mat u = left_unfold(x, c, m);
      set_left_unfold(x, c, m, u / u.norm());
    }
  for (int c = h; c < K; ++c)
    for (const auto& [n, s] : x.rho[c]) {
      const Mat u = right_unfold(x, c, n);
      set_right_unfold(x, c, n, u / u.norm());
    }
  int i = 0;
  for (const auto& [n, s] : x.rho[h]) {
    for (int a = 0; a < 2; ++a)
      if (auto it = x.cores[h].blocks(a).find(n); it != x.cores[h].blocks(a).end()) it->second *= sigma[i];
    ++i;
  }
  x.ortho = Ortho::None;
  return x;
}

std::vector<RoundingRow> rounding_experiment(int K, int N, std::uint64_t seed, int exponents, int rank) {
  std::vector<RoundingRow> rows;
  const FullMPO p = build_F(std::vector<double>(static_cast<size_t>(K), 1.0));
  std::vector<int> caps(static_cast<size_t>(K) + 1, rank);
  caps.front() = caps.back() = 1;
  for (int e = 0; e <= exponents; ++e) {
    const double eps = std::ldexp(1.0, -e);
    Rng rng(seed);
    const BlockMPS x = rounding_tensor(K, N, {6, 5, 4, 3, 2, 1, 1 - eps}, rng);
    RoundingRow r;
    r.eps = eps;
    r.gap = eps;
    const auto [yf, spec] = tt_svd(random_gauge(to_full(x), rng), Side::Right);
    r.dev_full = std::abs(particle_rq(truncate(yf, spec, Truncation::with_caps(caps)), p) - N);
    const BlockMPS yb = round_block(x, BlockTruncation::with_bond_caps(caps));
    r.dev_block = std::abs(particle_expectation(yb) - N);
    rows.push_back(r);
  }
  return rows;
}

std::vector<ApplyRow> apply_experiment(int K, bool two_body, const std::vector<double>& eps, std::uint64_t seed) {
  if (K < 2 || K % 2 != 0) throw ValidationError("apply_experiment: K must be even and >= 2");
  Rng rng(seed);
  FullMPO m;
  if (two_body) {
    m = mpo_compress(to_dense_mpo(sym_from_twobody(random_twobody(K, rng))));
  } else {
    m = mpo_compress(build_S(random_onebody(K, rng)));
  }
  std::vector<int> ones(static_cast<size_t>(K) + 1, 1);
  FullMPS x = random_full_mps(ones, rng);
  x = scale(x, 1.0 / norm(x));
  const FullMPS y = apply_mpo(m, x);
  const auto [ys, spec] = tt_svd(y, Side::Right);
  const double ny = norm(ys);
  std::vector<ApplyRow> rows;
  for (double e : eps) {
    const FullMPS z = e > 0.0 ? truncate(ys, spec, Truncation::with_eps(e * ny)) : ys;
    rows.push_back({e, interior(z.ranks())});
  }
  return rows;
}

}  // namespace bsmps
