#include "bsmps/mpo.hpp"
#include "bsmps/solvers.hpp"

#include "oracle.hpp"

#include <gtest/gtest.h>

using namespace bsmps;

namespace {

/// Dense vectors d x / d(entry) for every block entry of every core: they
/// span the tangent space of the fixed-size block manifold at x.
Mat block_tangent_basis(const BlockMPS& x) {
  std::vector<Vec> cols;
  for (int k = 0; k < x.K; ++k)
    for (int a = 0; a < 2; ++a)
      for (const auto& [n, blk] : x.cores[k].blocks(a))
        for (Eigen::Index i = 0; i < blk.rows(); ++i)
          for (Eigen::Index j = 0; j < blk.cols(); ++j) {
            BlockMPS d = x;
            for (int b = 0; b < 2; ++b)
              for (auto& [m, mb] : d.cores[k].blocks(b)) mb.setZero();
            d.cores[k].blocks(a)[n](i, j) = 1.0;
            cols.push_back(oracle::contract(d));
          }
  Mat B(cols[0].size(), static_cast<Eigen::Index>(cols.size()));
  for (size_t c = 0; c < cols.size(); ++c) B.col(static_cast<Eigen::Index>(c)) = cols[c];
  return B;
}

/// Same for a full-format MPS (all core entries).
Mat full_tangent_basis(const FullMPS& x) {
  std::vector<Vec> cols;
  for (int k = 0; k < x.order(); ++k)
    for (int a = 0; a < 2; ++a)
      for (Eigen::Index i = 0; i < x.cores[k].rows(); ++i)
        for (Eigen::Index j = 0; j < x.cores[k].cols(); ++j) {
          FullMPS d = x;
          for (Mat& s : d.cores[k].slice) s.setZero();
          d.cores[k].slice[a](i, j) = 1.0;
          cols.push_back(oracle::contract(d));
        }
  Mat B(cols[0].size(), static_cast<Eigen::Index>(cols.size()));
  for (size_t c = 0; c < cols.size(); ++c) B.col(static_cast<Eigen::Index>(c)) = cols[c];
  return B;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Interface matrices of a full MPS: rows index the first k modes (left) or
/// columns the modes from k on (right).
Mat left_interface(const FullMPS& x, int k) {
  Mat acc = Mat::Ones(1, 1);
  for (int c = 0; c < k; ++c) {
    const Mat& s0 = x.cores[c].slice[0];
    const Mat& s1 = x.cores[c].slice[1];
    Mat next(acc.rows() * 2, s0.cols());
    for (Eigen::Index r = 0; r < acc.rows(); ++r) {
      next.row(2 * r) = acc.row(r) * s0;
      next.row(2 * r + 1) = acc.row(r) * s1;
    }
    acc = next;
  }
  return acc;
}

Mat right_interface(const FullMPS& x, int k) {
  Mat acc = Mat::Ones(1, 1);
  for (int c = x.order() - 1; c >= k; --c) {
    const Mat& s0 = x.cores[c].slice[0];
    const Mat& s1 = x.cores[c].slice[1];
    Mat next(s0.rows(), acc.cols() * 2);
    const Mat p0 = s0 * acc, p1 = s1 * acc;
    next.leftCols(acc.cols()) = p0;
    next.rightCols(acc.cols()) = p1;
    acc = next;
  }
  return acc;
}

SymMPO hermitian_program(int K, Rng& rng, OneBodyCoeffs* t = nullptr, TwoBodyCoeffs* v = nullptr) {
  OneBodyCoeffs tt = random_onebody(K, rng);
  TwoBodyCoeffs vv = random_twobody(K, rng, -1, true);
  if (t) *t = tt;
  if (v) *v = vv;
  return sym_hamiltonian(tt, vv);
}

double sector_min(const OneBodyCoeffs& t, const TwoBodyCoeffs& v, int K, int N) {
  return oracle::sector_ground_energy(oracle::onebody(t.t, K) + oracle::twobody(v.v, K), K, N);
}

double single_particle_sum(const OneBodyCoeffs& t, int N) {
  Eigen::SelfAdjointEigenSolver<Mat> es(t.t);
  return es.eigenvalues().head(N).sum();
}

void expect_conserving(const SolverResult& r, int N) {
  for (double p : r.trace.substep_particles) EXPECT_NEAR(p, N, 1e-12);
  for (const TraceRow& row : r.trace.rows) EXPECT_NEAR(row.particles, N, 1e-12);
}

}  // namespace

TEST(Solvers, RayleighQuotientAndResidualMatchDense) {
  Rng rng(1);
  OneBodyCoeffs t;
  TwoBodyCoeffs v;
  const SymMPO h = hermitian_program(6, rng, &t, &v);
  const Mat H = oracle::onebody(t.t, 6) + oracle::twobody(v.v, 6);
  for (int N = 0; N <= 6; ++N) {
    const BlockMPS x = random_block_mps(6, N, SizeRule::constant(2), rng);
    const Vec xv = oracle::contract(x);
    const double rq = xv.dot(H * xv) / xv.squaredNorm();
    EXPECT_NEAR(rayleigh_quotient(h, x), rq, 1e-10 * std::max(1.0, std::abs(rq)));
    EXPECT_NEAR(residual_norm(h, x), (H * xv - rq * xv).norm() / xv.norm(), 1e-9);
  }
}

TEST(Solvers, LanczosFindsSmallestEigenpair) {
  Rng rng(2);
  const Mat a = random_normal(rng, 300, 300);
  const Mat m = a + a.transpose();
  auto op = [&](const Vec& x) { return Vec(m * x); };
  const auto [e, vec] = lanczos_smallest(op, Vec::Ones(300), 1e-10, 2000);
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  EXPECT_NEAR(e, es.eigenvalues()(0), 1e-8);
  EXPECT_LT((m * vec - e * vec).norm(), 1e-6);
}

TEST(Solvers, TangentProjectionMatchesDenseProjector) {
  Rng rng(3);
  const int K = 5, N = 2;
  const BlockMPS x = random_block_mps(K, N, SizeRule::constant(2), rng);
  const Mat Qb = oracle::range_projector(block_tangent_basis(x));
  const Mat Qf = oracle::range_projector(full_tangent_basis(to_full(x)));
  for (int trial = 0; trial < 3; ++trial) {
    const BlockMPS z = random_block_mps(K, N, SizeRule::constant(3), rng);
    const Vec zv = oracle::contract(z);
    const BlockMPS pz = tangent_to_mps(tangent_project(x, z));
    const Vec got = oracle::contract(pz);
    EXPECT_LT((got - Qb * zv).norm(), 1e-10 * zv.norm());
    EXPECT_LT((got - Qf * zv).norm(), 1e-10 * zv.norm());
    for (int b = 1; b < K; ++b) EXPECT_LE(pz.rank(b), 2 * x.rank(b));
  }
  // x lies in its own tangent space
  EXPECT_LT((oracle::contract(tangent_to_mps(tangent_project(x, x))) - oracle::contract(x)).norm(),
            1e-10 * norm(x));
}

TEST(Solvers, TangentProjectorCommutesWithParticleNumber) {
  Rng rng(4);
  for (int K : {4, 5, 6}) {
    const BlockMPS x = random_block_mps(K, K / 2, SizeRule::constant(2), rng);
    const Mat Q = oracle::range_projector(full_tangent_basis(to_full(x)));
    const Mat P = oracle::particle_number(K).asDiagonal();
    EXPECT_LT((Q * P - P * Q).norm(), 1e-10);
  }
}

TEST(Solvers, TwoSiteProjectorCommutesWithParticleNumber) {
  Rng rng(5);
  for (int K : {4, 5, 6}) {
    const BlockMPS x = random_block_mps(K, 2, SizeRule::constant(2), rng);
    const FullMPS l = to_full(orthogonalize_block(x, Side::Left));
    const FullMPS r = to_full(orthogonalize_block(x, Side::Right));
    const Mat P = oracle::particle_number(K).asDiagonal();
    for (int k = 0; k + 1 < K; ++k) {
      const Mat L = left_interface(l, k);
      const Mat R = right_interface(r, k + 2);
      const Mat Q = kron(kron(L * L.transpose(), Mat::Identity(4, 4)), R.transpose() * R);
      EXPECT_LT((Q * P - P * Q).norm(), 1e-10) << "K=" << K << " k=" << k;
      EXPECT_LT((Q * Q - Q).norm(), 1e-10);
    }
  }
}

TEST(Solvers, AlsReachesDenseMinimumWithMaximalSizes) {
  Rng rng(6);
  OneBodyCoeffs t;
  TwoBodyCoeffs v;
  const SymMPO h = hermitian_program(4, rng, &t, &v);
  const BlockMPS x0 = random_block_mps(4, 2, SizeRule::max_admissible(), rng);
  SolverConfig cfg;
  cfg.max_iter = 5;
  const SolverResult r = als_one_site(h, x0, cfg);
  EXPECT_NEAR(r.energy, sector_min(t, v, 4, 2), 1e-9);
  EXPECT_EQ(r.x.rho, x0.rho);
  expect_conserving(r, 2);
  // non-increasing energies per local update
  for (size_t i = 1; i < r.trace.substep_energies.size(); ++i)
    EXPECT_LE(r.trace.substep_energies[i], r.trace.substep_energies[i - 1] + 1e-10);
}

TEST(Solvers, AlsOnParticleNumberProgramStaysAtN) {
  Rng rng(7);
  const SymMPO p = sym_from_laplace(std::vector<double>(6, 1.0));
  const BlockMPS x0 = random_block_mps(6, 3, SizeRule::constant(2), rng);
  SolverConfig cfg;
  cfg.max_iter = 2;
  const SolverResult r = als_one_site(p, x0, cfg);
  for (double e : r.trace.substep_energies) EXPECT_NEAR(e, 3.0, 1e-12);
  EXPECT_EQ(r.x.rho, orthogonalize_block(x0, Side::Right).rho);
}

TEST(Solvers, TwoSiteDmrgMatchesDenseMinimum) {
  Rng rng(8);
  OneBodyCoeffs t;
  TwoBodyCoeffs v;
  const SymMPO h = hermitian_program(6, rng, &t, &v);
  const BlockMPS x0 = random_block_mps(6, 3, SizeRule::constant(1), rng);
  SolverConfig cfg;
  cfg.max_iter = 20;
  cfg.eps = 1e-12;
  const SolverResult r = dmrg_two_site(h, x0, cfg);
  EXPECT_NEAR(r.energy, sector_min(t, v, 6, 3), 1e-8);
  EXPECT_TRUE(r.x.within_size_bounds());
  expect_conserving(r, 3);
  for (size_t i = 1; i < r.trace.substep_energies.size(); ++i)
    EXPECT_LE(r.trace.substep_energies[i], r.trace.substep_energies[i - 1] + 1e-10);
}

TEST(Solvers, TwoSiteDmrgGrowsOnlyWhereNeeded) {
  // a diagonal operator has a determinant ground state: sectors stay size 1
  const int K = 6;
  OneBodyCoeffs t;
  t.K = K;
  t.t = Mat::Zero(K, K);
  for (int i = 0; i < K; ++i) t.t(i, i) = i % 2 ? -1.0 : 1.0;
  const SymMPO h = sym_compress(sym_from_onebody(t));
  Rng rng(9);
  SolverConfig cfg;
  cfg.eps = 1e-10;
  const SolverResult r = dmrg_two_site(h, random_block_mps(K, 3, SizeRule::constant(1), rng), cfg);
  EXPECT_NEAR(r.energy, -3.0, 1e-10);
  for (int b = 0; b <= K; ++b) EXPECT_EQ(r.x.rank(b), 1);
}

TEST(Solvers, RiemannianGradientDescentOnHoppingChain) {
  const int K = 8, N = 4;
  const OneBodyCoeffs t = hopping_chain(K);
  const SymMPO h = sym_compress(sym_from_onebody(t));
  Rng rng(10);
  SolverConfig cfg;
  cfg.max_iter = 300;
  const SolverResult r = riemannian_gd(h, random_block_mps(K, N, SizeRule::constant(3), rng), cfg);
  EXPECT_NEAR(r.energy, single_particle_sum(t, N), 1e-4);
  for (size_t i = 1; i < r.trace.rows.size(); ++i)
    EXPECT_LE(r.trace.rows[i].energy, r.trace.rows[i - 1].energy + 1e-12);
  for (int b = 0; b <= K; ++b)
    for (const auto& [n, s] : r.x.rho[b]) EXPECT_GE(s, 1);
  expect_conserving(r, N);
}

TEST(Solvers, RiemannianGradientDescentIsStationaryAtEigenvector) {
  const int K = 6;
  OneBodyCoeffs t;
  t.K = K;
  t.t = Mat::Zero(K, K);
  for (int i = 0; i < K; ++i) t.t(i, i) = i;
  const SymMPO h = sym_compress(sym_from_onebody(t));
  const BlockMPS x = determinant(K, {0, 1});
  const SolverResult r = riemannian_gd(h, x, SolverConfig{});
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.residual, 1e-10);
  EXPECT_LT((oracle::contract(r.x) - oracle::contract(x)).norm(), 1e-10);
}

TEST(Solvers, GradientDescentOnHoppingChain) {
  const int K = 8, N = 4;
  const OneBodyCoeffs t = hopping_chain(K);
  const SymMPO h = sym_compress(sym_from_onebody(t));
  Rng rng(11);
  SolverConfig cfg;
  cfg.max_iter = 300;
  const SolverResult r = gradient_descent(h, random_block_mps(K, N, SizeRule::constant(1), rng), cfg);
  EXPECT_NEAR(r.energy, single_particle_sum(t, N), 1e-6);
  expect_conserving(r, N);
}

TEST(Solvers, VacuumAndFullSectors) {
  Rng rng(12);
  OneBodyCoeffs t;
  TwoBodyCoeffs v;
  const SymMPO h = hermitian_program(4, rng, &t, &v);
  const SolverResult r0 = dmrg_two_site(h, random_block_mps(4, 0, SizeRule::constant(1), rng), SolverConfig{});
  EXPECT_NEAR(r0.energy, 0.0, 1e-14);
  const SolverResult r4 = als_one_site(h, random_block_mps(4, 4, SizeRule::constant(1), rng), SolverConfig{});
  EXPECT_NEAR(r4.energy, sector_min(t, v, 4, 4), 1e-10);
}

TEST(Solvers, TraceCsvHasHeaderAndRows) {
  SolverTrace tr;
  tr.rows.push_back({0, -1.5, 0.25, 3, 2.0});
  const std::string csv = tr.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,energy,residual,max_rank,particles");
  EXPECT_NE(csv.find("0,-1.5,0.25,3,2"), std::string::npos);
}
