#pragma once

/// Block-structure-preserving ground-state solvers for particle-number
/// conserving operator programs: truncated gradient descent, Riemannian
/// gradient descent on the fixed-size manifold, one-site ALS and two-site
/// DMRG; plus Rayleigh quotients, residuals, sector-wise environments and
/// tangent-space projection.

#include "bsmps/block_mps.hpp"
#include "bsmps/symbolic.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace bsmps {

/// <x, Hx> / <x, x>.  Throws on a zero tensor.
double rayleigh_quotient(const SymMPO& h, const BlockMPS& x);

/// ||Hx - rho(x) x|| / ||x||, evaluated blockwise after orthogonalization.
double residual_norm(const SymMPO& h, const BlockMPS& x);

/// Sector-wise environments of <x, H x>: entry (j, n) is the contraction of
/// the bra sector n + f_j with the ket sector n through operator index j.
using Env = std::map<std::pair<int, int>, Mat>;

/// Left environment at bond c+1 from the one at bond c.
Env env_left_step(const SymMPO& h, const BlockMPS& x, int c, const Env& left);
/// Right environment at bond c from the one at bond c+1.
Env env_right_step(const SymMPO& h, const BlockMPS& x, int c, const Env& right);
Env env_left_seed();
Env env_right_seed(int N);

struct TraceRow {
  int iteration = 0;
  double energy = 0.0;
  double residual = 0.0;
  int max_rank = 0;
  double particles = 0.0;
};

struct SolverTrace {
  std::vector<TraceRow> rows;
  /// Energies after every local update (ALS / DMRG) or accepted step (GD).
  std::vector<double> substep_energies;
  /// Particle expectation of every iterate (including sub-steps).
  std::vector<double> substep_particles;

  std::string to_csv() const;
};

struct SolverConfig {
  int max_iter = 200;          ///< iterations (gd, rgd) or sweeps (als, dmrg2)
  double tol = 1e-8;           ///< stop when residual_norm <= tol
  double eps = 1e-10;          ///< truncation: relative (gd) or per split (dmrg2)
  int floor = 1;               ///< minimum sector size kept by the retraction (rgd)
  double armijo = 1e-4;        ///< sufficient-decrease constant of the line search
  int max_backtrack = 40;      ///< step halvings before giving up
  int dense_local_max = 512;   ///< local problems up to this size are solved densely
  int lanczos_max_iter = 200;
  double lanczos_tol = 1e-10;
  std::uint64_t seed = 0;      ///< seeds Lanczos start perturbations
};

struct SolverResult {
  BlockMPS x;
  double energy = 0.0;
  double residual = 0.0;
  bool converged = false;
  SolverTrace trace;
};

/// Smallest eigenpair of a symmetric operator given by a matrix-vector
/// product (restarted Lanczos with full reorthogonalization).
std::pair<double, Vec> lanczos_smallest(const std::function<Vec(const Vec&)>& op, const Vec& start,
                                        double tol, int max_iter);

SolverResult gradient_descent(const SymMPO& h, const BlockMPS& x0, const SolverConfig& cfg);

/// Tangent vector at x: left- and right-orthogonal representations U, V of x
/// (identical size tables) and variation cores dY (same keys as U) with the
/// left gauge U_k^T dY_k = 0 for k < K-1.
struct TangentVector {
  BlockMPS U, V;
  std::vector<BlockCore> dY;
};

/// Orthogonal projection of z onto the tangent space of the fixed-size
/// block manifold at x.
TangentVector tangent_project(const BlockMPS& x, const BlockMPS& z);
/// The block MPS sum_k U_<k dY_k V_>k (sector sizes at most doubled).
BlockMPS tangent_to_mps(const TangentVector& t);
/// Gauge pair (left-orthogonal, right-orthogonal) with equal size tables.
std::pair<BlockMPS, BlockMPS> gauge_pair(const BlockMPS& x);

SolverResult riemannian_gd(const SymMPO& h, const BlockMPS& x0, const SolverConfig& cfg);
SolverResult als_one_site(const SymMPO& h, const BlockMPS& x0, const SolverConfig& cfg);
SolverResult dmrg_two_site(const SymMPO& h, const BlockMPS& x0, const SolverConfig& cfg);

}  // namespace bsmps
