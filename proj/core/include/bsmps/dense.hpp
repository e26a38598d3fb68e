#pragma once

/// Exponential-cost reference implementation of the fermionic Fock space:
/// annihilation/creation operators, particle number operators, brute-force
/// Hamiltonians and sector-restricted diagonalization.  Intended as the
/// ground truth for all structured algorithms (K <= 10).
///
/// Basis ordering: multi-index (alpha_1, ..., alpha_K) is row-major with
/// alpha_1 slowest, i.e. linear index sum_k alpha_k 2^(K-k).  This is the
/// Kronecker order of X_1 (x) ... (x) X_K.

#include "bsmps/coeffs.hpp"
#include "bsmps/types.hpp"

#include <cstddef>
#include <vector>

namespace bsmps {

/// Order-K tensor stored as a flat row-major vector.
struct DenseTensor {
  std::vector<int> dims;
  Vec data;
};

/// Operator on the tensor space with the given mode sizes.
struct DenseOperator {
  std::vector<int> dims;
  Mat data;
};

/// Diagonal per-mode values of a Laplace-like operator sum_k I..L_k..I.
struct LaplaceSpec {
  std::vector<std::vector<double>> lambda;
};

/// One term v * a^*_{creators} a_{annihilators} with increasing index lists.
/// a^*_D denotes a^*_{d1} ... a^*_{dn} and a_D denotes a_{d1} ... a_{dn}.
struct RankOneTerm {
  std::vector<int> creators;
  std::vector<int> annihilators;
  double coeff = 0.0;
};

/// Elementary 2x2 matrices: S = diag(1,-1), A = [[0,1],[0,0]], I, and A^*A.
Mat elem_S();
Mat elem_A();
Mat elem_I();
Mat elem_N();

/// Kronecker product of a list of square matrices (first factor slowest).
Mat kron_chain(const std::vector<Mat>& factors);

/// a_i = S (x) ... (x) S (x) A (x) I (x) ... (x) I with A in slot i (0-based).
DenseOperator build_annihilation(int i, int K);
/// a_i^*, the transpose of build_annihilation(i, K).
DenseOperator build_creation(int i, int K);

/// P = sum_i a_i^* a_i.
DenseOperator build_particle_number(int K);

/// Truncated particle number: Side::Left gives sum_{i<k} a_i^* a_i acting on
/// modes 0..k-1 (dimension 2^k); Side::Right gives the sum over i >= k acting
/// on modes k..K-1 (dimension 2^(K-k)).
DenseOperator build_truncated_pn(int K, int k, Side side);

/// Diagonal operator with eigenvalue sum_k lambda[k][alpha_k] at alpha.
DenseOperator build_laplace_like(const LaplaceSpec& spec);

/// sum t_ij a_i^* a_j + sum v_ijkl a_i^* a_j^* a_k a_l, assembled with sparse
/// products of the explicit Kronecker operators.
DenseOperator brute_force_hamiltonian(const OneBodyCoeffs& t, const TwoBodyCoeffs& v);
/// Only the one-particle part.
DenseOperator brute_force_onebody(const OneBodyCoeffs& t);
/// Only the two-particle part.
DenseOperator brute_force_twobody(const TwoBodyCoeffs& v);

/// Linear indices of all basis states with Hamming weight N, ascending.
std::vector<std::size_t> sector_basis(int K, int N);

/// Eigen-decomposition of op restricted to sector N.
struct SectorEigen {
  Vec values;                        ///< ascending
  Mat vectors;                       ///< columns indexed like sector_basis
  std::vector<std::size_t> basis;    ///< sector basis indices
};

/// Throws ValidationError("not particle-number preserving") if op couples
/// different sectors by more than 1e-10.
SectorEigen sector_diagonalize(const DenseOperator& op, int K, int N);

/// Embeds a sector-coordinate vector into the full 2^K space.
Vec embed_sector(const Vec& coords, const std::vector<std::size_t>& basis, int K);

/// True if op only couples basis states of equal Hamming weight (to tol).
bool preserves_particle_number(const DenseOperator& op, int K, double tol = 1e-10);

/// Inductive decomposition of a particle-number-preserving operator into
/// rank-one terms v a^*_{D+} a_{D-} (K <= 5).  Terms with |v| <= 1e-14 are
/// omitted.
std::vector<RankOneTerm> decompose_pn_operator(const DenseOperator& op, int K);

/// Dense matrix of sum_t v_t a^*_{D+} a_{D-}.
DenseOperator reassemble(const std::vector<RankOneTerm>& terms, int K);

/// Dense matrix of the single product a^*_{D+} a_{D-}.
Mat rank_one_matrix(const std::vector<int>& creators, const std::vector<int>& annihilators, int K);

}  // namespace bsmps
