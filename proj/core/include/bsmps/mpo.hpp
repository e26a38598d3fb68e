#pragma once

/// Rank-compact MPO constructions for second-quantized operators:
///   F = sum_i lambda_i a_i^* a_i                 (rank 2),
///   S = sum_ij t_ij a_i^* a_j                    (rank <= K + 2),
///   D = sum_{i1<i2, j1<j2} vt a_i1^* a_i2^* a_j1 a_j2 (rank <= K^2/2 + 3K/2 + 2).
/// The one- and two-particle operators are generated as symbolic programs
/// (left automaton for the first K/2 cores, mirrored right automaton for the
/// rest, coupling matrix absorbed into core K/2); the dense MPOs are their
/// materializations.  Every per-core sign is computed from the actual
/// Jordan-Wigner factor products.

#include "bsmps/coeffs.hpp"
#include "bsmps/full_mps.hpp"
#include "bsmps/symbolic.hpp"

#include <vector>

namespace bsmps {

/// F = sum_i lambda_i a_i^* a_i with cores [I, l1 N], [[I, lk N], [0, I]], [lK N; I].
FullMPO build_F(const std::vector<double>& lambda);
/// Symbolic version of build_F.
SymMPO sym_from_laplace(const std::vector<double>& lambda);

/// One-particle operator program.  Requires even K >= 2.
SymMPO sym_from_onebody(const OneBodyCoeffs& t);
/// Two-particle operator program.  Requires even K >= 2.
SymMPO sym_from_twobody(const TwoBodyCoeffs& v);
/// S + D as one program, compressed with sym_compress.
SymMPO sym_hamiltonian(const OneBodyCoeffs& t, const TwoBodyCoeffs& v);

FullMPO build_S(const OneBodyCoeffs& t);
FullMPO build_D(const TwoBodyCoeffs& v);

/// Interior bond ranks r_1..r_{K-1}.
std::vector<int> mpo_rank_profile(const FullMPO& m);
std::vector<int> mpo_rank_profile(const SymMPO& m);

/// Exact rank reduction of a dense MPO (left-to-right column elimination,
/// then right-to-left row elimination; equal-flux groups when flux labels
/// are present).  Never increases a rank.
FullMPO mpo_compress(const FullMPO& m, double tol = 1e-12);

}  // namespace bsmps
