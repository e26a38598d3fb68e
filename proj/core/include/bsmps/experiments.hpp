#pragma once

/// Reproducible numerical experiments shared by the command-line driver,
/// the acceptance suite and the benchmarks.  Every experiment is a pure
/// function of its parameters and seed.

#include "bsmps/block_mps.hpp"
#include "bsmps/coeffs.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bsmps {

/// Coefficient structure for the operator rank experiment.
struct CoeffShape {
  int banded = -1;  ///< bandwidth of T (< 0: dense)
  int local = -1;   ///< index spread of V (< 0: dense)
};

struct RankTable {
  std::vector<int> one_constructed, one_compressed, one_compressed_sym;
  std::vector<int> two_constructed, two_compressed, two_compressed_sym;
};

/// Interior rank profiles of the one- and two-particle operators for random
/// coefficients: as constructed, after dense compression and after symbolic
/// compression.  Requires even K.
RankTable rank_table(int K, std::uint64_t seed, const CoeffShape& shape = {}, bool two_body = true);

/// Tensor with all sector sizes 1, left-orthogonal cores left of the middle
/// bond, right-orthogonal cores right of it, and middle-bond singular values
/// sigma (one per middle sector, ascending sector order).
BlockMPS rounding_tensor(int K, int N, const std::vector<double>& sigma, Rng& rng);

struct RoundingRow {
  double eps = 0.0;
  double gap = 0.0;        ///< |sigma_6 - sigma_7|
  double dev_full = 0.0;   ///< |<x,Px>/<x,x> - N| after full-format rounding
  double dev_block = 0.0;  ///< same after block-format rounding
};

/// Rounds the tensor with middle singular values (6,5,4,3,2,1,1-eps) to rank
/// `rank` at every bond, once in full and once in block format, for every
/// eps = 2^0 .. 2^-exponents.  Requires N + 1 middle sectors == 7.
std::vector<RoundingRow> rounding_experiment(int K, int N, std::uint64_t seed, int exponents = 50, int rank = 6);

struct ApplyRow {
  double eps = 0.0;         ///< relative truncation tolerance (0: untruncated TT-SVD)
  std::vector<int> ranks;   ///< interior ranks r_1..r_{K-1}
};

/// Applies the compressed one- or two-particle MPO (random coefficients) to
/// a normalized random rank-1 full MPS and reports the rank profile after
/// TT-SVD truncation with tolerance eps * ||y|| for each eps.
std::vector<ApplyRow> apply_experiment(int K, bool two_body, const std::vector<double>& eps, std::uint64_t seed);

}  // namespace bsmps
