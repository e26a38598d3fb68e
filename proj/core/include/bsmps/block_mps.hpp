#pragma once

/// Block-sparse matrix product states with an exactly conserved particle
/// number.  Core k (0-based, joining bonds k and k+1) stores, for every left
/// particle count n, an "unoccupied" block coupling sector n to sector n and
/// an "occupied" block coupling sector n to sector n+1.  Sector index ranges
/// are contiguous and ascending in n whenever a dense layout is needed.

#include "bsmps/full_mps.hpp"
#include "bsmps/types.hpp"

#include <map>
#include <optional>
#include <vector>

namespace bsmps {

/// Admissible particle counts at bond b of an order-K tensor in sector N:
/// max(0, N-K+b) <= n <= min(N, b).
struct SectorRange {
  int K = 0, N = 0, b = 0;

  int lo() const { return std::max(0, N - K + b); }
  int hi() const { return std::min(N, b); }
  bool contains(int n) const { return n >= lo() && n <= hi(); }
  /// Lemma-type bound on the sector size: min(C(b,n), C(K-b, N-n)).
  long long bound(int n) const;
};

/// Blocks of one core keyed by the left sector n.
struct BlockCore {
  std::map<int, Mat> unocc;  ///< n -> rho(b,n) x rho(b+1,n)
  std::map<int, Mat> occ;    ///< n -> rho(b,n) x rho(b+1,n+1)

  const std::map<int, Mat>& blocks(int alpha) const { return alpha == 0 ? unocc : occ; }
  std::map<int, Mat>& blocks(int alpha) { return alpha == 0 ? unocc : occ; }
};

/// Per-bond sector size table: rho[b][n] for b = 0..K.
using SizeTable = std::vector<std::map<int, int>>;

struct BlockMPS {
  int K = 0;
  int N = 0;
  SizeTable rho;
  std::vector<BlockCore> cores;
  Ortho ortho = Ortho::None;

  /// Sector size (0 when the sector is absent).
  int size(int b, int n) const;
  /// Total bond rank sum_n rho(b,n).
  int rank(int b) const;
  std::vector<int> ranks() const;
  SectorRange range(int b) const { return {K, N, b}; }

  /// Structural checks: admissible keys only, shapes consistent with rho,
  /// boundary sizes 1, every block between two present sectors stored.
  /// Throws ValidationError.
  void validate() const;

  /// True if every sector size satisfies rho(b,n) <= min(C(b,n), C(K-b,N-n)).
  /// Holds for every minimal representation (e.g. after rounding), but not
  /// necessarily for raw sums or operator applications.
  bool within_size_bounds() const;
};

/// Per-bond, per-sector singular values (descending within a sector).
struct BlockSpectrum {
  std::vector<std::map<int, Vec>> sigma;  ///< indexed by bond 0..K
};

/// Rule for random_block_mps.
struct SizeRule {
  enum class Kind { Constant, MaxAdmissible, Explicit };
  Kind kind = Kind::Constant;
  int rho_bar = 1;  ///< Constant: min(rho_bar, bound) in every admissible sector
  SizeTable table;  ///< Explicit: full table (must respect the bounds)

  static SizeRule constant(int r) { return {Kind::Constant, r, {}}; }
  static SizeRule max_admissible() { return {Kind::MaxAdmissible, 0, {}}; }
  static SizeRule exact(SizeTable t) { return {Kind::Explicit, 0, std::move(t)}; }
};

/// Size table produced by a rule (bond ends fixed to 1).
SizeTable make_size_table(int K, int N, const SizeRule& rule);

/// Block MPS with the given sizes and all blocks zero.
BlockMPS zero_block_mps(int K, int N, const SizeTable& rho);

/// Block MPS with standard-normal blocks.
BlockMPS random_block_mps(int K, int N, const SizeRule& rule, Rng& rng);

/// Slater determinant e_D for the orbital set D (0-based): a rank-1 block MPS.
BlockMPS determinant(int K, const std::vector<int>& occupied);

/// Embeds the blocks into full cores (sectors contiguous, ascending in n).
FullMPS to_full(const BlockMPS& x);

/// Recovers the block structure of a full MPS whose tensor lies in a single
/// particle-number sector.  Throws ValidationError("not in sector") when the
/// particle-number variance or the off-block mass exceeds tol (relative).
BlockMPS from_full(const FullMPS& y, double tol = 1e-10);

BlockMPS add(const BlockMPS& x, const BlockMPS& y);
BlockMPS scale(const BlockMPS& x, double c);

/// <x, y> by the right-to-left sector recursion.
double inner(const BlockMPS& x, const BlockMPS& y);
double norm(const BlockMPS& x);

/// Sector-wise QR sweep.  Side::Left makes cores 0..K-2 left-orthogonal;
/// Side::Right makes cores 1..K-1 right-orthogonal.  Sectors whose size
/// collapses to zero are removed.
BlockMPS orthogonalize_block(const BlockMPS& x, Side side);

/// Sector-wise TT-SVD.  Side::Right: cores 1..K-1 right-orthogonal and every
/// bond in SVD form (sigma[b][n] for bonds 1..K-1); Side::Left mirrors.
std::pair<BlockMPS, BlockSpectrum> tt_svd_block(const BlockMPS& x, Side side = Side::Right);

/// Truncation of a block TT-SVD form.
struct BlockTruncation {
  std::optional<double> eps;                  ///< global error budget
  std::vector<int> bond_caps;                 ///< max total rank per bond (-1: none)
  std::vector<std::map<int, int>> sector_caps;///< max size per bond and sector
  int floor = 0;                              ///< sectors keep at least this many values

  static BlockTruncation with_eps(double e) { return {e, {}, {}, 0}; }
  static BlockTruncation with_bond_caps(std::vector<int> caps, int floor = 0) {
    return {std::nullopt, std::move(caps), {}, floor};
  }
  static BlockTruncation with_sector_caps(std::vector<std::map<int, int>> caps, int floor = 0) {
    return {std::nullopt, {}, std::move(caps), floor};
  }
};

/// Deletes trailing singular values of the SVD form.  In eps mode the
/// globally smallest values are removed while their squared sum stays <=
/// eps^2 (ties: lower bond, then lower sector, then later index first).
/// Throws ValidationError("would truncate to zero") if eps >= ||x||.
BlockMPS truncate_block(const BlockMPS& x, const BlockSpectrum& spec, const BlockTruncation& mode);

/// Convenience: TT-SVD followed by truncation.
BlockMPS round_block(const BlockMPS& x, const BlockTruncation& mode);

/// <x, P x> / <x, x> evaluated blockwise.  Throws on a zero tensor.
double particle_expectation(const BlockMPS& x);

/// Dense check (K <= 12) that every left partial tensor at bond b belonging
/// to sector n is an eigenvector of the truncated particle number with
/// eigenvalue n.
bool verify_block_eigen(const BlockMPS& x, int b, double tol = 1e-10);

/// Sector-wise left unfolding of core c at right sector m:
/// rows [unocc[m]; occ[m-1]], columns rho(c+1, m).
Mat left_unfold(const BlockMPS& x, int c, int m);
/// Inverse of left_unfold (writes the row blocks back; shapes must agree).
void set_left_unfold(BlockMPS& x, int c, int m, const Mat& u);
/// Sector-wise right unfolding of core c at left sector n: [unocc[n] | occ[n]].
Mat right_unfold(const BlockMPS& x, int c, int n);
void set_right_unfold(BlockMPS& x, int c, int n, const Mat& u);

/// One step of the QR sweep: Side::Left makes core c (c < K-1) left-orthogonal
/// and pushes the triangular factors into core c+1; Side::Right makes core c
/// (c > 0) right-orthogonal and pushes into core c-1.
void orthogonalize_core(BlockMPS& x, int c, Side side);

/// Removes zero-size sectors and ensures every admissible block between two
/// present sectors exists (zero-filled).
void normalize_blocks(BlockMPS& x);

}  // namespace bsmps
