#pragma once

/// Matrix-free operator programs.  A symbolic MPO core is a sparse matrix
/// whose entries are short lists of (coefficient, elementary symbol) pairs;
/// every bond index carries an integer flux (net particle offset).  Programs
/// act directly on block-sparse MPS without materializing dense cores.

#include "bsmps/block_mps.hpp"
#include "bsmps/full_mps.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace bsmps {

/// Elementary 2x2 symbols.  Il/Ir are identities left/right of all operator
/// positions, S the sign (parity) matrix, A and Ad annihilation and creation,
/// N = Ad * A the occupation number.  Zero entries are simply absent.
enum class Elem { Il, Ir, S, A, Ad, N };

/// Flux change f_out - f_in of a symbol.
int elem_delta(Elem e);
/// The 2x2 matrix of a symbol.
Mat elem_matrix(Elem e);
/// Display name given the incoming flux, e.g. "A_l*", "S+", "I^{+2}".
std::string symbol_name(Elem e, int f_in);

struct SymTerm {
  double c = 0.0;
  Elem e = Elem::Il;
};

struct SymCore {
  int rows = 0, cols = 0;
  std::map<std::pair<int, int>, std::vector<SymTerm>> entries;

  /// Appends c*e to entry (i, j), merging equal symbols.
  void add(int i, int j, double c, Elem e);
  /// Sum of c * elem_matrix over the entry's terms (2x2 zero if absent).
  Mat entry_matrix(int i, int j) const;
};

struct SymMPO {
  int K = 0;
  std::vector<SymCore> cores;
  std::vector<std::vector<int>> flux;  ///< labels for bonds 0..K

  std::vector<int> ranks() const;
  /// Checks shapes, terminal fluxes {0}, and that every term's flux change
  /// matches its bond labels.  Throws ValidationError.
  void validate() const;
};

/// Derives flux labels for a hand-built program (left-to-right propagation,
/// right-to-left for labels not reachable from the left).  Throws
/// ValidationError if no consistent labeling with terminal fluxes 0 exists.
void infer_flux(SymMPO& m);

/// Human-readable symbol grid, one block per core.
std::string dump(const SymMPO& m);

/// coeff * a^*_{creators} a_{annihilators} (0-based increasing index lists
/// of equal length <= 2) as a bond-dimension-1 program.
SymMPO sym_rank_one(const std::vector<int>& creators, const std::vector<int>& annihilators,
                    double coeff, int K);

/// Direct sum of two programs (sum of operators).
SymMPO sym_add(const SymMPO& a, const SymMPO& b);

/// Exact rank reduction: left-to-right column elimination followed by
/// right-to-left row elimination within equal-flux groups, with relative
/// tolerance tol.  Never increases a bond dimension.
SymMPO sym_compress(const SymMPO& m, double tol = 1e-12);

/// Applies a program to a block MPS.  Output sector sizes are
/// sum_j rho_x(b, n - f_j) over admissible sectors.
BlockMPS apply_sym(const SymMPO& m, const BlockMPS& x);

/// Dense-core MPO realizing the same operator (flux labels attached).
FullMPO to_dense_mpo(const SymMPO& m);

/// Output sector sizes predicted by the flux formula.
SizeTable apply_sizes(const SymMPO& m, const BlockMPS& x);

}  // namespace bsmps
