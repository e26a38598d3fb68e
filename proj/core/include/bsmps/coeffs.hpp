#pragma once

/// Coefficient containers for one- and two-particle operators
///   S = sum_{ij} t_ij a_i^* a_j,
///   D = sum_{ijkl} v_ijkl a_i^* a_j^* a_k a_l.
/// Orbital indices are 0-based throughout the library.

#include "bsmps/types.hpp"

#include <vector>

namespace bsmps {

/// Symmetric one-particle coefficient matrix T.
struct OneBodyCoeffs {
  int K = 0;
  Mat t;               ///< K x K, symmetric
  int bandwidth = -1;  ///< t_ij = 0 for |i-j| > bandwidth when >= 0

  /// Throws ValidationError if T is not symmetric or violates the bandwidth.
  void validate() const;
};

/// Two-particle coefficients v_{i1 i2 j1 j2} with the antisymmetrized
/// combination used by the operator constructions:
///   vt_{i1 i2 j1 j2} = v_{i1 i2 j1 j2} + v_{i2 i1 j2 j1}
///                    - v_{i2 i1 j1 j2} - v_{i1 i2 j2 j1}   (i1 < i2, j1 < j2),
/// and zero otherwise, so that D = sum_{i1<i2, j1<j2} vt a_i1^* a_i2^* a_j1 a_j2.
struct TwoBodyCoeffs {
  int K = 0;
  std::vector<double> v;   ///< raw K^4 array, index ((i*K + j)*K + k)*K + l
  std::vector<double> vt;  ///< antisymmetrized K^4 array (see above)
  int locality = -1;       ///< max index spread of nonzero terms when >= 0

  TwoBodyCoeffs() = default;
  explicit TwoBodyCoeffs(int k) : K(k), v(static_cast<size_t>(k) * k * k * k, 0.0) {}

  size_t index(int i, int j, int k, int l) const {
    return ((static_cast<size_t>(i) * K + j) * K + k) * K + l;
  }
  double raw(int i, int j, int k, int l) const { return v[index(i, j, k, l)]; }
  double& raw(int i, int j, int k, int l) { return v[index(i, j, k, l)]; }
  double tilde(int i1, int i2, int j1, int j2) const { return vt[index(i1, i2, j1, j2)]; }

  /// Recomputes vt from v; call after editing raw entries.
  void finalize();

  /// True if D is symmetric: vt_{i1 i2 j1 j2} = vt_{j1 j2 i1 i2}.
  bool is_hermitian(double tol = 1e-12) const;
};

/// Nearest-neighbour hopping chain: t_{i,i+1} = t_{i+1,i} = -1.
OneBodyCoeffs hopping_chain(int K);

/// Random symmetric T with standard-normal entries; bandwidth < 0 means dense.
OneBodyCoeffs random_onebody(int K, Rng& rng, int bandwidth = -1);

/// Random raw V with standard-normal entries; locality < 0 means dense,
/// otherwise entries whose index spread exceeds `locality` are zero.  With
/// `hermitian`, v_{ijkl} is replaced by (v_{ijkl} + v_{lkji}) / 2 so that D
/// is symmetric.
TwoBodyCoeffs random_twobody(int K, Rng& rng, int locality = -1, bool hermitian = false);

}  // namespace bsmps
