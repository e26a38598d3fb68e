#pragma once

/// Standard (non-block) matrix product states and operators: representation
/// map, strong Kronecker and mode core products, QR orthogonalization,
/// TT-SVD and truncation.

#include "bsmps/dense.hpp"
#include "bsmps/types.hpp"

#include <optional>
#include <vector>

namespace bsmps {

/// Order-3 core X(j, alpha, j'): one r_{k-1} x r_k slice per mode value.
struct Core {
  std::vector<Mat> slice;

  Eigen::Index rows() const { return slice.empty() ? 0 : slice[0].rows(); }
  Eigen::Index cols() const { return slice.empty() ? 0 : slice[0].cols(); }
  int modes() const { return static_cast<int>(slice.size()); }

  /// Left unfolding: slices stacked vertically (rows (alpha, j)).
  Mat left_unfold() const;
  /// Right unfolding: slices side by side (columns (alpha, j')).
  Mat right_unfold() const;
  static Core from_left_unfold(const Mat& m, int modes);
  static Core from_right_unfold(const Mat& m, int modes);
};

/// Order-4 core M(j, alpha, beta, j'): slice[alpha * n + beta].
struct MPOCore {
  int n = 2;
  std::vector<Mat> slice;

  Eigen::Index rows() const { return slice.empty() ? 0 : slice[0].rows(); }
  Eigen::Index cols() const { return slice.empty() ? 0 : slice[0].cols(); }
  const Mat& at(int alpha, int beta) const { return slice[alpha * n + beta]; }
  Mat& at(int alpha, int beta) { return slice[alpha * n + beta]; }
};

/// Gauge tag of a FullMPS.
enum class Ortho { None, Left, Right, LeftSvd, RightSvd };

/// Matrix product state / tensor train.
struct FullMPS {
  std::vector<Core> cores;
  Ortho ortho = Ortho::None;

  int order() const { return static_cast<int>(cores.size()); }
  /// Bond ranks r_0..r_K.
  std::vector<int> ranks() const;
  /// Throws if adjacent ranks do not agree or end ranks are not 1.
  void validate() const;
};

/// Matrix product operator.  Optional per-bond flux labels record the net
/// particle offset carried by each bond index (used to speed up compression).
struct FullMPO {
  std::vector<MPOCore> cores;
  std::vector<std::vector<int>> flux;  ///< empty, or K+1 label lists

  int order() const { return static_cast<int>(cores.size()); }
  std::vector<int> ranks() const;
  void validate() const;
};

/// Per-bond singular values (bond b = 1..K-1 stored at index b; entries 0
/// and K are empty).
struct SingularSpectrum {
  std::vector<Vec> sigma;
};

/// Dense tensor represented by X (K <= 24).
DenseTensor evaluate(const FullMPS& x);

/// Dense matrix of an MPO (K <= 12).
DenseOperator evaluate(const FullMPO& m);

/// Strong Kronecker product: slice (alpha, beta) = A[alpha] * B[beta]
/// with combined mode index alpha * n_b + beta.
Core strong_kronecker(const Core& a, const Core& b);

/// Mode core product M . X: output slice alpha = sum_beta X[beta] (x) M[alpha,beta],
/// i.e. the MPS bond index is the outer and the MPO bond index the inner one.
Core mode_core_product(const MPOCore& m, const Core& x);

/// Core-wise mode core products; output ranks are products of ranks.
FullMPS apply_mpo(const FullMPO& m, const FullMPS& x);

/// QR sweep: Side::Left makes cores 0..K-2 left-orthogonal, Side::Right makes
/// cores 1..K-1 right-orthogonal.  Ranks may shrink to min(rows, cols).
FullMPS orthogonalize(const FullMPS& x, Side side);

/// TT-SVD form.  Side::Right: left-orthogonalize, then sweep right to left
/// with SVDs; cores 1..K-1 become right-orthogonal and the left partial
/// tensors at each bond are orthogonal with norms sigma.  Side::Left mirrors.
/// A zero tensor yields all-zero rank-1 cores and an empty spectrum.
std::pair<FullMPS, SingularSpectrum> tt_svd(const FullMPS& x, Side side = Side::Right);

/// Truncation mode: either an absolute error budget eps, or rank caps
/// (caps[b] for bonds b = 0..K; entries < 0 mean unlimited).
struct Truncation {
  std::optional<double> eps;
  std::vector<int> caps;

  static Truncation with_eps(double e) { return {e, {}}; }
  static Truncation with_caps(std::vector<int> c) { return {std::nullopt, std::move(c)}; }
};

/// Deletes the smallest singular values of a TT-SVD form.  In eps mode the
/// globally smallest values are removed while their squared sum stays <= eps^2;
/// throws ValidationError("would truncate to zero") if eps >= ||x||.
FullMPS truncate(const FullMPS& x, const SingularSpectrum& spec, const Truncation& mode);

/// Euclidean inner product and norm computed by contraction.
double inner(const FullMPS& x, const FullMPS& y);
double norm(const FullMPS& x);

/// Rank-1 MPS from per-site vectors.
FullMPS product_state(const std::vector<Vec>& sites);

/// MPS with random standard-normal cores of the given bond ranks r_0..r_K.
FullMPS random_full_mps(const std::vector<int>& ranks, Rng& rng);

/// Scales the first core.
FullMPS scale(const FullMPS& x, double c);

/// Identity MPO of order K.
FullMPO identity_mpo(int K);

}  // namespace bsmps
