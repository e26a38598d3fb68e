#pragma once

/// Thin wrappers around Eigen factorizations with the library's determinism
/// conventions (sign-fixed singular vectors, thin factors).

#include "bsmps/types.hpp"

#include <vector>

namespace bsmps {

/// Thin QR factorization a = q * r with Householder reflectors.
/// q has min(rows, cols) orthonormal columns.
void qr_thin(const Mat& a, Mat& q, Mat& r);

/// Thin SVD a = u * diag(s) * v^T, singular values descending.  Each left
/// singular vector is sign-fixed so that its largest-magnitude entry is
/// positive; equal singular values keep the factorization's order.
void svd_thin(const Mat& a, Mat& u, Vec& s, Mat& v);

/// Result of a rank-revealing column selection a ≈ a(:, keep) * mix.
struct ColumnBasis {
  std::vector<int> keep;  ///< selected column indices, ascending
  Mat mix;                ///< keep.size() x a.cols() mixing coefficients
};

/// Selects a maximal set of linearly independent columns by pivoted QR with
/// relative tolerance `tol` (relative to the largest pivot) and expresses all
/// columns in that basis.  Selected columns are returned in ascending order.
ColumnBasis independent_columns(const Mat& a, double tol);

/// Stacks matrices vertically (all must share the column count `cols`).
Mat vstack(const std::vector<const Mat*>& parts, Eigen::Index cols);

/// Stacks matrices horizontally (all must share the row count `rows`).
Mat hstack(const std::vector<const Mat*>& parts, Eigen::Index rows);

/// Binomial coefficient as a 64-bit integer (0 when k < 0 or k > n).
long long binomial(int n, int k);

}  // namespace bsmps
