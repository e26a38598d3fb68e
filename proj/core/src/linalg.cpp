#include "bsmps/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>

namespace bsmps {

void qr_thin(const Mat& a, Mat& q, Mat& r) {
  const Eigen::Index m = a.rows(), n = a.cols();
  const Eigen::Index k = std::min(m, n);
  if (k == 0) {
    q = Mat::Zero(m, 0);
    r = Mat::Zero(0, n);
    return;
  }
  Eigen::HouseholderQR<Mat> qr(a);
  q = qr.householderQ() * Mat::Identity(m, k);
  r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

void svd_thin(const Mat& a, Mat& u, Vec& s, Mat& v) {
  const Eigen::Index m = a.rows(), n = a.cols();
  const Eigen::Index k = std::min(m, n);
  if (k == 0) {
    u = Mat::Zero(m, 0);
    s = Vec::Zero(0);
    v = Mat::Zero(n, 0);
    return;
  }
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u = svd.matrixU();
  s = svd.singularValues();
  v = svd.matrixV();
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    if (u(imax, j) < 0) {
      u.col(j) *= -1.0;
      v.col(j) *= -1.0;
    }
  }
}

ColumnBasis independent_columns(const Mat& a, double tol) {
  ColumnBasis out;
  if (a.cols() == 0) {
    out.mix = Mat::Zero(0, 0);
    return out;
  }
  if (a.rows() == 0 || a.cwiseAbs().maxCoeff() == 0.0) {
    out.mix = Mat::Zero(0, a.cols());
    return out;
  }
  Eigen::ColPivHouseholderQR<Mat> qr(a);
  qr.setThreshold(tol);
  const Eigen::Index rank = qr.rank();
  for (Eigen::Index i = 0; i < rank; ++i) out.keep.push_back(qr.colsPermutation().indices()(i));
  std::sort(out.keep.begin(), out.keep.end());
  Mat basis(a.rows(), rank);
  for (Eigen::Index i = 0; i < rank; ++i) basis.col(i) = a.col(out.keep[i]);
  out.mix = basis.householderQr().solve(a);
  // Selected columns are reproduced exactly.
  for (Eigen::Index i = 0; i < rank; ++i) {
    out.mix.col(out.keep[i]).setZero();
    out.mix(i, out.keep[i]) = 1.0;
  }
  return out;
}

Mat vstack(const std::vector<const Mat*>& parts, Eigen::Index cols) {
  Eigen::Index rows = 0;
  for (const Mat* p : parts) rows += p->rows();
  Mat out(rows, cols);
  Eigen::Index off = 0;
  for (const Mat* p : parts) {
    out.middleRows(off, p->rows()) = *p;
    off += p->rows();
  }
  return out;
}

Mat hstack(const std::vector<const Mat*>& parts, Eigen::Index rows) {
  Eigen::Index cols = 0;
  for (const Mat* p : parts) cols += p->cols();
  Mat out(rows, cols);
  Eigen::Index off = 0;
  for (const Mat* p : parts) {
    out.middleCols(off, p->cols()) = *p;
    off += p->cols();
  }
  return out;
}

long long binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace bsmps
