#include "bsmps/full_mps.hpp"

#include "bsmps/linalg.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

namespace bsmps {

Mat Core::left_unfold() const {
  const Eigen::Index r = rows(), c = cols();
  Mat out(r * modes(), c);
  for (int a = 0; a < modes(); ++a) out.middleRows(a * r, r) = slice[a];
  return out;
}

Mat Core::right_unfold() const {
  const Eigen::Index r = rows(), c = cols();
  Mat out(r, c * modes());
  for (int a = 0; a < modes(); ++a) out.middleCols(a * c, c) = slice[a];
  return out;
}

Core Core::from_left_unfold(const Mat& m, int modes) {
  Core out;
  const Eigen::Index r = m.rows() / modes;
  for (int a = 0; a < modes; ++a) out.slice.push_back(m.middleRows(a * r, r));
  return out;
}

Core Core::from_right_unfold(const Mat& m, int modes) {
  Core out;
  const Eigen::Index c = m.cols() / modes;
  for (int a = 0; a < modes; ++a) out.slice.push_back(m.middleCols(a * c, c));
  return out;
}

std::vector<int> FullMPS::ranks() const {
  std::vector<int> r;
  if (cores.empty()) return r;
  r.push_back(static_cast<int>(cores[0].rows()));
  for (const Core& c : cores) r.push_back(static_cast<int>(c.cols()));
  return r;
}

void FullMPS::validate() const {
  if (cores.empty()) throw ValidationError("MPS has no cores");
  for (size_t k = 0; k < cores.size(); ++k) {
    const Core& c = cores[k];
    if (c.slice.empty()) throw ValidationError("core " + std::to_string(k) + " has no slices");
    for (const Mat& s : c.slice)
      if (s.rows() != c.rows() || s.cols() != c.cols())
        throw ValidationError("core " + std::to_string(k) + " has inconsistent slices");
    if (k + 1 < cores.size() && c.cols() != cores[k + 1].rows())
      throw ValidationError("rank mismatch at bond " + std::to_string(k + 1));
  }
  if (cores.front().rows() != 1 || cores.back().cols() != 1)
    throw ValidationError("boundary ranks must be 1");
}

std::vector<int> FullMPO::ranks() const {
  std::vector<int> r;
  if (cores.empty()) return r;
  r.push_back(static_cast<int>(cores[0].rows()));
  for (const MPOCore& c : cores) r.push_back(static_cast<int>(c.cols()));
  return r;
}

void FullMPO::validate() const {
  if (cores.empty()) throw ValidationError("MPO has no cores");
  for (size_t k = 0; k < cores.size(); ++k) {
    const MPOCore& c = cores[k];
    if (static_cast<int>(c.slice.size()) != c.n * c.n)
      throw ValidationError("MPO core " + std::to_string(k) + " has wrong slice count");
    for (const Mat& s : c.slice)
      if (s.rows() != c.rows() || s.cols() != c.cols())
        throw ValidationError("MPO core " + std::to_string(k) + " has inconsistent slices");
    if (k + 1 < cores.size() && c.cols() != cores[k + 1].rows())
      throw ValidationError("MPO rank mismatch at bond " + std::to_string(k + 1));
  }
  if (cores.front().rows() != 1 || cores.back().cols() != 1)
    throw ValidationError("MPO boundary ranks must be 1");
  if (!flux.empty()) {
    const auto r = ranks();
    if (flux.size() != r.size()) throw ValidationError("MPO flux table has wrong length");
    for (size_t b = 0; b < r.size(); ++b)
      if (static_cast<int>(flux[b].size()) != r[b])
        throw ValidationError("MPO flux labels do not match rank at bond " + std::to_string(b));
  }
}

DenseTensor evaluate(const FullMPS& x) {
  x.validate();
  if (x.order() > 24) throw ValidationError("evaluate: order too large for dense evaluation");
  DenseTensor out;
  // rows: multi-index prefix (row-major), cols: current bond index
  Mat acc = Mat::Ones(1, 1);
  for (const Core& c : x.cores) {
    out.dims.push_back(c.modes());
    Mat next(acc.rows() * c.modes(), c.cols());
    for (Eigen::Index p = 0; p < acc.rows(); ++p)
      for (int a = 0; a < c.modes(); ++a) next.row(p * c.modes() + a) = acc.row(p) * c.slice[a];
    acc = std::move(next);
  }
  out.data = acc.col(0);
  return out;
}

DenseOperator evaluate(const FullMPO& m) {
  m.validate();
  if (m.order() > 12) throw ValidationError("evaluate: MPO order too large for dense evaluation");
  DenseOperator out;
  long long rows = 1;
  // acc row index: rowprefix * cols + colprefix
  Mat acc = Mat::Ones(1, 1);
  long long dim = 1;
  for (const MPOCore& c : m.cores) {
    out.dims.push_back(c.n);
    const long long nd = dim * c.n;
    Mat next(nd * nd, c.cols());
    for (long long rp = 0; rp < dim; ++rp)
      for (long long cp = 0; cp < dim; ++cp)
        for (int a = 0; a < c.n; ++a)
          for (int b = 0; b < c.n; ++b)
            next.row((rp * c.n + a) * nd + cp * c.n + b) = acc.row(rp * dim + cp) * c.at(a, b);
    acc = std::move(next);
    dim = nd;
  }
  rows = dim;
  out.data.resize(rows, rows);
  for (long long i = 0; i < rows; ++i)
    for (long long j = 0; j < rows; ++j) out.data(i, j) = acc(i * rows + j, 0);
  return out;
}

Core strong_kronecker(const Core& a, const Core& b) {
  if (a.cols() != b.rows()) throw ValidationError("strong_kronecker: inner rank mismatch");
  Core out;
  for (int i = 0; i < a.modes(); ++i)
    for (int j = 0; j < b.modes(); ++j) out.slice.push_back(a.slice[i] * b.slice[j]);
  return out;
}

Core mode_core_product(const MPOCore& m, const Core& x) {
  if (m.n != x.modes()) throw ValidationError("mode_core_product: mode size mismatch");
  Core out;
  for (int a = 0; a < m.n; ++a) {
    Mat y = Mat::Zero(x.rows() * m.rows(), x.cols() * m.cols());
    for (int b = 0; b < m.n; ++b) {
      const Mat& ms = m.at(a, b);
      if (ms.isZero(0.0)) continue;
      y += Eigen::kroneckerProduct(x.slice[b], ms).eval();
    }
    out.slice.push_back(std::move(y));
  }
  return out;
}

FullMPS apply_mpo(const FullMPO& m, const FullMPS& x) {
  if (m.order() != x.order()) throw ValidationError("apply_mpo: order mismatch");
  FullMPS out;
  for (int k = 0; k < x.order(); ++k) out.cores.push_back(mode_core_product(m.cores[k], x.cores[k]));
  return out;
}

namespace {

void left_orth_step(FullMPS& y, int k) {
  Core& c = y.cores[k];
  const int n = c.modes();
  Mat q, r;
  qr_thin(c.left_unfold(), q, r);
  c = Core::from_left_unfold(q, n);
  for (Mat& s : y.cores[k + 1].slice) s = (r * s).eval();
}

void right_orth_step(FullMPS& y, int k) {
  Core& c = y.cores[k];
  const int n = c.modes();
  Mat q, r;
  qr_thin(c.right_unfold().transpose(), q, r);
  c = Core::from_right_unfold(q.transpose(), n);
  for (Mat& s : y.cores[k - 1].slice) s = (s * r.transpose()).eval();
}

FullMPS zero_mps(const FullMPS& x) {
  FullMPS z;
  for (const Core& c : x.cores) {
    Core zc;
    for (int a = 0; a < c.modes(); ++a) zc.slice.push_back(Mat::Zero(1, 1));
    z.cores.push_back(std::move(zc));
  }
  return z;
}

}  // namespace

FullMPS orthogonalize(const FullMPS& x, Side side) {
  x.validate();
  FullMPS y = x;
  const int K = y.order();
  if (side == Side::Left) {
    for (int k = 0; k + 1 < K; ++k) left_orth_step(y, k);
    y.ortho = Ortho::Left;
  } else {
    for (int k = K - 1; k > 0; --k) right_orth_step(y, k);
    y.ortho = Ortho::Right;
  }
  return y;
}

std::pair<FullMPS, SingularSpectrum> tt_svd(const FullMPS& x, Side side) {
  const int K = x.order();
  SingularSpectrum spec;
  spec.sigma.assign(static_cast<size_t>(K) + 1, Vec());
  FullMPS y = orthogonalize(x, side == Side::Right ? Side::Left : Side::Right);
  const Core& last = side == Side::Right ? y.cores[K - 1] : y.cores[0];
  double nrm = 0.0;
  for (const Mat& s : last.slice) nrm += s.squaredNorm();
  if (nrm == 0.0) {
    FullMPS z = zero_mps(x);
    z.ortho = side == Side::Right ? Ortho::RightSvd : Ortho::LeftSvd;
    return {z, SingularSpectrum{std::vector<Vec>(static_cast<size_t>(K) + 1)}};
  }
  if (side == Side::Right) {
    for (int k = K - 1; k > 0; --k) {
      Core& c = y.cores[k];
      Mat u, v;
      Vec s;
      svd_thin(c.right_unfold(), u, s, v);
      c = Core::from_right_unfold(v.transpose(), c.modes());
      const Mat us = u * s.asDiagonal();
      for (Mat& sl : y.cores[k - 1].slice) sl = (sl * us).eval();
      spec.sigma[k] = s;
    }
    y.ortho = Ortho::RightSvd;
  } else {
    for (int k = 0; k + 1 < K; ++k) {
      Core& c = y.cores[k];
      Mat u, v;
      Vec s;
      svd_thin(c.left_unfold(), u, s, v);
      c = Core::from_left_unfold(u, c.modes());
      const Mat sv = s.asDiagonal() * v.transpose();
      for (Mat& sl : y.cores[k + 1].slice) sl = (sv * sl).eval();
      spec.sigma[k + 1] = s;
    }
    y.ortho = Ortho::LeftSvd;
  }
  return {y, spec};
}

FullMPS truncate(const FullMPS& x, const SingularSpectrum& spec, const Truncation& mode) {
  const int K = x.order();
  if (static_cast<int>(spec.sigma.size()) != K + 1) throw ValidationError("truncate: spectrum size mismatch");
  std::vector<int> keep(static_cast<size_t>(K) + 1, 1);
  for (int b = 1; b < K; ++b) keep[b] = static_cast<int>(spec.sigma[b].size());
  if (mode.eps) {
    const double eps = *mode.eps;
    double nrm2 = 0.0;
    if (K > 1) nrm2 = spec.sigma[1].squaredNorm();
    else nrm2 = norm(x) * norm(x);
    if (eps > 0.0 && eps * eps >= nrm2) throw ValidationError("would truncate to zero");
    struct Item { double s; int b; int idx; };
    std::vector<Item> items;
    for (int b = 1; b < K; ++b)
      for (int i = 0; i < spec.sigma[b].size(); ++i) items.push_back({spec.sigma[b](i), b, i});
    // ascending by value; ties: lower bond first, later in-bond index first
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      return std::tie(a.s, a.b, b.idx) < std::tie(b.s, b.b, a.idx);
    });
    double acc = 0.0;
    for (const Item& it : items) {
      if (acc + it.s * it.s > eps * eps) break;
      if (it.idx != keep[it.b] - 1) break;  // must delete trailing entries in order
      if (keep[it.b] == 1) break;
      acc += it.s * it.s;
      --keep[it.b];
    }
  } else {
    for (int b = 1; b < K && b < static_cast<int>(mode.caps.size()); ++b)
      if (mode.caps[b] >= 0) keep[b] = std::max(1, std::min(keep[b], mode.caps[b]));
  }
  FullMPS y = x;
  for (int k = 0; k < K; ++k)
    for (Mat& s : y.cores[k].slice) s = s.topLeftCorner(keep[k], keep[k + 1]).eval();
  return y;
}

double inner(const FullMPS& x, const FullMPS& y) {
  if (x.order() != y.order()) throw ValidationError("inner: order mismatch");
  Mat e = Mat::Ones(1, 1);
  for (int k = 0; k < x.order(); ++k) {
    const Core& a = x.cores[k];
    const Core& b = y.cores[k];
    if (a.modes() != b.modes()) throw ValidationError("inner: mode size mismatch");
    Mat next = Mat::Zero(a.cols(), b.cols());
    for (int s = 0; s < a.modes(); ++s) next.noalias() += a.slice[s].transpose() * e * b.slice[s];
    e = std::move(next);
  }
  return e(0, 0);
}

double norm(const FullMPS& x) { return std::sqrt(std::max(0.0, inner(x, x))); }

FullMPS product_state(const std::vector<Vec>& sites) {
  FullMPS x;
  for (const Vec& v : sites) {
    Core c;
    for (Eigen::Index a = 0; a < v.size(); ++a) c.slice.push_back(Mat::Constant(1, 1, v(a)));
    x.cores.push_back(std::move(c));
  }
  return x;
}

FullMPS random_full_mps(const std::vector<int>& ranks, Rng& rng) {
  if (ranks.size() < 2) throw ValidationError("random_full_mps: need at least two bond ranks");
  FullMPS x;
  for (size_t k = 0; k + 1 < ranks.size(); ++k) {
    Core c;
    for (int a = 0; a < 2; ++a) c.slice.push_back(random_normal(rng, ranks[k], ranks[k + 1]));
    x.cores.push_back(std::move(c));
  }
  return x;
}

FullMPS scale(const FullMPS& x, double c) {
  FullMPS y = x;
  for (Mat& s : y.cores[0].slice) s *= c;
  return y;
}

FullMPO identity_mpo(int K) {
  FullMPO m;
  for (int k = 0; k < K; ++k) {
    MPOCore c;
    c.slice = {Mat::Ones(1, 1), Mat::Zero(1, 1), Mat::Zero(1, 1), Mat::Ones(1, 1)};
    m.cores.push_back(std::move(c));
  }
  m.flux.assign(static_cast<size_t>(K) + 1, std::vector<int>{0});
  return m;
}

}  // namespace bsmps
