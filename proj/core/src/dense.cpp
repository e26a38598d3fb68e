#include "bsmps/dense.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <bit>
#include <cmath>
#include <string>

namespace bsmps {
namespace {

using SpMat = Eigen::SparseMatrix<double>;

void check_orbital(int i, int K) {
  if (K < 1) throw Error("number of orbitals must be positive");
  if (i < 0 || i >= K) throw Error("orbital index " + std::to_string(i) + " out of range");
}

std::vector<int> fermion_dims(int K) { return std::vector<int>(static_cast<size_t>(K), 2); }

SpMat sparse_kron_chain(const std::vector<Mat>& factors) {
  SpMat out(1, 1);
  out.insert(0, 0) = 1.0;
  for (const Mat& f : factors) {
    SpMat fs = f.sparseView();
    SpMat next = Eigen::kroneckerProduct(out, fs).eval();
    out = next;
  }
  return out;
}

SpMat sparse_annihilation(int i, int K) {
  std::vector<Mat> f;
  for (int k = 0; k < K; ++k) f.push_back(k < i ? elem_S() : (k == i ? elem_A() : elem_I()));
  return sparse_kron_chain(f);
}

int popcount_index(std::size_t idx) { return std::popcount(idx); }

}  // namespace

Mat elem_S() { return Eigen::Vector2d(1.0, -1.0).asDiagonal(); }
Mat elem_A() {
  Mat a = Mat::Zero(2, 2);
  a(0, 1) = 1.0;
  return a;
}
Mat elem_I() { return Mat::Identity(2, 2); }
Mat elem_N() {
  Mat n = Mat::Zero(2, 2);
  n(1, 1) = 1.0;
  return n;
}

Mat kron_chain(const std::vector<Mat>& factors) {
  Mat out = Mat::Ones(1, 1);
  for (const Mat& f : factors) {
    Mat next = Eigen::kroneckerProduct(out, f).eval();
    out.swap(next);
  }
  return out;
}

DenseOperator build_annihilation(int i, int K) {
  check_orbital(i, K);
  return {fermion_dims(K), Mat(sparse_annihilation(i, K))};
}

DenseOperator build_creation(int i, int K) {
  DenseOperator a = build_annihilation(i, K);
  a.data.transposeInPlace();
  return a;
}

DenseOperator build_particle_number(int K) {
  const std::size_t dim = std::size_t{1} << K;
  Mat p = Mat::Zero(dim, dim);
  for (int i = 0; i < K; ++i) {
    SpMat a = sparse_annihilation(i, K);
    SpMat n = SpMat(a.transpose()) * a;
    p += Mat(n);
  }
  return {fermion_dims(K), p};
}

DenseOperator build_truncated_pn(int K, int k, Side side) {
  if (k < 0 || k > K) throw Error("truncation position out of range");
  const int modes = side == Side::Left ? k : K - k;
  if (modes == 0) return {{}, Mat::Zero(1, 1)};
  return build_particle_number(modes);
}

DenseOperator build_laplace_like(const LaplaceSpec& spec) {
  std::vector<int> dims;
  std::size_t total = 1;
  for (const auto& l : spec.lambda) {
    if (l.empty()) throw Error("empty mode in Laplace-like specification");
    dims.push_back(static_cast<int>(l.size()));
    total *= l.size();
  }
  Vec diag = Vec::Zero(static_cast<Eigen::Index>(total));
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    double val = 0.0;
    for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
      val += spec.lambda[k][rest % dims[k]];
      rest /= dims[k];
    }
    diag(static_cast<Eigen::Index>(idx)) = val;
  }
  return {dims, Mat(diag.asDiagonal())};
}

DenseOperator brute_force_onebody(const OneBodyCoeffs& t) {
  const int K = t.K;
  std::vector<SpMat> a;
  for (int i = 0; i < K; ++i) a.push_back(sparse_annihilation(i, K));
  const Eigen::Index dim = Eigen::Index{1} << K;
  SpMat h(dim, dim);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      if (t.t(i, j) != 0.0) h += t.t(i, j) * (SpMat(a[i].transpose()) * a[j]);
  return {fermion_dims(K), Mat(h)};
}

DenseOperator brute_force_twobody(const TwoBodyCoeffs& v) {
  const int K = v.K;
  std::vector<SpMat> a, ad;
  for (int i = 0; i < K; ++i) {
    a.push_back(sparse_annihilation(i, K));
    ad.push_back(SpMat(a.back().transpose()));
  }
  const Eigen::Index dim = Eigen::Index{1} << K;
  SpMat h(dim, dim);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      if (i == j) continue;
      SpMat cc = ad[i] * ad[j];
      for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
          if (k == l) continue;
          const double c = v.raw(i, j, k, l);
          if (c == 0.0) continue;
          h += c * (cc * (a[k] * a[l]));
        }
    }
  return {fermion_dims(K), Mat(h)};
}

DenseOperator brute_force_hamiltonian(const OneBodyCoeffs& t, const TwoBodyCoeffs& v) {
  if (t.K != v.K) throw Error("dimension mismatch between one- and two-body coefficients");
  DenseOperator h = brute_force_onebody(t);
  h.data += brute_force_twobody(v).data;
  return h;
}

std::vector<std::size_t> sector_basis(int K, int N) {
  if (N < 0 || N > K) throw Error("particle number out of range");
  std::vector<std::size_t> out;
  for (std::size_t idx = 0; idx < (std::size_t{1} << K); ++idx)
    if (popcount_index(idx) == N) out.push_back(idx);
  return out;
}

bool preserves_particle_number(const DenseOperator& op, int K, double tol) {
  const std::size_t dim = std::size_t{1} << K;
  if (static_cast<std::size_t>(op.data.rows()) != dim || op.data.cols() != op.data.rows())
    throw Error("operator has wrong dimension");
  for (std::size_t c = 0; c < dim; ++c)
    for (std::size_t r = 0; r < dim; ++r)
      if (popcount_index(r) != popcount_index(c) && std::abs(op.data(r, c)) > tol) return false;
  return true;
}

SectorEigen sector_diagonalize(const DenseOperator& op, int K, int N) {
  if (!preserves_particle_number(op, K)) throw ValidationError("not particle-number preserving");
  SectorEigen out;
  out.basis = sector_basis(K, N);
  const Eigen::Index n = static_cast<Eigen::Index>(out.basis.size());
  Mat h(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) h(r, c) = op.data(out.basis[r], out.basis[c]);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.transpose()));
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

Vec embed_sector(const Vec& coords, const std::vector<std::size_t>& basis, int K) {
  Vec out = Vec::Zero(Eigen::Index{1} << K);
  for (std::size_t i = 0; i < basis.size(); ++i) out(basis[i]) = coords(static_cast<Eigen::Index>(i));
  return out;
}

Mat rank_one_matrix(const std::vector<int>& creators, const std::vector<int>& annihilators, int K) {
  const Eigen::Index dim = Eigen::Index{1} << K;
  SpMat m(dim, dim);
  m.setIdentity();
  for (int d : creators) {
    check_orbital(d, K);
    m = m * SpMat(sparse_annihilation(d, K).transpose());
  }
  for (int d : annihilators) {
    check_orbital(d, K);
    m = m * sparse_annihilation(d, K);
  }
  return Mat(m);
}

DenseOperator reassemble(const std::vector<RankOneTerm>& terms, int K) {
  const Eigen::Index dim = Eigen::Index{1} << K;
  Mat out = Mat::Zero(dim, dim);
  for (const auto& t : terms) out += t.coeff * rank_one_matrix(t.creators, t.annihilators, K);
  return {fermion_dims(K), out};
}

std::vector<RankOneTerm> decompose_pn_operator(const DenseOperator& op, int K) {
  if (K > 5) throw Error("decompose_pn_operator is limited to K <= 5");
  if (!preserves_particle_number(op, K)) throw ValidationError("not particle-number preserving");
  auto subsets = [K](int n) {
    std::vector<std::vector<int>> out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << K); ++mask) {
      if (popcount_index(mask) != n) continue;
      std::vector<int> s;
      for (int i = 0; i < K; ++i)
        if (mask & (std::size_t{1} << i)) s.push_back(i);
      out.push_back(s);
    }
    return out;
  };
  auto basis_index = [K](const std::vector<int>& occ) {
    std::size_t idx = 0;
    for (int i : occ) idx |= std::size_t{1} << (K - 1 - i);
    return idx;
  };
  std::vector<RankOneTerm> terms;
  Mat residual = op.data;
  for (int n = 0; n <= K; ++n) {
    // Terms with n creators/annihilators annihilate every state with fewer
    // than n particles, so the residual restricted to sector n determines them.
    std::vector<RankOneTerm> level;
    for (const auto& dp : subsets(n))
      for (const auto& dm : subsets(n)) {
        const std::size_t r = basis_index(dp), c = basis_index(dm);
        const double entry = residual(r, c);
        if (std::abs(entry) <= 1e-14) continue;
        const Mat m = rank_one_matrix(dp, dm, K);
        const double sign = m(r, c);  // explicit action: +-1
        level.push_back({dp, dm, entry / sign});
      }
    for (const auto& t : level) {
      residual -= t.coeff * rank_one_matrix(t.creators, t.annihilators, K);
      terms.push_back(t);
    }
  }
  return terms;
}

}  // namespace bsmps
