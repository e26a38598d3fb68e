#include "bsmps/solvers.hpp"

#include "bsmps/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

namespace bsmps {

namespace {

/// Nonzero entries of one symbolic core as (j1, j2, 2x2 matrix).
struct CoreEntry {
  int j1, j2;
  Mat m;
};

std::vector<CoreEntry> core_entries(const SymCore& core) {
  std::vector<CoreEntry> out;
  for (const auto& [ij, terms] : core.entries) {
    Mat m = core.entry_matrix(ij.first, ij.second);
    if (m.cwiseAbs().maxCoeff() == 0.0) continue;
    out.push_back({ij.first, ij.second, std::move(m)});
  }
  return out;
}

const Mat* find_block(const std::map<int, Mat>& bl, int n) {
  auto it = bl.find(n);
  return it == bl.end() ? nullptr : &it->second;
}

const Mat* find_env(const Env& e, int j, int n) {
  auto it = e.find({j, n});
  return it == e.end() ? nullptr : &it->second;
}

void accumulate(Env& e, int j, int n, const Mat& v) {
  auto [it, fresh] = e.try_emplace({j, n}, v);
  if (!fresh) it->second += v;
}

void check_pair(const SymMPO& h, const BlockMPS& x) {
  h.validate();
  x.validate();
  if (h.K != x.K) throw ValidationError("solver: operator and tensor orders differ");
}

/// Relative residual of r (an arbitrary block MPS) measured through the last
/// core of its left-orthogonal form, which avoids cancellation.
double stable_norm(const BlockMPS& r) {
  const BlockMPS q = orthogonalize_block(r, Side::Left);
  double s = 0.0;
  for (int a = 0; a < 2; ++a)
    for (const auto& [n, m] : q.cores[q.K - 1].blocks(a)) s += m.squaredNorm();
  return std::sqrt(s);
}

int max_rank(const BlockMPS& x) {
  const auto r = x.ranks();
  return *std::max_element(r.begin(), r.end());
}

// ---------------------------------------------------------------- one-site

/// Flat layout of the blocks of one core: (alpha, n) -> offset.
struct CoreLayout {
  std::vector<std::tuple<int, int, int, int, int>> items;  // alpha, n, rows, cols, offset
  int dim = 0;
};

CoreLayout core_layout(const BlockMPS& x, int c) {
  CoreLayout l;
  for (int a = 0; a < 2; ++a)
    for (const auto& [n, m] : x.cores[c].blocks(a)) {
      l.items.emplace_back(a, n, static_cast<int>(m.rows()), static_cast<int>(m.cols()), l.dim);
      l.dim += static_cast<int>(m.size());
    }
  return l;
}

Vec flatten_core(const BlockMPS& x, int c, const CoreLayout& l) {
  Vec v(l.dim);
  for (const auto& [a, n, r, cc, o] : l.items)
    v.segment(o, r * cc) = Eigen::Map<const Vec>(x.cores[c].blocks(a).at(n).data(), r * cc);
  return v;
}

void unflatten_core(BlockMPS& x, int c, const CoreLayout& l, const Vec& v) {
  for (const auto& [a, n, r, cc, o] : l.items)
    x.cores[c].blocks(a)[n] = Eigen::Map<const Mat>(v.data() + o, r, cc);
}

/// Local operator at core c given environments L (bond c) and R (bond c+1).
Vec one_site_matvec(const std::vector<CoreEntry>& ent, const std::vector<int>& fl, const Env& L, const Env& R,
                    const CoreLayout& lay, const Vec& v) {
  std::map<std::pair<int, int>, size_t> where;
  for (size_t i = 0; i < lay.items.size(); ++i)
    where[{std::get<0>(lay.items[i]), std::get<1>(lay.items[i])}] = i;
  Vec w = Vec::Zero(lay.dim);
  for (const auto& [b, n, r, cc, o] : lay.items) {
    const Eigen::Map<const Mat> vb(v.data() + o, r, cc);
    for (const CoreEntry& e : ent) {
      const Mat* le = find_env(L, e.j1, n);
      if (!le) continue;
      const Mat* re = find_env(R, e.j2, n + b);
      if (!re) continue;
      const int nl = n + fl[e.j1];
      for (int a = 0; a < 2; ++a) {
        const double c = e.m(a, b);
        if (c == 0.0) continue;
        auto it = where.find({a, nl});
        if (it == where.end()) continue;
        const auto& [aa, nn, rr, ccc, oo] = lay.items[it->second];
        Eigen::Map<Mat>(w.data() + oo, rr, ccc).noalias() += c * ((*le) * vb * re->transpose());
      }
    }
  }
  return w;
}

/// Smallest eigenpair of a local operator: dense for small sizes, Lanczos
/// otherwise.
std::pair<double, Vec> local_solve(const std::function<Vec(const Vec&)>& op, const Vec& start,
                                   const SolverConfig& cfg) {
  const Eigen::Index d = start.size();
  if (d <= cfg.dense_local_max) {
    Mat H(d, d);
    for (Eigen::Index i = 0; i < d; ++i) H.col(i) = op(Vec::Unit(d, i));
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    Vec v = es.eigenvectors().col(0);
    if (v.dot(start) < 0) v = -v;
    return {es.eigenvalues()(0), v};
  }
  return lanczos_smallest(op, start, cfg.lanczos_tol, cfg.lanczos_max_iter);
}

std::vector<Env> right_envs(const SymMPO& h, const BlockMPS& x) {
  std::vector<Env> R(static_cast<size_t>(x.K) + 1);
  R[x.K] = env_right_seed(x.N);
  for (int c = x.K - 1; c >= 1; --c) R[c] = env_right_step(h, x, c, R[c + 1]);
  return R;
}

void finish_sweep(const SymMPO& h, SolverResult& res, int it) {
  res.energy = rayleigh_quotient(h, res.x);
  res.residual = residual_norm(h, res.x);
  res.trace.rows.push_back({it, res.energy, res.residual, max_rank(res.x), particle_expectation(res.x)});
}

}  // namespace

Env env_left_seed() {
  Env e;
  e[{0, 0}] = Mat::Ones(1, 1);
  return e;
}

Env env_right_seed(int N) {
  Env e;
  e[{0, N}] = Mat::Ones(1, 1);
  return e;
}

Env env_left_step(const SymMPO& h, const BlockMPS& x, int c, const Env& left) {
  Env out;
  const auto ent = core_entries(h.cores[c]);
  const auto& fl = h.flux[c];
  for (const CoreEntry& e : ent)
    for (const auto& [key, L] : left) {
      if (key.first != e.j1) continue;
      const int n = key.second, nl = n + fl[e.j1];
      for (int b = 0; b < 2; ++b) {
        const Mat* xk = find_block(x.cores[c].blocks(b), n);
        if (!xk) continue;
        for (int a = 0; a < 2; ++a) {
          const double v = e.m(a, b);
          if (v == 0.0) continue;
          const Mat* xb = find_block(x.cores[c].blocks(a), nl);
          if (!xb) continue;
          accumulate(out, e.j2, n + b, v * (xb->transpose() * L * (*xk)));
        }
      }
    }
  return out;
}

Env env_right_step(const SymMPO& h, const BlockMPS& x, int c, const Env& right) {
  Env out;
  const auto ent = core_entries(h.cores[c]);
  const auto& fl = h.flux[c];
  for (const CoreEntry& e : ent)
    for (const auto& [n, s] : x.rho[c]) {
      const int nl = n + fl[e.j1];
      for (int b = 0; b < 2; ++b) {
        const Mat* xk = find_block(x.cores[c].blocks(b), n);
        if (!xk) continue;
        const Mat* R = find_env(right, e.j2, n + b);
        if (!R) continue;
        for (int a = 0; a < 2; ++a) {
          const double v = e.m(a, b);
          if (v == 0.0) continue;
          const Mat* xb = find_block(x.cores[c].blocks(a), nl);
          if (!xb) continue;
          accumulate(out, e.j1, n, v * ((*xb) * (*R) * xk->transpose()));
        }
      }
    }
  return out;
}

double rayleigh_quotient(const SymMPO& h, const BlockMPS& x) {
  check_pair(h, x);
  const double nn = inner(x, x);
  if (nn <= 0.0) throw ValidationError("rayleigh_quotient: zero tensor");
  Env L = env_left_seed();
  for (int c = 0; c < x.K; ++c) L = env_left_step(h, x, c, L);
  const Mat* e = find_env(L, 0, x.N);
  return e ? (*e)(0, 0) / nn : 0.0;
}

double residual_norm(const SymMPO& h, const BlockMPS& x) {
  const double rq = rayleigh_quotient(h, x);
  const BlockMPS r = add(apply_sym(h, x), scale(x, -rq));
  return stable_norm(r) / norm(x);
}

std::string SolverTrace::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "iteration,energy,residual,max_rank,particles\n";
  for (const TraceRow& r : rows)
    os << r.iteration << ',' << r.energy << ',' << r.residual << ',' << r.max_rank << ',' << r.particles << '\n';
  return os.str();
}

std::pair<double, Vec> lanczos_smallest(const std::function<Vec(const Vec&)>& op, const Vec& start, double tol,
                                        int max_iter) {
  const Eigen::Index d = start.size();
  if (d == 0) throw ValidationError("lanczos: empty problem");
  Vec v0 = start;
  if (v0.norm() == 0.0) v0 = Vec::Ones(d);
  v0.normalize();
  const int m = static_cast<int>(std::min<Eigen::Index>(d, 60));
  double theta = 0.0;
  for (int restart = 0; restart * m < std::max(max_iter, m); ++restart) {
    Mat Q(d, m);
    Q.col(0) = v0;
    Mat T = Mat::Zero(m, m);
    int k = 0;
    for (; k < m; ++k) {
      Vec w = op(Q.col(k));
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= k; ++i) {
          const double hi = Q.col(i).dot(w);
          if (pass == 0) T(i, k) = hi;
          else T(i, k) += hi;
          w -= hi * Q.col(i);
        }
      if (k + 1 == m) break;
      const double beta = w.norm();
      if (beta < 1e-14) {
        ++k;
        break;
      }
      T(k + 1, k) = beta;
      Q.col(k + 1) = w / beta;
    }
    const int kk = std::min(k + 1, m);
    Mat Ts = T.topLeftCorner(kk, kk);
    Ts = 0.5 * (Ts + Ts.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(Ts);
    theta = es.eigenvalues()(0);
    Vec y = Q.leftCols(kk) * es.eigenvectors().col(0);
    y.normalize();
    const double res = (op(y) - theta * y).norm();
    v0 = y;
    if (res <= tol * std::max(1.0, std::abs(theta)) || kk < m) break;
  }
  return {theta, v0};
}

// ------------------------------------------------------------ gradient descent

SolverResult gradient_descent(const SymMPO& h, const BlockMPS& x0, const SolverConfig& cfg) {
  check_pair(h, x0);
  SolverResult res;
  res.x = scale(x0, 1.0 / norm(x0));
  double f = rayleigh_quotient(h, res.x);
  for (int it = 0; it < cfg.max_iter; ++it) {
    const BlockMPS r = add(apply_sym(h, res.x), scale(res.x, -f));
    const double gn = stable_norm(r);
    res.energy = f;
    res.residual = gn;
    res.trace.rows.push_back({it, f, gn, max_rank(res.x), particle_expectation(res.x)});
    if (gn <= cfg.tol) {
      res.converged = true;
      return res;
    }
    const BlockMPS g = round_block(r, BlockTruncation::with_eps(cfg.eps * gn));
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtrack; ++bt, alpha *= 0.5) {
      const BlockMPS y = add(res.x, scale(g, -alpha));
      const double ny = norm(y);
      BlockMPS cand = round_block(y, BlockTruncation::with_eps(cfg.eps * ny));
      cand = scale(cand, 1.0 / norm(cand));
      const double fn = rayleigh_quotient(h, cand);
      if (fn <= f - cfg.armijo * alpha * 2.0 * gn * gn) {
        res.x = std::move(cand);
        f = fn;
        accepted = true;
        res.trace.substep_energies.push_back(f);
        res.trace.substep_particles.push_back(particle_expectation(res.x));
        break;
      }
    }
    if (!accepted) break;
  }
  res.energy = f;
  res.residual = residual_norm(h, res.x);
  res.converged = res.residual <= cfg.tol;
  res.trace.rows.push_back({static_cast<int>(res.trace.rows.size()), f, res.residual, max_rank(res.x),
                            particle_expectation(res.x)});
  return res;
}

// ------------------------------------------------------------ tangent space

std::pair<BlockMPS, BlockMPS> gauge_pair(const BlockMPS& x) {
  BlockMPS U = orthogonalize_block(x, Side::Left);
  BlockMPS V = orthogonalize_block(U, Side::Right);
  for (int guard = 0; guard < 64 && U.rho != V.rho; ++guard) {
    U = orthogonalize_block(V, Side::Left);
    if (U.rho == V.rho) break;
    V = orthogonalize_block(U, Side::Right);
  }
  if (U.rho != V.rho) throw ValidationError("gauge_pair: size tables did not stabilize");
  return {U, V};
}

TangentVector tangent_project(const BlockMPS& x, const BlockMPS& z) {
  if (x.K != z.K || x.N != z.N) throw ValidationError("tangent_project: order or particle number mismatch");
  z.validate();
  const int K = x.K;
  TangentVector t;
  std::tie(t.U, t.V) = gauge_pair(x);
  const BlockMPS& U = t.U;
  const BlockMPS& V = t.V;
  // Lz[k][n]: U_<k^T z_<k at bond k; Rz[k][n]: V_>=k vs z_>=k at bond k.
  std::vector<std::map<int, Mat>> Lz(static_cast<size_t>(K) + 1), Rz(static_cast<size_t>(K) + 1);
  Lz[0][0] = Mat::Ones(1, 1);
  for (int c = 0; c < K; ++c)
    for (const auto& [n, l] : Lz[c])
      for (int a = 0; a < 2; ++a) {
        const Mat* ub = find_block(U.cores[c].blocks(a), n);
        const Mat* zb = find_block(z.cores[c].blocks(a), n);
        if (!ub || !zb) continue;
        Mat v = ub->transpose() * l * (*zb);
        auto [it, fresh] = Lz[c + 1].try_emplace(n + a, v);
        if (!fresh) it->second += v;
      }
  Rz[K][z.N] = Mat::Ones(1, 1);
  for (int c = K - 1; c >= 1; --c)
    for (const auto& [m, r] : Rz[c + 1])
      for (int a = 0; a < 2; ++a) {
        const Mat* vb = find_block(V.cores[c].blocks(a), m - a);
        const Mat* zb = find_block(z.cores[c].blocks(a), m - a);
        if (!vb || !zb) continue;
        Mat v = (*vb) * r * zb->transpose();
        auto [it, fresh] = Rz[c].try_emplace(m - a, v);
        if (!fresh) it->second += v;
      }
  t.dY.assign(static_cast<size_t>(K), BlockCore{});
  for (int k = 0; k < K; ++k) {
    BlockCore& d = t.dY[k];
    for (int a = 0; a < 2; ++a)
      for (const auto& [n, ub] : U.cores[k].blocks(a)) {
        Mat c = Mat::Zero(ub.rows(), ub.cols());
        const Mat* zb = find_block(z.cores[k].blocks(a), n);
        auto il = Lz[k].find(n);
        auto ir = Rz[k + 1].find(n + a);
        if (zb && il != Lz[k].end() && ir != Rz[k + 1].end()) c = il->second * (*zb) * ir->second.transpose();
        d.blocks(a)[n] = std::move(c);
      }
    if (k + 1 < K) {
      // remove the component along U_k (left gauge condition)
      BlockMPS tmp;
      tmp.K = K;
      tmp.N = x.N;
      tmp.rho = U.rho;
      tmp.cores.assign(static_cast<size_t>(K), BlockCore{});
      tmp.cores[k] = d;
      for (const auto& [m, s] : U.rho[k + 1]) {
        const Mat u = left_unfold(U, k, m);
        const Mat cm = left_unfold(tmp, k, m);
        set_left_unfold(tmp, k, m, cm - u * (u.transpose() * cm));
      }
      d = tmp.cores[k];
    }
  }
  return t;
}

BlockMPS tangent_to_mps(const TangentVector& t) {
  const BlockMPS& U = t.U;
  const BlockMPS& V = t.V;
  const int K = U.K;
  if (K == 1) {
    BlockMPS y = U;
    y.cores[0] = t.dY[0];
    y.ortho = Ortho::None;
    return y;
  }
  BlockMPS y;
  y.K = K;
  y.N = U.N;
  y.rho = U.rho;
  for (int b = 1; b < K; ++b)
    for (auto& [n, s] : y.rho[b]) s *= 2;
  y.cores.assign(static_cast<size_t>(K), BlockCore{});
  for (int k = 0; k < K; ++k)
    for (int a = 0; a < 2; ++a)
      for (const auto& [n, ub] : U.cores[k].blocks(a)) {
        const Mat& db = t.dY[k].blocks(a).at(n);
        const Mat& vb = V.cores[k].blocks(a).at(n);
        const Eigen::Index r = ub.rows(), c = ub.cols();
        Mat blk;
        if (k == 0) {
          blk.resize(r, 2 * c);
          blk << ub, db;
        } else if (k + 1 == K) {
          blk.resize(2 * r, c);
          blk << db, vb;
        } else {
          blk = Mat::Zero(2 * r, 2 * c);
          blk.topLeftCorner(r, c) = ub;
          blk.topRightCorner(r, c) = db;
          blk.bottomRightCorner(r, c) = vb;
        }
        y.cores[k].blocks(a)[n] = std::move(blk);
      }
  normalize_blocks(y);
  y.validate();
  return y;
}

SolverResult riemannian_gd(const SymMPO& h, const BlockMPS& x0, const SolverConfig& cfg) {
  check_pair(h, x0);
  SolverResult res;
  res.x = scale(x0, 1.0 / norm(x0));
  double f = rayleigh_quotient(h, res.x);
  for (int it = 0; it < cfg.max_iter; ++it) {
    const BlockMPS r = add(apply_sym(h, res.x), scale(res.x, -f));
    const double rn = stable_norm(r);
    res.energy = f;
    res.residual = rn;
    res.trace.rows.push_back({it, f, rn, max_rank(res.x), particle_expectation(res.x)});
    if (rn <= cfg.tol) {
      res.converged = true;
      return res;
    }
    const BlockMPS pg = tangent_to_mps(tangent_project(res.x, r));
    const double gn = stable_norm(pg);
    if (gn == 0.0) break;
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtrack; ++bt, alpha *= 0.5) {
      const BlockMPS y = add(res.x, scale(pg, -alpha));
      auto [ys, spec] = tt_svd_block(y, Side::Right);
      BlockMPS cand = truncate_block(ys, spec, BlockTruncation::with_sector_caps(res.x.rho, cfg.floor));
      const double nc = norm(cand);
      if (nc == 0.0) continue;
      cand = scale(cand, 1.0 / nc);
      const double fn = rayleigh_quotient(h, cand);
      if (fn <= f - cfg.armijo * alpha * 2.0 * gn * gn) {
        res.x = std::move(cand);
        f = fn;
        accepted = true;
        res.trace.substep_energies.push_back(f);
        res.trace.substep_particles.push_back(particle_expectation(res.x));
        break;
      }
    }
    if (!accepted) break;
  }
  res.energy = f;
  res.residual = residual_norm(h, res.x);
  res.converged = res.residual <= cfg.tol;
  res.trace.rows.push_back({static_cast<int>(res.trace.rows.size()), f, res.residual, max_rank(res.x),
                            particle_expectation(res.x)});
  return res;
}

// ------------------------------------------------------------ ALS (one site)

SolverResult als_one_site(const SymMPO& h, const BlockMPS& x0, const SolverConfig& cfg) {
  check_pair(h, x0);
  const int K = x0.K;
  SolverResult res;
  res.x = orthogonalize_block(x0, Side::Right);
  res.x = scale(res.x, 1.0 / norm(res.x));
  std::vector<Env> L(static_cast<size_t>(K) + 1);
  std::vector<Env> R = right_envs(h, res.x);
  L[0] = env_left_seed();
  double last = std::numeric_limits<double>::infinity();
  auto solve_at = [&](int c) {
    const auto ent = core_entries(h.cores[c]);
    const CoreLayout lay = core_layout(res.x, c);
    auto op = [&](const Vec& v) { return one_site_matvec(ent, h.flux[c], L[c], R[c + 1], lay, v); };
    auto [e, v] = local_solve(op, flatten_core(res.x, c, lay), cfg);
    unflatten_core(res.x, c, lay, v);
    res.trace.substep_energies.push_back(e);
    res.trace.substep_particles.push_back(particle_expectation(res.x));
    return e;
  };
  finish_sweep(h, res, 0);
  if (res.residual <= cfg.tol) {
    res.converged = true;
    return res;
  }
  for (int sweep = 1; sweep <= cfg.max_iter; ++sweep) {
    if (K == 1) {
      solve_at(0);
    } else {
      for (int c = 0; c + 1 < K; ++c) {
        solve_at(c);
        orthogonalize_core(res.x, c, Side::Left);
        L[c + 1] = env_left_step(h, res.x, c, L[c]);
      }
      for (int c = K - 1; c >= 1; --c) {
        solve_at(c);
        orthogonalize_core(res.x, c, Side::Right);
        R[c] = env_right_step(h, res.x, c, R[c + 1]);
      }
    }
    res.x.ortho = Ortho::Right;
    finish_sweep(h, res, sweep);
    const double de = std::abs(res.energy - last);
    last = res.energy;
    if (res.residual <= cfg.tol || de <= 1e-13) break;
  }
  res.converged = res.residual <= cfg.tol;
  return res;
}

// ------------------------------------------------------------ two-site DMRG

namespace {

struct TwoSiteLayout {
  struct Item {
    int n, a1, a2, rows, cols, off;
  };
  std::vector<Item> items;
  std::map<std::tuple<int, int, int>, int> index;
  int dim = 0;
};

TwoSiteLayout two_site_layout(const BlockMPS& x, int c) {
  TwoSiteLayout l;
  const SectorRange mid = x.range(c + 1);
  for (const auto& [n, s] : x.rho[c])
    for (int a1 = 0; a1 < 2; ++a1) {
      if (!mid.contains(n + a1)) continue;
      for (int a2 = 0; a2 < 2; ++a2) {
        const int r = x.size(c + 2, n + a1 + a2);
        if (r == 0) continue;
        l.index[{n, a1, a2}] = static_cast<int>(l.items.size());
        l.items.push_back({n, a1, a2, s, r, l.dim});
        l.dim += s * r;
      }
    }
  return l;
}

Vec two_site_contract(const BlockMPS& x, int c, const TwoSiteLayout& l) {
  Vec v = Vec::Zero(l.dim);
  for (const auto& it : l.items) {
    const Mat* b1 = find_block(x.cores[c].blocks(it.a1), it.n);
    const Mat* b2 = find_block(x.cores[c + 1].blocks(it.a2), it.n + it.a1);
    if (!b1 || !b2) continue;
    const Mat m = (*b1) * (*b2);
    v.segment(it.off, it.rows * it.cols) = Eigen::Map<const Vec>(m.data(), m.size());
  }
  return v;
}

using Coef16 = std::array<double, 16>;  // [a1][b1][a2][b2]

std::map<std::pair<int, int>, Coef16> two_site_coeffs(const SymMPO& h, int c) {
  std::map<std::pair<int, int>, Coef16> out;
  const auto e1 = core_entries(h.cores[c]);
  const auto e2 = core_entries(h.cores[c + 1]);
  for (const CoreEntry& p : e1)
    for (const CoreEntry& q : e2) {
      if (q.j1 != p.j2) continue;
      auto [it, fresh] = out.try_emplace({p.j1, q.j2}, Coef16{});
      for (int a1 = 0; a1 < 2; ++a1)
        for (int b1 = 0; b1 < 2; ++b1)
          for (int a2 = 0; a2 < 2; ++a2)
            for (int b2 = 0; b2 < 2; ++b2) it->second[a1 * 8 + b1 * 4 + a2 * 2 + b2] += p.m(a1, b1) * q.m(a2, b2);
    }
  return out;
}

}  // namespace

SolverResult dmrg_two_site(const SymMPO& h, const BlockMPS& x0, const SolverConfig& cfg) {
  check_pair(h, x0);
  const int K = x0.K;
  if (K < 2) return als_one_site(h, x0, cfg);
  SolverResult res;
  res.x = orthogonalize_block(x0, Side::Right);
  res.x = scale(res.x, 1.0 / norm(res.x));
  std::vector<Env> L(static_cast<size_t>(K) + 1);
  std::vector<Env> R = right_envs(h, res.x);
  L[0] = env_left_seed();
  std::vector<std::map<std::pair<int, int>, Coef16>> coeffs;
  for (int c = 0; c + 1 < K; ++c) coeffs.push_back(two_site_coeffs(h, c));

  auto step = [&](int c, bool left_to_right) {
    BlockMPS& x = res.x;
    const TwoSiteLayout lay = two_site_layout(x, c);
    const auto& co = coeffs[c];
    const auto& fl = h.flux[c];
    const Env& Lc = L[c];
    const Env& Rc = R[c + 2];
    auto op = [&](const Vec& v) {
      Vec w = Vec::Zero(lay.dim);
      for (const auto& it : lay.items) {
        const Eigen::Map<const Mat> vb(v.data() + it.off, it.rows, it.cols);
        const int nr = it.n + it.a1 + it.a2;
        for (const auto& [jj, cf] : co) {
          const Mat* le = find_env(Lc, jj.first, it.n);
          if (!le) continue;
          const Mat* re = find_env(Rc, jj.second, nr);
          if (!re) continue;
          const int nl = it.n + fl[jj.first];
          Mat t;
          for (int a1 = 0; a1 < 2; ++a1)
            for (int a2 = 0; a2 < 2; ++a2) {
              const double s = cf[a1 * 8 + it.a1 * 4 + a2 * 2 + it.a2];
              if (s == 0.0) continue;
              auto wi = lay.index.find({nl, a1, a2});
              if (wi == lay.index.end()) continue;
              if (t.size() == 0) t = (*le) * vb * re->transpose();
              const auto& o = lay.items[wi->second];
              Eigen::Map<Mat>(w.data() + o.off, o.rows, o.cols) += s * t;
            }
        }
      }
      return w;
    };
    auto [e, v] = local_solve(op, two_site_contract(x, c, lay), cfg);
    // split per middle sector m
    const SectorRange mid = x.range(c + 1);
    struct Piece {
      int m;
      Mat u, vt;
      Vec s;
    };
    std::vector<Piece> pieces;
    for (int m = mid.lo(); m <= mid.hi(); ++m) {
      const int r0 = x.size(c, m), r1 = x.size(c, m - 1);
      const int c0 = x.size(c + 2, m), c1 = x.size(c + 2, m + 1);
      if (r0 + r1 == 0 || c0 + c1 == 0) continue;
      Mat th = Mat::Zero(r0 + r1, c0 + c1);
      auto put = [&](int n, int a1, int a2, int ro, int cofs) {
        auto wi = lay.index.find({n, a1, a2});
        if (wi == lay.index.end()) return;
        const auto& o = lay.items[wi->second];
        th.block(ro, cofs, o.rows, o.cols) = Eigen::Map<const Mat>(v.data() + o.off, o.rows, o.cols);
      };
      put(m, 0, 0, 0, 0);
      put(m, 0, 1, 0, c0);
      put(m - 1, 1, 0, r0, 0);
      put(m - 1, 1, 1, r0, c0);
      Piece p;
      p.m = m;
      Mat vv;
      svd_thin(th, p.u, p.s, vv);
      p.vt = vv.transpose();
      pieces.push_back(std::move(p));
    }
    // global truncation with per-sector caps
    struct Item {
      double s;
      int piece, idx;
    };
    std::vector<Item> items;
    std::vector<int> keep(pieces.size());
    for (size_t i = 0; i < pieces.size(); ++i) {
      const long long cap = mid.bound(pieces[i].m);
      keep[i] = static_cast<int>(std::min<long long>(pieces[i].s.size(), cap));
      for (int k = 0; k < keep[i]; ++k) items.push_back({pieces[i].s(k), static_cast<int>(i), k});
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      return std::tie(a.s, a.piece, b.idx) < std::tie(b.s, b.piece, a.idx);
    });
    double acc = 0.0;
    int total = static_cast<int>(items.size());
    for (const Item& it : items) {
      if (total <= 1 || acc + it.s * it.s > cfg.eps * cfg.eps) break;
      if (it.idx != keep[it.piece] - 1) continue;
      acc += it.s * it.s;
      --keep[it.piece];
      --total;
    }
    BlockCore c1, c2;
    std::map<int, int> sizes;
    for (size_t i = 0; i < pieces.size(); ++i) {
      const int k = keep[i];
      if (k == 0) continue;
      const Piece& p = pieces[i];
      const int m = p.m;
      const int r0 = x.size(c, m), r1 = x.size(c, m - 1);
      const int c0 = x.size(c + 2, m), c1n = x.size(c + 2, m + 1);
      Mat u = p.u.leftCols(k);
      Mat vt = p.vt.topRows(k);
      if (left_to_right)
        vt = p.s.head(k).asDiagonal() * vt;
      else
        u = u * p.s.head(k).asDiagonal();
      if (r0 > 0) c1.unocc[m] = u.topRows(r0);
      if (r1 > 0) c1.occ[m - 1] = u.bottomRows(r1);
      if (c0 > 0) c2.unocc[m] = vt.leftCols(c0);
      if (c1n > 0) c2.occ[m] = vt.rightCols(c1n);
      sizes[m] = k;
    }
    x.cores[c] = std::move(c1);
    x.cores[c + 1] = std::move(c2);
    x.rho[c + 1] = sizes;
    normalize_blocks(x);
    res.trace.substep_energies.push_back(e);
    res.trace.substep_particles.push_back(particle_expectation(x));
    if (left_to_right)
      L[c + 1] = env_left_step(h, x, c, L[c]);
    else
      R[c + 1] = env_right_step(h, x, c + 1, R[c + 2]);
  };

  finish_sweep(h, res, 0);
  if (res.residual <= cfg.tol) {
    res.converged = true;
    return res;
  }
  double last = std::numeric_limits<double>::infinity();
  for (int sweep = 1; sweep <= cfg.max_iter; ++sweep) {
    for (int c = 0; c + 1 < K; ++c) step(c, true);
    for (int c = K - 2; c >= 0; --c) step(c, false);
    res.x.ortho = Ortho::Right;
    res.x.validate();
    finish_sweep(h, res, sweep);
    const double de = std::abs(res.energy - last);
    last = res.energy;
    if (res.residual <= cfg.tol || de <= 1e-13) break;
  }
  res.converged = res.residual <= cfg.tol;
  return res;
}

}  // namespace bsmps
