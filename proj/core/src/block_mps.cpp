#include "bsmps/block_mps.hpp"

#include "bsmps/linalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

namespace bsmps {

long long SectorRange::bound(int n) const {
  if (!contains(n)) return 0;
  return std::min(binomial(b, n), binomial(K - b, N - n));
}

int BlockMPS::size(int b, int n) const {
  if (b < 0 || b > K) return 0;
  auto it = rho[b].find(n);
  return it == rho[b].end() ? 0 : it->second;
}

int BlockMPS::rank(int b) const {
  int r = 0;
  for (const auto& [n, s] : rho[b]) r += s;
  return r;
}

std::vector<int> BlockMPS::ranks() const {
  std::vector<int> r;
  for (int b = 0; b <= K; ++b) r.push_back(rank(b));
  return r;
}

void BlockMPS::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("block MPS: " + m); };
  if (K < 1) fail("order must be positive");
  if (N < 0 || N > K) fail("particle number out of range");
  if (static_cast<int>(rho.size()) != K + 1) fail("size table has wrong length");
  if (static_cast<int>(cores.size()) != K) fail("wrong number of cores");
  if (size(0, 0) != 1 || rho[0].size() != 1) fail("left boundary sector must be {0: 1}");
  if (size(K, N) != 1 || rho[K].size() != 1) fail("right boundary sector must be {N: 1}");
  for (int b = 0; b <= K; ++b) {
    const SectorRange sr = range(b);
    for (const auto& [n, s] : rho[b]) {
      if (!sr.contains(n))
        fail("inadmissible sector " + std::to_string(n) + " at bond " + std::to_string(b));
      if (s <= 0) fail("zero-size sector stored at bond " + std::to_string(b));
    }
  }
  for (int c = 0; c < K; ++c) {
    for (int a = 0; a < 2; ++a) {
      const auto& bl = cores[c].blocks(a);
      for (const auto& [n, m] : bl) {
        const int rl = size(c, n), rr = size(c + 1, n + a);
        if (rl == 0 || rr == 0)
          fail("block without sectors in core " + std::to_string(c));
        if (m.rows() != rl || m.cols() != rr)
          fail("block shape mismatch in core " + std::to_string(c));
      }
      for (const auto& [n, s] : rho[c])
        if (size(c + 1, n + a) > 0 && !bl.count(n))
          fail("missing block in core " + std::to_string(c));
    }
  }
}

bool BlockMPS::within_size_bounds() const {
  for (int b = 0; b <= K; ++b)
    for (const auto& [n, s] : rho[b])
      if (s > range(b).bound(n)) return false;
  return true;
}

void normalize_blocks(BlockMPS& x) {
  for (auto& t : x.rho)
    for (auto it = t.begin(); it != t.end();)
      it = it->second <= 0 ? t.erase(it) : std::next(it);
  for (int c = 0; c < x.K; ++c) {
    for (int a = 0; a < 2; ++a) {
      auto& bl = x.cores[c].blocks(a);
      for (auto it = bl.begin(); it != bl.end();) {
        const int n = it->first;
        it = (x.size(c, n) == 0 || x.size(c + 1, n + a) == 0) ? bl.erase(it) : std::next(it);
      }
      for (const auto& [n, s] : x.rho[c]) {
        const int rr = x.size(c + 1, n + a);
        if (rr > 0 && !bl.count(n)) bl[n] = Mat::Zero(s, rr);
      }
    }
  }
}

SizeTable make_size_table(int K, int N, const SizeRule& rule) {
  if (K < 1 || N < 0 || N > K) throw ValidationError("invalid order or particle number");
  SizeTable t(static_cast<size_t>(K) + 1);
  if (rule.kind == SizeRule::Kind::Explicit) {
    if (static_cast<int>(rule.table.size()) != K + 1) throw ValidationError("size table has wrong length");
    for (int b = 0; b <= K; ++b) {
      const SectorRange sr{K, N, b};
      for (const auto& [n, s] : rule.table[b]) {
        if (s == 0) continue;
        if (!sr.contains(n) || s < 0 || s > sr.bound(n))
          throw ValidationError("cap violation at bond " + std::to_string(b) + ", sector " +
                                std::to_string(n));
        t[b][n] = s;
      }
    }
    return t;
  }
  for (int b = 0; b <= K; ++b) {
    const SectorRange sr{K, N, b};
    for (int n = sr.lo(); n <= sr.hi(); ++n) {
      const long long cap = sr.bound(n);
      long long s = rule.kind == SizeRule::Kind::Constant ? std::min<long long>(rule.rho_bar, cap) : cap;
      s = std::min<long long>(s, std::numeric_limits<int>::max());
      if (s > 0) t[b][n] = static_cast<int>(s);
    }
  }
  return t;
}

BlockMPS zero_block_mps(int K, int N, const SizeTable& rho) {
  BlockMPS x;
  x.K = K;
  x.N = N;
  x.rho = rho;
  x.cores.assign(static_cast<size_t>(K), BlockCore{});
  normalize_blocks(x);
  x.validate();
  return x;
}

BlockMPS random_block_mps(int K, int N, const SizeRule& rule, Rng& rng) {
  BlockMPS x = zero_block_mps(K, N, make_size_table(K, N, rule));
  for (auto& core : x.cores)
    for (int a = 0; a < 2; ++a)
      for (auto& [n, m] : core.blocks(a)) m = random_normal(rng, m.rows(), m.cols());
  return x;
}

BlockMPS determinant(int K, const std::vector<int>& occupied) {
  std::vector<int> d = occupied;
  std::sort(d.begin(), d.end());
  if (std::adjacent_find(d.begin(), d.end()) != d.end()) throw ValidationError("repeated orbital");
  for (int i : d)
    if (i < 0 || i >= K) throw ValidationError("orbital index out of range");
  BlockMPS x;
  x.K = K;
  x.N = static_cast<int>(d.size());
  x.rho.assign(static_cast<size_t>(K) + 1, {});
  x.cores.assign(static_cast<size_t>(K), BlockCore{});
  int n = 0;
  x.rho[0][0] = 1;
  for (int c = 0; c < K; ++c) {
    const bool occ = std::binary_search(d.begin(), d.end(), c);
    x.cores[c].blocks(occ ? 1 : 0)[n] = Mat::Ones(1, 1);
    n += occ ? 1 : 0;
    x.rho[c + 1][n] = 1;
  }
  x.ortho = Ortho::Right;
  x.validate();
  return x;
}

namespace {

std::map<int, int> offsets(const std::map<int, int>& sizes) {
  std::map<int, int> off;
  int o = 0;
  for (const auto& [n, s] : sizes) {
    off[n] = o;
    o += s;
  }
  return off;
}

}  // namespace

FullMPS to_full(const BlockMPS& x) {
  x.validate();
  FullMPS y;
  for (int c = 0; c < x.K; ++c) {
    const auto ol = offsets(x.rho[c]);
    const auto orr = offsets(x.rho[c + 1]);
    Core core;
    for (int a = 0; a < 2; ++a) {
      Mat s = Mat::Zero(x.rank(c), x.rank(c + 1));
      for (const auto& [n, m] : x.cores[c].blocks(a))
        s.block(ol.at(n), orr.at(n + a), m.rows(), m.cols()) = m;
      core.slice.push_back(std::move(s));
    }
    y.cores.push_back(std::move(core));
  }
  return y;
}

Mat left_unfold(const BlockMPS& x, int c, int m) {
  const int r0 = x.size(c, m), r1 = x.size(c, m - 1), cols = x.size(c + 1, m);
  Mat u = Mat::Zero(r0 + r1, cols);
  if (cols == 0) return u;
  if (r0 > 0) u.topRows(r0) = x.cores[c].unocc.at(m);
  if (r1 > 0) u.bottomRows(r1) = x.cores[c].occ.at(m - 1);
  return u;
}

void set_left_unfold(BlockMPS& x, int c, int m, const Mat& u) {
  const int r0 = x.size(c, m), r1 = x.size(c, m - 1);
  if (u.rows() != r0 + r1) throw ValidationError("set_left_unfold: row mismatch");
  if (r0 > 0) x.cores[c].unocc[m] = u.topRows(r0);
  if (r1 > 0) x.cores[c].occ[m - 1] = u.bottomRows(r1);
}

Mat right_unfold(const BlockMPS& x, int c, int n) {
  const int rows = x.size(c, n), c0 = x.size(c + 1, n), c1 = x.size(c + 1, n + 1);
  Mat u = Mat::Zero(rows, c0 + c1);
  if (rows == 0) return u;
  if (c0 > 0) u.leftCols(c0) = x.cores[c].unocc.at(n);
  if (c1 > 0) u.rightCols(c1) = x.cores[c].occ.at(n);
  return u;
}

void set_right_unfold(BlockMPS& x, int c, int n, const Mat& u) {
  const int c0 = x.size(c + 1, n), c1 = x.size(c + 1, n + 1);
  if (u.cols() != c0 + c1) throw ValidationError("set_right_unfold: column mismatch");
  if (c0 > 0) x.cores[c].unocc[n] = u.leftCols(c0);
  if (c1 > 0) x.cores[c].occ[n] = u.rightCols(c1);
}

namespace {

/// Replaces sector m of bond b (b = c+1) by a new size: core c gets the new
/// left-unfold u, core c+1 gets its left-sector-m blocks multiplied by r.
void push_left(BlockMPS& x, int c, int m, const Mat& u, const Mat& r) {
  const int r0 = x.size(c, m), r1 = x.size(c, m - 1);
  const int k = static_cast<int>(u.cols());
  if (r0 > 0) x.cores[c].unocc[m] = u.topRows(r0);
  if (r1 > 0) x.cores[c].occ[m - 1] = u.bottomRows(r1);
  for (int a = 0; a < 2; ++a) {
    auto& bl = x.cores[c + 1].blocks(a);
    auto it = bl.find(m);
    if (it != bl.end()) it->second = (r * it->second).eval();
  }
  x.rho[c + 1][m] = k;
}

/// Mirror of push_left: core c gets right-unfold u at left sector n, core c-1
/// gets its right-sector-n blocks multiplied by l from the right.
void push_right(BlockMPS& x, int c, int n, const Mat& u, const Mat& l) {
  const int c0 = x.size(c + 1, n), c1 = x.size(c + 1, n + 1);
  const int k = static_cast<int>(u.rows());
  if (c0 > 0) x.cores[c].unocc[n] = u.leftCols(c0);
  if (c1 > 0) x.cores[c].occ[n] = u.rightCols(c1);
  auto& un = x.cores[c - 1].unocc;
  if (auto it = un.find(n); it != un.end()) it->second = (it->second * l).eval();
  auto& oc = x.cores[c - 1].occ;
  if (auto it = oc.find(n - 1); it != oc.end()) it->second = (it->second * l).eval();
  x.rho[c][n] = k;
}

}  // namespace

void orthogonalize_core(BlockMPS& x, int c, Side side) {
  if (side == Side::Left) {
    const std::map<int, int> sectors = x.rho[c + 1];
    for (const auto& [m, s] : sectors) {
      Mat q, r;
      qr_thin(left_unfold(x, c, m), q, r);
      push_left(x, c, m, q, r);
    }
  } else {
    const std::map<int, int> sectors = x.rho[c];
    for (const auto& [n, s] : sectors) {
      Mat q, r;
      qr_thin(right_unfold(x, c, n).transpose(), q, r);
      push_right(x, c, n, q.transpose(), r.transpose());
    }
  }
  normalize_blocks(x);
}

BlockMPS orthogonalize_block(const BlockMPS& x, Side side) {
  x.validate();
  BlockMPS y = x;
  if (side == Side::Left) {
    for (int c = 0; c + 1 < y.K; ++c) orthogonalize_core(y, c, Side::Left);
    y.ortho = Ortho::Left;
  } else {
    for (int c = y.K - 1; c > 0; --c) orthogonalize_core(y, c, Side::Right);
    y.ortho = Ortho::Right;
  }
  y.validate();
  return y;
}

std::pair<BlockMPS, BlockSpectrum> tt_svd_block(const BlockMPS& x, Side side) {
  BlockSpectrum spec;
  spec.sigma.assign(static_cast<size_t>(x.K) + 1, {});
  BlockMPS y = orthogonalize_block(x, side == Side::Right ? Side::Left : Side::Right);
  if (side == Side::Right) {
    for (int c = y.K - 1; c > 0; --c) {
      const std::map<int, int> sectors = y.rho[c];
      for (const auto& [n, sz] : sectors) {
        Mat u, v;
        Vec s;
        svd_thin(right_unfold(y, c, n), u, s, v);
        push_right(y, c, n, v.transpose(), u * s.asDiagonal());
        spec.sigma[c][n] = s;
      }
      normalize_blocks(y);
    }
    y.ortho = Ortho::RightSvd;
  } else {
    for (int c = 0; c + 1 < y.K; ++c) {
      const std::map<int, int> sectors = y.rho[c + 1];
      for (const auto& [m, sz] : sectors) {
        Mat u, v;
        Vec s;
        svd_thin(left_unfold(y, c, m), u, s, v);
        push_left(y, c, m, u, s.asDiagonal() * v.transpose());
        spec.sigma[c + 1][m] = s;
      }
      normalize_blocks(y);
    }
    y.ortho = Ortho::LeftSvd;
  }
  // drop spectrum entries of sectors that vanished
  for (int b = 0; b <= y.K; ++b)
    for (auto it = spec.sigma[b].begin(); it != spec.sigma[b].end();)
      it = y.size(b, it->first) == 0 ? spec.sigma[b].erase(it) : std::next(it);
  y.validate();
  return {y, spec};
}

BlockMPS truncate_block(const BlockMPS& x, const BlockSpectrum& spec, const BlockTruncation& mode) {
  const int K = x.K;
  if (static_cast<int>(spec.sigma.size()) != K + 1) throw ValidationError("truncate_block: spectrum size mismatch");
  std::vector<std::map<int, int>> keep(static_cast<size_t>(K) + 1);
  for (int b = 1; b < K; ++b)
    for (const auto& [n, s] : spec.sigma[b]) {
      if (x.size(b, n) != s.size()) throw ValidationError("truncate_block: spectrum does not match sizes");
      keep[b][n] = static_cast<int>(s.size());
    }
  const int floor = std::max(0, mode.floor);
  if (mode.eps) {
    const double eps = *mode.eps;
    double nrm2 = 0.0;
    if (K > 1)
      for (const auto& [n, s] : spec.sigma[1]) nrm2 += s.squaredNorm();
    else
      nrm2 = inner(x, x);
    if (eps > 0.0 && eps * eps >= nrm2) throw ValidationError("would truncate to zero");
    struct Item { double s; int b, n, idx; };
    std::vector<Item> items;
    for (int b = 1; b < K; ++b)
      for (const auto& [n, s] : spec.sigma[b])
        for (int i = 0; i < s.size(); ++i) items.push_back({s(i), b, n, i});
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
      return std::tie(a.s, a.b, a.n, b.idx) < std::tie(b.s, b.b, b.n, a.idx);
    });
    double acc = 0.0;
    for (const Item& it : items) {
      if (acc + it.s * it.s > eps * eps) break;
      int& k = keep[it.b][it.n];
      if (it.idx != k - 1 || k <= floor) continue;
      acc += it.s * it.s;
      --k;
    }
  } else if (!mode.bond_caps.empty()) {
    for (int b = 1; b < K && b < static_cast<int>(mode.bond_caps.size()); ++b) {
      const int cap = mode.bond_caps[b];
      if (cap < 0) continue;
      struct Item { double s; int n, idx; };
      std::vector<Item> rest;
      int used = 0;
      for (auto& [n, k] : keep[b]) {
        const Vec& s = spec.sigma[b].at(n);
        const int base = std::min(floor, k);
        used += base;
        for (int i = base; i < s.size(); ++i) rest.push_back({s(i), n, i});
        k = base;
      }
      std::stable_sort(rest.begin(), rest.end(), [](const Item& a, const Item& b) {
        return std::tie(b.s, a.n, a.idx) < std::tie(a.s, b.n, b.idx);
      });
      for (const Item& it : rest) {
        if (used >= cap) break;
        int& k = keep[b][it.n];
        if (it.idx != k) continue;
        ++k;
        ++used;
      }
      if (used == 0 && !keep[b].empty()) {
        // never drop a bond entirely: keep the overall largest value
        const Item& best = rest.front();
        keep[b][best.n] = 1;
      }
    }
  } else if (!mode.sector_caps.empty()) {
    for (int b = 1; b < K && b < static_cast<int>(mode.sector_caps.size()); ++b)
      for (auto& [n, k] : keep[b]) {
        auto it = mode.sector_caps[b].find(n);
        const int cap = it == mode.sector_caps[b].end() ? 0 : it->second;
        k = std::min(k, std::max(cap, floor));
      }
  }
  BlockMPS y = x;
  for (int b = 1; b < K; ++b)
    for (const auto& [n, k] : keep[b]) {
      if (k == x.size(b, n)) continue;
      if (auto it = y.cores[b - 1].unocc.find(n); it != y.cores[b - 1].unocc.end())
        it->second = it->second.leftCols(k).eval();
      if (auto it = y.cores[b - 1].occ.find(n - 1); it != y.cores[b - 1].occ.end())
        it->second = it->second.leftCols(k).eval();
      for (int a = 0; a < 2; ++a)
        if (auto it = y.cores[b].blocks(a).find(n); it != y.cores[b].blocks(a).end())
          it->second = it->second.topRows(k).eval();
      y.rho[b][n] = k;
    }
  normalize_blocks(y);
  y.validate();
  return y;
}

BlockMPS round_block(const BlockMPS& x, const BlockTruncation& mode) {
  auto [y, spec] = tt_svd_block(x, Side::Right);
  return truncate_block(y, spec, mode);
}

BlockMPS add(const BlockMPS& x, const BlockMPS& y) {
  if (x.K != y.K || x.N != y.N) throw ValidationError("add: order or particle number mismatch");
  const int K = x.K;
  BlockMPS z;
  z.K = K;
  z.N = x.N;
  z.rho.assign(static_cast<size_t>(K) + 1, {});
  z.rho[0][0] = 1;
  z.rho[K][x.N] = 1;
  for (int b = 1; b < K; ++b) {
    for (const auto& [n, s] : x.rho[b]) z.rho[b][n] += s;
    for (const auto& [n, s] : y.rho[b]) z.rho[b][n] += s;
  }
  z.cores.assign(static_cast<size_t>(K), BlockCore{});
  normalize_blocks(z);
  auto shared = [K](int b) { return b == 0 || b == K; };
  for (int c = 0; c < K; ++c)
    for (int a = 0; a < 2; ++a)
      for (auto& [n, m] : z.cores[c].blocks(a)) {
        const int xl = 0, xr = 0;
        const int yl = shared(c) ? 0 : x.size(c, n);
        const int yr = shared(c + 1) ? 0 : x.size(c + 1, n + a);
        if (auto it = x.cores[c].blocks(a).find(n); it != x.cores[c].blocks(a).end())
          m.block(xl, xr, it->second.rows(), it->second.cols()) += it->second;
        if (auto it = y.cores[c].blocks(a).find(n); it != y.cores[c].blocks(a).end())
          m.block(yl, yr, it->second.rows(), it->second.cols()) += it->second;
      }
  z.validate();
  return z;
}

BlockMPS scale(const BlockMPS& x, double c) {
  BlockMPS y = x;
  for (int a = 0; a < 2; ++a)
    for (auto& [n, m] : y.cores[0].blocks(a)) m *= c;
  return y;
}

double inner(const BlockMPS& x, const BlockMPS& y) {
  if (x.K != y.K || x.N != y.N) throw ValidationError("inner: order or particle number mismatch");
  std::map<int, Mat> r;
  r[x.N] = Mat::Ones(1, 1);
  for (int c = x.K - 1; c >= 0; --c) {
    std::map<int, Mat> next;
    for (int a = 0; a < 2; ++a) {
      const auto& bx = x.cores[c].blocks(a);
      const auto& by = y.cores[c].blocks(a);
      for (const auto& [n, mx] : bx) {
        auto iy = by.find(n);
        auto ir = r.find(n + a);
        if (iy == by.end() || ir == r.end()) continue;
        Mat t = mx * ir->second * iy->second.transpose();
        auto [it, fresh] = next.try_emplace(n, std::move(t));
        if (!fresh) it->second += mx * ir->second * iy->second.transpose();
      }
    }
    r = std::move(next);
  }
  auto it = r.find(0);
  return it == r.end() ? 0.0 : it->second(0, 0);
}

double norm(const BlockMPS& x) { return std::sqrt(std::max(0.0, inner(x, x))); }

double particle_expectation(const BlockMPS& x) {
  std::map<int, Mat> l, w;
  l[0] = Mat::Ones(1, 1);
  w[0] = Mat::Zero(1, 1);
  for (int c = 0; c < x.K; ++c) {
    std::map<int, Mat> ln, wn;
    for (int a = 0; a < 2; ++a)
      for (const auto& [n, m] : x.cores[c].blocks(a)) {
        auto il = l.find(n);
        if (il == l.end()) continue;
        const Mat lc = m.transpose() * il->second * m;
        Mat wc = m.transpose() * w.at(n) * m;
        if (a == 1) wc += lc;
        const int t = n + a;
        if (ln.count(t)) {
          ln[t] += lc;
          wn[t] += wc;
        } else {
          ln[t] = lc;
          wn[t] = wc;
        }
      }
    l = std::move(ln);
    w = std::move(wn);
  }
  const double nn = l.count(x.N) ? l.at(x.N)(0, 0) : 0.0;
  if (nn == 0.0) throw ValidationError("particle_expectation: zero tensor");
  return w.at(x.N)(0, 0) / nn;
}

bool verify_block_eigen(const BlockMPS& x, int b, double tol) {
  if (x.K > 12) throw ValidationError("verify_block_eigen: order too large for dense check");
  if (b < 0 || b > x.K) throw ValidationError("verify_block_eigen: bond out of range");
  const FullMPS f = to_full(x);
  Mat acc = Mat::Ones(1, 1);
  for (int c = 0; c < b; ++c) {
    const Core& core = f.cores[c];
    Mat next(acc.rows() * 2, core.cols());
    for (Eigen::Index p = 0; p < acc.rows(); ++p)
      for (int a = 0; a < 2; ++a) next.row(p * 2 + a) = acc.row(p) * core.slice[a];
    acc = std::move(next);
  }
  int col = 0;
  for (const auto& [n, s] : x.rho[b])
    for (int j = 0; j < s; ++j, ++col) {
      const double cn = acc.col(col).norm();
      double res = 0.0;
      for (Eigen::Index i = 0; i < acc.rows(); ++i) {
        const double d = (std::popcount(static_cast<unsigned long long>(i)) - n) * acc(i, col);
        res += d * d;
      }
      if (std::sqrt(res) > tol * std::max(cn, 1e-300)) return false;
    }
  return true;
}

namespace {

FullMPO particle_number_mpo(int K) {
  FullMPO m;
  for (int k = 0; k < K; ++k) {
    const int rl = k == 0 ? 1 : 2, rr = k == K - 1 ? 1 : 2;
    MPOCore c;
    c.slice.assign(4, Mat::Zero(rl, rr));
    // bond index 0: "nothing counted yet", 1: "one count emitted"
    auto put = [&](int i, int j, int a, double v) {
      const int ii = k == 0 ? 0 : i;
      const int jj = k == K - 1 ? 0 : j;
      if ((k == 0 && i != 0) || (k == K - 1 && j != 1)) return;
      c.at(a, a)(ii, jj) += v;
    };
    put(0, 0, 0, 1.0);
    put(0, 0, 1, 1.0);
    put(0, 1, 1, 1.0);
    put(1, 1, 0, 1.0);
    put(1, 1, 1, 1.0);
    m.cores.push_back(std::move(c));
  }
  if (K == 1) {
    m.cores[0].slice.assign(4, Mat::Zero(1, 1));
    m.cores[0].at(1, 1)(0, 0) = 1.0;
  }
  return m;
}

}  // namespace

BlockMPS from_full(const FullMPS& y, double tol) {
  y.validate();
  const int K = y.order();
  for (const Core& c : y.cores)
    if (c.modes() != 2) throw ValidationError("from_full: mode sizes must be 2");
  const double yy = inner(y, y);
  if (yy == 0.0) throw ValidationError("from_full: zero tensor has no particle number");
  const FullMPO p = particle_number_mpo(K);
  const FullMPS py = apply_mpo(p, y);
  const double mean = inner(y, py) / yy;
  const double var = inner(py, py) / yy - mean * mean;
  const int N = static_cast<int>(std::lround(mean));
  if (var > tol * std::max(1.0, mean * mean) || std::abs(mean - N) > 1e-6 || N < 0 || N > K)
    throw ValidationError("not in sector (particle number variance " + std::to_string(var) + ")");
  const double ynorm = std::sqrt(yy);

  // minimal ranks: TT-SVD and removal of numerically zero singular values
  auto [z, spec] = tt_svd(y, Side::Right);
  std::vector<int> caps(static_cast<size_t>(K) + 1, -1);
  for (int b = 1; b < K; ++b) {
    int k = 0;
    while (k < spec.sigma[b].size() && spec.sigma[b](k) > 1e-13 * ynorm) ++k;
    caps[b] = std::max(1, k);
  }
  z = truncate(z, spec, Truncation::with_caps(caps));
  z = orthogonalize(z, Side::Left);

  // left-to-right sweep sorting the orthonormal left partial tensors into
  // eigenvectors of the truncated particle number operators
  std::vector<std::vector<int>> labels(static_cast<size_t>(K) + 1);
  labels[0] = {0};
  for (int c = 0; c + 1 < K; ++c) {
    Core& core = z.cores[c];
    const Eigen::Index rl = core.rows(), r = core.cols();
    const Mat l = core.left_unfold();
    std::map<int, std::vector<Eigen::Index>> rows_of;
    for (int a = 0; a < 2; ++a)
      for (Eigen::Index j = 0; j < rl; ++j) rows_of[labels[c][j] + a].push_back(a * rl + j);
    Mat q(r, 0);
    std::vector<int> lab;
    for (const auto& [m, rows] : rows_of) {
      Mat lm(static_cast<Eigen::Index>(rows.size()), r);
      for (size_t i = 0; i < rows.size(); ++i) lm.row(i) = l.row(rows[i]);
      Mat u, v;
      Vec s;
      svd_thin(lm, u, s, v);
      Eigen::Index rm = 0;
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > 0.5) ++rm;
        else if (s(i) > std::sqrt(tol)) throw ValidationError("not in sector (mixed left partial tensors)");
      }
      if (rm == 0) continue;
      Mat qn(r, q.cols() + rm);
      qn << q, v.leftCols(rm);
      q = std::move(qn);
      for (Eigen::Index i = 0; i < rm; ++i) lab.push_back(m);
    }
    if (q.cols() != r) throw ValidationError("not in sector (rank mismatch in sector sort)");
    if ((q.transpose() * q - Mat::Identity(r, r)).norm() > 1e-8)
      throw ValidationError("not in sector (non-orthogonal sector transform)");
    for (Mat& s : core.slice) s = (s * q).eval();
    for (Mat& s : z.cores[c + 1].slice) s = (q.transpose() * s).eval();
    labels[c + 1] = std::move(lab);
  }
  labels[K] = {N};

  BlockMPS x;
  x.K = K;
  x.N = N;
  x.rho.assign(static_cast<size_t>(K) + 1, {});
  for (int b = 0; b <= K; ++b)
    for (int n : labels[b]) ++x.rho[b][n];
  x.cores.assign(static_cast<size_t>(K), BlockCore{});
  std::vector<std::map<int, int>> off(static_cast<size_t>(K) + 1);
  for (int b = 0; b <= K; ++b) off[b] = offsets(x.rho[b]);
  double leak = 0.0;
  for (int c = 0; c < K; ++c) {
    const Core& core = z.cores[c];
    for (int a = 0; a < 2; ++a) {
      Mat rest = core.slice[a];
      for (const auto& [n, s] : x.rho[c]) {
        const int rs = x.size(c + 1, n + a);
        if (rs == 0) continue;
        const int i0 = off[c].at(n), j0 = off[c + 1].at(n + a);
        x.cores[c].blocks(a)[n] = core.slice[a].block(i0, j0, s, rs);
        rest.block(i0, j0, s, rs).setZero();
      }
      leak = std::max(leak, rest.norm());
    }
  }
  // scale of interior cores is 1 (orthonormal); the last core carries ||y||
  if (leak > tol * std::max(1.0, ynorm)) throw ValidationError("not in sector (off-block mass)");
  for (int b = 0; b <= K; ++b) {
    const SectorRange sr = x.range(b);
    for (auto it = x.rho[b].begin(); it != x.rho[b].end();)
      it = sr.contains(it->first) ? std::next(it) : x.rho[b].erase(it);
  }
  normalize_blocks(x);
  x.ortho = Ortho::Left;
  x.validate();
  return x;
}

}  // namespace bsmps
