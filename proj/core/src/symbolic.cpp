#include "bsmps/symbolic.hpp"

#include "bsmps/dense.hpp"
#include "bsmps/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace bsmps {

int elem_delta(Elem e) {
  switch (e) {
    case Elem::A: return -1;
    case Elem::Ad: return 1;
    default: return 0;
  }
}

Mat elem_matrix(Elem e) {
  switch (e) {
    case Elem::Il:
    case Elem::Ir: return elem_I();
    case Elem::S: return elem_S();
    case Elem::A: return elem_A();
    case Elem::Ad: return elem_A().transpose();
    case Elem::N: return elem_N();
  }
  return Mat::Zero(2, 2);
}

namespace {

std::string flux_suffix(int f) {
  return "^{" + std::string(f > 0 ? "+" : "") + std::to_string(f) + "}";
}

}  // namespace

std::string symbol_name(Elem e, int f_in) {
  switch (e) {
    case Elem::Il: return f_in == 0 ? "I_l" : "I" + flux_suffix(f_in);
    case Elem::Ir: return f_in == 0 ? "I_r" : "I" + flux_suffix(f_in);
    case Elem::S:
      if (f_in == 1) return "S+";
      if (f_in == -1) return "S-";
      return "S" + flux_suffix(f_in);
    case Elem::N: return f_in == 0 ? "A*A" : "A*A" + flux_suffix(f_in);
    case Elem::Ad:
      if (f_in == 0) return "A_l*";
      if (f_in == -1) return "A_r*";
      return "A*" + flux_suffix(f_in);
    case Elem::A:
      if (f_in == 0) return "A_l";
      if (f_in == 1) return "A_r";
      return "A" + flux_suffix(f_in);
  }
  return "?";
}

void SymCore::add(int i, int j, double c, Elem e) {
  if (c == 0.0) return;
  auto& terms = entries[{i, j}];
  for (SymTerm& t : terms)
    if (t.e == e) {
      t.c += c;
      return;
    }
  terms.push_back({c, e});
}

Mat SymCore::entry_matrix(int i, int j) const {
  Mat m = Mat::Zero(2, 2);
  auto it = entries.find({i, j});
  if (it == entries.end()) return m;
  for (const SymTerm& t : it->second) m += t.c * elem_matrix(t.e);
  return m;
}

std::vector<int> SymMPO::ranks() const {
  std::vector<int> r;
  if (cores.empty()) return r;
  r.push_back(cores[0].rows);
  for (const SymCore& c : cores) r.push_back(c.cols);
  return r;
}

void SymMPO::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("operator program: " + m); };
  if (K < 1 || static_cast<int>(cores.size()) != K) fail("wrong number of cores");
  if (static_cast<int>(flux.size()) != K + 1) fail("flux table has wrong length");
  if (cores.front().rows != 1 || cores.back().cols != 1) fail("boundary dimensions must be 1");
  if (flux[0] != std::vector<int>{0} || flux[K] != std::vector<int>{0})
    fail("terminal fluxes must be 0 (operator does not preserve particle number)");
  for (int c = 0; c < K; ++c) {
    const SymCore& core = cores[c];
    if (static_cast<int>(flux[c].size()) != core.rows || static_cast<int>(flux[c + 1].size()) != core.cols)
      fail("flux labels do not match dimensions at core " + std::to_string(c));
    if (c + 1 < K && core.cols != cores[c + 1].rows) fail("dimension mismatch at bond " + std::to_string(c + 1));
    for (const auto& [ij, terms] : core.entries) {
      const auto [i, j] = ij;
      if (i < 0 || i >= core.rows || j < 0 || j >= core.cols) fail("entry index out of range");
      for (const SymTerm& t : terms)
        if (flux[c + 1][j] - flux[c][i] != elem_delta(t.e))
          fail("flux mismatch at core " + std::to_string(c) + " entry (" + std::to_string(i) + "," +
               std::to_string(j) + ")");
    }
  }
}

void infer_flux(SymMPO& m) {
  const int K = m.K;
  if (static_cast<int>(m.cores.size()) != K || K < 1) throw ValidationError("operator program: wrong number of cores");
  std::vector<std::vector<std::optional<int>>> f(static_cast<size_t>(K) + 1);
  f[0] = {0};
  for (int c = 0; c < K; ++c) f[c + 1].assign(static_cast<size_t>(m.cores[c].cols), std::nullopt);
  f[K] = {0};
  auto set = [](std::optional<int>& slot, int v) {
    if (slot && *slot != v) throw ValidationError("operator program: no consistent flux labeling");
    slot = v;
  };
  for (int c = 0; c < K; ++c)
    for (const auto& [ij, terms] : m.cores[c].entries)
      for (const SymTerm& t : terms)
        if (f[c][ij.first]) set(f[c + 1][ij.second], *f[c][ij.first] + elem_delta(t.e));
  for (int c = K - 1; c >= 0; --c)
    for (const auto& [ij, terms] : m.cores[c].entries)
      for (const SymTerm& t : terms)
        if (f[c + 1][ij.second]) set(f[c][ij.first], *f[c + 1][ij.second] - elem_delta(t.e));
  m.flux.assign(static_cast<size_t>(K) + 1, {});
  for (int b = 0; b <= K; ++b)
    for (const auto& v : f[b]) m.flux[b].push_back(v.value_or(0));
  m.validate();
}

std::string dump(const SymMPO& m) {
  std::ostringstream os;
  for (int c = 0; c < m.K; ++c) {
    const SymCore& core = m.cores[c];
    os << "core " << c + 1 << " (" << core.rows << "x" << core.cols << ")\n";
    for (int i = 0; i < core.rows; ++i) {
      os << "  [";
      for (int j = 0; j < core.cols; ++j) {
        if (j) os << " | ";
        auto it = core.entries.find({i, j});
        if (it == core.entries.end() || it->second.empty()) {
          os << "Z";
          continue;
        }
        bool first = true;
        for (const SymTerm& t : it->second) {
          if (!first) os << " + ";
          first = false;
          if (t.c != 1.0) os << t.c << "*";
          os << symbol_name(t.e, m.flux[c][i]);
        }
      }
      os << "]  f=" << m.flux[c][i] << "\n";
    }
  }
  return os.str();
}

namespace {

/// Matches a 2x2 matrix against +-{I, S, A, Ad, N}.
std::optional<std::pair<double, Elem>> classify(const Mat& m) {
  const std::pair<Elem, Mat> cands[] = {{Elem::Il, elem_I()}, {Elem::S, elem_S()}, {Elem::A, elem_A()},
                                        {Elem::Ad, elem_A().transpose()}, {Elem::N, elem_N()}};
  for (const auto& [e, ref] : cands)
    for (double s : {1.0, -1.0})
      if ((m - s * ref).cwiseAbs().maxCoeff() == 0.0) return std::make_pair(s, e);
  return std::nullopt;
}

}  // namespace

SymMPO sym_rank_one(const std::vector<int>& creators, const std::vector<int>& annihilators, double coeff, int K) {
  if (creators.size() != annihilators.size() || creators.size() > 2)
    throw ValidationError("sym_rank_one: need equally many (at most 2) creators and annihilators");
  for (const auto* d : {&creators, &annihilators}) {
    for (size_t i = 0; i < d->size(); ++i) {
      if ((*d)[i] < 0 || (*d)[i] >= K) throw ValidationError("sym_rank_one: orbital index out of range");
      if (i > 0 && (*d)[i] <= (*d)[i - 1]) throw ValidationError("sym_rank_one: index lists must be strictly increasing");
    }
  }
  struct Op { int idx; bool create; };
  std::vector<Op> ops;
  for (int i : creators) ops.push_back({i, true});
  for (int i : annihilators) ops.push_back({i, false});
  int lo = K;
  for (const Op& o : ops) lo = std::min(lo, o.idx);

  SymMPO m;
  m.K = K;
  m.flux.assign(static_cast<size_t>(K) + 1, {0});
  double sign = 1.0;
  for (int k = 0; k < K; ++k) {
    Mat f = elem_I();
    int delta = 0;
    for (const Op& o : ops) {
      if (k < o.idx) f = (f * elem_S()).eval();
      else if (k == o.idx) {
        f = (f * (o.create ? Mat(elem_A().transpose()) : elem_A())).eval();
        delta += o.create ? 1 : -1;
      }
    }
    auto cl = classify(f);
    if (!cl) throw ValidationError("sym_rank_one: inadmissible index sets (operator vanishes)");
    Elem e = cl->second;
    if (e == Elem::Il && k > lo) e = Elem::Ir;
    sign *= cl->first;
    SymCore core;
    core.rows = core.cols = 1;
    core.add(0, 0, 1.0, e);
    m.cores.push_back(std::move(core));
    m.flux[k + 1] = {m.flux[k][0] + delta};
  }
  m.cores[0].entries.begin()->second[0].c = sign * coeff;
  m.validate();
  return m;
}

SymMPO sym_add(const SymMPO& a, const SymMPO& b) {
  if (a.K != b.K) throw ValidationError("sym_add: order mismatch");
  a.validate();
  b.validate();
  const int K = a.K;
  SymMPO s;
  s.K = K;
  s.flux.assign(static_cast<size_t>(K) + 1, {});
  s.flux[0] = {0};
  s.flux[K] = {0};
  for (int bnd = 1; bnd < K; ++bnd) {
    s.flux[bnd] = a.flux[bnd];
    s.flux[bnd].insert(s.flux[bnd].end(), b.flux[bnd].begin(), b.flux[bnd].end());
  }
  for (int c = 0; c < K; ++c) {
    const SymCore& ca = a.cores[c];
    const SymCore& cb = b.cores[c];
    SymCore core;
    const bool first = c == 0, last = c == K - 1;
    core.rows = first ? 1 : ca.rows + cb.rows;
    core.cols = last ? 1 : ca.cols + cb.cols;
    const int ro = first ? 0 : ca.rows, co = last ? 0 : ca.cols;
    for (const auto& [ij, terms] : ca.entries)
      for (const SymTerm& t : terms) core.add(ij.first, ij.second, t.c, t.e);
    for (const auto& [ij, terms] : cb.entries)
      for (const SymTerm& t : terms) core.add(ij.first + ro, ij.second + co, t.c, t.e);
    s.cores.push_back(std::move(core));
  }
  s.validate();
  return s;
}

namespace {

/// Vectorized column j of a core: entries (row, alpha, beta).
Vec column_vector(const SymCore& c, int j) {
  Vec v = Vec::Zero(4 * c.rows);
  for (int i = 0; i < c.rows; ++i) {
    const Mat m = c.entry_matrix(i, j);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) v(4 * i + 2 * a + b) = m(a, b);
  }
  return v;
}

/// Vectorized row i of a core: entries (col, alpha, beta).
Vec row_vector(const SymCore& c, int i) {
  Vec v = Vec::Zero(4 * c.cols);
  for (const auto& [ij, terms] : c.entries) {
    if (ij.first != i) continue;
    const Mat m = c.entry_matrix(i, ij.second);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) v(4 * ij.second + 2 * a + b) = m(a, b);
  }
  return v;
}

/// Groups indices by flux label, preserving ascending order within a group.
std::map<int, std::vector<int>> flux_groups(const std::vector<int>& labels) {
  std::map<int, std::vector<int>> g;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) g[labels[i]].push_back(i);
  return g;
}

struct Reduction {
  std::vector<int> keep;  ///< kept original indices, ascending
  Mat mix;                ///< keep.size() x original size (zero outside groups)
};

template <class VecFn>
Reduction reduce(int count, const std::vector<int>& labels, VecFn vec_of, double tol) {
  Reduction red;
  std::vector<std::pair<int, std::vector<double>>> rows;  // kept index -> mixing row
  for (const auto& [f, idx] : flux_groups(labels)) {
    if (idx.empty()) continue;
    Vec v0 = vec_of(idx[0]);
    Mat a(v0.size(), static_cast<Eigen::Index>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j) a.col(j) = vec_of(idx[j]);
    const ColumnBasis cb = independent_columns(a, tol);
    for (size_t k = 0; k < cb.keep.size(); ++k) {
      std::vector<double> row(static_cast<size_t>(count), 0.0);
      for (size_t j = 0; j < idx.size(); ++j) row[idx[j]] = cb.mix(k, j);
      rows.emplace_back(idx[cb.keep[k]], std::move(row));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  red.mix = Mat::Zero(static_cast<Eigen::Index>(rows.size()), count);
  for (size_t k = 0; k < rows.size(); ++k) {
    red.keep.push_back(rows[k].first);
    for (int j = 0; j < count; ++j) red.mix(k, j) = rows[k].second[j];
  }
  return red;
}

}  // namespace

SymMPO sym_compress(const SymMPO& m, double tol) {
  m.validate();
  SymMPO s = m;
  const int K = s.K;
  // left-to-right: columns of core c, mixing pushed into the rows of core c+1
  for (int c = 0; c + 1 < K; ++c) {
    SymCore& core = s.cores[c];
    const Reduction red = reduce(core.cols, s.flux[c + 1], [&](int j) { return column_vector(core, j); }, tol);
    std::map<int, int> newidx;
    for (size_t k = 0; k < red.keep.size(); ++k) newidx[red.keep[k]] = static_cast<int>(k);
    SymCore nc;
    nc.rows = core.rows;
    nc.cols = static_cast<int>(red.keep.size());
    for (const auto& [ij, terms] : core.entries) {
      auto it = newidx.find(ij.second);
      if (it == newidx.end()) continue;
      nc.entries[{ij.first, it->second}] = terms;
    }
    const SymCore& next = s.cores[c + 1];
    SymCore nn;
    nn.rows = nc.cols;
    nn.cols = next.cols;
    for (const auto& [ij, terms] : next.entries)
      for (size_t k = 0; k < red.keep.size(); ++k) {
        const double g = red.mix(k, ij.first);
        if (g == 0.0) continue;
        for (const SymTerm& t : terms) nn.add(static_cast<int>(k), ij.second, g * t.c, t.e);
      }
    std::vector<int> nf;
    for (int j : red.keep) nf.push_back(s.flux[c + 1][j]);
    s.flux[c + 1] = std::move(nf);
    s.cores[c] = std::move(nc);
    s.cores[c + 1] = std::move(nn);
  }
  // right-to-left: rows of core c, mixing pushed into the columns of core c-1
  for (int c = K - 1; c > 0; --c) {
    SymCore& core = s.cores[c];
    const Reduction red = reduce(core.rows, s.flux[c], [&](int i) { return row_vector(core, i); }, tol);
    std::map<int, int> newidx;
    for (size_t k = 0; k < red.keep.size(); ++k) newidx[red.keep[k]] = static_cast<int>(k);
    SymCore nc;
    nc.rows = static_cast<int>(red.keep.size());
    nc.cols = core.cols;
    for (const auto& [ij, terms] : core.entries) {
      auto it = newidx.find(ij.first);
      if (it == newidx.end()) continue;
      nc.entries[{it->second, ij.second}] = terms;
    }
    const SymCore& prev = s.cores[c - 1];
    SymCore np;
    np.rows = prev.rows;
    np.cols = nc.rows;
    for (const auto& [ij, terms] : prev.entries)
      for (size_t k = 0; k < red.keep.size(); ++k) {
        const double g = red.mix(k, ij.second);
        if (g == 0.0) continue;
        for (const SymTerm& t : terms) np.add(ij.first, static_cast<int>(k), g * t.c, t.e);
      }
    std::vector<int> nf;
    for (int i : red.keep) nf.push_back(s.flux[c][i]);
    s.flux[c] = std::move(nf);
    s.cores[c] = std::move(nc);
    s.cores[c - 1] = std::move(np);
  }
  s.validate();
  return s;
}

namespace {

/// Offsets of (operator bond index j, input sector n) inside output sectors.
struct BondLayout {
  std::map<int, int> sizes;
  std::map<std::pair<int, int>, int> offset;  ///< (j, n) -> offset in sector n + f_j
};

BondLayout bond_layout(const std::vector<int>& flux, const std::map<int, int>& rho, const SectorRange& sr) {
  BondLayout l;
  for (int j = 0; j < static_cast<int>(flux.size()); ++j)
    for (const auto& [n, s] : rho) {
      const int np = n + flux[j];
      if (!sr.contains(np)) continue;
      l.offset[{j, n}] = l.sizes[np];
      l.sizes[np] += s;
    }
  return l;
}

}  // namespace

SizeTable apply_sizes(const SymMPO& m, const BlockMPS& x) {
  SizeTable t;
  for (int b = 0; b <= x.K; ++b) t.push_back(bond_layout(m.flux[b], x.rho[b], x.range(b)).sizes);
  return t;
}

BlockMPS apply_sym(const SymMPO& m, const BlockMPS& x) {
  m.validate();
  x.validate();
  if (m.K != x.K) throw ValidationError("apply_sym: order mismatch");
  const int K = x.K;
  std::vector<BondLayout> lay;
  for (int b = 0; b <= K; ++b) lay.push_back(bond_layout(m.flux[b], x.rho[b], x.range(b)));
  BlockMPS y;
  y.K = K;
  y.N = x.N;
  for (int b = 0; b <= K; ++b) y.rho.push_back(lay[b].sizes);
  y.cores.assign(static_cast<size_t>(K), BlockCore{});
  normalize_blocks(y);
  Mat em[6];
  for (int e = 0; e < 6; ++e) em[e] = elem_matrix(static_cast<Elem>(e));
  for (int c = 0; c < K; ++c) {
    for (const auto& [ij, terms] : m.cores[c].entries) {
      const auto [j1, j2] = ij;
      for (const SymTerm& t : terms) {
        const Mat& me = em[static_cast<int>(t.e)];
        for (int beta = 0; beta < 2; ++beta)
          for (const auto& [n, xb] : x.cores[c].blocks(beta)) {
            auto o1 = lay[c].offset.find({j1, n});
            auto o2 = lay[c + 1].offset.find({j2, n + beta});
            if (o1 == lay[c].offset.end() || o2 == lay[c + 1].offset.end()) continue;
            const int nl = n + m.flux[c][j1];
            for (int alpha = 0; alpha < 2; ++alpha) {
              const double v = me(alpha, beta);
              if (v == 0.0) continue;
              auto& blk = y.cores[c].blocks(alpha).at(nl);
              blk.block(o1->second, o2->second, xb.rows(), xb.cols()) += (t.c * v) * xb;
            }
          }
      }
    }
  }
  y.validate();
  return y;
}

FullMPO to_dense_mpo(const SymMPO& m) {
  m.validate();
  FullMPO d;
  for (const SymCore& c : m.cores) {
    MPOCore mc;
    mc.slice.assign(4, Mat::Zero(c.rows, c.cols));
    for (const auto& [ij, terms] : c.entries) {
      const Mat e = c.entry_matrix(ij.first, ij.second);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) mc.at(a, b)(ij.first, ij.second) = e(a, b);
    }
    d.cores.push_back(std::move(mc));
  }
  d.flux = m.flux;
  return d;
}

}  // namespace bsmps
