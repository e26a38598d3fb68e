#include "bsmps/mpo.hpp"

#include "bsmps/dense.hpp"
#include "bsmps/linalg.hpp"

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <string>

namespace bsmps {

FullMPO build_F(const std::vector<double>& lambda) { return to_dense_mpo(sym_from_laplace(lambda)); }

SymMPO sym_from_laplace(const std::vector<double>& lambda) {
  const int K = static_cast<int>(lambda.size());
  if (K < 1) throw ValidationError("build_F: need at least one orbital");
  SymMPO m;
  m.K = K;
  m.flux.assign(static_cast<size_t>(K) + 1, {0, 0});
  m.flux[0] = {0};
  m.flux[K] = {0};
  for (int k = 0; k < K; ++k) {
    SymCore c;
    c.rows = k == 0 ? 1 : 2;
    c.cols = k == K - 1 ? 1 : 2;
    if (K == 1) {
      c.add(0, 0, lambda[0], Elem::N);
    } else if (k == 0) {
      c.add(0, 0, 1.0, Elem::Il);
      c.add(0, 1, lambda[k], Elem::N);
    } else if (k == K - 1) {
      c.add(0, 0, lambda[k], Elem::N);
      c.add(1, 0, 1.0, Elem::Ir);
    } else {
      c.add(0, 0, 1.0, Elem::Il);
      c.add(0, 1, lambda[k], Elem::N);
      c.add(1, 1, 1.0, Elem::Ir);
    }
    m.cores.push_back(std::move(c));
  }
  m.validate();
  return m;
}

namespace {

/// Automaton state: a type tag and up to two orbital indices.
struct Key {
  int t = 0, a = -1, b = -1;
  auto operator<=>(const Key&) const = default;
};

struct BondStates {
  std::vector<Key> keys;
  std::vector<int> flux;
  std::map<Key, int> idx;

  void push(Key k, int f) {
    idx[k] = static_cast<int>(keys.size());
    keys.push_back(k);
    flux.push_back(f);
  }
  int find(Key k) const {
    auto it = idx.find(k);
    return it == idx.end() ? -1 : it->second;
  }
  int size() const { return static_cast<int>(keys.size()); }
};

enum Status { Pending, Here, Done };

/// Jordan-Wigner factor of one mode: product over string positions of
/// S (position still to the right), X (position at this mode) or I.
std::pair<double, Elem> mode_factor(const std::vector<bool>& create, const std::vector<Status>& st) {
  Mat f = elem_I();
  bool all_pending = true;
  for (size_t p = 0; p < create.size(); ++p) {
    if (st[p] == Pending) f = (f * elem_S()).eval();
    else if (st[p] == Here) f = (f * (create[p] ? Mat(elem_A().transpose()) : elem_A())).eval();
    if (st[p] != Pending) all_pending = false;
  }
  const std::pair<Elem, Mat> cands[] = {{Elem::Il, elem_I()}, {Elem::S, elem_S()}, {Elem::A, elem_A()},
                                        {Elem::Ad, elem_A().transpose()}, {Elem::N, elem_N()}};
  for (const auto& [e, ref] : cands)
    for (double s : {1.0, -1.0})
      if ((f - s * ref).cwiseAbs().maxCoeff() == 0.0)
        return {s, (e == Elem::Il && !all_pending) ? Elem::Ir : e};
  throw Error("internal: Jordan-Wigner factor outside the symbol alphabet");
}

/// Net particle offset of a set of placed string positions.
int mask_flux(const std::vector<bool>& create, int mask) {
  int f = 0;
  for (size_t p = 0; p < create.size(); ++p)
    if (mask >> p & 1) f += create[p] ? 1 : -1;
  return f;
}

struct Builder {
  std::vector<bool> create;
  std::vector<int> type_mask;  ///< placed positions per state type
  SymMPO m;

  /// Left transition in core c: state `row` at bond c (placed set lmask)
  /// to state `to` at bond c+1 placing positions numask at mode c.
  void left(int c, int row, const BondStates& next, Key to, int lmask, int numask, double coef) {
    const int col = next.find(to);
    if (col < 0 || coef == 0.0) return;
    std::vector<Status> st(create.size());
    for (size_t p = 0; p < create.size(); ++p)
      st[p] = (lmask >> p & 1) ? Done : ((numask >> p & 1) ? Here : Pending);
    const auto [s, e] = mode_factor(create, st);
    m.cores[c].add(row, col, s * coef, e);
  }

  /// Right transition in core c: state `from` at bond c (row) to state
  /// `col` at bond c+1 whose right part holds rmask; numask placed at mode c.
  void right(int c, const BondStates& rows, Key from, int col, int rmask, int numask, double coef) {
    const int row = rows.find(from);
    if (row < 0 || coef == 0.0) return;
    std::vector<Status> st(create.size());
    for (size_t p = 0; p < create.size(); ++p)
      st[p] = (rmask >> p & 1) ? Pending : ((numask >> p & 1) ? Here : Done);
    const auto [s, e] = mode_factor(create, st);
    m.cores[c].add(row, col, s * coef, e);
  }
};

void check_even(int K, const char* what) {
  if (K < 2 || K % 2 != 0)
    throw ValidationError(std::string(what) + ": the number of orbitals must be even and >= 2 (odd K is unsupported)");
}

/// Absorbs a coupling matrix (left states x right states at bond h) into the
/// columns of core h-1.
void absorb_middle(SymMPO& m, int h, const std::map<std::pair<int, int>, double>& mid, const BondStates& right) {
  SymCore& core = m.cores[h - 1];
  SymCore nc;
  nc.rows = core.rows;
  nc.cols = right.size();
  std::map<int, std::vector<std::pair<int, double>>> by_left;
  for (const auto& [lr, v] : mid) by_left[lr.first].push_back({lr.second, v});
  for (const auto& [ij, terms] : core.entries) {
    auto it = by_left.find(ij.second);
    if (it == by_left.end()) continue;
    for (const auto& [r, v] : it->second)
      for (const SymTerm& t : terms) nc.add(ij.first, r, v * t.c, t.e);
  }
  core = std::move(nc);
  m.flux[h] = right.flux;
}

// ---------------------------------------------------------------- one-body

enum OneLeft { L1I, L1An, L1Cr, L1S };
enum OneRight { R1I, R1An, R1Cr, R1S };
// string positions: 0 = creator a_i^*, 1 = annihilator a_j
constexpr int kOneLeftMask[] = {0, 2, 1, 3};
constexpr int kOneRightMask[] = {0, 2, 1, 3};

BondStates one_left_states(int b, const std::vector<bool>& cr) {
  BondStates s;
  s.push({L1I}, 0);
  for (int j = 0; j < b; ++j) s.push({L1An, j}, mask_flux(cr, kOneLeftMask[L1An]));
  for (int i = 0; i < b; ++i) s.push({L1Cr, i}, mask_flux(cr, kOneLeftMask[L1Cr]));
  if (b > 0) s.push({L1S}, 0);
  return s;
}

BondStates one_right_states(int b, int K, const std::vector<bool>& cr) {
  BondStates s;
  s.push({R1I}, 0);
  for (int j = K - 1; j >= b; --j) s.push({R1An, j}, -mask_flux(cr, kOneRightMask[R1An]));
  for (int i = K - 1; i >= b; --i) s.push({R1Cr, i}, -mask_flux(cr, kOneRightMask[R1Cr]));
  if (b < K) s.push({R1S}, 0);
  return s;
}

}  // namespace

SymMPO sym_from_onebody(const OneBodyCoeffs& t) {
  t.validate();
  const int K = t.K;
  check_even(K, "one-particle operator");
  const int h = K / 2;
  Builder bld;
  bld.create = {true, false};
  bld.m.K = K;
  bld.m.cores.assign(static_cast<size_t>(K), SymCore{});
  bld.m.flux.assign(static_cast<size_t>(K) + 1, {});
  std::vector<BondStates> bonds(static_cast<size_t>(K) + 1);
  for (int b = 0; b <= h; ++b) bonds[b] = one_left_states(b, bld.create);
  const BondStates mid_right = one_right_states(h, K, bld.create);
  for (int b = h + 1; b <= K; ++b) bonds[b] = one_right_states(b, K, bld.create);
  for (int b = 0; b <= K; ++b) bld.m.flux[b] = (b == h ? bonds[b] : bonds[b]).flux;
  for (int c = 0; c < K; ++c) {
    const BondStates& rows = c == h ? mid_right : bonds[c];
    bld.m.cores[c].rows = rows.size();
    bld.m.cores[c].cols = bonds[c + 1].size();
  }
  // left half
  for (int c = 0; c < h; ++c) {
    const int k = c;
    const BondStates& from = bonds[c];
    const BondStates& to = bonds[c + 1];
    for (int r = 0; r < from.size(); ++r) {
      const Key s = from.keys[r];
      const int lm = kOneLeftMask[s.t];
      switch (s.t) {
        case L1I:
          bld.left(c, r, to, {L1I}, lm, 0, 1.0);
          bld.left(c, r, to, {L1An, k}, lm, 2, 1.0);
          bld.left(c, r, to, {L1Cr, k}, lm, 1, 1.0);
          bld.left(c, r, to, {L1S}, lm, 3, t.t(k, k));
          break;
        case L1An:
          bld.left(c, r, to, s, lm, 0, 1.0);
          bld.left(c, r, to, {L1S}, lm, 1, t.t(k, s.a));
          break;
        case L1Cr:
          bld.left(c, r, to, s, lm, 0, 1.0);
          bld.left(c, r, to, {L1S}, lm, 2, t.t(s.a, k));
          break;
        case L1S:
          bld.left(c, r, to, s, lm, 0, 1.0);
          break;
      }
    }
  }
  // right half
  for (int c = h; c < K; ++c) {
    const int k = c;
    const BondStates& rows = c == h ? mid_right : bonds[c];
    const BondStates& cols = bonds[c + 1];
    for (int col = 0; col < cols.size(); ++col) {
      const Key s = cols.keys[col];
      const int rm = kOneRightMask[s.t];
      switch (s.t) {
        case R1I:
          bld.right(c, rows, {R1I}, col, rm, 0, 1.0);
          bld.right(c, rows, {R1An, k}, col, rm, 2, 1.0);
          bld.right(c, rows, {R1Cr, k}, col, rm, 1, 1.0);
          bld.right(c, rows, {R1S}, col, rm, 3, t.t(k, k));
          break;
        case R1An:
          bld.right(c, rows, s, col, rm, 0, 1.0);
          bld.right(c, rows, {R1S}, col, rm, 1, t.t(k, s.a));
          break;
        case R1Cr:
          bld.right(c, rows, s, col, rm, 0, 1.0);
          bld.right(c, rows, {R1S}, col, rm, 2, t.t(s.a, k));
          break;
        case R1S:
          bld.right(c, rows, s, col, rm, 0, 1.0);
          break;
      }
    }
  }
  // coupling at bond h
  std::map<std::pair<int, int>, double> mid;
  const BondStates& lh = bonds[h];
  for (int r = 0; r < lh.size(); ++r) {
    const Key s = lh.keys[r];
    auto put = [&](Key rk, double v) {
      const int c = mid_right.find(rk);
      if (c >= 0 && v != 0.0) mid[{r, c}] += v;
    };
    switch (s.t) {
      case L1I: put({R1S}, 1.0); break;
      case L1S: put({R1I}, 1.0); break;
      case L1An:
        for (int i = h; i < K; ++i) put({R1Cr, i}, t.t(i, s.a));
        break;
      case L1Cr:
        for (int j = h; j < K; ++j) put({R1An, j}, t.t(s.a, j));
        break;
    }
  }
  absorb_middle(bld.m, h, mid, mid_right);
  bld.m.validate();
  return bld.m;
}

namespace {

// ---------------------------------------------------------------- two-body
// string positions: 0 = a_i1^*, 1 = a_i2^*, 2 = a_j1, 3 = a_j2

enum TwoLeft { LI, LCr, LAn, LB, LC2, LA2, LE, LEs, LD };
enum TwoRight { RI, RCr, RAn, RB, RC2, RA2, RE, REs, RD };
constexpr int kTwoLeftMask[] = {0, 1, 4, 5, 3, 12, 7, 13, 15};
constexpr int kTwoRightMask[] = {0, 2, 8, 10, 3, 12, 14, 11, 15};

BondStates two_left_states(int b, int K, const std::vector<bool>& cr) {
  BondStates s;
  auto f = [&](int t) { return mask_flux(cr, kTwoLeftMask[t]); };
  s.push({LI}, 0);
  for (int i = 0; i < b; ++i) s.push({LCr, i}, f(LCr));
  for (int j = 0; j < b; ++j) s.push({LAn, j}, f(LAn));
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) s.push({LB, i, j}, f(LB));
  for (int i1 = 0; i1 < b; ++i1)
    for (int i2 = i1 + 1; i2 < b; ++i2) s.push({LC2, i1, i2}, f(LC2));
  for (int j1 = 0; j1 < b; ++j1)
    for (int j2 = j1 + 1; j2 < b; ++j2) s.push({LA2, j1, j2}, f(LA2));
  if (b >= 2) {
    for (int j2 = b; j2 < K; ++j2) s.push({LE, j2}, f(LE));
    for (int i2 = b; i2 < K; ++i2) s.push({LEs, i2}, f(LEs));
    s.push({LD}, 0);
  }
  return s;
}

BondStates two_right_states(int b, int K, const std::vector<bool>& cr) {
  BondStates s;
  auto f = [&](int t) { return -mask_flux(cr, kTwoRightMask[t]); };
  s.push({RI}, 0);
  for (int i = b; i < K; ++i) s.push({RCr, i}, f(RCr));
  for (int j = b; j < K; ++j) s.push({RAn, j}, f(RAn));
  for (int i = b; i < K; ++i)
    for (int j = b; j < K; ++j) s.push({RB, i, j}, f(RB));
  for (int i1 = b; i1 < K; ++i1)
    for (int i2 = i1 + 1; i2 < K; ++i2) s.push({RC2, i1, i2}, f(RC2));
  for (int j1 = b; j1 < K; ++j1)
    for (int j2 = j1 + 1; j2 < K; ++j2) s.push({RA2, j1, j2}, f(RA2));
  if (K - b >= 2) {
    for (int i1 = 0; i1 < b; ++i1) s.push({RE, i1}, f(RE));
    for (int j1 = 0; j1 < b; ++j1) s.push({REs, j1}, f(REs));
    s.push({RD}, 0);
  }
  return s;
}

}  // namespace

SymMPO sym_from_twobody(const TwoBodyCoeffs& v) {
  const int K = v.K;
  check_even(K, "two-particle operator");
  if (v.vt.size() != v.v.size()) throw ValidationError("two-particle coefficients not finalized");
  const int h = K / 2;
  auto vt = [&](int i1, int i2, int j1, int j2) { return v.tilde(i1, i2, j1, j2); };
  Builder bld;
  bld.create = {true, true, false, false};
  bld.m.K = K;
  bld.m.cores.assign(static_cast<size_t>(K), SymCore{});
  bld.m.flux.assign(static_cast<size_t>(K) + 1, {});
  std::vector<BondStates> bonds(static_cast<size_t>(K) + 1);
  for (int b = 0; b <= h; ++b) bonds[b] = two_left_states(b, K, bld.create);
  const BondStates mid_right = two_right_states(h, K, bld.create);
  for (int b = h + 1; b <= K; ++b) bonds[b] = two_right_states(b, K, bld.create);
  for (int b = 0; b <= K; ++b) bld.m.flux[b] = bonds[b].flux;
  for (int c = 0; c < K; ++c) {
    const BondStates& rows = c == h ? mid_right : bonds[c];
    bld.m.cores[c].rows = rows.size();
    bld.m.cores[c].cols = bonds[c + 1].size();
  }
  // left half: mode k = c, bond c -> c+1
  for (int c = 0; c < h; ++c) {
    const int k = c;
    const BondStates& from = bonds[c];
    const BondStates& to = bonds[c + 1];
    for (int r = 0; r < from.size(); ++r) {
      const Key s = from.keys[r];
      const int lm = kTwoLeftMask[s.t];
      auto go = [&](Key target, int nu, double coef) { bld.left(c, r, to, target, lm, nu, coef); };
      switch (s.t) {
        case LI:
          go({LI}, 0, 1.0);
          go({LCr, k}, 1, 1.0);
          go({LAn, k}, 4, 1.0);
          go({LB, k, k}, 5, 1.0);
          break;
        case LCr:
          go(s, 0, 1.0);
          go({LC2, s.a, k}, 2, 1.0);
          go({LB, s.a, k}, 4, 1.0);
          for (int j2 = k + 1; j2 < K; ++j2) go({LE, j2}, 6, vt(s.a, k, k, j2));
          break;
        case LAn:
          go(s, 0, 1.0);
          go({LB, k, s.a}, 1, 1.0);
          go({LA2, s.a, k}, 8, 1.0);
          for (int i2 = k + 1; i2 < K; ++i2) go({LEs, i2}, 9, vt(k, i2, s.a, k));
          break;
        case LB:
          go(s, 0, 1.0);
          for (int j2 = k + 1; j2 < K; ++j2) go({LE, j2}, 2, vt(s.a, k, s.b, j2));
          for (int i2 = k + 1; i2 < K; ++i2) go({LEs, i2}, 8, vt(s.a, i2, s.b, k));
          go({LD}, 10, vt(s.a, k, s.b, k));
          break;
        case LC2:
          go(s, 0, 1.0);
          for (int j2 = k + 1; j2 < K; ++j2) go({LE, j2}, 4, vt(s.a, s.b, k, j2));
          break;
        case LA2:
          go(s, 0, 1.0);
          for (int i2 = k + 1; i2 < K; ++i2) go({LEs, i2}, 1, vt(k, i2, s.a, s.b));
          break;
        case LE:
          if (s.a > k) go(s, 0, 1.0);
          else go({LD}, 8, 1.0);
          break;
        case LEs:
          if (s.a > k) go(s, 0, 1.0);
          else go({LD}, 2, 1.0);
          break;
        case LD:
          go(s, 0, 1.0);
          break;
      }
    }
  }
  // right half: mode k = c, rows at bond c, columns at bond c+1
  for (int c = h; c < K; ++c) {
    const int k = c;
    const BondStates& rows = c == h ? mid_right : bonds[c];
    const BondStates& cols = bonds[c + 1];
    for (int col = 0; col < cols.size(); ++col) {
      const Key s = cols.keys[col];
      const int rm = kTwoRightMask[s.t];
      auto go = [&](Key from, int nu, double coef) { bld.right(c, rows, from, col, rm, nu, coef); };
      switch (s.t) {
        case RI:
          go({RI}, 0, 1.0);
          go({RCr, k}, 2, 1.0);
          go({RAn, k}, 8, 1.0);
          go({RB, k, k}, 10, 1.0);
          break;
        case RCr:
          go(s, 0, 1.0);
          go({RC2, k, s.a}, 1, 1.0);
          go({RB, s.a, k}, 8, 1.0);
          for (int j1 = 0; j1 < k; ++j1) go({REs, j1}, 9, vt(k, s.a, j1, k));
          break;
        case RAn:
          go(s, 0, 1.0);
          go({RB, k, s.a}, 2, 1.0);
          go({RA2, k, s.a}, 4, 1.0);
          for (int i1 = 0; i1 < k; ++i1) go({RE, i1}, 6, vt(i1, k, k, s.a));
          break;
        case RB:
          go(s, 0, 1.0);
          for (int i1 = 0; i1 < k; ++i1) go({RE, i1}, 4, vt(i1, s.a, k, s.b));
          for (int j1 = 0; j1 < k; ++j1) go({REs, j1}, 1, vt(k, s.a, j1, s.b));
          go({RD}, 5, vt(k, s.a, k, s.b));
          break;
        case RC2:
          go(s, 0, 1.0);
          for (int j1 = 0; j1 < k; ++j1) go({REs, j1}, 8, vt(s.a, s.b, j1, k));
          break;
        case RA2:
          go(s, 0, 1.0);
          for (int i1 = 0; i1 < k; ++i1) go({RE, i1}, 2, vt(i1, k, s.a, s.b));
          break;
        case RE:
          if (s.a < k) go(s, 0, 1.0);
          else go({RD}, 1, 1.0);
          break;
        case REs:
          if (s.a < k) go(s, 0, 1.0);
          else go({RD}, 4, 1.0);
          break;
        case RD:
          go(s, 0, 1.0);
          break;
      }
    }
  }
  // coupling at bond h
  std::map<std::pair<int, int>, double> mid;
  const BondStates& lh = bonds[h];
  for (int r = 0; r < lh.size(); ++r) {
    const Key s = lh.keys[r];
    auto put = [&](Key rk, double val) {
      const int c = mid_right.find(rk);
      if (c >= 0 && val != 0.0) mid[{r, c}] += val;
    };
    switch (s.t) {
      case LI: put({RD}, 1.0); break;
      case LCr: put({RE, s.a}, 1.0); break;
      case LAn: put({REs, s.a}, 1.0); break;
      case LE: put({RAn, s.a}, 1.0); break;
      case LEs: put({RCr, s.a}, 1.0); break;
      case LD: put({RI}, 1.0); break;
      case LB:
        for (int i2 = h; i2 < K; ++i2)
          for (int j2 = h; j2 < K; ++j2) put({RB, i2, j2}, vt(s.a, i2, s.b, j2));
        break;
      case LC2:
        for (int j1 = h; j1 < K; ++j1)
          for (int j2 = j1 + 1; j2 < K; ++j2) put({RA2, j1, j2}, vt(s.a, s.b, j1, j2));
        break;
      case LA2:
        for (int i1 = h; i1 < K; ++i1)
          for (int i2 = i1 + 1; i2 < K; ++i2) put({RC2, i1, i2}, vt(i1, i2, s.a, s.b));
        break;
    }
  }
  absorb_middle(bld.m, h, mid, mid_right);
  bld.m.validate();
  return bld.m;
}

SymMPO sym_hamiltonian(const OneBodyCoeffs& t, const TwoBodyCoeffs& v) {
  return sym_compress(sym_add(sym_from_onebody(t), sym_from_twobody(v)));
}

FullMPO build_S(const OneBodyCoeffs& t) { return to_dense_mpo(sym_from_onebody(t)); }
FullMPO build_D(const TwoBodyCoeffs& v) { return to_dense_mpo(sym_from_twobody(v)); }

std::vector<int> mpo_rank_profile(const FullMPO& m) {
  auto r = m.ranks();
  return std::vector<int>(r.begin() + 1, r.end() - 1);
}

std::vector<int> mpo_rank_profile(const SymMPO& m) {
  auto r = m.ranks();
  return std::vector<int>(r.begin() + 1, r.end() - 1);
}

namespace {

struct Reduction {
  std::vector<int> keep;
  Mat mix;  ///< keep.size() x count
};

/// Column elimination of `vecs` (one column per bond index) within groups of
/// equal label.  All-zero rows are skipped before the pivoted QR.
Reduction reduce_columns(const Mat& vecs, const std::vector<int>& labels, double tol) {
  const int count = static_cast<int>(vecs.cols());
  std::map<int, std::vector<int>> groups;
  for (int j = 0; j < count; ++j) groups[labels.empty() ? 0 : labels[j]].push_back(j);
  std::vector<std::pair<int, Vec>> rows;
  for (const auto& [f, idx] : groups) {
    std::vector<Eigen::Index> nz;
    for (Eigen::Index i = 0; i < vecs.rows(); ++i)
      for (int j : idx)
        if (vecs(i, j) != 0.0) {
          nz.push_back(i);
          break;
        }
    Mat a(static_cast<Eigen::Index>(nz.size()), static_cast<Eigen::Index>(idx.size()));
    for (size_t r = 0; r < nz.size(); ++r)
      for (size_t j = 0; j < idx.size(); ++j) a(r, j) = vecs(nz[r], idx[j]);
    const ColumnBasis cb = independent_columns(a, tol);
    for (size_t k = 0; k < cb.keep.size(); ++k) {
      Vec row = Vec::Zero(count);
      for (size_t j = 0; j < idx.size(); ++j) row(idx[j]) = cb.mix(k, j);
      rows.emplace_back(idx[cb.keep[k]], std::move(row));
    }
  }
  std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  Reduction red;
  red.mix = Mat::Zero(static_cast<Eigen::Index>(rows.size()), count);
  for (size_t k = 0; k < rows.size(); ++k) {
    red.keep.push_back(rows[k].first);
    red.mix.row(k) = rows[k].second.transpose();
  }
  return red;
}

}  // namespace

FullMPO mpo_compress(const FullMPO& m, double tol) {
  m.validate();
  FullMPO s = m;
  const int K = s.order();
  const bool has_flux = !s.flux.empty();
  for (int c = 0; c + 1 < K; ++c) {
    MPOCore& core = s.cores[c];
    const int n2 = core.n * core.n;
    Mat vecs(core.rows() * n2, core.cols());
    for (Eigen::Index i = 0; i < core.rows(); ++i)
      for (int ab = 0; ab < n2; ++ab) vecs.row(i * n2 + ab) = core.slice[ab].row(i);
    const Reduction red = reduce_columns(vecs, has_flux ? s.flux[c + 1] : std::vector<int>{}, tol);
    for (Mat& sl : core.slice) {
      Mat ns(sl.rows(), static_cast<Eigen::Index>(red.keep.size()));
      for (size_t k = 0; k < red.keep.size(); ++k) ns.col(k) = sl.col(red.keep[k]);
      sl = std::move(ns);
    }
    for (Mat& sl : s.cores[c + 1].slice) sl = (red.mix * sl).eval();
    if (has_flux) {
      std::vector<int> nf;
      for (int j : red.keep) nf.push_back(s.flux[c + 1][j]);
      s.flux[c + 1] = std::move(nf);
    }
  }
  for (int c = K - 1; c > 0; --c) {
    MPOCore& core = s.cores[c];
    const int n2 = core.n * core.n;
    Mat vecs(core.cols() * n2, core.rows());
    for (Eigen::Index j = 0; j < core.cols(); ++j)
      for (int ab = 0; ab < n2; ++ab) vecs.row(j * n2 + ab) = core.slice[ab].col(j).transpose();
    const Reduction red = reduce_columns(vecs, has_flux ? s.flux[c] : std::vector<int>{}, tol);
    for (Mat& sl : core.slice) {
      Mat ns(static_cast<Eigen::Index>(red.keep.size()), sl.cols());
      for (size_t k = 0; k < red.keep.size(); ++k) ns.row(k) = sl.row(red.keep[k]);
      sl = std::move(ns);
    }
    for (Mat& sl : s.cores[c - 1].slice) sl = (sl * red.mix.transpose()).eval();
    if (has_flux) {
      std::vector<int> nf;
      for (int i : red.keep) nf.push_back(s.flux[c][i]);
      s.flux[c] = std::move(nf);
    }
  }
  s.validate();
  return s;
}

}  // namespace bsmps
