#include "bsmps/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

namespace bsmps {

void OneBodyCoeffs::validate() const {
  if (t.rows() != K || t.cols() != K) throw ValidationError("one-body matrix has wrong shape");
  const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
  if ((t - t.transpose()).cwiseAbs().maxCoeff() > 1e-13 * scale)
    throw ValidationError("one-body matrix is not symmetric");
  if (bandwidth >= 0)
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j)
        if (std::abs(i - j) > bandwidth && t(i, j) != 0.0)
          throw ValidationError("one-body matrix violates its bandwidth");
}

void TwoBodyCoeffs::finalize() {
  vt.assign(v.size(), 0.0);
  for (int i1 = 0; i1 < K; ++i1)
    for (int i2 = i1 + 1; i2 < K; ++i2)
      for (int j1 = 0; j1 < K; ++j1)
        for (int j2 = j1 + 1; j2 < K; ++j2)
          vt[index(i1, i2, j1, j2)] = raw(i1, i2, j1, j2) + raw(i2, i1, j2, j1) -
                                      raw(i2, i1, j1, j2) - raw(i1, i2, j2, j1);
}

OneBodyCoeffs hopping_chain(int K) {
  OneBodyCoeffs c;
  c.K = K;
  c.t = Mat::Zero(K, K);
  for (int i = 0; i + 1 < K; ++i) c.t(i, i + 1) = c.t(i + 1, i) = -1.0;
  c.bandwidth = 1;
  return c;
}

OneBodyCoeffs random_onebody(int K, Rng& rng, int bandwidth) {
  OneBodyCoeffs c;
  c.K = K;
  c.bandwidth = bandwidth;
  Mat g = random_normal(rng, K, K);
  c.t = 0.5 * (g + g.transpose());
  if (bandwidth >= 0)
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j)
        if (std::abs(i - j) > bandwidth) c.t(i, j) = 0.0;
  return c;
}

bool TwoBodyCoeffs::is_hermitian(double tol) const {
  if (vt.size() != v.size()) throw ValidationError("two-body coefficients not finalized");
  double scale = 0.0;
  for (double x : vt) scale = std::max(scale, std::abs(x));
  for (int a = 0; a < K; ++a)
    for (int b = 0; b < K; ++b)
      for (int c = 0; c < K; ++c)
        for (int d = 0; d < K; ++d)
          if (std::abs(tilde(a, b, c, d) - tilde(c, d, a, b)) > tol * std::max(1.0, scale)) return false;
  return true;
}

TwoBodyCoeffs random_twobody(int K, Rng& rng, int locality, bool hermitian) {
  TwoBodyCoeffs c(K);
  c.locality = locality;
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
          double x = dist(rng);
          if (locality >= 0) {
            const auto [lo, hi] = std::minmax({i, j, k, l});
            if (hi - lo > locality) x = 0.0;
          }
          c.raw(i, j, k, l) = x;
        }
  if (hermitian) {
    const std::vector<double> raw = c.v;
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k)
          for (int l = 0; l < K; ++l)
            c.raw(i, j, k, l) = 0.5 * (raw[c.index(i, j, k, l)] + raw[c.index(l, k, j, i)]);
  }
  c.finalize();
  return c;
}

}  // namespace bsmps
