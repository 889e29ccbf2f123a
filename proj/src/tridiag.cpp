#include "difflan/tridiag.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "difflan/errors.hpp"

namespace difflan {

void SymmetricTridiagonal::apply(std::span<const double> x, std::span<double> out) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double v = diag[i] * x[i];
    if (i > 0) v += off[i - 1] * x[i - 1];
    if (i + 1 < n) v += off[i] * x[i + 1];
    out[i] = v;
  }
}

double SymmetricTridiagonal::inf_norm() const {
  const std::size_t n = size();
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = std::abs(diag[i]);
    if (i > 0) r += std::abs(off[i - 1]);
    if (i + 1 < n) r += std::abs(off[i]);
    m = std::max(m, r);
  }
  return m;
}

std::vector<double> ql_eigenvalues(const SymmetricTridiagonal& t) {
  const std::size_t n = t.size();
  std::vector<double> d = t.diag;
  std::vector<double> e(n, 0.0);
  std::copy(t.off.begin(), t.off.end(), e.begin());

  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    std::size_t iter = 0;
    for (;;) {
      // First negligible off-diagonal at or after l.
      std::size_t m = l;
      while (m + 1 < n) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
        ++m;
      }
      if (m == l) break;
      if (++iter > 60) {
        throw NumericError("ql_eigenvalues: no convergence for eigenvalue index " +
                           std::to_string(l) + " after 60 iterations");
      }
      // Implicit shift from the leading 2x2 block.
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (std::size_t i = m; i-- > l;) {
        double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    }
  }
  return d;
}

namespace {

// splitmix64 finalizer; seeds deterministic start vectors.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// LU of (t - lambda I) with partial pivoting between adjacent rows.
// Row swaps fill in a second superdiagonal.
class PivotedTridiagLU {
 public:
  PivotedTridiagLU(const SymmetricTridiagonal& t, double lambda) {
    const std::size_t n = t.size();
    d_.resize(n);
    u1_.assign(n, 0.0);
    u2_.assign(n, 0.0);
    l_.assign(n, 0.0);
    swapped_.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) d_[i] = t.diag[i] - lambda;
    for (std::size_t i = 0; i + 1 < n; ++i) u1_[i] = t.off[i];

    const double tiny =
        std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon() +
        std::numeric_limits<double>::epsilon() * std::max(t.inf_norm(), 1.0) * 1e-3;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double sub = t.off[i];  // row i+1, column i
      if (std::abs(d_[i]) >= std::abs(sub)) {
        if (std::abs(d_[i]) < tiny) d_[i] = std::copysign(tiny, d_[i]);
        const double m = sub / d_[i];
        l_[i] = m;
        d_[i + 1] -= m * u1_[i];
      } else {
        const double m = d_[i] / sub;
        l_[i] = m;
        swapped_[i] = true;
        const double row_i_u1 = u1_[i];      // old row i, column i+1
        const double row_j_d = d_[i + 1];    // old row i+1, column i+1
        const double row_j_u1 = u1_[i + 1];  // old row i+1, column i+2
        d_[i] = sub;
        u1_[i] = row_j_d;
        u2_[i] = row_j_u1;
        d_[i + 1] = row_i_u1 - m * row_j_d;
        u1_[i + 1] = -m * row_j_u1;
      }
    }
    if (std::abs(d_[n - 1]) < tiny) d_[n - 1] = std::copysign(tiny, d_[n - 1]);
  }

  void solve(std::span<double> x) const {
    const std::size_t n = d_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (swapped_[i]) std::swap(x[i], x[i + 1]);
      x[i + 1] -= l_[i] * x[i];
    }
    x[n - 1] /= d_[n - 1];
    if (n >= 2) x[n - 2] = (x[n - 2] - u1_[n - 2] * x[n - 1]) / d_[n - 2];
    for (std::size_t i = n - 2; i-- > 0;) {
      x[i] = (x[i] - u1_[i] * x[i + 1] - u2_[i] * x[i + 2]) / d_[i];
    }
  }

 private:
  std::vector<double> d_, u1_, u2_, l_;
  std::vector<bool> swapped_;
};

}  // namespace

std::vector<double> inverse_iteration(const SymmetricTridiagonal& t, double lambda,
                                      std::uint64_t tag) {
  const std::size_t n = t.size();
  std::vector<double> v(n);
  std::uint64_t s = tag;
  for (std::size_t i = 0; i < n; ++i) {
    s = mix64(s);
    v[i] = (static_cast<double>(s >> 11) * 0x1.0p-53) - 0.5;
  }

  const PivotedTridiagLU lu(t, lambda);
  const double scale = std::max(t.inf_norm(), 1.0);
  std::vector<double> resid(n);
  for (int iter = 0; iter < 8; ++iter) {
    lu.solve(v);
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) throw NumericError("inverse_iteration: zero iterate");
    for (double& x : v) x /= nrm;
    if (iter >= 1) {
      t.apply(v, resid);
      double rn = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = resid[i] - lambda * v[i];
        rn += r * r;
      }
      if (std::sqrt(rn) <= 64.0 * std::numeric_limits<double>::epsilon() * scale) {
        return v;
      }
    }
  }
  throw NumericError("inverse_iteration: no convergence at lambda=" + std::to_string(lambda));
}

void tridiagonal_solve(std::span<const double> lower, std::span<const double> diag,
                       std::span<const double> upper, std::span<const double> rhs,
                       std::span<double> x) {
  const std::size_t n = diag.size();
  thread_local std::vector<double> cs, ds;
  cs.resize(n);
  ds.resize(n);
  cs[0] = upper[0] / diag[0];
  ds[0] = rhs[0] / diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double m = diag[i] - lower[i] * cs[i - 1];
    cs[i] = upper[i] / m;
    ds[i] = (rhs[i] - lower[i] * ds[i - 1]) / m;
  }
  x[n - 1] = ds[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    x[i] = ds[i] - cs[i] * x[i + 1];
  }
}

}  // namespace difflan
