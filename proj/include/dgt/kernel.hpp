#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "dgt/lattice.hpp"

namespace dgt {

// Canonical domain for lattice functions invariant under coordinate
// permutations and sign flips: points with x1 >= x2 >= ... >= xd >= 0,
// linf norm <= R. Kernels built as polynomials in the Laplacian live here.
struct CanonDomain {
  int d = 3;
  int R = 0;

  CanonDomain() = default;
  CanonDomain(int d_, int R_) : d(d_), R(R_) {
    if (d < 1 || d > 3) throw std::invalid_argument("CanonDomain: d must be 1..3");
  }

  size_t size() const {
    auto r = size_t(R);
    if (d == 1) return r + 1;
    if (d == 2) return (r + 1) * (r + 2) / 2;
    return (r + 1) * (r + 2) * (r + 3) / 6;
  }

  // Index of a canonical point (x >= y >= z >= 0).
  size_t idxCanon(int x, int y, int z) const {
    if (d == 1) return size_t(x);
    if (d == 2) return size_t(x) * (x + 1) / 2 + y;
    return size_t(x) * (x + 1) * (x + 2) / 6 + size_t(y) * (y + 1) / 2 + z;
  }

  static void canonicalize(Pt& p, int d) {
    for (int a = 0; a < 3; ++a) p[a] = std::abs(p[a]);
    if (d >= 2 && p[0] < p[1]) std::swap(p[0], p[1]);
    if (d >= 3) {
      if (p[1] < p[2]) std::swap(p[1], p[2]);
      if (p[0] < p[1]) std::swap(p[0], p[1]);
    }
  }

  // -1 if outside radius.
  long long idxOf(Pt p) const {
    canonicalize(p, d);
    if (p[0] > R) return -1;
    return (long long)idxCanon(p[0], p[1], p[2]);
  }

  std::vector<Pt> points() const {
    std::vector<Pt> out;
    out.reserve(size());
    if (d == 1) {
      for (int x = 0; x <= R; ++x) out.push_back(pt(x));
    } else if (d == 2) {
      for (int x = 0; x <= R; ++x)
        for (int y = 0; y <= x; ++y) out.push_back(pt(x, y));
    } else {
      for (int x = 0; x <= R; ++x)
        for (int y = 0; y <= x; ++y)
          for (int z = 0; z <= y; ++z) out.push_back(pt(x, y, z));
    }
    return out;
  }

  // Neighbor index table: for each canonical point, the 2d canonical indices
  // of x +- e_a (-1 when outside radius).
  std::vector<int64_t> neighborTable() const {
    auto pts = points();
    std::vector<int64_t> nbr(pts.size() * size_t(2 * d));
    for (size_t i = 0; i < pts.size(); ++i) {
      for (int a = 0; a < d; ++a) {
        for (int s = 0; s < 2; ++s) {
          Pt q = pts[i];
          q[a] += s == 0 ? 1 : -1;
          nbr[i * 2 * d + 2 * a + s] = idxOf(q);
        }
      }
    }
    return nbr;
  }
};

// Lattice kernel with full hyperoctahedral symmetry, stored on the canonical
// domain. value(x) = 0 for |x|_inf > support_radius by construction.
struct SymKernel {
  CanonDomain dom;
  std::vector<double> v;

  SymKernel() = default;
  SymKernel(int d, int R) : dom(d, R), v(dom.size(), 0.0) {}

  int d() const { return dom.d; }
  int supportRadius() const { return dom.R; }

  double value(const Pt& x) const {
    long long i = dom.idxOf(x);
    return i < 0 ? 0.0 : v[size_t(i)];
  }
  double at0() const { return v.empty() ? 0.0 : v[0]; }

  double maxAbs() const {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }

  // Gradient-gradient contraction (D_mu K D_nu^*)(x, y) as a function of
  // v = x - y, for signed directions mu, nu:
  //   K(v + e_mu - e_nu) - K(v + e_mu) - K(v - e_nu) + K(v).
  double gradGrad(const Pt& vv, int mu, int nu) const {
    Pt em = unitVec(mu), en = unitVec(nu);
    return value(vv + em - en) - value(vv + em) - value(vv - en) + value(vv);
  }

  // Forward multi-derivative d^alpha K at x; alpha counts per positive axis.
  double forwardDeriv(const Pt& x, const std::array<int, 3>& alpha) const {
    std::array<int, 3> a = alpha;
    std::vector<std::pair<Pt, double>> terms{{x, 1.0}};
    for (int ax = 0; ax < dom.d; ++ax) {
      for (int k = 0; k < a[ax]; ++k) {
        std::vector<std::pair<Pt, double>> next;
        next.reserve(terms.size() * 2);
        Pt e = unitVec(ax + 1);
        for (auto& [p, w] : terms) {
          next.push_back({p + e, w});
          next.push_back({p, -w});
        }
        terms = std::move(next);
      }
    }
    double s = 0;
    for (auto& [p, w] : terms) s += w * value(p);
    return s;
  }
};

}  // namespace dgt
