#include "dgt/poly.hpp"

#include <algorithm>
#include <cmath>

namespace dgt {

FieldPolynomial gradVarPoly(const Pt& x, int signedMu, bool zeta, int cap) {
  FieldPolynomial p(cap);
  Mono m;
  if (signedMu > 0) {
    m.push(GVar(x, signedMu - 1, zeta));
    p.add(m, 1.0);
  } else {
    Pt y = x + unitVec(signedMu);
    m.push(GVar(y, -signedMu - 1, zeta));
    p.add(m, -1.0);
  }
  return p;
}

FieldPolynomial FieldPolynomial::mul(const FieldPolynomial& o) const {
  FieldPolynomial r(degCap);
  r.truncationMass = truncationMass * (o.l1Norm() + o.truncationMass) +
                     o.truncationMass * l1Norm();
  for (auto& [ma, ca] : t) {
    for (auto& [mb, cb] : o.t) {
      if (ma.degree() + mb.degree() > degCap) {
        r.truncationMass += std::abs(ca * cb);
        continue;
      }
      Mono m = ma;
      for (int i = 0; i < mb.degree(); ++i) m.push(mb.var(i));
      r.add(m, ca * cb);
    }
  }
  return r;
}

FieldPolynomial FieldPolynomial::expTrunc() const {
  double c0 = constantTerm();
  FieldPolynomial rest = *this;
  rest.t.erase(Mono{});
  FieldPolynomial acc = FieldPolynomial::constant(1.0, degCap);
  FieldPolynomial term = FieldPolynomial::constant(1.0, degCap);
  // Terms beyond degCap iterations vanish in the quotient (rest has no
  // constant part, so its k-th power has degree >= k).
  for (int k = 1; k <= degCap; ++k) {
    term = term.mul(rest);
    term.scale(1.0 / k);
    if (term.isZero() && term.truncationMass == 0) break;
    acc += term;
  }
  acc.scale(std::exp(c0));
  return acc;
}

FieldPolynomial FieldPolynomial::inverse() const {
  double c0 = constantTerm();
  if (c0 == 0) throw std::runtime_error("FieldPolynomial::inverse: zero constant term");
  FieldPolynomial rest = *this;
  rest.t.erase(Mono{});
  rest.scale(1.0 / c0);
  // 1/(c0 (1 + u)) = (1/c0) sum (-u)^k
  FieldPolynomial acc = FieldPolynomial::constant(1.0, degCap);
  FieldPolynomial term = FieldPolynomial::constant(1.0, degCap);
  for (int k = 1; k <= degCap; ++k) {
    term = term.mul(rest);
    term.scale(-1.0);
    if (term.isZero() && term.truncationMass == 0) break;
    acc += term;
  }
  acc.scale(1.0 / c0);
  return acc;
}

FieldPolynomial FieldPolynomial::degreeSlice(int lo, int hi) const {
  FieldPolynomial r(degCap);
  for (auto& [m, c] : t)
    if (m.degree() >= lo && m.degree() <= hi) r.add(m, c);
  return r;
}

FieldPolynomial FieldPolynomial::substPhiToPhiPlusZeta() const {
  FieldPolynomial r(degCap);
  r.truncationMass = truncationMass;
  for (auto& [m, c] : t) {
    int k = m.degree();
    // expand each phi-tagged variable into (phi + zeta)
    int nPhi = 0;
    for (int i = 0; i < k; ++i)
      if (!m.var(i).isZeta()) ++nPhi;
    int combos = 1 << nPhi;
    for (int mask = 0; mask < combos; ++mask) {
      Mono out;
      int bi = 0;
      for (int i = 0; i < k; ++i) {
        GVar g = m.var(i);
        if (!g.isZeta()) {
          bool flip = mask & (1 << bi);
          ++bi;
          out.push(flip ? g.withTag(true) : g);
        } else {
          out.push(g);
        }
      }
      r.add(out, c);
    }
  }
  return r;
}

FieldPolynomial FieldPolynomial::wickZeta(const GradCov& cov) const {
  FieldPolynomial r(degCap);
  r.truncationMass = truncationMass;
  std::array<GVar, kMaxMonoDeg> zs;
  std::array<bool, kMaxMonoDeg> used{};
  // Sum over perfect matchings of the zeta variables.
  std::function<double(int, int)> pairUp = [&](int nz, int remaining) -> double {
    if (remaining == 0) return 1.0;
    int first = -1;
    for (int i = 0; i < nz; ++i)
      if (!used[size_t(i)]) {
        first = i;
        break;
      }
    used[size_t(first)] = true;
    double sum = 0;
    for (int jj = first + 1; jj < nz; ++jj) {
      if (used[size_t(jj)]) continue;
      used[size_t(jj)] = true;
      double c = cov.cov(zs[size_t(first)].site(), zs[size_t(first)].axis(),
                         zs[size_t(jj)].site(), zs[size_t(jj)].axis());
      if (c != 0) sum += c * pairUp(nz, remaining - 2);
      used[size_t(jj)] = false;
    }
    used[size_t(first)] = false;
    return sum;
  };

  for (auto& [m, c] : t) {
    int nz = 0;
    Mono keep;
    for (int i = 0; i < m.degree(); ++i) {
      GVar g = m.var(i);
      if (g.isZeta())
        zs[size_t(nz++)] = g;
      else
        keep.push(g);
    }
    if (nz % 2) continue;  // odd moments vanish
    double w = 1.0;
    if (nz > 0) {
      used.fill(false);
      w = pairUp(nz, nz);
    }
    if (w != 0) r.add(keep, c * w);
  }
  return r;
}

FieldPolynomial FieldPolynomial::substituteLinear(
    const std::function<std::vector<std::pair<GVar, double>>(GVar)>& map) const {
  FieldPolynomial r(degCap);
  r.truncationMass = truncationMass;
  for (auto& [m, c] : t) {
    std::vector<std::pair<Mono, double>> partial{{Mono{}, c}};
    for (int i = 0; i < m.degree(); ++i) {
      auto imgs = map(m.var(i));
      std::vector<std::pair<Mono, double>> next;
      next.reserve(partial.size() * imgs.size());
      for (auto& [pm, pc] : partial)
        for (auto& [g, w] : imgs) {
          Mono nm = pm;
          nm.push(g);
          next.push_back({nm, pc * w});
        }
      partial = std::move(next);
    }
    for (auto& [pm, pc] : partial) r.add(pm, pc);
  }
  return r;
}

double FieldPolynomial::evaluate(const FieldSample& phi, const FieldSample* zeta) const {
  double s = 0;
  for (auto& [m, c] : t) {
    double p = c;
    for (int i = 0; i < m.degree() && p != 0; ++i) {
      GVar g = m.var(i);
      const FieldSample& f = g.isZeta() ? *zeta : phi;
      p *= f.grad(g.site(), g.axis());
    }
    s += p;
  }
  return s;
}

FieldPolynomial FieldPolynomial::evaluatePhiPartial(const FieldSample& phi, int newCap) const {
  FieldPolynomial r(newCap < 0 ? degCap : newCap);
  r.truncationMass = truncationMass;
  for (auto& [m, c] : t) {
    double w = c;
    Mono keep;
    for (int i = 0; i < m.degree() && w != 0; ++i) {
      GVar g = m.var(i);
      if (g.isZeta())
        keep.push(g);
      else
        w *= phi.grad(g.site(), g.axis());
    }
    if (w != 0) r.add(keep, w);
  }
  return r;
}

double FieldPolynomial::derivativeEval(const FieldSample& phi,
                                       const std::vector<const FieldSample*>& fs) const {
  int n = int(fs.size());
  double total = 0;
  for (auto& [m, c] : t) {
    int k = m.degree();
    if (k < n) continue;
    // sum over injective assignments of test slots to variable positions
    double sum = 0;
    std::function<void(int, uint32_t, double)> rec = [&](int slot, uint32_t usedMask, double acc) {
      if (slot == n) {
        double p = acc;
        for (int i = 0; i < k && p != 0; ++i)
          if (!(usedMask & (1u << i))) {
            GVar g = m.var(i);
            p *= phi.grad(g.site(), g.axis());
          }
        sum += p;
        return;
      }
      for (int i = 0; i < k; ++i) {
        if (usedMask & (1u << i)) continue;
        GVar g = m.var(i);
        double gv = fs[size_t(slot)]->grad(g.site(), g.axis());
        if (gv != 0) rec(slot + 1, usedMask | (1u << i), acc * gv);
      }
    };
    rec(0, 0, 1.0);
    total += c * sum;
  }
  // divide by n! (definition of the Taylor coefficient)
  double fact = 1;
  for (int i = 2; i <= n; ++i) fact *= i;
  return total / fact;
}

double FieldPolynomial::pairCoordinate(int mu, int nu) const {
  // Gradient of the coordinate function x_m along forward axis a is
  // delta_{a,m}; x_{-m} = -x_m.
  auto coordGrad = [&](const GVar& g, int m) {
    int axis = std::abs(m) - 1;
    double s = m > 0 ? 1.0 : -1.0;
    return g.axis() == axis ? s : 0.0;
  };
  double total = 0;
  for (auto& [m, c] : t) {
    if (m.degree() != 2) continue;
    GVar a = m.var(0), b = m.var(1);
    // second derivative of c * v_a v_b against (f, g): c [a(f)b(g) + a(g)b(f)]
    total += c * (coordGrad(a, mu) * coordGrad(b, nu) + coordGrad(a, nu) * coordGrad(b, mu));
  }
  return total;
}

void FieldPolynomial::compact(double eps) {
  if (eps <= 0) return;
  for (auto it = t.begin(); it != t.end();) {
    if (it->first.degree() > 0 && std::abs(it->second) <= eps) {
      truncationMass += std::abs(it->second);
      it = t.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<Pt> FieldPolynomial::supportSites() const {
  std::vector<Pt> out;
  for (auto& [m, c] : t)
    for (int i = 0; i < m.degree(); ++i) out.push_back(m.var(i).site());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace dgt
