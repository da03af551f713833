#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "dgt/kernel.hpp"
#include "dgt/lattice.hpp"

namespace dgt {

// Gradient variable: forward lattice derivative of the field along an axis
// at a site, tagged as background (phi) or fluctuation (zeta). Backward
// derivatives are rewritten via d_{-mu} phi(x) = -d_mu phi(x - e_mu), so
// only forward variables exist and the representation is canonical; shift
// invariance is structural.
struct GVar {
  uint64_t key = 0;

  static constexpr int kBias = 1 << 19;

  GVar() = default;
  GVar(const Pt& x, int axis, bool zeta) {
    key = uint64_t(axis & 3) | (uint64_t(zeta ? 1 : 0) << 2);
    for (int a = 0; a < 3; ++a) key |= uint64_t(uint32_t(x[a] + kBias) & 0xFFFFF) << (3 + 20 * a);
  }
  int axis() const { return int(key & 3); }
  bool isZeta() const { return (key >> 2) & 1; }
  Pt site() const {
    Pt x;
    for (int a = 0; a < 3; ++a) x[a] = int((key >> (3 + 20 * a)) & 0xFFFFF) - kBias;
    return x;
  }
  GVar withTag(bool zeta) const {
    GVar v;
    v.key = (key & ~uint64_t(4)) | (uint64_t(zeta ? 1 : 0) << 2);
    return v;
  }
  bool operator<(const GVar& o) const { return key < o.key; }
  bool operator==(const GVar& o) const { return key == o.key; }
};

constexpr int kMaxMonoDeg = 8;

// Sorted multiset of gradient variables.
struct Mono {
  uint8_t n = 0;
  std::array<uint64_t, kMaxMonoDeg> v{};

  int degree() const { return n; }
  GVar var(int i) const {
    GVar g;
    g.key = v[size_t(i)];
    return g;
  }
  void push(GVar g) {
    if (n >= kMaxMonoDeg) throw std::runtime_error("Mono: degree overflow");
    int i = n++;
    v[size_t(i)] = g.key;
    while (i > 0 && v[size_t(i - 1)] > v[size_t(i)]) {
      std::swap(v[size_t(i - 1)], v[size_t(i)]);
      --i;
    }
  }
  bool operator==(const Mono& o) const {
    if (n != o.n) return false;
    for (int i = 0; i < n; ++i)
      if (v[size_t(i)] != o.v[size_t(i)]) return false;
    return true;
  }
  int zetaCount() const {
    int c = 0;
    for (int i = 0; i < n; ++i)
      if ((v[size_t(i)] >> 2) & 1) ++c;
    return c;
  }
};

struct MonoHash {
  size_t operator()(const Mono& m) const {
    uint64_t h = 1469598103934665603ull ^ m.n;
    for (int i = 0; i < m.n; ++i) {
      h ^= m.v[size_t(i)];
      h *= 1099511628211ull;
    }
    return size_t(h);
  }
};

struct PtHash {
  size_t operator()(const Pt& p) const {
    uint64_t h = 1469598103934665603ull;
    for (int a = 0; a < 3; ++a) {
      h ^= uint64_t(uint32_t(p[a]));
      h *= 1099511628211ull;
    }
    return size_t(h);
  }
};

// Field values on a finite set of sites; gradients by forward differences.
struct FieldSample {
  std::unordered_map<Pt, double, PtHash> vals;

  double at(const Pt& x) const {
    auto it = vals.find(x);
    if (it == vals.end()) throw std::out_of_range("FieldSample: site not in region");
    return it->second;
  }
  double grad(const Pt& x, int axis) const {
    Pt y = x;
    ++y[axis];
    return at(y) - at(x);
  }
  // Signed-direction derivative, d_{-mu} phi(x) = -d_mu phi(x - e_mu).
  double gradSigned(const Pt& x, int mu) const {
    if (mu > 0) return grad(x, mu - 1);
    Pt y = x + unitVec(mu);
    return -grad(y, -mu - 1);
  }
  double grad2(const Pt& x, int a, int b) const {
    Pt y = x;
    ++y[a];
    return grad(y, b) - grad(x, b);
  }
  void setMeanZero() {
    if (vals.empty()) return;
    double m = 0;
    for (auto& [p, v] : vals) m += v;
    m /= double(vals.size());
    for (auto& [p, v] : vals) v -= m;
  }
};

// Abstract gradient-gradient covariance of the fluctuation field.
struct GradCov {
  virtual ~GradCov() = default;
  // cov(d_a zeta(x), d_b zeta(y)), forward axes.
  virtual double cov(const Pt& x, int a, const Pt& y, int b) const = 0;
};

struct KernelGradCov final : GradCov {
  const SymKernel* k;
  explicit KernelGradCov(const SymKernel& kk) : k(&kk) {}
  double cov(const Pt& x, int a, const Pt& y, int b) const override {
    return k->gradGrad(x - y, a + 1, b + 1);
  }
};

// Polynomial in gradient variables with graded degree-cap truncation.
// Truncated products are products in the quotient algebra by degrees > cap,
// so they stay associative and distributive; dropped l1 mass is tracked.
struct FieldPolynomial {
  int degCap = 4;
  double truncationMass = 0;
  std::unordered_map<Mono, double, MonoHash> t;

  FieldPolynomial() = default;
  explicit FieldPolynomial(int cap) : degCap(cap) {}
  static FieldPolynomial constant(double c, int cap) {
    FieldPolynomial p(cap);
    if (c != 0) p.t[Mono{}] = c;
    return p;
  }

  bool isZero() const { return t.empty(); }
  double constantTerm() const {
    auto it = t.find(Mono{});
    return it == t.end() ? 0.0 : it->second;
  }

  void add(const Mono& m, double c) {
    if (c == 0) return;
    if (m.degree() > degCap) {
      truncationMass += std::abs(c);
      return;
    }
    auto [it, fresh] = t.try_emplace(m, c);
    if (!fresh) {
      it->second += c;
      if (it->second == 0) t.erase(it);
    }
  }

  FieldPolynomial& operator+=(const FieldPolynomial& o) {
    for (auto& [m, c] : o.t) add(m, c);
    truncationMass += o.truncationMass;
    return *this;
  }
  FieldPolynomial& addScaled(const FieldPolynomial& o, double s) {
    for (auto& [m, c] : o.t) add(m, s * c);
    truncationMass += std::abs(s) * o.truncationMass;
    return *this;
  }
  void scale(double s) {
    if (s == 0) {
      t.clear();
      truncationMass = 0;
      return;
    }
    for (auto& [m, c] : t) const_cast<double&>(c) *= s;
    truncationMass *= std::abs(s);
  }

  FieldPolynomial mul(const FieldPolynomial& o) const;
  FieldPolynomial expTrunc() const;          // exp of this polynomial, truncated
  FieldPolynomial inverse() const;           // 1/this; constant term must be != 0
  FieldPolynomial degreeSlice(int lo, int hi) const;
  FieldPolynomial substPhiToPhiPlusZeta() const;
  FieldPolynomial wickZeta(const GradCov& cov) const;
  // Linear substitution of variables, v -> sum_i c_i w_i (same-tag map).
  FieldPolynomial substituteLinear(
      const std::function<std::vector<std::pair<GVar, double>>(GVar)>& map) const;

  double evaluate(const FieldSample& phi, const FieldSample* zeta = nullptr) const;
  // Evaluate phi-tagged variables numerically, keep zeta variables symbolic.
  FieldPolynomial evaluatePhiPartial(const FieldSample& phi, int newCap = -1) const;
  // n-th derivative at the evaluation field against test fields, divided by n!.
  // All variables are treated as depending on the single total field.
  double derivativeEval(const FieldSample& phi, const std::vector<const FieldSample*>& fs) const;

  // K_2(0; x_mu, x_nu): second derivative of the polynomial at zero field,
  // paired with coordinate functions (x_{-mu} = -x_mu).
  double pairCoordinate(int mu, int nu) const;

  int maxDegree() const {
    int m = 0;
    for (auto& [mm, c] : t) m = std::max(m, mm.degree());
    return m;
  }
  bool evenOnly() const {
    for (auto& [m, c] : t)
      if (m.degree() % 2) return false;
    return true;
  }
  double l1Norm() const {
    double s = 0;
    for (auto& [m, c] : t) s += std::abs(c);
    return s;
  }
  // Drop entries with |c| <= eps, adding them to the truncation mass.
  void compact(double eps);
  std::vector<Pt> supportSites() const;
};

// Convenience builders.
FieldPolynomial gradVarPoly(const Pt& x, int signedMu, bool zeta, int cap);

}  // namespace dgt
