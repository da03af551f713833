#pragma once

#include <map>
#include <string>

#include "dgt/geometry.hpp"
#include "dgt/norms.hpp"
#include "dgt/poly.hpp"

namespace dgt {

// Activity: one polynomial per connected polymer at a fixed scale; values on
// general polymers factor over connected components. Entries depend on the
// field only through gradient variables inside X*.
struct PolymerActivity {
  int scale = 0;
  int degCap = 4;
  bool interiorSymmetric = false;
  double droppedMass = 0;  // ledger of discarded contributions
  std::map<Polymer, FieldPolynomial> entries;

  const FieldPolynomial* find(const Polymer& X) const {
    auto it = entries.find(X);
    return it == entries.end() ? nullptr : &it->second;
  }
  void add(const Polymer& X, FieldPolynomial P) {
    if (P.isZero() && P.truncationMass == 0) return;
    auto [it, fresh] = entries.try_emplace(X, std::move(P));
    if (!fresh) it->second += P;
  }
  void prune(double eps) {
    for (auto it = entries.begin(); it != entries.end();) {
      it->second.compact(eps);
      if (it->second.isZero()) {
        droppedMass += it->second.truncationMass;
        it = entries.erase(it);
      } else {
        ++it;
      }
    }
  }
  double totalTruncationMass() const {
    double s = droppedMass;
    for (auto& [X, P] : entries) s += P.truncationMass;
    return s;
  }

  // sup over stored entries of upper-norm * A^{|X|_j}.
  double flowNormUpper(int d, int L, const NormParams& np) const {
    double m = 0;
    for (auto& [X, P] : entries)
      m = std::max(m, entryNormUpper(P, d, L, scale, np) * std::pow(np.A, X.card()));
    return m;
  }

  // Value on a general polymer as the product over components; nullopt-like
  // empty polynomial when some component is missing.
  FieldPolynomial productOver(const Volume& vol, const std::vector<Polymer>& components) const {
    FieldPolynomial out = FieldPolynomial::constant(1.0, degCap);
    for (const auto& Y : components) {
      const FieldPolynomial* e = find(Y);
      if (!e) return FieldPolynomial(degCap);
      out = out.mul(*e);
    }
    (void)vol;
    return out;
  }

  std::string toJson(const Volume& vol) const;
};

}  // namespace dgt
