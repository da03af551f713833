#include "dgt/potentials.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace dgt {

std::string PolymerActivity::toJson(const Volume& vol) const {
  nlohmann::json out;
  out["scale"] = scale;
  out["deg_cap"] = degCap;
  out["interior_symmetric"] = interiorSymmetric;
  out["dropped_mass"] = droppedMass;
  nlohmann::json es = nlohmann::json::array();
  for (auto& [X, P] : entries) {
    nlohmann::json e;
    nlohmann::json anchors = nlohmann::json::array();
    for (int b : X.blocks) {
      auto c = vol.blockCoords(X.j, b);
      anchors.push_back({c[0], c[1], c[2]});
    }
    e["blocks"] = anchors;
    nlohmann::json terms = nlohmann::json::array();
    for (auto& [m, c] : P.t) {
      nlohmann::json vars = nlohmann::json::array();
      for (int i = 0; i < m.degree(); ++i) {
        GVar g = m.var(i);
        Pt x = g.site();
        vars.push_back({{"x", {x[0], x[1], x[2]}}, {"axis", g.axis()}, {"zeta", g.isZeta()}});
      }
      terms.push_back({{"vars", vars}, {"c", c}});
    }
    e["terms"] = terms;
    e["truncation_mass"] = P.truncationMass;
    es.push_back(e);
  }
  out["entries"] = es;
  return out.dump();
}

double sphereMomentEven(const std::vector<int>& beta, int d) {
  int k = 0;
  double num = 1;
  for (int b : beta) {
    k += b;
    for (int i = 2 * b - 1; i >= 3; i -= 2) num *= i;  // (2b-1)!!
  }
  double den = 1;
  for (int i = 0; i < k; ++i) den *= d + 2 * i;
  return num / den;
}

FieldPolynomial potentialV(const Volume& vol, int j, int blockId,
                           const std::function<double(int, int)>& s, int cap) {
  FieldPolynomial out(cap);
  for (const Pt& x : vol.blockSiteList(j, blockId)) {
    for (int mu = -vol.d; mu <= vol.d; ++mu) {
      if (mu == 0) continue;
      for (int nu = -vol.d; nu <= vol.d; ++nu) {
        if (nu == 0) continue;
        double c = s(mu, nu);
        if (c == 0) continue;
        FieldPolynomial term = gradVarPoly(x, mu, false, cap).mul(gradVarPoly(x, nu, false, cap));
        out.addScaled(term, 0.25 * c);
      }
    }
  }
  return out;
}

FieldPolynomial potentialVIso(const Volume& vol, int j, int blockId, int cap) {
  return potentialV(vol, j, blockId, [](int mu, int nu) { return mu == nu ? 1.0 : 0.0; }, cap);
}

FieldPolynomial interactionW(const Pt& site, double u, int d, int cap) {
  if (cap % 2) throw std::invalid_argument("interactionW: degree cap must be even");
  // 2 cos(u p.v) averaged over the sphere: the monomial prod_mu v_mu^{2 beta_mu}
  // with |beta| = k carries 2 (-1)^k u^{2k} / (2^k prod_mu beta_mu!) / prod_{i<k}(d+2i).
  FieldPolynomial out(cap);
  for (int k = 0; 2 * k <= cap; ++k) {
    std::vector<int> comp(size_t(d), 0);
    std::function<void(int, int)> rec = [&](int axis, int rem) {
      if (axis == d - 1) {
        comp[size_t(axis)] = rem;
        double betaFact = 1;
        for (int b : comp)
          for (int i = 2; i <= b; ++i) betaFact *= i;
        double den = 1;
        for (int i = 0; i < k; ++i) den *= d + 2 * i;
        double c = 2.0 * (k % 2 ? -1.0 : 1.0) * std::pow(u, 2 * k) /
                   (std::pow(2.0, k) * betaFact) / den;
        Mono m;
        for (int a = 0; a < d; ++a)
          for (int i = 0; i < 2 * comp[size_t(a)]; ++i) m.push(GVar(site, a, false));
        out.add(m, c);
        return;
      }
      for (int b = 0; b <= rem; ++b) {
        comp[size_t(axis)] = b;
        rec(axis + 1, rem - b);
      }
    };
    rec(0, k);
  }
  return out;
}

Interaction buildInteraction(double z, double u, double sigma0, const Volume& vol, int block0,
                             int cap) {
  if (cap % 2) throw std::invalid_argument("buildInteraction: degree cap must be even");
  Interaction out;
  auto sites = vol.blockSiteList(0, block0);
  out.W = interactionW(sites.at(0), u, vol.d, cap);
  out.W.scale(z);
  out.V = potentialVIso(vol, 0, block0, cap);
  FieldPolynomial mV = out.V;
  mV.scale(-sigma0);
  out.I0 = mV.expTrunc();
  return out;
}

FieldPolynomial InitialDensity::background(const Volume& vol, int blockId, int cap) const {
  FieldPolynomial mV = potentialVIso(vol, 0, blockId, cap);
  mV.scale(-sigma0);
  return mV.expTrunc();
}

InitialDensity initialDensity(double z, double sigma0, const Volume& vol, int cap, int maxBlocks) {
  InitialDensity out;
  out.z = z;
  out.sigma0 = sigma0;
  out.K0.scale = 0;
  out.K0.degCap = cap;
  out.K0.interiorSymmetric = true;
  if (z == 0.0) return out;  // W0 = zW vanishes, so e^{W0} - 1 = 0

  double u = std::sqrt(1.0 + sigma0);
  // per-block factor k(B) = (e^{W0(B)} - 1) e^{-V0(B)}
  std::map<int, FieldPolynomial> kB;
  for (int b = 0; b < vol.numBlocks(0); ++b) {
    Interaction in = buildInteraction(z, u, sigma0, vol, b, cap);
    FieldPolynomial eW = in.W.expTrunc();
    eW.add(Mono{}, -1.0);
    kB.emplace(b, eW.mul(in.I0));
  }
  for (const Polymer& X : enumerateConnected(vol, 0, maxBlocks)) {
    FieldPolynomial P = FieldPolynomial::constant(1.0, cap);
    for (int b : X.blocks) P = P.mul(kB.at(b));
    out.truncationDiagnostic += P.truncationMass;
    out.K0.add(X, std::move(P));
  }
  return out;
}

}  // namespace dgt
