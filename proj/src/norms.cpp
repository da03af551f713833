#include "dgt/norms.hpp"

#include <algorithm>
#include <stdexcept>

#include "dgt/gaussian.hpp"

namespace dgt {

double phiNorm(const FieldSample& phi, const std::vector<Pt>& sites, int d, int L, int j,
               const NormParams& np) {
  if (sites.empty()) throw std::invalid_argument("phiNorm: empty region");
  double lj = std::pow(double(L), j);
  double g1 = 0, g2 = 0;
  for (const Pt& x : sites) {
    for (int a = 0; a < d; ++a) {
      g1 = std::max(g1, std::abs(phi.grad(x, a)));
      for (int b = 0; b < d; ++b) g2 = std::max(g2, std::abs(phi.grad2(x, a, b)));
    }
  }
  return std::max(lj * g1, lj * lj * g2) / np.hj(d, L, j);
}

namespace {

// Max over p = 0,1,2 of ||grad_j^p zeta||_{sites,inf} with grad_j = L^j d.
double maxGradSup(const FieldSample& f, const std::vector<Pt>& sites, int d, double lj) {
  double m = 0;
  for (const Pt& x : sites) {
    m = std::max(m, std::abs(f.at(x)));
    for (int a = 0; a < d; ++a) {
      m = std::max(m, lj * std::abs(f.grad(x, a)));
      for (int b = 0; b < d; ++b) m = std::max(m, lj * lj * std::abs(f.grad2(x, a, b)));
    }
  }
  return m;
}

std::vector<Pt> starSitesOf(const Volume& vol, int j, int b) {
  std::vector<Pt> s;
  for (int sb : blockStar(vol, j, b).blocks) {
    auto bs = vol.blockSiteList(j, sb);
    s.insert(s.end(), bs.begin(), bs.end());
  }
  return s;
}

}  // namespace

double regulator(RegulatorKind kind, const Volume& vol, const Polymer& X,
                 const FieldSample& phiPrime, const FieldSample& zeta, const NormParams& np) {
  if (kind == RegulatorKind::Unit) return 1.0;
  int d = vol.d, L = vol.L, j = X.j;
  double hj = np.hj(d, L, j);
  double lj = std::pow(double(L), j);

  if (kind == RegulatorKind::Strong) {
    double expo = 0;
    for (int b : X.blocks) {
      auto starSites = starSitesOf(vol, j, b);
      double np1 = phiNorm(phiPrime, starSites, d, L, j, np);
      double np2 = phiNorm(zeta, starSites, d, L, j, np);
      expo += np1 * np1 + np2 * np2;
    }
    return std::exp(expo);
  }

  // weak regulator
  double expo = 0;
  for (int b : X.blocks) {
    auto bSites = vol.blockSiteList(j, b);
    // c1 h_j^-2 L^{-dj} || grad_j phi' ||_{B,2}^2
    double l2 = 0;
    for (const Pt& x : bSites)
      for (int a = 0; a < d; ++a) {
        double g = lj * phiPrime.grad(x, a);
        l2 += g * g;
      }
    expo += np.c1 / (hj * hj) * std::pow(lj, -d) * l2;
    // c2 h_j^-2 || grad_j^2 phi' ||_{B*,inf}^2
    auto starSites = starSitesOf(vol, j, b);
    double g2 = 0;
    for (const Pt& x : starSites)
      for (int a = 0; a < d; ++a)
        for (int bb = 0; bb < d; ++bb)
          g2 = std::max(g2, std::abs(lj * lj * phiPrime.grad2(x, a, bb)));
    expo += np.c2 / (hj * hj) * g2 * g2;
    // c4 h_j^-2 max_{0<=p<=2} || grad_j^p zeta ||_{B*,inf}^2
    double mz = maxGradSup(zeta, starSites, d, lj);
    expo += np.c4 / (hj * hj) * mz * mz;
  }
  // c3 h_j^-2 L^{-(d-1)j} || grad_j phi' ||_{dX,2}^2: bonds with exactly one
  // endpoint in X
  double bnd = 0;
  for (int b : X.blocks) {
    for (const Pt& x : vol.blockSiteList(j, b)) {
      for (int a = 0; a < d; ++a) {
        for (int s = -1; s <= 1; s += 2) {
          Pt y = x;
          y[a] += s;
          if (!vol.containsSite(y)) continue;
          if (polymerContains(X, vol.blockOfSite(j, y))) continue;
          double g = lj * (s > 0 ? phiPrime.grad(x, a) : -phiPrime.grad(y, a));
          bnd += g * g;
        }
      }
    }
  }
  expo += np.c3 / (hj * hj) * std::pow(lj, -(d - 1)) * bnd;
  return std::exp(expo);
}

double taylorEnvelope(int k) {
  static std::vector<double> cache;
  if (k < int(cache.size())) return cache[size_t(k)];
  auto compute = [](int kk) {
    int nMax = std::min(3, kk);
    auto val = [&](double t) {
      double s = 0;
      double binom = 1;
      for (int n = 0; n <= nMax; ++n) {
        s += binom * std::pow(t, kk - n);
        binom = binom * (kk - n) / (n + 1);
      }
      return s * std::exp(-t * t);
    };
    double best = 0;
    for (int i = 0; i <= 4000; ++i) best = std::max(best, val(i * 0.002));
    return best;
  };
  for (int i = int(cache.size()); i <= k; ++i) cache.push_back(compute(i));
  return cache[size_t(k)];
}

double entryNormUpper(const FieldPolynomial& P, int d, int L, int j, const NormParams& np) {
  double w = np.varWeight(d, L, j);
  double s = 0;
  for (auto& [m, c] : P.t) s += std::abs(c) * std::pow(w, m.degree()) * taylorEnvelope(m.degree());
  return s;
}

double entryNormSampled(const FieldPolynomial& P, const Volume& vol, const Polymer& X, int d, int L,
                        int j, const NormParams& np, int samples, uint64_t seed) {
  Polymer star = polymerStar(vol, X);
  std::vector<Pt> sites;
  for (int b : star.blocks) {
    auto bs = vol.blockSiteList(j, b);
    sites.insert(sites.end(), bs.begin(), bs.end());
  }
  // halo for second differences of test fields
  std::vector<Pt> halo;
  for (const Pt& x : sites)
    for (int dx = -1; dx <= 2; ++dx)
      for (int dy = (d >= 2 ? -1 : 0); dy <= (d >= 2 ? 2 : 0); ++dy)
        for (int dz = (d >= 3 ? -1 : 0); dz <= (d >= 3 ? 2 : 0); ++dz)
          halo.push_back(x + pt(dx, dy, dz));
  std::sort(halo.begin(), halo.end());
  halo.erase(std::unique(halo.begin(), halo.end()), halo.end());

  double lj = std::pow(double(L), j);
  double best = 0;
  for (int s = 0; s < samples; ++s) {
    CounterRng rng = CounterRng::forSample(seed, uint64_t(s));
    auto draw = [&](double scale) {
      FieldSample f;
      for (const Pt& x : halo) f.vals[x] = scale * rng.normal();
      return f;
    };
    // magnitudes spread around the regulator shoulder
    double mag = np.hj(d, L, j) / lj * std::exp(rng.normal());
    FieldSample phiP = draw(mag), zeta = draw(0.5 * mag);
    FieldSample total;
    for (const Pt& x : halo) total.vals[x] = phiP.at(x) + zeta.at(x);

    std::vector<FieldSample> fs;
    for (int i = 0; i < 3; ++i) {
      FieldSample f = draw(1.0);
      double n = phiNorm(f, sites, d, L, j, np);
      if (n < 1e-14) continue;
      for (auto& [p, v] : f.vals) v /= n;
      fs.push_back(std::move(f));
    }
    double taylor = std::abs(P.evaluate(total));
    for (size_t n = 1; n <= 3 && n <= fs.size(); ++n) {
      std::vector<const FieldSample*> dirs;
      for (size_t i = 0; i < n; ++i) dirs.push_back(&fs[i]);
      taylor += std::abs(P.derivativeEval(total, dirs));
    }
    double G = regulator(np.kind, vol, X, phiP, zeta, np);
    best = std::max(best, taylor / G);
  }
  return best;
}

}  // namespace dgt
