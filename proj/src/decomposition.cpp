#include "dgt/decomposition.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dgt {

namespace {

uint64_t fnv64(const void* data, size_t n, uint64_t h = 1469598103934665603ull) {
  auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

// f(muhat) delta_0 by Clenshaw with the neighbor-average operator
// muhat = 1 - (-Laplacian)/(2d); ||muhat|| <= 1.
SymKernel applyChebToDelta(const ChebSeries& f, int d, int radius) {
  CanonDomain dom(d, radius);
  size_t n = dom.size();
  auto nbr = dom.neighborTable();
  int twoD = 2 * d;
  double w = 1.0 / twoD;

  std::vector<double> b1(n, 0.0), b2(n, 0.0), tmp(n, 0.0);
  auto muhat = [&](const std::vector<double>& in, std::vector<double>& out) {
    for (size_t i = 0; i < n; ++i) {
      double s = 0;
      const int64_t* row = &nbr[i * twoD];
      for (int k = 0; k < twoD; ++k)
        if (row[k] >= 0) s += in[size_t(row[k])];
      out[i] = s * w;
    }
  };

  int deg = f.degree();
  for (int k = deg; k >= 1; --k) {
    // b0 = c_k delta + 2 muhat b1 - b2
    muhat(b1, tmp);
    for (size_t i = 0; i < n; ++i) tmp[i] = 2.0 * tmp[i] - b2[i];
    tmp[0] += f.c[size_t(k)];
    b2.swap(b1);
    b1.swap(tmp);
  }
  SymKernel out(d, radius);
  muhat(b1, out.v);
  for (size_t i = 0; i < n; ++i) out.v[i] -= b2[i];
  out.v[0] += deg >= 0 ? f.c[0] : 0.0;
  return out;
}

}  // namespace

CovDecomposition buildDecomposition(const DecompParams& p) {
  if (p.L < 3 || p.L % 2 == 0) throw std::invalid_argument("buildDecomposition: L odd >= 3 required");
  if (p.jMax < 1) throw std::invalid_argument("buildDecomposition: jMax >= 1 required");
  if (p.d < 2 || p.d > 3) throw std::invalid_argument("buildDecomposition: d must be 2 or 3");

  CovDecomposition dec;
  dec.d = p.d;
  dec.L = p.L;
  dec.jMax = p.jMax;
  dec.lambdaMax = 4.0 * p.d;

  ChebSeries prod = chebConst(1.0);
  int prodDeg = 0;
  long long usedDeg = 0;  // sum_{i<j} (n_i - 1)
  for (int j = 1; j <= p.jMax; ++j) {
    long long lj = ipow(p.L, j);
    // Largest filter order with total degree sum_{i<=j}(n_i-1) - 1 <= (L^j-1)/2,
    // so the kernel support saturates the range budget and successive orders
    // grow like L^j.
    int n = int((lj - 1) / 2 + 2 - usedDeg);
    if (n < 2) throw std::runtime_error("buildDecomposition: degree budget exceeds L^j/2");
    usedDeg += n - 1;
    dec.filterOrder.push_back(n);

    ChebSeries R = fejerR(n);
    // q_j(mu) = prod_{i<j} R * (1 - R_{n_j});  g_j = q_j / lambda = (q_j/(1-mu)) / (2d)
    ChebSeries oneMinusR = chebAdd(chebConst(1.0), R, -1.0);
    ChebSeries q = chebMul(prod, oneMinusR);
    ChebSeries g = chebDivOneMinusMu(q);
    for (auto& ck : g.c) ck /= 2.0 * p.d;
    g.trim(0.0);

    int deg = g.degree();
    if (deg < 0) deg = 0;
    if (2 * deg >= lj)
      throw std::runtime_error("buildDecomposition: degree budget exceeds L^j/2");
    dec.profile.push_back(g);

    prod = chebMul(prod, R);
    prodDeg += n - 1;
    dec.filterProd.push_back(prod);

    dec.gamma.push_back(applyChebToDelta(g, p.d, deg));
  }

  // Spectral positivity on the midpoint Fourier check grid.
  double floorVal = 0;
  int half = std::max(2, p.psdGrid / 2);
  double h = M_PI / half;
  std::vector<double> lamAxis(half);
  for (int i = 0; i < half; ++i) lamAxis[i] = 2.0 * (1.0 - std::cos((i + 0.5) * h));
  std::vector<int> idx(p.d, 0);
  while (true) {
    double lam = 0;
    for (int a = 0; a < p.d; ++a) lam += lamAxis[idx[a]];
    for (int j = 1; j <= p.jMax; ++j) floorVal = std::min(floorVal, dec.spectralProfile(j, lam));
    int a = 0;
    for (; a < p.d; ++a) {
      if (++idx[a] < half) break;
      idx[a] = 0;
    }
    if (a == p.d) break;
  }
  dec.psdFloor = floorVal;
  if (floorVal < -p.tol)
    throw std::runtime_error("buildDecomposition: spectral profile dips below -tol (construction bug)");

  uint64_t hsh = fnv64(&p.d, sizeof p.d);
  hsh = fnv64(&p.L, sizeof p.L, hsh);
  hsh = fnv64(&p.jMax, sizeof p.jMax, hsh);
  for (int n : dec.filterOrder) hsh = fnv64(&n, sizeof n, hsh);
  for (auto& g : dec.profile) hsh = fnv64(g.c.data(), g.c.size() * sizeof(double), hsh);
  dec.constructionHash = hsh;
  return dec;
}

DecayReport verifyDecay(const CovDecomposition& dec, const std::array<int, 3>& alpha,
                        int jLo, int jHi) {
  DecayReport rep;
  rep.alpha = alpha;
  rep.d = dec.d;
  rep.L = dec.L;
  int aNorm = 0;
  for (int a = 0; a < dec.d; ++a) aNorm += alpha[a];
  if (aNorm > 4) throw std::invalid_argument("verifyDecay: |alpha| <= 4 required");
  if (jLo < 1 || jHi > dec.jMax || jLo > jHi) throw std::invalid_argument("verifyDecay: bad j range");

  rep.targetRatio = std::pow(double(dec.L), -(dec.d - 2 + aNorm));
  for (int j = jLo; j <= jHi; ++j) {
    const SymKernel& K = dec.gammaKernel(j);
    int R = K.supportRadius() + aNorm;
    double m = 0;
    // The derivative is not octahedrally symmetric, but its max over the
    // lattice is attained on the canonical sector of some permuted alpha;
    // scanning the full cube keeps it simple.
    Pt x;
    for (x[0] = -R; x[0] <= R; ++x[0])
      for (x[1] = dec.d >= 2 ? -R : 0; x[1] <= (dec.d >= 2 ? R : 0); ++x[1])
        for (x[2] = dec.d >= 3 ? -R : 0; x[2] <= (dec.d >= 3 ? R : 0); ++x[2])
          m = std::max(m, std::abs(K.forwardDeriv(x, alpha)));
    rep.scales.push_back(j);
    rep.maxDeriv.push_back(m);
  }
  for (size_t i = 0; i + 1 < rep.maxDeriv.size(); ++i) {
    double r = rep.maxDeriv[i + 1] / rep.maxDeriv[i];
    rep.ratio.push_back(r);
    rep.pass.push_back(r >= rep.targetRatio / 4.0 && r <= rep.targetRatio * 4.0);
  }
  double c = 0;
  for (size_t i = 0; i < rep.maxDeriv.size(); ++i) {
    int j = rep.scales[i];
    c = std::max(c, rep.maxDeriv[i] * std::pow(double(dec.L), (dec.d - 2 + aNorm) * (j - 1)));
  }
  rep.fittedC = c;
  return rep;
}

std::string DecayReport::toCsv() const {
  std::ostringstream os;
  os << "j,max_deriv,ratio_to_prev,target_ratio,pass,fitted_c,alpha\n";
  for (size_t i = 0; i < scales.size(); ++i) {
    os << scales[i] << "," << maxDeriv[i] << ",";
    if (i > 0)
      os << ratio[i - 1] << "," << targetRatio << "," << (pass[i - 1] ? 1 : 0);
    else
      os << ",,";
    os << "," << fittedC << ","
       << alpha[0] << "|" << alpha[1] << "|" << alpha[2] << "\n";
  }
  return os.str();
}

std::string kernelToJson(const SymKernel& k, int d, int L, int j, uint64_t hash) {
  nlohmann::json out;
  out["d"] = d;
  out["L"] = L;
  out["j"] = j;
  out["support_radius"] = k.supportRadius();
  out["construction_hash"] = hash;
  out["symmetry"] = "hyperoctahedral; entries on x1>=x2>=...>=0";
  nlohmann::json entries = nlohmann::json::array();
  auto pts = k.dom.points();
  for (size_t i = 0; i < pts.size(); ++i) {
    if (k.v[i] == 0.0) continue;
    entries.push_back({{"x", {pts[i][0], pts[i][1], pts[i][2]}}, {"v", k.v[i]}});
  }
  out["entries"] = std::move(entries);
  return out.dump();
}

}  // namespace dgt
