#include <cmath>

#include "dgt/gaussian.hpp"
#include "dgt/norms.hpp"
#include "dgt/potentials.hpp"
#include "doctest.h"

using namespace dgt;

namespace {
FieldSample randomFieldBox(int r, uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed);
  FieldSample f;
  for (int x = -r; x <= r; ++x)
    for (int y = -r; y <= r; ++y)
      for (int z = -r; z <= r; ++z) f.vals[pt(x, y, z)] = scale * rng.normal();
  return f;
}
}  // namespace

TEST_CASE("phi norm basics") {
  NormParams np;
  Volume vol(3, 3, 1);
  auto sites = vol.allSites();

  SUBCASE("constant field has zero norm") {
    FieldSample f;
    for (int x = -3; x <= 3; ++x)
      for (int y = -3; y <= 3; ++y)
        for (int z = -3; z <= 3; ++z) f.vals[pt(x, y, z)] = 2.5;
    CHECK(phiNorm(f, sites, 3, 3, 0, np) == doctest::Approx(0.0));
  }
  SUBCASE("linear field at j = 0 gives |a| / h") {
    double a = 0.8;
    FieldSample f;
    for (int x = -3; x <= 3; ++x)
      for (int y = -3; y <= 3; ++y)
        for (int z = -3; z <= 3; ++z) f.vals[pt(x, y, z)] = a * x;
    CHECK(phiNorm(f, sites, 3, 3, 0, np) == doctest::Approx(std::abs(a) / np.h).epsilon(1e-12));
  }
  SUBCASE("empty region is an error") {
    FieldSample f;
    CHECK_THROWS(phiNorm(f, {}, 3, 3, 0, np));
  }
  SUBCASE("scale contraction: ||phi||_{Phi_j} <= L^{-d/2} ||phi||_{Phi_{j+1}}") {
    Volume vol2(3, 3, 2);
    std::vector<Pt> inner;
    for (int x = -3; x <= 3; ++x)
      for (int y = -3; y <= 3; ++y)
        for (int z = -3; z <= 3; ++z) inner.push_back(pt(x, y, z));
    double fac = std::pow(3.0, -1.5);
    for (int t = 0; t < 100; ++t) {
      FieldSample f = randomFieldBox(5, 500 + t);
      double n0 = phiNorm(f, inner, 3, 3, 0, np);
      double n1 = phiNorm(f, inner, 3, 3, 1, np);
      CHECK(n0 <= fac * n1 + 1e-12);
    }
  }
}

TEST_CASE("regulators: normalization, factorization, strong^2 <= weak") {
  Volume vol(3, 3, 1);
  NormParams np;
  Polymer X = makePolymer(0, {vol.blockId(0, {1, 1, 1})});

  FieldSample zero;
  for (int x = -4; x <= 4; ++x)
    for (int y = -4; y <= 4; ++y)
      for (int z = -4; z <= 4; ++z) zero.vals[pt(x, y, z)] = 0.0;

  SUBCASE("G(X, 0, 0) = 1 for both kinds") {
    CHECK(regulator(RegulatorKind::Strong, vol, X, zero, zero, np) == doctest::Approx(1.0));
    CHECK(regulator(RegulatorKind::Weak, vol, X, zero, zero, np) == doctest::Approx(1.0));
    CHECK(regulator(RegulatorKind::Unit, vol, X, zero, zero, np) == doctest::Approx(1.0));
  }
  SUBCASE("strong regulator factorizes over the two arguments") {
    FieldSample a = randomFieldBox(4, 11, 0.5), b = randomFieldBox(4, 12, 0.5);
    double joint = regulator(RegulatorKind::Strong, vol, X, a, b, np);
    double fa = regulator(RegulatorKind::Strong, vol, X, a, zero, np);
    double fb = regulator(RegulatorKind::Strong, vol, X, zero, b, np);
    CHECK(joint == doctest::Approx(fa * fb).epsilon(1e-11));
  }
  SUBCASE("G_s^2 <= G_weak on random pairs with default constants") {
    Polymer X2 = makePolymer(0, {vol.blockId(0, {1, 1, 1}), vol.blockId(0, {2, 1, 1})});
    for (int t = 0; t < 100; ++t) {
      FieldSample a = randomFieldBox(4, 900 + t, 0.3 * np.h);
      FieldSample b = randomFieldBox(4, 2900 + t, 0.3 * np.h);
      double gs = regulator(RegulatorKind::Strong, vol, X2, a, b, np);
      double gw = regulator(RegulatorKind::Weak, vol, X2, a, b, np);
      CHECK(gs * gs <= gw * (1 + 1e-10));
    }
  }
}

TEST_CASE("activity norms: certified bound and sampled estimate") {
  Volume vol(3, 3, 1);
  NormParams np;
  int B = vol.blockId(0, {1, 1, 1});
  Polymer X = makePolymer(0, {B});

  SUBCASE("isotropic potential: ||s||_j = 2 d sigma and the certified bound") {
    double sigma = 0.03;
    FieldPolynomial V = potentialVIso(vol, 0, B, 4);
    V.scale(sigma);
    // ||s||_j with s = sigma delta: 2 d sigma
    double sNorm = 2.0 * 3 * sigma;
    double upper = entryNormUpper(V, 3, 3, 0, np);
    CHECK(upper <= np.h * np.h * sNorm);
    CHECK(upper > 0.1 * np.h * np.h * sNorm);
  }
  SUBCASE("zero activity has zero norm, sampled <= certified") {
    FieldPolynomial Z(4);
    CHECK(entryNormUpper(Z, 3, 3, 0, np) == 0.0);
    CounterRng rng(5);
    for (int t = 0; t < 10; ++t) {
      FieldPolynomial P(4);
      auto sites = vol.blockSiteList(0, B);
      for (int k = 0; k < 5; ++k) {
        Mono m;
        int deg = 1 + int(rng.next() % 4);
        for (int i = 0; i < deg; ++i) m.push(GVar(sites[0], int(rng.next() % 3), false));
        P.add(m, 0.3 * rng.normal());
      }
      double up = entryNormUpper(P, 3, 3, 0, np);
      double lo = entryNormSampled(P, vol, X, 3, 3, 0, np, 40, 999 + t);
      CHECK(lo <= up * (1 + 1e-9));
    }
  }
}
