#include <cmath>

#include "dgt/gaussian.hpp"
#include "dgt/rg.hpp"
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

// (d_a phi(x) - d_a phi(y))^2: quadratic whose coordinate pairing vanishes at
// float exactness, so the quadratic extraction stays identically zero.
FieldPolynomial gradDiffSquared(const Pt& x, const Pt& y, int axis, double c, int cap) {
  FieldPolynomial diff = gradVarPoly(x, axis + 1, false, cap);
  diff.addScaled(gradVarPoly(y, axis + 1, false, cap), -1.0);
  FieldPolynomial q = diff.mul(diff);
  q.scale(c);
  return q;
}

const CovDecomposition& dec33() {
  static CovDecomposition dec = buildDecomposition({3, 3, 3, 1e-10, 32});
  return dec;
}

}  // namespace

TEST_CASE("extraction: constants and the zero-sum condition") {
  Volume vol(3, 3, 1);
  RGParams par;
  par.degCap = 4;

  SUBCASE("K == c on single blocks gives beta = -c") {
    PolymerActivity K;
    K.scale = 0;
    K.degCap = 4;
    for (int b = 0; b < 27; ++b) K.add(makePolymer(0, {b}), FieldPolynomial::constant(0.25, 4));
    ExtractionResult ex = extract(K, dec33(), vol, par);
    for (int b = 0; b < 27; ++b) CHECK(ex.beta.at(b) == doctest::Approx(-0.25).epsilon(1e-14));
    CHECK(ex.alphaScalar == doctest::Approx(0.0));
  }
  SUBCASE("K == 0 gives empty extraction") {
    PolymerActivity K;
    K.scale = 0;
    K.degCap = 4;
    ExtractionResult ex = extract(K, dec33(), vol, par);
    CHECK(ex.beta.empty());
    CHECK(ex.alphaScalar == 0.0);
    CHECK(ex.J.empty());
  }
  SUBCASE("zero-sum of J holds coefficient-wise") {
    PolymerActivity K;
    K.scale = 0;
    K.degCap = 4;
    Polymer pair = makePolymer(0, {0, 1});
    auto sites0 = vol.blockSiteList(0, 0);
    FieldPolynomial v = gradVarPoly(sites0[0], 1, false, 4);
    K.add(pair, v.mul(v));
    ExtractionResult ex = extract(K, dec33(), vol, par);
    for (int B : pair.blocks) {
      FieldPolynomial sum(4);
      for (auto& [key, P] : ex.J)
        if (key.first == B) sum += P;
      CHECK(sum.l1Norm() < 1e-15);
    }
  }
}

TEST_CASE("extraction: interior alpha matrix has the symmetric pattern") {
  Volume vol(3, 3, 1);
  RGParams par;
  par.degCap = 4;
  PolymerActivity K;
  K.scale = 0;
  K.degCap = 4;
  double c = 0.37;
  for (int b = 0; b < 27; ++b) {
    FieldPolynomial P = potentialVIso(vol, 0, b, 4);
    P.scale(c);
    K.add(makePolymer(0, {b}), std::move(P));
  }
  ExtractionResult ex = extract(K, dec33(), vol, par);
  int d = 3, twoD = 6;
  double alpha = ex.alphaScalar;
  CHECK(alpha != 0.0);
  for (auto& [B, am] : ex.alphaMatrix) {
    for (int mu = -d; mu <= d; ++mu) {
      if (mu == 0) continue;
      for (int nu = -d; nu <= d; ++nu) {
        if (nu == 0) continue;
        double expect = 0;
        if (mu == nu) expect += alpha / 2;
        if (mu == -nu) expect += -alpha / 2;
        double got = am[size_t(sdirIndex(mu, d) * twoD + sdirIndex(nu, d))];
        CHECK(std::abs(got - expect) < 1e-12);
      }
    }
  }
}

TEST_CASE("rg step with K = 0: sigma preserved, energies are pure trace terms") {
  Volume vol(3, 3, 1);
  RGParams par;
  par.degCap = 4;
  par.supportCap = 2;
  par.coeffThreshold = 1e-14;
  RGState s;
  s.j = 0;
  s.sigma = 0.05;
  s.K.scale = 0;
  s.K.degCap = 4;

  StepDiagnostics diag;
  RGState s1 = rgStep(s, dec33(), vol, par, &diag);
  CHECK(s1.sigma == doctest::Approx(0.05).epsilon(1e-14));  // alpha(0) = 0
  const SymKernel& g1 = dec33().gammaKernel(1);
  double trace = 0;
  for (int a = 1; a <= 3; ++a) trace += g1.value(pt(0, 0, 0)) - g1.value(unitVec(a));
  trace *= 0.05;  // per site
  REQUIRE(s1.energies.size() == 1);
  for (auto& [b, e] : s1.energies[0])
    CHECK(e == doctest::Approx(trace * 27).epsilon(1e-12));
  // regenerated activity is second order in sigma: halving sigma cuts the
  // entry values by about four
  RGState sHalf = s;
  sHalf.sigma = 0.025;
  RGState s1h = rgStep(sHalf, dec33(), vol, par, nullptr);
  const Polymer whole = makePolymer(1, {0});
  const FieldPolynomial* p1 = s1.K.find(whole);
  const FieldPolynomial* p2 = s1h.K.find(whole);
  REQUIRE(p1 != nullptr);
  REQUIRE(p2 != nullptr);
  CounterRng rng(606);
  FieldSample f;
  for (int x = -3; x <= 3; ++x)
    for (int y = -3; y <= 3; ++y)
      for (int z = -3; z <= 3; ++z) f.vals[pt(x, y, z)] = 0.4 * rng.normal();
  double v1 = p1->evaluate(f), v2 = p2->evaluate(f);
  CHECK(std::abs(v1) < 1.0);
  double ratio = v1 / v2;
  CHECK(ratio > 2.4);
  CHECK(ratio < 6.5);
}

TEST_CASE("one-step identity: fluctuation of (I o K) equals the reassembled form") {
  // sigma = 0 and second-gradient quadratic entries: the quadratic extraction
  // is float-zero, every product stays inside the degree cap, and all sums
  // close, so both sides must agree to rounding.
  Volume vol(3, 3, 1);
  const CovDecomposition& dec = dec33();
  RGParams par;
  par.degCap = 8;
  par.supportCap = 3;
  par.coeffThreshold = 0.0;

  int b1 = vol.blockId(0, {0, 0, 0});
  int b2 = vol.blockId(0, {2, 2, 1});
  int b3 = vol.blockId(0, {2, 2, 2});
  Pt s1 = vol.blockSiteList(0, b1)[0];
  Pt s2 = vol.blockSiteList(0, b2)[0];
  Pt s3 = vol.blockSiteList(0, b3)[0];

  RGState st;
  st.j = 0;
  st.sigma = 0.0;
  st.K.scale = 0;
  st.K.degCap = 8;
  st.K.add(makePolymer(0, {b1}), gradDiffSquared(s1, s1 + pt(0, 0, 1), 0, 0.8, 8));
  {
    FieldPolynomial q = gradDiffSquared(s2, s3, 1, -0.6, 8);
    q += gradDiffSquared(s2, s3, 2, 0.45, 8);
    st.K.add(makePolymer(0, {b2, b3}), std::move(q));
  }

  StepDiagnostics diag;
  RGState out = rgStep(st, dec, vol, par, &diag);
  CHECK(std::abs(out.sigma) < 1e-15);  // engineered alpha = 0
  CHECK(diag.chainDroppedMass == 0.0);

  REQUIRE(out.energies.size() == 1);
  double Esum = 0;
  for (auto& [b, e] : out.energies[0]) Esum += e;
  CHECK(Esum != 0.0);

  const SymKernel& gamma = dec.gammaKernel(1);
  Polymer whole = makePolymer(1, {0});
  const FieldPolynomial* Kp = out.K.find(whole);
  REQUIRE(Kp != nullptr);

  for (int trial = 0; trial < 20; ++trial) {
    FieldSample phiP = randomFieldBox(4, 1000 + trial, 0.7);
    double lhs = polymerSumWickUnitBg(vol, 0, st.K.entries, phiP, gamma);
    // rhs = e^{-sum E+} [ I'(0, sigma+)(Lambda) + K+(Lambda) ], with
    // I'(0, sigma+) = prod_B expTrunc(-sigma+ V(B)).
    double iProd = 1.0;
    for (int b = 0; b < 27; ++b) {
      FieldPolynomial mV = potentialVIso(vol, 0, b, 8);
      mV.scale(-out.sigma);
      iProd *= mV.expTrunc().evaluate(phiP);
    }
    // the step satisfies mu*(I o K) = e^{-sum E+} (I'(0, sigma+) o K+)
    double rhs = std::exp(-Esum) * (iProd + Kp->evaluate(phiP));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("linear maps: support rules") {
  Volume vol(3, 3, 2);
  RGParams par;
  par.degCap = 4;
  const CovDecomposition& dec = dec33();

  SUBCASE("L1 of a small-set activity vanishes") {
    PolymerActivity K;
    K.scale = 0;
    K.degCap = 4;
    K.add(makePolymer(0, {0}), FieldPolynomial::constant(1.0, 4));
    PolymerActivity img = linearMap(K, dec, vol, par, LinMapId::L1);
    CHECK(img.entries.empty());
  }
  SUBCASE("L2 annihilates degree <= 2 activities") {
    PolymerActivity K;
    K.scale = 0;
    K.degCap = 4;
    auto sites = vol.blockSiteList(0, 40);
    FieldPolynomial v = gradVarPoly(sites[0], 1, false, 4);
    FieldPolynomial q = v.mul(v);
    q.add(Mono{}, 0.3);
    K.add(makePolymer(0, {40}), std::move(q));
    PolymerActivity img = linearMap(K, dec, vol, par, LinMapId::L2);
    double tot = 0;
    for (auto& [U, P] : img.entries) tot += P.l1Norm();
    CHECK(tot < 1e-14);
  }
  SUBCASE("Delta vanishes away from the boundary") {
    PolymerActivity K;
    K.scale = 0;
    K.degCap = 4;
    for (int b = 0; b < vol.numBlocks(0); ++b) {
      FieldPolynomial P = potentialVIso(vol, 0, b, 4);
      P.scale(0.1);
      K.add(makePolymer(0, {b}), std::move(P));
    }
    PolymerActivity img = linearMap(K, dec, vol, par, LinMapId::Delta);
    for (auto& [U, P] : img.entries) {
      if (P.l1Norm() < 1e-13) continue;
      CHECK_FALSE(awayFromBoundary(vol, U));
    }
  }
}

TEST_CASE("interior entries are independent of the volume (d=2)") {
  // One step from a translation-invariant state in two volumes; an interior
  // next-scale singleton entry must coincide coefficient-wise under the
  // translation identifying the two volumes.
  const CovDecomposition dec2 = buildDecomposition({2, 3, 3, 1e-10, 32});
  RGParams par;
  par.degCap = 4;
  par.supportCap = 2;
  par.coeffThreshold = 0.0;

  auto runStep = [&](int N) {
    Volume vol(2, 3, N);
    RGState s;
    s.j = 0;
    s.sigma = 0.02;
    s.K.scale = 0;
    s.K.degCap = 4;
    for (int b = 0; b < vol.numBlocks(0); ++b) {
      auto sites = vol.blockSiteList(0, b);
      FieldPolynomial v1 = gradVarPoly(sites[0], 1, false, 4);
      FieldPolynomial v2 = gradVarPoly(sites[0], 2, false, 4);
      FieldPolynomial P = v1.mul(v1).mul(v2).mul(v2);
      P.scale(0.01);
      P.addScaled(v1.mul(v1), 0.005);
      P.addScaled(v2.mul(v2), 0.005);
      s.K.add(makePolymer(0, {b}), std::move(P));
    }
    return rgStep(s, dec2, vol, par, nullptr);
  };

  RGState a = runStep(2);
  RGState b = runStep(3);
  // Both volumes are origin-centered, so the central next-scale block carries
  // the same sites in both; its entries must agree exactly.
  Volume volA(2, 3, 2), volB(2, 3, 3);
  Polymer centerA = makePolymer(1, {volA.blockId(1, {1, 1, 0})});
  Polymer centerB = makePolymer(1, {volB.blockId(1, {4, 4, 0})});
  const FieldPolynomial* pa = a.K.find(centerA);
  const FieldPolynomial* pb = b.K.find(centerB);
  REQUIRE(pa != nullptr);
  REQUIRE(pb != nullptr);
  REQUIRE(pa->t.size() == pb->t.size());
  for (auto& [m, c] : pa->t) {
    auto it = pb->t.find(m);
    REQUIRE(it != pb->t.end());
    CHECK(c == doctest::Approx(it->second).epsilon(1e-12));
  }
  // extracted central energies agree as well
  int ea = volA.blockId(1, {1, 1, 0});
  int eb = volB.blockId(1, {4, 4, 0});
  CHECK(a.energies[0].at(ea) == doctest::Approx(b.energies[0].at(eb)).epsilon(1e-12));
}

TEST_CASE("symmetry propagation: rotating the volume commutes with the step (d=2)") {
  const CovDecomposition dec2 = buildDecomposition({2, 3, 2, 1e-10, 32});
  Volume vol(2, 3, 2);
  RGParams par;
  par.degCap = 4;
  par.supportCap = 2;

  // rotation by 90 degrees about the origin maps the centered volume to
  // itself: site (x, y) -> (-y, x)
  auto rotSite = [](const Pt& p) { return pt(-p[1], p[0], 0); };
  // gradient variables transform with a backward shift on the rotated axis:
  // d_1 phi(x) -> d_2 phi(R x), d_2 phi(x) -> -d_1 phi(R x - e_1)
  auto rotPoly = [&](const FieldPolynomial& P) {
    return P.substituteLinear([&](GVar g) -> std::vector<std::pair<GVar, double>> {
      Pt rx = rotSite(g.site());
      if (g.axis() == 0) return {{GVar(rx, 1, g.isZeta()), 1.0}};
      Pt shifted = rx;
      --shifted[0];
      return {{GVar(shifted, 0, g.isZeta()), -1.0}};
    });
  };

  RGState s;
  s.j = 0;
  s.sigma = 0.01;
  s.K.scale = 0;
  s.K.degCap = 4;
  CounterRng rng(313);
  for (int b = 0; b < vol.numBlocks(0); ++b) {
    auto sites = vol.blockSiteList(0, b);
    FieldPolynomial v1 = gradVarPoly(sites[0], 1, false, 4);
    FieldPolynomial v2 = gradVarPoly(sites[0], 2, false, 4);
    FieldPolynomial P = v1.mul(v1);
    P.addScaled(v2.mul(v2), 1.0);
    P = P.mul(P);
    P.scale(0.004);
    s.K.add(makePolymer(0, {b}), std::move(P));
  }
  // rotated initial state
  RGState sr = s;
  sr.K.entries.clear();
  for (auto& [X, P] : s.K.entries) {
    std::vector<int> rb;
    for (int bId : X.blocks) {
      auto c = vol.blockCoords(0, bId);
      // rotate block through its site set: block coords (bx, by) -> (8-by, bx)
      rb.push_back(vol.blockId(0, {vol.blocksPerAxis(0) - 1 - c[1], c[0], 0}));
    }
    sr.K.add(makePolymer(0, rb), rotPoly(P));
  }

  RGState out = rgStep(s, dec2, vol, par, nullptr);
  RGState outR = rgStep(sr, dec2, vol, par, nullptr);

  // compare a next-scale entry against the rotated image of its preimage
  for (auto& [U, P] : out.K.entries) {
    std::vector<int> rb;
    for (int bId : U.blocks) {
      auto c = vol.blockCoords(1, bId);
      rb.push_back(vol.blockId(1, {vol.blocksPerAxis(1) - 1 - c[1], c[0], 0}));
    }
    const FieldPolynomial* q = outR.K.find(makePolymer(1, rb));
    REQUIRE(q != nullptr);
    FieldPolynomial rp = rotPoly(P);
    double diff = 0;
    FieldPolynomial dd = rp;
    dd.addScaled(*q, -1.0);
    diff = dd.l1Norm();
    CHECK(diff < 1e-12 * std::max(1.0, rp.l1Norm()));
  }
}
