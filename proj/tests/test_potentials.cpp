#include <cmath>

#include "dgt/gaussian.hpp"
#include "dgt/norms.hpp"
#include "dgt/potentials.hpp"
#include "dgt/rg.hpp"
#include "doctest.h"

using namespace dgt;

TEST_CASE("sphere moments") {
  CHECK(sphereMomentEven({1, 0, 0}, 3) == doctest::Approx(1.0 / 3));      // E[p1^2]
  CHECK(sphereMomentEven({2, 0, 0}, 3) == doctest::Approx(3.0 / 15));     // E[p1^4]
  CHECK(sphereMomentEven({1, 1, 0}, 3) == doctest::Approx(1.0 / 15));     // E[p1^2 p2^2]
  CHECK(sphereMomentEven({1, 1}, 2) == doctest::Approx(1.0 / 8));         // d=2
  // normalization: sum over axes of E[p_mu^2] = 1
  double s = 0;
  for (int a = 0; a < 3; ++a) {
    std::vector<int> b(3, 0);
    b[size_t(a)] = 1;
    s += sphereMomentEven(b, 3);
  }
  CHECK(s == doctest::Approx(1.0));
}

TEST_CASE("W at zero coupling and its quadratic coefficient") {
  FieldPolynomial W0 = interactionW(pt(0, 0, 0), 0.0, 3, 4);
  CHECK(W0.constantTerm() == doctest::Approx(2.0));
  CHECK(W0.t.size() == 1);  // cos(0) integrates to 1, doubled

  double u = 1.3;
  FieldPolynomial W = interactionW(pt(0, 0, 0), u, 3, 4);
  CHECK(W.constantTerm() == doctest::Approx(2.0));
  // coefficient of (d_1 phi)^2 is -u^2 E[p_1^2] = -u^2/3
  Mono m;
  m.push(GVar(pt(0, 0, 0), 0, false));
  m.push(GVar(pt(0, 0, 0), 0, false));
  CHECK(W.t.at(m) == doctest::Approx(-u * u / 3.0).epsilon(1e-13));
}

TEST_CASE("W quadratic coefficient vs sphere-sampling oracle") {
  // MC average of 2 cos(u p.v) over the sphere, fitted for the v1^2 response.
  double u = 0.9;
  FieldPolynomial W = interactionW(pt(0, 0, 0), u, 3, 6);
  CounterRng rng(424242);
  long long n = 200000;
  double eps = 0.35;
  double acc = 0;
  for (long long i = 0; i < n; ++i) {
    double p1 = rng.normal(), p2 = rng.normal(), p3 = rng.normal();
    double r = std::sqrt(p1 * p1 + p2 * p2 + p3 * p3);
    p1 /= r;
    // second difference in v1 at v = 0 extracts the quadratic coefficient
    acc += 2.0 * (std::cos(u * p1 * eps) + std::cos(-u * p1 * eps) - 2.0) / (eps * eps);
  }
  double mcQuad = acc / (2.0 * n);  // coefficient of v1^2 (+ O(eps^2) bias)
  Mono m;
  m.push(GVar(pt(0, 0, 0), 0, false));
  m.push(GVar(pt(0, 0, 0), 0, false));
  CHECK(std::abs(W.t.at(m) - mcQuad) < 0.01 * std::abs(mcQuad) + 5e-4);
}

TEST_CASE("W norm bound: certified upper <= 2 exp(sqrt(d) h u)") {
  NormParams np;  // h = 8
  for (double u : {0.5, 1.0, 1.2}) {
    FieldPolynomial W = interactionW(pt(0, 0, 0), u, 3, 6);
    double upper = entryNormUpper(W, 3, 3, 0, np);
    CHECK(upper <= 2.0 * std::exp(std::sqrt(3.0) * np.h * u));
  }
}

TEST_CASE("exponential norm bound for e^{zW}") {
  NormParams np;
  double u = 1.0, z = 1e-6;
  FieldPolynomial W = interactionW(pt(0, 0, 0), u, 3, 4);
  W.scale(z);
  FieldPolynomial eW = W.expTrunc();
  double upper = entryNormUpper(eW, 3, 3, 0, np);
  CHECK(upper <= std::exp(2.0 * (z / 1e0) * std::exp(std::sqrt(3.0) * np.h * u)));
}

TEST_CASE("initial density: z = 0 vanishes; Mayer identity on a 2^d-site volume") {
  SUBCASE("z = 0") {
    Volume vol(2, 3, 1);
    InitialDensity den = initialDensity(0.0, 0.05, vol, 4, 2);
    CHECK(den.K0.entries.empty());
  }
  SUBCASE("product form equals the polymer sum at random fields (d=2)") {
    Volume vol(2, 3, 1);  // 9 blocks; use full support so the identity closes
    double z = 0.02, sigma0 = 0.04;
    InitialDensity den = initialDensity(z, sigma0, vol, 4, 9);

    double u = std::sqrt(1.0 + sigma0);
    for (int trial = 0; trial < 20; ++trial) {
      CounterRng rng(777 + uint64_t(trial));
      FieldSample phi;
      for (int x = -4; x <= 4; ++x)
        for (int y = -4; y <= 4; ++y) phi.vals[pt(x, y, 0)] = 0.6 * rng.normal();

      // lhs: polymer sum with I0 background
      double lhs = polymerSumNumeric(
          vol, 0, den.K0.entries,
          [&](int b) { return den.background(vol, b, 4).evaluate(phi); }, phi);
      // rhs: product over blocks of [I0(B) + (e^{W0}-1) e^{-V0}](phi),
      // everything in the same truncated algebra
      double rhs = 1.0;
      for (int b = 0; b < 9; ++b) {
        Interaction in = buildInteraction(z, u, sigma0, vol, b, 4);
        FieldPolynomial eW = in.W.expTrunc();
        eW.add(Mono{}, -1.0);
        double kB = eW.mul(in.I0).evaluate(phi);
        double iB = den.background(vol, b, 4).evaluate(phi);
        rhs *= iB + kB;
      }
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }
}

TEST_CASE("initial density norm scales linearly in z") {
  Volume vol(3, 3, 1);
  NormParams np;
  double n1, n2;
  {
    InitialDensity den = initialDensity(1e-4, 0.0, vol, 4, 1);
    n1 = den.K0.flowNormUpper(3, 3, np);
  }
  {
    InitialDensity den = initialDensity(2e-4, 0.0, vol, 4, 1);
    n2 = den.K0.flowNormUpper(3, 3, np);
  }
  CHECK(n2 / n1 == doctest::Approx(2.0).epsilon(1e-3));
}
