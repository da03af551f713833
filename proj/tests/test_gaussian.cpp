#include <cmath>

#include "dgt/decomposition.hpp"
#include "dgt/gaussian.hpp"
#include "doctest.h"

using namespace dgt;

namespace {
std::vector<Pt> boxSites(int r, int d = 3) {
  std::vector<Pt> out;
  for (int x = -r; x <= r; ++x)
    for (int y = d >= 2 ? -r : 0; y <= (d >= 2 ? r : 0); ++y)
      for (int z = d >= 3 ? -r : 0; z <= (d >= 3 ? r : 0); ++z) out.push_back(pt(x, y, z));
  return out;
}
}  // namespace

TEST_CASE("white noise: component variances near 1") {
  auto region = boxSites(1);
  GaussianMeasure m = GaussianMeasure::identityCovariance(region);
  long long n = 20000;
  auto est = mcExpectation([&](const FieldSample& f) { return f.at(pt(0, 0, 0)) * f.at(pt(0, 0, 0)); },
                           m, n, 42);
  CHECK(std::abs(est.mean - 1.0) < 5.0 / std::sqrt(double(n)));
}

TEST_CASE("mc is deterministic for a fixed seed and errors on non-finite values") {
  auto region = boxSites(1);
  GaussianMeasure m = GaussianMeasure::identityCovariance(region);
  auto f1 = mcExpectation([](const FieldSample& f) { return f.at(pt(0, 0, 0)); }, m, 500, 9, 2);
  auto f2 = mcExpectation([](const FieldSample& f) { return f.at(pt(0, 0, 0)); }, m, 500, 9, 1);
  CHECK(f1.mean == doctest::Approx(f2.mean).epsilon(1e-15));
  CHECK_THROWS_WITH_AS(
      mcExpectation([](const FieldSample&) { return std::nan(""); }, m, 10, 1),
      doctest::Contains("sample index"), std::runtime_error);
  auto c = mcExpectation([](const FieldSample&) { return 1.0; }, m, 100, 5);
  CHECK(c.mean == doctest::Approx(1.0));
  CHECK(c.stderrOfMean == doctest::Approx(0.0));
}

TEST_CASE("sampler reproduces a decomposition kernel covariance") {
  CovDecomposition dec = buildDecomposition({3, 3, 2, 1e-10, 32});
  const SymKernel& g1 = dec.gammaKernel(2);
  auto region = boxSites(2);

  SUBCASE("dense factorization") {
    GaussianMeasure m = GaussianMeasure::fromCovariance(
        region, [&](const Pt& a, const Pt& b) { return g1.value(a - b); }, 1e-9,
        /*meanZero=*/false);
    long long n = 40000;
    Pt x = pt(1, 1, 0);
    auto est = mcExpectation(
        [&](const FieldSample& f) { return f.at(pt(0, 0, 0)) * f.at(x); }, m, n, 11);
    CHECK(std::abs(est.mean - g1.value(x)) < 5 * est.stderrOfMean + 1e-12);
  }
  SUBCASE("torus sampler: gradient covariance (gauge-free)") {
    TorusSampler t = TorusSampler::build(g1, region);
    long long n = 40000;
    auto est = mcExpectation(
        [&](const FieldSample& f) { return f.grad(pt(0, 0, 0), 0) * f.grad(pt(1, 0, 0), 1); }, t, n,
        13);
    double expect = g1.gradGrad(pt(-1, 0, 0), 1, 2);
    CHECK(std::abs(est.mean - expect) < 5 * est.stderrOfMean + 1e-12);
  }
}

TEST_CASE("sum of independent draws has the summed covariance (characteristic function)") {
  CovDecomposition dec = buildDecomposition({3, 3, 2, 1e-10, 32});
  const SymKernel& a = dec.gammaKernel(1);
  const SymKernel& b = dec.gammaKernel(2);
  auto region = boxSites(1);
  GaussianMeasure ma = GaussianMeasure::fromCovariance(
      region, [&](const Pt& x, const Pt& y) { return a.value(x - y); }, 1e-9, false);
  GaussianMeasure mb = GaussianMeasure::fromCovariance(
      region, [&](const Pt& x, const Pt& y) { return b.value(x - y); }, 1e-9, false);

  // f = a few test vectors; E[e^{i phi(f)}] = exp(-(f,(A+B)f)/2).
  std::vector<std::unordered_map<Pt, double, PtHash>> tests;
  CounterRng rng(77);
  for (int t = 0; t < 3; ++t) {
    std::unordered_map<Pt, double, PtHash> f;
    for (const Pt& p : region) f[p] = 0.5 * rng.normal();
    tests.push_back(f);
  }
  for (auto& fv : tests) {
    double quad = 0;
    for (const Pt& x : region)
      for (const Pt& y : region) quad += fv[x] * (a.value(x - y) + b.value(x - y)) * fv[y];
    double target = std::exp(-0.5 * quad);
    long long n = 40000;
    // cos is enough: the imaginary part vanishes by symmetry
    double sum = 0, sum2 = 0;
    for (long long i = 0; i < n; ++i) {
      CounterRng r1 = CounterRng::forSample(101, uint64_t(i));
      CounterRng r2 = CounterRng::forSample(202, uint64_t(i));
      FieldSample s1 = ma.sample(r1), s2 = mb.sample(r2);
      double phase = 0;
      for (const Pt& p : region) phase += (s1.at(p) + s2.at(p)) * fv[p];
      double v = std::cos(phase);
      sum += v;
      sum2 += v * v;
    }
    double mean = sum / n;
    double se = std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - target) < 5 * se + 1e-12);
  }
}

TEST_CASE("quadratic partition: closed forms and the series") {
  SUBCASE("sigma = 0") {
    Eigen::MatrixXd T = Eigen::MatrixXd::Identity(4, 4);
    CHECK(quadraticPartition(T, 0.0) == doctest::Approx(0.0));
  }
  SUBCASE("2x2 with eigenvalues 1 and 1/2") {
    Eigen::MatrixXd T(2, 2);
    T << 0.75, 0.25, 0.25, 0.75;
    double lz = quadraticPartition(T, 0.5);
    CHECK(lz == doctest::Approx(-0.5 * (std::log(1.5) + std::log(1.25))).epsilon(1e-12));
  }
  SUBCASE("series with tr(T^n) matches to 1e-8 at |sigma| = 0.3") {
    Eigen::MatrixXd T(3, 3);
    T << 0.9, 0.1, 0.0, 0.1, 0.7, 0.05, 0.0, 0.05, 0.5;
    double sigma = 0.3;
    double lz = quadraticPartition(T, sigma);
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(3, 3);
    double series = 0;
    for (int n = 1; n <= 40; ++n) {
      P = P * T;
      series += 0.5 * std::pow(-sigma, n) / n * P.trace();
    }
    CHECK(std::abs(lz - series) <= 1e-8 * std::abs(lz));
  }
  SUBCASE("outside the regime") {
    Eigen::MatrixXd T = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS(quadraticPartition(T, -1.5));
  }
}

TEST_CASE("wick integration vs MC on random degree-4 polynomials") {
  CovDecomposition dec = buildDecomposition({3, 3, 1, 1e-10, 32});
  const SymKernel& g1 = dec.gammaKernel(1);
  auto region = boxSites(2);
  TorusSampler t = TorusSampler::build(g1, region);

  CounterRng rng(31337);
  for (int trial = 0; trial < 3; ++trial) {
    FieldPolynomial P(4);
    for (int k = 0; k < 6; ++k) {
      Mono m;
      int deg = 2 + 2 * (rng.next() % 2);
      for (int i = 0; i < deg; ++i) {
        Pt x = pt(int(rng.next() % 3) - 1, int(rng.next() % 3) - 1, int(rng.next() % 3) - 1);
        m.push(GVar(x, int(rng.next() % 3), true));
      }
      P.add(m, rng.normal());
    }
    double exact = wickIntegrate(P, g1).constantTerm();
    long long n = 30000;
    auto est = mcExpectation([&](const FieldSample& f) { return P.evaluate(f, &f); }, t, n, 999 + trial);
    CHECK(std::abs(est.mean - exact) < 5 * est.stderrOfMean + 1e-10);
  }
}

TEST_CASE("convolution identity: wick by Gamma then by tail = wick by the sum") {
  // On polynomials, integrating zeta with cov Gamma_2 after cov Gamma_1
  // equals integrating once with Gamma_1 + Gamma_2 (coefficient-wise).
  CovDecomposition dec = buildDecomposition({3, 3, 2, 1e-10, 32});
  const SymKernel& a = dec.gammaKernel(1);
  const SymKernel& b = dec.gammaKernel(2);
  struct SumCov final : GradCov {
    const SymKernel *a, *b;
    double cov(const Pt& x, int ax, const Pt& y, int bx) const override {
      return a->gradGrad(x - y, ax + 1, bx + 1) + b->gradGrad(x - y, ax + 1, bx + 1);
    }
  } sum;
  sum.a = &a;
  sum.b = &b;

  CounterRng rng(5);
  FieldPolynomial P(4);
  for (int k = 0; k < 5; ++k) {
    Mono m;
    for (int i = 0; i < 4; ++i)
      m.push(GVar(pt(int(rng.next() % 3), int(rng.next() % 3), 0), int(rng.next() % 3), true));
    P.add(m, rng.normal());
  }
  // Integrate zeta in two stages: phi + zeta split, integrate zeta by a,
  // then rename phi -> zeta and integrate by b.
  FieldPolynomial stage1 = P.substituteLinear([&](GVar g) {
    // zeta -> zeta' (tag true, integrated now by a) + phi placeholder (tag false)
    return std::vector<std::pair<GVar, double>>{{g.withTag(true), 1.0}, {g.withTag(false), 1.0}};
  });
  KernelGradCov covA(a), covB(b);
  FieldPolynomial afterA = stage1.wickZeta(covA);
  FieldPolynomial renamed = afterA.substituteLinear([&](GVar g) {
    return std::vector<std::pair<GVar, double>>{{g.withTag(true), 1.0}};
  });
  FieldPolynomial afterB = renamed.wickZeta(covB);
  double direct = P.wickZeta(sum).constantTerm();
  CHECK(afterB.constantTerm() == doctest::Approx(direct).epsilon(1e-11));
}
