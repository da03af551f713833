#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "dgt/kernel.hpp"
#include "dgt/poly.hpp"

namespace dgt {

// Counter-based stream: every sample index gets its own generator state, so
// estimates are reproducible under any parallel fan-out.
struct CounterRng {
  uint64_t s;
  bool haveSpare = false;
  double spare = 0;

  explicit CounterRng(uint64_t seed) : s(seed) {}
  static CounterRng forSample(uint64_t seed, uint64_t idx) {
    uint64_t x = seed ^ (0x9E3779B97F4A7C15ull * (idx + 1));
    CounterRng r(x);
    r.next();
    return r;
  }
  uint64_t next() {
    s += 0x9E3779B97F4A7C15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return (next() >> 11) * 0x1.0p-53 + 0x1.0p-54; }
  double normal() {
    if (haveSpare) {
      haveSpare = false;
      return spare;
    }
    double u = uniform(), v = uniform();
    double r = std::sqrt(-2.0 * std::log(u));
    spare = r * std::sin(2.0 * M_PI * v);
    haveSpare = true;
    return r * std::cos(2.0 * M_PI * v);
  }
};

struct McEstimate {
  double mean = 0;
  double stderrOfMean = 0;
  long long n = 0;
  uint64_t seed = 0;
};

struct Sampler {
  virtual ~Sampler() = default;
  virtual FieldSample sample(CounterRng& rng) const = 0;
  virtual const std::vector<Pt>& region() const = 0;
};

// Dense square-root factorization of a (possibly semi-definite) covariance
// on a finite region. Eigenvalues in (-tol, 0) are clamped to zero; more
// negative spectrum is an error. Samples are gauge-fixed to region mean 0
// when meanZeroGauge is set.
struct GaussianMeasure final : Sampler {
  std::vector<Pt> sites;
  Eigen::MatrixXd factor;  // cov = factor * factor^T
  bool meanZeroGauge = true;

  static GaussianMeasure fromCovariance(
      const std::vector<Pt>& region,
      const std::function<double(const Pt&, const Pt&)>& cov, double tol = 1e-9,
      bool meanZero = true);
  static GaussianMeasure identityCovariance(const std::vector<Pt>& region);

  FieldSample sample(CounterRng& rng) const override;
  const std::vector<Pt>& region() const override { return sites; }
};

// Spectral sampler on an embedding torus for a finite-range translation
// invariant kernel; exact for regions separated from self-wraps, i.e. torus
// side >= region extent + support diameter. Plans are created once; sampling
// uses thread-safe plan execution on per-call buffers.
struct TorusSampler final : Sampler {
  int d = 3;
  int T = 0;
  std::vector<Pt> sites;
  std::vector<double> spectrumSqrt;  // size T^d
  double negClamped = 0;             // most negative spectral value clamped
  struct Plans;
  std::shared_ptr<Plans> plans;

  static TorusSampler build(const SymKernel& k, const std::vector<Pt>& region, double tol = 1e-9);
  FieldSample sample(CounterRng& rng) const override;
  const std::vector<Pt>& region() const override { return sites; }
};

// mean/stderr of F over n independent draws; deterministic for fixed seed.
McEstimate mcExpectation(const std::function<double(const FieldSample&)>& F, const Sampler& m,
                         long long n, uint64_t seed, int threads = 2);

// log Z'' = -(1/2) log det(1 + sigma T) via symmetric eigendecomposition.
double quadraticPartition(const Eigen::MatrixXd& T, double sigma);

// Integrate the zeta variables of P exactly by Wick pairing with the
// gradient covariance of gamma.
inline FieldPolynomial wickIntegrate(const FieldPolynomial& P, const SymKernel& gamma) {
  KernelGradCov cov(gamma);
  return P.wickZeta(cov);
}

}  // namespace dgt
