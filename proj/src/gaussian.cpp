#include "dgt/gaussian.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <thread>

#include "fftw_guard.hpp"

namespace dgt {

struct TorusSampler::Plans {
  fftw_plan fwd = nullptr, bwd = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lk(fftwPlannerMutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

GaussianMeasure GaussianMeasure::fromCovariance(
    const std::vector<Pt>& region, const std::function<double(const Pt&, const Pt&)>& cov,
    double tol, bool meanZero) {
  GaussianMeasure g;
  g.sites = region;
  g.meanZeroGauge = meanZero;
  int n = int(region.size());
  Eigen::MatrixXd C(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v = cov(region[size_t(i)], region[size_t(j)]);
      C(i, j) = v;
      C(j, i) = v;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.info() != Eigen::Success) throw std::runtime_error("GaussianMeasure: eigensolve failed");
  Eigen::VectorXd ev = es.eigenvalues();
  double scale = std::max(1.0, std::abs(ev(n - 1)));
  for (int i = 0; i < n; ++i) {
    if (ev(i) < -tol * scale)
      throw std::runtime_error("GaussianMeasure: covariance has negative spectral mass beyond tol");
    ev(i) = std::max(0.0, ev(i));
  }
  g.factor = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  return g;
}

GaussianMeasure GaussianMeasure::identityCovariance(const std::vector<Pt>& region) {
  GaussianMeasure g;
  g.sites = region;
  g.meanZeroGauge = false;
  g.factor = Eigen::MatrixXd::Identity(int(region.size()), int(region.size()));
  return g;
}

FieldSample GaussianMeasure::sample(CounterRng& rng) const {
  int n = int(sites.size());
  Eigen::VectorXd xi(n);
  for (int i = 0; i < n; ++i) xi(i) = rng.normal();
  Eigen::VectorXd phi = factor * xi;
  FieldSample f;
  f.vals.reserve(size_t(n) * 2);
  for (int i = 0; i < n; ++i) f.vals[sites[size_t(i)]] = phi(i);
  if (meanZeroGauge) f.setMeanZero();
  return f;
}

TorusSampler TorusSampler::build(const SymKernel& k, const std::vector<Pt>& region, double tol) {
  TorusSampler t;
  t.d = k.d();
  t.sites = region;
  int extent = 0;
  for (const Pt& p : region) extent = std::max(extent, linfNorm(p));
  int need = 2 * extent + 2 * k.supportRadius() + 3;
  int T = 8;
  while (T < need) T *= 2;
  t.T = T;

  size_t n = 1;
  for (int a = 0; a < t.d; ++a) n *= size_t(T);
  // wrapped kernel -> spectrum by DFT (real, even)
  std::vector<double> wrapped(n, 0.0);
  auto idx = [&](const Pt& p) {
    size_t r = 0;
    for (int a = t.d - 1; a >= 0; --a) r = r * size_t(T) + size_t(((p[a] % T) + T) % T);
    return r;
  };
  int R = k.supportRadius();
  Pt x{0, 0, 0};
  std::function<void(int)> rec = [&](int a) {
    if (a == t.d) {
      wrapped[idx(x)] += k.value(x);
      return;
    }
    for (x[a] = -R; x[a] <= R; ++x[a]) rec(a + 1);
    x[a] = 0;
  };
  rec(0);

  fftw_complex* buf = fftw_alloc_complex(n);
  t.plans = std::make_shared<Plans>();
  {
    std::lock_guard<std::mutex> lk(fftwPlannerMutex());
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (t.d == 1) {
      t.plans->fwd = fftw_plan_dft_1d(T, buf, buf, FFTW_FORWARD, flags);
      t.plans->bwd = fftw_plan_dft_1d(T, buf, buf, FFTW_BACKWARD, flags);
    } else if (t.d == 2) {
      t.plans->fwd = fftw_plan_dft_2d(T, T, buf, buf, FFTW_FORWARD, flags);
      t.plans->bwd = fftw_plan_dft_2d(T, T, buf, buf, FFTW_BACKWARD, flags);
    } else {
      t.plans->fwd = fftw_plan_dft_3d(T, T, T, buf, buf, FFTW_FORWARD, flags);
      t.plans->bwd = fftw_plan_dft_3d(T, T, T, buf, buf, FFTW_BACKWARD, flags);
    }
  }
  for (size_t i = 0; i < n; ++i) {
    buf[i][0] = wrapped[i];
    buf[i][1] = 0;
  }
  fftw_execute_dft(t.plans->fwd, buf, buf);

  t.spectrumSqrt.resize(n);
  double scale = 0;
  for (size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(buf[i][0]));
  for (size_t i = 0; i < n; ++i) {
    double v = buf[i][0];
    if (v < -tol * std::max(1.0, scale)) {
      fftw_free(buf);
      throw std::runtime_error("TorusSampler: negative spectral mass beyond tol");
    }
    t.negClamped = std::min(t.negClamped, v);
    t.spectrumSqrt[i] = std::sqrt(std::max(0.0, v));
  }
  fftw_free(buf);
  return t;
}

FieldSample TorusSampler::sample(CounterRng& rng) const {
  size_t n = 1;
  for (int a = 0; a < d; ++a) n *= size_t(T);
  std::vector<std::complex<double>> buf(n);
  for (size_t i = 0; i < n; ++i) buf[i] = {rng.normal(), 0.0};
  auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(plans->fwd, raw, raw);
  for (size_t i = 0; i < n; ++i) buf[i] *= spectrumSqrt[i];
  fftw_execute_dft(plans->bwd, raw, raw);
  double norm = 1.0 / double(n);
  auto idx = [&](const Pt& p) {
    size_t r = 0;
    for (int a = d - 1; a >= 0; --a) r = r * size_t(T) + size_t(((p[a] % T) + T) % T);
    return r;
  };
  FieldSample f;
  f.vals.reserve(sites.size() * 2);
  for (const Pt& p : sites) f.vals[p] = buf[idx(p)].real() * norm;
  f.setMeanZero();
  return f;
}

McEstimate mcExpectation(const std::function<double(const FieldSample&)>& F, const Sampler& m,
                         long long n, uint64_t seed, int threads) {
  if (n <= 0) throw std::invalid_argument("mcExpectation: n must be positive");
  threads = std::max(1, std::min(threads, 8));
  std::vector<double> sums(size_t(threads), 0.0), sums2(size_t(threads), 0.0);
  std::vector<long long> bad(size_t(threads), -1);

  auto work = [&](int tIdx) {
    double s = 0, s2 = 0;
    for (long long i = tIdx; i < n; i += threads) {
      CounterRng rng = CounterRng::forSample(seed, uint64_t(i));
      FieldSample f = m.sample(rng);
      double v = F(f);
      if (!std::isfinite(v)) {
        bad[size_t(tIdx)] = i;
        return;
      }
      s += v;
      s2 += v * v;
    }
    sums[size_t(tIdx)] = s;
    sums2[size_t(tIdx)] = s2;
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (int t = 0; t < threads; ++t)
    if (bad[size_t(t)] >= 0)
      throw std::runtime_error("mcExpectation: non-finite value at sample index " +
                               std::to_string(bad[size_t(t)]));
  double s = 0, s2 = 0;
  for (int t = 0; t < threads; ++t) {
    s += sums[size_t(t)];
    s2 += sums2[size_t(t)];
  }
  McEstimate e;
  e.n = n;
  e.seed = seed;
  e.mean = s / double(n);
  double var = std::max(0.0, s2 / double(n) - e.mean * e.mean);
  e.stderrOfMean = std::sqrt(var / double(n));
  return e;
}

double quadraticPartition(const Eigen::MatrixXd& T, double sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  if (es.info() != Eigen::Success) throw std::runtime_error("quadraticPartition: eigensolve failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  double opNorm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  if (std::abs(sigma) * opNorm >= 1.0 + 1e-12)
    throw std::invalid_argument("quadraticPartition: |sigma| ||T|| < 1 required");
  double s = 0;
  for (int i = 0; i < ev.size(); ++i) {
    double t = 1.0 + sigma * ev(i);
    if (t <= 0) throw std::runtime_error("quadraticPartition: 1 + sigma*eig <= 0");
    s += std::log(t);
  }
  return -0.5 * s;
}

}  // namespace dgt
