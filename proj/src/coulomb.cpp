#include "dgt/coulomb.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>

#include "fftw_guard.hpp"

namespace dgt {

namespace {

// Midpoint-grid sum over the positive octant of [-pi,pi]^d with M cells per
// axis (M even): positive |p| values are (i + 1/2) * 2pi/M, octant weight 2^d.
// f is called with the vector of per-axis cosine-table indices.
template <class F>
void octantLoop(int d, int M, F&& f) {
  std::vector<int> idx(d, 0);
  int half = M / 2;
  while (true) {
    f(idx);
    int a = 0;
    for (; a < d; ++a) {
      if (++idx[a] < half) break;
      idx[a] = 0;
    }
    if (a == d) break;
  }
}

// (2pi)^-d * cell * sum over grid of 1/lambda  ==  M^-d * sum.
double c0MidpointSum(int d, int M) {
  int half = M / 2;
  double h = 2.0 * M_PI / M;
  std::vector<double> oneMinusCos(half);
  for (int i = 0; i < half; ++i) oneMinusCos[i] = 1.0 - std::cos((i + 0.5) * h);
  double sum = 0;
  octantLoop(d, M, [&](const std::vector<int>& idx) {
    double lam = 0;
    for (int a = 0; a < d; ++a) lam += oneMinusCos[idx[a]];
    lam *= 2.0;
    sum += 1.0 / lam;
  });
  double cell = std::pow(2.0, d) / std::pow(double(M), d);
  return sum * cell;
}

// Same grid, integrand (1 - prod_a cos(p_a x_a)) / lambda (the octant
// symmetrization of (1 - cos p.x) / lambda).
double subtractedMidpointSum(const std::vector<int>& x, int d, int M) {
  int half = M / 2;
  double h = 2.0 * M_PI / M;
  std::vector<double> oneMinusCos(half);
  for (int i = 0; i < half; ++i) oneMinusCos[i] = 1.0 - std::cos((i + 0.5) * h);
  std::vector<std::vector<double>> ct(d, std::vector<double>(half));
  for (int a = 0; a < d; ++a)
    for (int i = 0; i < half; ++i) ct[a][i] = std::cos((i + 0.5) * h * x[a]);
  double sum = 0;
  octantLoop(d, M, [&](const std::vector<int>& idx) {
    double lam = 0, c = 1;
    for (int a = 0; a < d; ++a) {
      lam += oneMinusCos[idx[a]];
      c *= ct[a][idx[a]];
    }
    lam *= 2.0;
    sum += (1.0 - c) / lam;
  });
  double cell = std::pow(2.0, d) / std::pow(double(M), d);
  return sum * cell;
}

double c0MidpointSumCached(int d, int M) {
  static std::map<std::pair<int, int>, double> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lk(mu);
  auto key = std::make_pair(d, M);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  double v = c0MidpointSum(d, M);
  cache.emplace(key, v);
  return v;
}

// C(0) with the leading 1/M error removed across one doubling.
double c0Richardson(int d, int M) {
  return 2.0 * c0MidpointSumCached(d, M) - c0MidpointSumCached(d, M / 2);
}

}  // namespace

double coulombKernel(const std::vector<int>& x, int d, double tol,
                     const QuadratureOptions& opts, int* usedGrid) {
  if (d <= 2) throw std::invalid_argument("coulombKernel: integral diverges for d <= 2");
  if (int(x.size()) != d) throw std::invalid_argument("coulombKernel: x has wrong dimension");
  if (!(tol > 0)) throw std::invalid_argument("coulombKernel: tol must be positive");

  bool origin = true;
  for (int a : x)
    if (a != 0) origin = false;

  int M = std::max(4, opts.startGrid);
  if (M % 2) ++M;
  auto eval = [&](int m) {
    double c = c0Richardson(d, m);
    return origin ? c : c - subtractedMidpointSum(x, d, m);
  };
  double prev = eval(M);
  while (2 * M <= opts.maxGrid) {
    M *= 2;
    double cur = eval(M);
    if (std::abs(cur - prev) < tol) {
      if (usedGrid) *usedGrid = M;
      return cur;
    }
    prev = cur;
  }
  throw std::runtime_error("coulombKernel: quadrature did not converge below tol within max grid");
}

CoulombWindow buildCoulombWindow(int R, int grid) {
  const int d = 3;
  int M = grid;
  if (M % 2) ++M;
  if (2 * R + 1 > M) throw std::invalid_argument("buildCoulombWindow: R too large for grid");

  CoulombWindow w;
  w.R = R;
  w.grid = M;
  w.c0 = c0Richardson(d, 512);

  size_t n = size_t(M) * M * M;
  fftw_complex* a = fftw_alloc_complex(n);
  double h = 2.0 * M_PI / M;
  for (int k1 = 0; k1 < M; ++k1) {
    double p1 = -M_PI + (k1 + 0.5) * h;
    double l1 = 1.0 - std::cos(p1);
    for (int k2 = 0; k2 < M; ++k2) {
      double l2 = l1 + 1.0 - std::cos(-M_PI + (k2 + 0.5) * h);
      size_t base = (size_t(k1) * M + k2) * M;
      for (int k3 = 0; k3 < M; ++k3) {
        double lam = 2.0 * (l2 + 1.0 - std::cos(-M_PI + (k3 + 0.5) * h));
        a[base + k3][0] = 1.0 / lam;
        a[base + k3][1] = 0.0;
      }
    }
  }
  // C_grid(x) = M^-3 sum_k e^{i p_k . x} / lambda(p_k); p_k carries the
  // midpoint offset, which becomes a per-axis twiddle on the DFT output.
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(fftwPlannerMutex());
    plan = fftw_plan_dft_3d(M, M, M, a, a, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lk(fftwPlannerMutex());
    fftw_destroy_plan(plan);
  }

  auto gridVal = [&](int x1, int x2, int x3) {
    auto wrap = [&](int t) { return ((t % M) + M) % M; };
    size_t i = (size_t(wrap(x1)) * M + wrap(x2)) * M + wrap(x3);
    double phase = (x1 + x2 + x3) * (M_PI / M - M_PI);
    std::complex<double> tw(std::cos(phase), std::sin(phase));
    std::complex<double> val(a[i][0], a[i][1]);
    return (tw * val).real() / (double(M) * M * M);
  };

  double g0 = gridVal(0, 0, 0);
  int S = 2 * R + 1;
  w.v.assign(size_t(S) * S * S, 0.0);
  for (int x1 = -R; x1 <= R; ++x1)
    for (int x2 = -R; x2 <= R; ++x2)
      for (int x3 = -R; x3 <= R; ++x3) {
        double val = w.c0 + (gridVal(x1, x2, x3) - g0);
        w.v[size_t((x1 + R) * S + (x2 + R)) * S + (x3 + R)] = val;
      }
  fftw_free(a);
  return w;
}

const CoulombWindow& sharedCoulombWindow() {
  static CoulombWindow w;
  static std::once_flag once;
  std::call_once(once, [] { w = buildCoulombWindow(48, 256); });
  return w;
}

}  // namespace dgt
