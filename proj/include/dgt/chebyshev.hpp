#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dgt {

// Chebyshev series f(mu) = c[0] + sum_{k>=1} c[k] T_k(mu) on mu in [-1,1].
struct ChebSeries {
  std::vector<double> c;

  int degree() const { return c.empty() ? -1 : int(c.size()) - 1; }

  double eval(double mu) const {
    // Clenshaw, convention without halved c[0].
    double b1 = 0, b2 = 0;
    for (int k = int(c.size()) - 1; k >= 1; --k) {
      double b0 = c[k] + 2 * mu * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    return (c.empty() ? 0.0 : c[0]) + mu * b1 - b2;
  }

  void trim(double eps = 0.0) {
    while (!c.empty() && std::abs(c.back()) <= eps) c.pop_back();
  }
};

inline ChebSeries chebConst(double v) { return ChebSeries{{v}}; }

inline ChebSeries chebAdd(const ChebSeries& a, const ChebSeries& b, double sb = 1.0) {
  ChebSeries r;
  r.c.resize(std::max(a.c.size(), b.c.size()), 0.0);
  for (size_t i = 0; i < a.c.size(); ++i) r.c[i] += a.c[i];
  for (size_t i = 0; i < b.c.size(); ++i) r.c[i] += sb * b.c[i];
  return r;
}

// Product via T_i T_j = (T_{i+j} + T_{|i-j|}) / 2.
inline ChebSeries chebMul(const ChebSeries& a, const ChebSeries& b) {
  ChebSeries r;
  if (a.c.empty() || b.c.empty()) return r;
  r.c.assign(a.c.size() + b.c.size() - 1, 0.0);
  for (size_t i = 0; i < a.c.size(); ++i) {
    if (a.c[i] == 0) continue;
    for (size_t j = 0; j < b.c.size(); ++j) {
      if (b.c[j] == 0) continue;
      double p = a.c[i] * b.c[j];
      if (i == 0 || j == 0) {
        r.c[i + j] += p;
      } else {
        r.c[i + j] += 0.5 * p;
        r.c[i >= j ? i - j : j - i] += 0.5 * p;
      }
    }
  }
  return r;
}

// Fejer polynomial R_n(mu) = (1 - T_n(mu)) / (n^2 (1 - mu)),
// 0 <= R_n <= 1 on [-1,1], R_n(1) = 1, degree n-1. Closed Chebyshev form:
// R_n = (1/n^2) [ n + 2 sum_{k=1}^{n-1} (n-k) T_k ].
inline ChebSeries fejerR(int n) {
  if (n < 1) throw std::invalid_argument("fejerR: n >= 1 required");
  ChebSeries r;
  r.c.assign(size_t(n), 0.0);
  double inv = 1.0 / (double(n) * n);
  r.c[0] = double(n) * inv;
  for (int k = 1; k < n; ++k) r.c[k] = 2.0 * (n - k) * inv;
  return r;
}

// Solve (1 - mu) f(mu) = q(mu) for f, requiring q(1) = 0.
// Backward recursion on q_m = f_m - (f_{m-1} + f_{m+1})/2 (m >= 2),
// q_1 = f_1 - f_0 - f_2/2, q_0 = f_0 - f_1/2.
inline ChebSeries chebDivOneMinusMu(const ChebSeries& q) {
  int dq = q.degree();
  if (dq < 0) return ChebSeries{};
  auto qc = [&](int m) { return m <= dq ? q.c[m] : 0.0; };
  ChebSeries f;
  if (dq == 0) {
    if (std::abs(qc(0)) > 1e-12) throw std::runtime_error("chebDivOneMinusMu: q(1) != 0");
    return ChebSeries{{0.0}};
  }
  int df = dq - 1;
  f.c.assign(size_t(df) + 1, 0.0);
  if (dq == 1) {
    // q_1 = -f_0 when f has degree 0.
    f.c[0] = -qc(1);
    return f;
  }
  // m = dq >= 2 gives q_dq = -f_{dq-1}/2.
  f.c[df] = -2.0 * qc(dq);
  for (int m = dq - 1; m >= 2; --m) {
    double fp1 = m + 1 <= df ? f.c[m + 1] : 0.0;
    f.c[m - 1] = 2.0 * (f.c[m] - qc(m)) - fp1;
  }
  if (df >= 1) {
    double f2 = 2 <= df ? f.c[2] : 0.0;
    f.c[0] = f.c[1] - 0.5 * f2 - qc(1);
  }
  // Residual at m=0 measures rounding; caller may verify pointwise.
  return f;
}

}  // namespace dgt
