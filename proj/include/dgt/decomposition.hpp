#pragma once

#include <array>
#include <string>
#include <vector>

#include "dgt/chebyshev.hpp"
#include "dgt/coulomb.hpp"
#include "dgt/kernel.hpp"

namespace dgt {

struct DecompParams {
  int d = 3;
  int L = 3;
  int jMax = 4;
  double tol = 1e-10;   // PSD slack on the spectral check grid
  int psdGrid = 64;     // Fourier check grid per axis
};

// Finite-range decomposition C = sum_j Gamma_j. Each spectral profile
//   g_j(lambda) = (1/lambda) * [prod_{i<j} R_{n_i}] * (1 - R_{n_j}),
// with R_n the Fejer polynomial in mu = 1 - lambda/(2d), is a polynomial of
// degree < L^j/2 in the Laplacian, nonnegative on [0, 4d]; the kernels are
// the profiles applied to the delta function. Profiles are kept in the
// Chebyshev basis of mu.
struct CovDecomposition {
  int d = 3;
  int L = 3;
  int jMax = 0;
  double lambdaMax = 12;          // 4d
  std::vector<int> filterOrder;   // n_1..n_jMax
  std::vector<ChebSeries> profile;  // g_j as function of mu (lambda-profile via mu map)
  std::vector<ChebSeries> filterProd;  // prod_{i<=j} R_{n_i}
  std::vector<SymKernel> gamma;   // Gamma_1..Gamma_jMax
  double psdFloor = 0;            // min of all profiles on the check grid
  uint64_t constructionHash = 0;

  double mu(double lambda) const { return 1.0 - lambda / (2.0 * d); }

  // ghat_j(lambda) >= 0; j in 1..jMax.
  double spectralProfile(int j, double lambda) const { return profile[size_t(j) - 1].eval(mu(lambda)); }

  // Spectral density of the tail C_J: prod_{j<=J} R_{n_j}(lambda) / lambda.
  double remainderSpectral(int J, double lambda) const {
    if (lambda <= 0) throw std::invalid_argument("remainderSpectral: lambda must be > 0");
    return filterProd[size_t(J) - 1].eval(mu(lambda)) / lambda;
  }

  const SymKernel& gammaKernel(int j) const { return gamma[size_t(j) - 1]; }
  double gammaValue(int j, const Pt& x) const { return gammaKernel(j).value(x); }

  // C_k(x) = C(x) - sum_{j<=k} Gamma_j(x); k = 0 gives C itself.
  double ckValue(int k, const Pt& x, const CoulombWindow& C) const {
    double v = C.value(x);
    for (int j = 1; j <= k; ++j) v -= gammaValue(j, x);
    return v;
  }

  // Fluctuation-gradient covariance under Gamma_j:
  // cov(d_mu zeta(x), d_nu zeta(y)) with v = x - y.
  double gradCov(int j, const Pt& v, int mu, int nu) const { return gammaKernel(j).gradGrad(v, mu, nu); }
};

CovDecomposition buildDecomposition(const DecompParams& p);

struct DecayReport {
  std::array<int, 3> alpha{0, 0, 0};
  int d = 3, L = 3;
  std::vector<int> scales;
  std::vector<double> maxDeriv;   // max_x |d^alpha Gamma_j(x)|
  std::vector<double> ratio;      // maxDeriv[j+1] / maxDeriv[j]
  std::vector<bool> pass;         // ratio within [target/4, 4*target]
  double fittedC = 0;             // fitted c_alpha
  double targetRatio = 0;         // L^{-(d-2+|alpha|)}
  std::string toCsv() const;
};

DecayReport verifyDecay(const CovDecomposition& dec, const std::array<int, 3>& alpha,
                        int jLo, int jHi);

// JSON kernel table (canonical-domain entries + header).
std::string kernelToJson(const SymKernel& k, int d, int L, int j, uint64_t hash);

}  // namespace dgt
