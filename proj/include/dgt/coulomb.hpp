#pragma once

#include <optional>
#include <vector>

#include "dgt/lattice.hpp"

namespace dgt {

// Options for the Brillouin-zone midpoint quadrature.
struct QuadratureOptions {
  int startGrid = 32;   // points per axis, even
  int maxGrid = 4096;   // doubling cap; exceeded -> error
};

// Lattice Coulomb kernel C(x) = (2pi)^-d int e^{ip.x} / lambda(p) dp,
// lambda(p) = 2 sum_mu (1 - cos p_mu), for d >= 3. Midpoint tensor grid,
// doubled until the Cauchy difference drops below tol. The p = 0 singularity
// is split off as C(x) = C(0) - (2pi)^-d int (1 - cos p.x)/lambda dp, with
// the x-independent piece extrapolated across one doubling; both pieces use
// the same midpoint grids. Throws if d <= 2 or the grid cap is reached.
double coulombKernel(const std::vector<int>& x, int d, double tol,
                     const QuadratureOptions& opts = {}, int* usedGrid = nullptr);

// C(x) tabulated on the cube |x|_inf <= R for d = 3, via one FFT pass at
// fixed grid M plus the extrapolated C(0). Errors are O(|x|^2 / M^3).
struct CoulombWindow {
  int d = 3;
  int R = 0;
  int grid = 0;
  double c0 = 0;               // C(0)
  std::vector<double> v;       // cube side 2R+1, index ((x+R)*S+(y+R))*S+(z+R)

  double value(const Pt& x) const {
    int S = 2 * R + 1;
    for (int a = 0; a < 3; ++a)
      if (std::abs(x[a]) > R) throw std::out_of_range("CoulombWindow: offset beyond radius");
    return v[size_t((x[0] + R) * S + (x[1] + R)) * S + (x[2] + R)];
  }

  // Pi_{mu nu}(v) = (d_mu C d_nu^*)(x - y), signed directions.
  double pi(const Pt& vv, int mu, int nu) const {
    Pt em = unitVec(mu), en = unitVec(nu);
    return value(vv + em - en) - value(vv + em) - value(vv - en) + value(vv);
  }
};

CoulombWindow buildCoulombWindow(int R, int grid = 256);

// Shared lazily-built window (R = 48, M = 256), reused across modules.
const CoulombWindow& sharedCoulombWindow();

}  // namespace dgt
