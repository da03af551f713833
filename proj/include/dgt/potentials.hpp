#pragma once

#include <functional>

#include "dgt/activity.hpp"
#include "dgt/geometry.hpp"
#include "dgt/poly.hpp"

namespace dgt {

// E[prod_mu p_mu^{2 beta_mu}] over the uniform measure on S^{d-1}:
// prod (2 beta_mu - 1)!! / prod_{i<k} (d + 2i), k = |beta|.
double sphereMomentEven(const std::vector<int>& beta, int d);

// V(s, B, phi) = (1/4) sum_{x in B} sum_{mu nu} s(mu, nu) d_mu phi(x) d_nu phi(x),
// signed directions; backward derivatives canonicalized to forward variables.
FieldPolynomial potentialV(const Volume& vol, int j, int blockId,
                           const std::function<double(int, int)>& s, int cap);

// Isotropic s(mu,nu) = delta_{mu nu}: V(B) with unit coefficient.
FieldPolynomial potentialVIso(const Volume& vol, int j, int blockId, int cap);

// Dipole interaction at one site: W(u, B, phi) = 2 Int_{S^{d-1}} cos(u p . grad phi(x)) dp,
// expanded to even degree <= cap with exact sphere moments.
FieldPolynomial interactionW(const Pt& site, double u, int d, int cap);

struct Interaction {
  FieldPolynomial W;   // W(u, B)
  FieldPolynomial V;   // V(B), unit coefficient
  FieldPolynomial I0;  // exp(-sigma0 V(B)) truncated
};
Interaction buildInteraction(double z, double u, double sigma0, const Volume& vol, int block0,
                             int cap);

struct InitialDensity {
  PolymerActivity K0;                     // scale 0
  double sigma0 = 0;
  double z = 0;
  double truncationDiagnostic = 0;        // accumulated dropped l1 mass
  // I0(B) = exp(-sigma0 V(B)) truncated, built on demand.
  FieldPolynomial background(const Volume& vol, int blockId, int cap) const;
};

// Mayer step: K0(X) = prod_{B in X} (e^{W0(B)} - 1) e^{-V0(B)} on connected X
// with |X|_0 <= maxBlocks.
InitialDensity initialDensity(double z, double sigma0, const Volume& vol, int cap, int maxBlocks);

}  // namespace dgt
