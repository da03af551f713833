#pragma once

#include <cmath>
#include <string>

#include "dgt/geometry.hpp"
#include "dgt/poly.hpp"

namespace dgt {

enum class RegulatorKind { Strong, Weak, Unit };

struct NormParams {
  double h = 8.0;
  double A = 256.0;
  double c1 = 1.0, c2 = 1.0, c3 = 1.0, c4 = 1.0;
  RegulatorKind kind = RegulatorKind::Strong;

  // h_j = L^{-(d-2)j/2} h; recomputed, never stored.
  double hj(int d, int L, int j) const { return std::pow(double(L), -0.5 * (d - 2) * j) * h; }
  // Certified per-variable weight at scale j: h L^{-dj/2}.
  double varWeight(int d, int L, int j) const { return h * std::pow(double(L), -0.5 * d * j); }
};

// ||phi||_{Phi_j(X)} = h_j^{-1} max(||grad_j phi||_{X,inf}, ||grad_j^2 phi||_{X,inf}),
// grad_j = L^j * forward difference; second gradients run over signed pairs.
double phiNorm(const FieldSample& phi, const std::vector<Pt>& sites, int d, int L, int j,
               const NormParams& np);

// Large-field regulators, evaluated exactly as products over the blocks of X.
// The weak regulator's boundary term runs over bonds with exactly one
// endpoint in X.
double regulator(RegulatorKind kind, const Volume& vol, const Polymer& X, const FieldSample& phiPrime,
                 const FieldSample& zeta, const NormParams& np);

// sup_{t>=0} e^{-t^2} sum_{n<=min(3,k)} C(k,n) t^{k-n}: the derivative
// combinatorics factor of the certified upper bound.
double taylorEnvelope(int k);

// Certified upper bound on the Taylor norm of an entry against the strong
// regulator (hence also the weak one): sum_m |c_m| w^{deg m} T(deg m).
double entryNormUpper(const FieldPolynomial& P, int d, int L, int j, const NormParams& np);

// Sampled lower estimate: maximize sum_{n<=3} |K_n(phi'+zeta; f..)|/n! / G
// over random fields and unit test directions.
double entryNormSampled(const FieldPolynomial& P, const Volume& vol, const Polymer& X, int d, int L,
                        int j, const NormParams& np, int samples, uint64_t seed);

// Flow norm of a set of entries: sup over entries of upper-norm * A^{|X|_j}.
struct ActivityNormReport {
  double flowNorm = 0;
  double truncationMass = 0;
};

}  // namespace dgt
