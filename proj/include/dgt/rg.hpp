#pragma once

#include <map>
#include <optional>

#include "dgt/activity.hpp"
#include "dgt/decomposition.hpp"
#include "dgt/potentials.hpp"

namespace dgt {

struct RGParams {
  int degCap = 4;
  NormParams norms;
  int supportCap = 3;           // max |X|_j of assembled residual polymers
  int deltaIFillCap = 2;        // max background-difference factors next to stored entries
  double coeffThreshold = 0.0;  // magnitude pruning with ledger (0 = exact)
  int literalChainLimit = 24;   // literal chain enumeration up to this object count
  long long enumBudget = 5'000'000;
};

// signed direction mu in {±1..±d} -> 0..2d-1
inline int sdirIndex(int mu, int d) { return mu > 0 ? mu - 1 : d + (-mu - 1); }

struct ExtractionResult {
  PolymerActivity Ksharp;  // entrywise fluctuation integral of K
  std::map<int, double> beta;
  std::map<int, std::vector<double>> alphaMatrix;  // (2d)^2 per block
  double alphaScalar = 0;
  std::map<std::pair<int, Polymer>, FieldPolynomial> J;
  double localityDiscard = 0;  // l1 mass of J monomials outside B*
};

struct RGState {
  int j = 0;
  double sigma = 0;
  PolymerActivity K;
  // energies[k]: E_{k+1}(B') extracted at step k -> k+1, keyed by block id at
  // scale k+1.
  std::vector<std::map<int, double>> energies;

  double totalEnergy() const {
    double s = 0;
    for (auto& m : energies)
      for (auto& [b, e] : m) s += e;
    return s;
  }
};

struct StepDiagnostics {
  double alpha = 0;
  std::map<int, double> Etilde;
  double chainDroppedMass = 0;   // >= 3-object families in the factorized path
  double pruneDroppedMass = 0;   // magnitude pruning
  long long literalTerms = 0;
  bool usedFactorized = false;
};

PolymerActivity fluctuationSharp(const PolymerActivity& K, const CovDecomposition& dec);

ExtractionResult extract(const PolymerActivity& K, const CovDecomposition& dec, const Volume& vol,
                         const RGParams& par);

// One full transformation at scale j: fluctuation integral, extraction,
// cancellation, reassembly over chain decompositions, energy decoupling.
RGState rgStep(const RGState& s, const CovDecomposition& dec, const Volume& vol,
               const RGParams& par, StepDiagnostics* diag = nullptr);

enum class LinMapId { L1, L2, L3p, L4, Delta };

PolymerActivity linearMap(const PolymerActivity& K, const CovDecomposition& dec, const Volume& vol,
                          const RGParams& par, LinMapId which);

// Brute-force evaluators used by identity tests.
// (I o K)(Lambda, phi) with per-block background values.
double polymerSumNumeric(const Volume& vol, int j,
                         const std::map<Polymer, FieldPolynomial>& entries,
                         const std::function<double(int)>& bgValue, const FieldSample& phi);

// mu_Gamma * (1 o K)(Lambda)(phi') with unit background: the fluctuation
// integral of the polymer sum, zeta integrated exactly.
double polymerSumWickUnitBg(const Volume& vol, int j,
                            const std::map<Polymer, FieldPolynomial>& entries,
                            const FieldSample& phiPrime, const SymKernel& gamma);

}  // namespace dgt
