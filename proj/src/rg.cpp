#include "dgt/rg.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace dgt {

namespace {

// Sites of B* for locality filtering of J entries.
std::set<Pt> starSiteSet(const Volume& vol, int j, int B) {
  std::set<Pt> s;
  for (int b : blockStar(vol, j, B).blocks)
    for (const Pt& x : vol.blockSiteList(j, b)) s.insert(x);
  return s;
}

std::vector<int> childrenOf(const Volume& vol, int jChild, const Polymer& U) {
  std::vector<int> out;
  for (int bu : U.blocks) {
    auto c = vol.blockCoords(U.j, bu);
    std::array<int, 3> q{0, 0, 0};
    std::function<void(int)> rec = [&](int a) {
      if (a == vol.d) {
        out.push_back(vol.blockId(jChild, q));
        return;
      }
      for (int t = 0; t < vol.L; ++t) {
        q[a] = c[a] * vol.L + t;
        rec(a + 1);
      }
    };
    rec(0);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

PolymerActivity fluctuationSharp(const PolymerActivity& K, const CovDecomposition& dec) {
  const SymKernel& gamma = dec.gammaKernel(K.scale + 1);
  KernelGradCov cov(gamma);
  PolymerActivity out;
  out.scale = K.scale;
  out.degCap = K.degCap;
  out.interiorSymmetric = K.interiorSymmetric;
  out.droppedMass = K.droppedMass;
  for (auto& [X, P] : K.entries) out.entries.emplace(X, P.substPhiToPhiPlusZeta().wickZeta(cov));
  return out;
}

ExtractionResult extract(const PolymerActivity& K, const CovDecomposition& dec, const Volume& vol,
                         const RGParams& par) {
  int j = K.scale;
  int d = vol.d;
  int twoD = 2 * d;
  ExtractionResult ex;
  ex.Ksharp = fluctuationSharp(K, dec);

  long long blockSites = vol.blockSites(j);
  int smallCap = 1 << d;

  // beta(B) = -sum_{X in S_j, X contains B} K#(X, 0) / |X|_j
  // alpha_{mu nu}(B) = -(1/(2|B|)) sum_X K#_2(X, 0; x_mu, x_nu) / |X|_j
  for (auto& [X, P] : ex.Ksharp.entries) {
    if (X.card() > smallCap) continue;  // stored entries are connected
    double k0 = P.constantTerm();
    for (int B : X.blocks) {
      ex.beta[B] -= k0 / X.card();
      auto [it, fresh] = ex.alphaMatrix.try_emplace(B, std::vector<double>(size_t(twoD * twoD), 0.0));
      for (int mu = -d; mu <= d; ++mu) {
        if (mu == 0) continue;
        for (int nu = -d; nu <= d; ++nu) {
          if (nu == 0) continue;
          double k2 = P.pairCoordinate(mu, nu);
          if (k2 != 0)
            it->second[size_t(sdirIndex(mu, d) * twoD + sdirIndex(nu, d))] -=
                0.5 / double(blockSites) * k2 / X.card();
        }
      }
    }
  }

  // interior scalar: alpha-hat pattern (alpha/2)(delta_{mu nu} - delta_{mu,-nu});
  // average over blocks whose star stays away from the boundary, falling back
  // to all contributing blocks.
  {
    double acc = 0;
    int n = 0;
    bool anyInterior = false;
    for (int pass = 0; pass < 2 && n == 0; ++pass) {
      for (auto& [B, am] : ex.alphaMatrix) {
        bool interior = awayFromBoundary(vol, blockStar(vol, j, B));
        if (pass == 0 && !interior) continue;
        if (pass == 0) anyInterior = true;
        // sum_{±mu} [ahat_{mu mu} - ahat_{mu,-mu}] = 2d alpha
        double a = 0;
        for (int mu = -d; mu <= d; ++mu) {
          if (mu == 0) continue;
          int i = sdirIndex(mu, d), im = sdirIndex(-mu, d);
          a += am[size_t(i * twoD + i)] - am[size_t(i * twoD + im)];
        }
        acc += a / twoD;
        ++n;
      }
      (void)anyInterior;
    }
    ex.alphaScalar = n ? acc / n : 0.0;
  }

  // J(B, X) = T_2 K#(X) / |X|_j for small stored X strictly containing B;
  // J(B, B) balances the zero-sum condition. Monomials outside B* are
  // discarded into the locality diagnostic.
  std::map<int, FieldPolynomial> jDiag;  // accumulates -sum_{X != B} J(B, X)
  for (auto& [X, P] : ex.Ksharp.entries) {
    if (X.card() > smallCap || X.card() < 2) continue;
    FieldPolynomial T2 = P.degreeSlice(0, 2);
    T2.scale(1.0 / X.card());
    for (int B : X.blocks) {
      FieldPolynomial JP = T2;
      auto star = starSiteSet(vol, j, B);
      for (auto it = JP.t.begin(); it != JP.t.end();) {
        bool inside = true;
        for (int i = 0; i < it->first.degree(); ++i)
          if (!star.count(it->first.var(i).site())) inside = false;
        if (!inside) {
          ex.localityDiscard += std::abs(it->second);
          it = JP.t.erase(it);
        } else {
          ++it;
        }
      }
      auto [dit, fresh] = jDiag.try_emplace(B, FieldPolynomial(K.degCap));
      dit->second.addScaled(JP, -1.0);
      ex.J[{B, X}] = std::move(JP);
    }
  }
  for (auto& [B, P] : jDiag) {
    if (P.isZero()) continue;
    Polymer single = makePolymer(j, {B});
    ex.J[{B, single}] = std::move(P);
  }
  (void)par;
  return ex;
}

namespace {

// Small dynamic bitmask over block ids.
struct Mask {
  std::vector<uint64_t> w;
  Mask() = default;
  explicit Mask(size_t nBits) : w((nBits + 63) / 64, 0) {}
  void set(int i) { w[size_t(i) >> 6] |= uint64_t(1) << (i & 63); }
  bool intersects(const Mask& o) const {
    size_t n = std::min(w.size(), o.w.size());
    for (size_t i = 0; i < n; ++i)
      if (w[i] & o.w[i]) return true;
    return false;
  }
  void orWith(const Mask& o) {
    if (o.w.size() > w.size()) w.resize(o.w.size(), 0);
    for (size_t i = 0; i < o.w.size(); ++i) w[i] |= o.w[i];
  }
};

Mask footprintMask(const Volume& vol, int j, const Polymer& X) {
  Mask m(size_t(vol.numBlocks(j)));
  for (int b : X.blocks) m.set(b);
  return m;
}

// footprint plus all touching blocks: A strictly disjoint from B iff
// dilate(A) does not intersect footprint(B)
Mask dilateMask(const Volume& vol, int j, const Polymer& X) {
  Mask m(size_t(vol.numBlocks(j)));
  int n = vol.blocksPerAxis(j);
  for (int b : X.blocks) {
    auto c = vol.blockCoords(j, b);
    std::array<int, 3> q{0, 0, 0};
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < vol.d; ++a) {
      lo[a] = std::max(0, c[a] - 1);
      hi[a] = std::min(n - 1, c[a] + 1);
      q[a] = lo[a];
    }
    while (true) {
      m.set(vol.blockId(j, q));
      int a = 0;
      for (; a < vol.d; ++a) {
        if (++q[a] <= hi[a]) break;
        q[a] = lo[a];
      }
      if (a == vol.d) break;
    }
  }
  return m;
}

struct BlockPolys {
  // per-block background data at the current scale
  std::map<int, FieldPolynomial> V;        // V(B), unit coefficient
  std::map<int, FieldPolynomial> Itld;     // e^{-Etld} exp(-sigmaT V(B))
  std::map<int, FieldPolynomial> dI;       // I(phi'+zeta) - Itld(phi')
  std::map<int, double> Etld;
  double sigmaT = 0;

  // prod_{B in blocks} Itld(B) = e^{-sum Etld} expTrunc(-sigmaT sum V(B));
  // the truncated exponential is a homomorphism in the quotient algebra.
  FieldPolynomial itldProduct(const std::vector<int>& blocks, int cap, double sign = 1.0) const {
    FieldPolynomial sumV(cap);
    double e = 0;
    for (int b : blocks) {
      sumV += V.at(b);
      e += Etld.at(b);
    }
    sumV.scale(-sign * sigmaT);
    FieldPolynomial out = sumV.expTrunc();
    out.scale(std::exp(-sign * e));
    return out;
  }
};

// Families of pairwise strictly disjoint stored entries inside X covering all
// but at most fillCap blocks; the uncovered blocks take deltaI factors. This
// is exactly sum_{Y subset X} K(Y) dI^{X-Y} when fillCap = |X|.
// Substituted (phi -> phi' + zeta) stored entries, indexed for fast lookup.
struct SubstEntries {
  std::vector<const Polymer*> poly;
  std::vector<FieldPolynomial> subst;
  std::map<int, std::vector<int>> byBlock;  // block id -> entry indices

  static SubstEntries build(const PolymerActivity& K) {
    SubstEntries se;
    for (auto& [Y, P] : K.entries) {
      int idx = int(se.poly.size());
      se.poly.push_back(&Y);
      se.subst.push_back(P.substPhiToPhiPlusZeta());
      for (int b : Y.blocks) se.byBlock[b].push_back(idx);
    }
    return se;
  }
};

FieldPolynomial buildKtilde(const Volume& vol, const SubstEntries& se, const Polymer& X,
                            const BlockPolys& bp, int fillCap, int maxFamily, int cap,
                            double* dropped) {
  // candidate stored entries fully inside X
  std::vector<int> cands;
  for (int b : X.blocks) {
    auto it = se.byBlock.find(b);
    if (it == se.byBlock.end()) continue;
    for (int idx : it->second) {
      bool inside = true;
      for (int bb : se.poly[size_t(idx)]->blocks)
        if (!polymerContains(X, bb)) inside = false;
      if (inside) cands.push_back(idx);
    }
  }
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

  FieldPolynomial out(cap);
  std::vector<int> chosen;
  bool pruned = false;
  // Families of pairwise strictly disjoint entries (touching entries would
  // merge into one component, so disjointness is forced).
  std::function<void(size_t, int)> rec = [&](size_t next, int covered) {
    int uncovered = X.card() - covered;
    if (uncovered <= fillCap) {
      FieldPolynomial term = FieldPolynomial::constant(1.0, cap);
      std::vector<char> coveredBlocks(X.blocks.size(), 0);
      for (int ci : chosen) {
        term = term.mul(se.subst[size_t(cands[size_t(ci)])]);
        for (int b : se.poly[size_t(cands[size_t(ci)])]->blocks) {
          auto it = std::lower_bound(X.blocks.begin(), X.blocks.end(), b);
          coveredBlocks[size_t(it - X.blocks.begin())] = 1;
        }
      }
      for (size_t i = 0; i < X.blocks.size(); ++i)
        if (!coveredBlocks[i]) term = term.mul(bp.dI.at(X.blocks[i]));
      out += term;
    }
    if (int(chosen.size()) >= maxFamily) {
      if (next < cands.size()) pruned = true;
      return;
    }
    for (size_t i = next; i < cands.size(); ++i) {
      bool ok = true;
      for (int ci : chosen)
        if (!strictlyDisjoint(vol, *se.poly[size_t(cands[size_t(ci)])],
                              *se.poly[size_t(cands[i])]))
          ok = false;
      if (!ok) continue;
      chosen.push_back(int(i));
      rec(i + 1, covered + se.poly[size_t(cands[i])]->card());
      chosen.pop_back();
    }
  };
  rec(0, 0);
  if (pruned && dropped) {
    // crude bound on families beyond the size cap: next order in the entry sizes
    double sl = 0;
    for (int ci : cands) sl += se.subst[size_t(ci)].l1Norm();
    double fact = 1;
    for (int i = 2; i <= maxFamily + 1; ++i) fact *= i;
    *dropped += std::pow(sl, maxFamily + 1) / fact;
  }
  return out;
}

}  // namespace

RGState rgStep(const RGState& s, const CovDecomposition& dec, const Volume& vol,
               const RGParams& par, StepDiagnostics* diag) {
  int j = s.j;
  int d = vol.d;
  if (j + 1 > vol.N) throw std::invalid_argument("rgStep: volume does not accommodate scale j+1");
  if (j + 1 > dec.jMax) throw std::invalid_argument("rgStep: decomposition too shallow");
  const SymKernel& gamma = dec.gammaKernel(j + 1);
  KernelGradCov gcov(gamma);
  int cap = s.K.degCap;
  int smallCap = 1 << d;

  ExtractionResult ex = extract(s.K, dec, vol, par);

  // Etilde(B) = (sigma/4) sum_{±mu} Tr(1_B dGamma d*) + beta(B); sigma+ = sigma + alpha.
  double traceDensity = 0;  // per site
  for (int a = 1; a <= d; ++a) traceDensity += gamma.value(pt(0, 0, 0)) - gamma.value(unitVec(a));
  traceDensity *= s.sigma;
  double sigmaT = s.sigma + ex.alphaScalar;

  std::map<int, double> Etld;
  long long nB = vol.numBlocks(j);
  long long bSites = vol.blockSites(j);
  for (int B = 0; B < nB; ++B) {
    double e = traceDensity * double(bSites);
    auto it = ex.beta.find(B);
    if (it != ex.beta.end()) e += it->second;
    Etld[B] = e;
  }
  if (diag) {
    diag->alpha = ex.alphaScalar;
    diag->Etilde = Etld;
  }

  // Per-block background polynomials.
  BlockPolys bp;
  bp.sigmaT = sigmaT;
  bp.Etld = Etld;
  for (int B = 0; B < nB; ++B) {
    FieldPolynomial V = potentialVIso(vol, j, B, cap);
    FieldPolynomial mV = V;
    mV.scale(-s.sigma);
    FieldPolynomial I = mV.expTrunc();
    FieldPolynomial mVT = V;
    mVT.scale(-sigmaT);
    FieldPolynomial Itld = mVT.expTrunc();
    Itld.scale(std::exp(-Etld[B]));
    FieldPolynomial dI = I.substPhiToPhiPlusZeta();
    dI.addScaled(Itld, -1.0);
    if (par.coeffThreshold > 0) {
      Itld.compact(par.coeffThreshold);
      dI.compact(par.coeffThreshold);
    }
    bp.V.emplace(B, std::move(V));
    bp.Itld.emplace(B, std::move(Itld));
    bp.dI.emplace(B, std::move(dI));
  }

  // Residual activity on the universe of connected polymers.
  std::vector<Polymer> universe = enumerateConnected(vol, j, par.supportCap, par.enumBudget);
  for (auto& [X, P] : s.K.entries)
    if (X.card() > par.supportCap) universe.push_back(X);

  std::map<Polymer, FieldPolynomial> Kch;  // residual (phi', zeta) entries
  double dropLedger = 0;
  SubstEntries se = SubstEntries::build(s.K);
  for (const Polymer& X : universe) {
    bool smallX = X.card() <= par.supportCap;
    int fillCap = smallX ? X.card() : par.deltaIFillCap;
    int maxFamily = smallX ? X.card() : par.supportCap;
    FieldPolynomial Kt = buildKtilde(vol, se, X, bp, fillCap, maxFamily, cap, &dropLedger);
    if (X.card() <= smallCap) {
      for (int B : X.blocks) {
        auto it = ex.J.find({B, X});
        if (it != ex.J.end()) Kt.addScaled(it->second, -1.0);
      }
    }
    if (par.coeffThreshold > 0) Kt.compact(par.coeffThreshold);
    if (!Kt.isZero() || Kt.truncationMass > 0) Kch.emplace(X, std::move(Kt));
  }

  // Chain objects.
  std::vector<Polymer> kSupport;
  for (auto& [X, P] : Kch) kSupport.push_back(X);
  std::vector<std::pair<int, Polymer>> jSupport;
  for (auto& [key, P] : ex.J)
    if (!P.isZero()) jSupport.push_back(key);

  // Targets: connected next-scale polymers up to the cap, plus the closures
  // of B-stars (where chains land) and of stored big entries.
  std::map<int, Polymer> starClosure;
  for (auto& [B, X] : jSupport)
    starClosure.try_emplace(B, closure(vol, blockStar(vol, j, B)));
  std::set<Polymer> targets;
  for (const Polymer& U : enumerateConnected(vol, j + 1, par.supportCap, par.enumBudget))
    targets.insert(U);
  for (auto& [B, cl] : starClosure) targets.insert(cl);
  for (auto& [X, P] : Kch)
    if (X.card() > par.supportCap) targets.insert(closure(vol, X));

  PolymerActivity Kp;
  Kp.scale = j + 1;
  Kp.degCap = cap;
  Kp.interiorSymmetric = s.K.interiorSymmetric;
  Kp.droppedMass = s.K.droppedMass + dropLedger;

  for (const Polymer& U : targets) {
    auto childs = childrenOf(vol, j, U);
    std::vector<char> inU(size_t(vol.numBlocks(j)), 0);
    for (int b : childs) inU[size_t(b)] = 1;

    struct Obj {
      bool isJ;
      int B;
      const Polymer* foot;          // X_i for J, Y for Kch
      const FieldPolynomial* poly;  // J poly or residual entry
      Mask foot_m, dil_m;           // footprint and dilated footprint
      uint32_t cover;               // closure-contribution bits within U
    };
    auto coverBits = [&](const Polymer& cl) {
      uint32_t bits = 0;
      for (int b : cl.blocks) {
        auto it = std::lower_bound(U.blocks.begin(), U.blocks.end(), b);
        bits |= 1u << (it - U.blocks.begin());
      }
      return bits;
    };
    uint32_t fullCover = (uint32_t(1) << U.blocks.size()) - 1;

    std::vector<Obj> objs;
    for (auto& [key, P] : ex.J) {
      if (P.isZero()) continue;
      const Polymer& cl = starClosure.at(key.first);
      bool fits = true;
      for (int b : cl.blocks)
        if (!polymerContains(U, b)) fits = false;
      if (!fits) continue;
      Obj o{true, key.first, &key.second, &P, {}, {}, coverBits(cl)};
      objs.push_back(std::move(o));
    }
    for (auto& [Y, P] : Kch) {
      bool inside = true;
      for (int b : Y.blocks)
        if (!inU[size_t(b)]) inside = false;
      if (!inside) continue;
      Obj o{false, -1, &Y, &P, {}, {}, coverBits(closure(vol, Y))};
      objs.push_back(std::move(o));
    }
    if (objs.empty()) continue;
    for (auto& o : objs) {
      o.foot_m = footprintMask(vol, j, *o.foot);
      o.dil_m = dilateMask(vol, j, *o.foot);
    }

    // Itld product over all children of U.
    FieldPolynomial ItldU = bp.itldProduct(childs, cap);
    if (par.coeffThreshold > 0) ItldU.compact(par.coeffThreshold);

    auto dressed = [&](const Obj& o) {
      std::vector<int> footIn;
      for (int b : o.foot->blocks)
        if (inU[size_t(b)]) footIn.push_back(b);
      FieldPolynomial F = o.poly->mul(bp.itldProduct(footIn, cap, -1.0));
      if (par.coeffThreshold > 0) F.compact(par.coeffThreshold);
      return F;
    };

    FieldPolynomial acc(cap);  // sum over (X, chi) of dressed products, zeta-symbolic
    bool factorized = int(objs.size()) > par.literalChainLimit;
    std::vector<FieldPolynomial> dressedAll;
    dressedAll.reserve(objs.size());
    for (auto& o : objs) dressedAll.push_back(dressed(o));

    if (!factorized) {
      // literal enumeration of strictly disjoint families; the product and
      // the closure coverage ride along the recursion
      long long terms = 0;
      Mask usedDil(size_t(vol.numBlocks(j)));
      std::function<void(size_t, uint32_t, const FieldPolynomial&)> rec =
          [&](size_t next, uint32_t cover, const FieldPolynomial& prod) {
            for (size_t i = next; i < objs.size(); ++i) {
              if (objs[i].foot_m.intersects(usedDil)) continue;
              FieldPolynomial p2 = prod.mul(dressedAll[i]);
              uint32_t c2 = cover | objs[i].cover;
              if (c2 == fullCover) {
                acc += p2;
                ++terms;
              }
              Mask save = usedDil;
              usedDil.orWith(objs[i].dil_m);
              rec(i + 1, c2, p2);
              usedDil = save;
            }
          };
      rec(0, 0, FieldPolynomial::constant(1.0, cap));
      if (diag) diag->literalTerms += terms;
    } else {
      // factorized path: valid when every J-object in scope closes to U on
      // its own (whole-volume collectors); families with >= 3 objects are
      // dropped into the ledger.
      if (diag) diag->usedFactorized = true;
      for (auto& o : objs) {
        if (!o.isJ) continue;
        if (o.cover != fullCover)
          throw std::runtime_error("rgStep: factorized path precondition failed");
      }
      FieldPolynomial SJ(cap), SK(cap);
      for (size_t i = 0; i < objs.size(); ++i) {
        if (objs[i].isJ)
          SJ += dressedAll[i];
        else {
          SK += dressedAll[i];
          if (objs[i].cover == fullCover) acc += dressedAll[i];  // Kch single
        }
      }
      if (par.coeffThreshold > 0) {
        SJ.compact(par.coeffThreshold);
        SK.compact(par.coeffThreshold);
      }
      acc += SJ;  // J singles always close to U
      FieldPolynomial SJ2 = SJ.mul(SJ);
      for (size_t i = 0; i < objs.size(); ++i)
        if (objs[i].isJ) SJ2.addScaled(dressedAll[i].mul(dressedAll[i]), -1.0);
      SJ2.scale(0.5);
      FieldPolynomial SJK = SJ.mul(SK);
      for (size_t a = 0; a < objs.size(); ++a) {
        for (size_t b = a + 1; b < objs.size(); ++b) {
          if (!objs[a].isJ && !objs[b].isJ) continue;
          bool touching = objs[a].dil_m.intersects(objs[b].foot_m);
          if (!touching) continue;
          if (objs[a].isJ && objs[b].isJ)
            SJ2.addScaled(dressedAll[a].mul(dressedAll[b]), -1.0);
          else
            SJK.addScaled(dressedAll[a].mul(dressedAll[b]), -1.0);
        }
      }
      acc += SJ2;
      acc += SJK;
      // (K,K) pairs jointly closing to U
      for (size_t a = 0; a < objs.size(); ++a) {
        if (objs[a].isJ) continue;
        for (size_t b = a + 1; b < objs.size(); ++b) {
          if (objs[b].isJ) continue;
          if ((objs[a].cover | objs[b].cover) != fullCover) continue;
          if (objs[a].dil_m.intersects(objs[b].foot_m)) continue;
          acc += dressedAll[a].mul(dressedAll[b]);
        }
      }
      // >= 3-object families: ledger bound
      double l1 = SJ.l1Norm() + SK.l1Norm();
      double bound = l1 * l1 * l1 / 6.0;
      Kp.droppedMass += bound;
      if (diag) diag->chainDroppedMass += bound;
    }
    if (acc.isZero() && acc.truncationMass == 0) continue;

    FieldPolynomial Kprime = ItldU.mul(acc).wickZeta(gcov);
    if (par.coeffThreshold > 0) Kprime.compact(par.coeffThreshold);
    Kp.add(U, std::move(Kprime));
  }

  // Energy decoupling: E+(B') = sum_{B in B'} Etilde(B); K+(U) = e^{-sum E+} K'(U).
  std::map<int, double> Eplus;
  for (auto& [B, e] : Etld) Eplus[vol.parent(j, B)] += e;
  // K+(U) = e^{+sum_{B' in U} E+(B')} K'(U); the step identity carries the
  // compensating global factor e^{-sum E+}.
  for (auto& [U, P] : Kp.entries) {
    double eSum = 0;
    for (int bu : U.blocks) eSum += Eplus[bu];
    P.scale(std::exp(eSum));
  }
  if (par.coeffThreshold > 0) Kp.prune(par.coeffThreshold);

  RGState out;
  out.j = j + 1;
  out.sigma = sigmaT;
  out.K = std::move(Kp);
  out.energies = s.energies;
  out.energies.push_back(std::move(Eplus));
  if (diag) diag->pruneDroppedMass = out.K.droppedMass;
  return out;
}

PolymerActivity linearMap(const PolymerActivity& K, const CovDecomposition& dec, const Volume& vol,
                          const RGParams& par, LinMapId which) {
  int j = K.scale;
  int d = vol.d;
  int smallCap = 1 << d;
  PolymerActivity out;
  out.scale = j + 1;
  out.degCap = K.degCap;

  ExtractionResult ex = extract(K, dec, vol, par);

  switch (which) {
    case LinMapId::L1: {
      for (auto& [X, P] : ex.Ksharp.entries) {
        if (X.card() <= smallCap) continue;
        out.add(closure(vol, X), P.degreeSlice(0, K.degCap));
      }
      break;
    }
    case LinMapId::L2: {
      for (auto& [X, P] : ex.Ksharp.entries) {
        if (X.card() > smallCap) continue;
        out.add(closure(vol, X), P.degreeSlice(3, K.degCap));
      }
      break;
    }
    case LinMapId::L3p: {
      // localization remainder of the quadratic part, averaged over z in B
      for (auto& [X, P] : ex.Ksharp.entries) {
        if (X.card() > smallCap) continue;
        FieldPolynomial Q = P.degreeSlice(2, 2);
        if (Q.isZero()) continue;
        for (int B : X.blocks) {
          FieldPolynomial avg(K.degCap);
          auto zs = vol.blockSiteList(j, B);
          for (const Pt& z : zs) {
            FieldPolynomial loc = Q.substituteLinear([&](GVar g) {
              // d_a phi(y) -> (1/2)[d_a phi(z) + d_a phi(z - e_a)]
              Pt zm = z;
              --zm[g.axis()];
              return std::vector<std::pair<GVar, double>>{
                  {GVar(z, g.axis(), g.isZeta()), 0.5}, {GVar(zm, g.axis(), g.isZeta()), 0.5}};
            });
            avg.addScaled(loc, 1.0 / double(zs.size()));
          }
          FieldPolynomial diff = Q;
          diff.addScaled(avg, -1.0);
          diff.scale(1.0 / X.card());
          out.add(closure(vol, makePolymer(j, {B})), diff);
        }
      }
      break;
    }
    case LinMapId::L4: {
      double alpha = ex.alphaScalar;
      if (alpha == 0) break;
      for (int bu = 0; bu < vol.numBlocks(j + 1); ++bu) {
        FieldPolynomial P(K.degCap);
        for (const Pt& x : vol.blockSiteList(j + 1, bu)) {
          for (int mu = -d; mu <= d; ++mu) {
            if (mu == 0) continue;
            FieldPolynomial gmu = gradVarPoly(x, mu, false, K.degCap);
            FieldPolynomial gmmu = gradVarPoly(x, -mu, false, K.degCap);
            P.addScaled(gmu.mul(gmmu), alpha / 8.0);
            P.addScaled(gmu.mul(gmu), alpha / 8.0);
          }
        }
        if (!P.isZero()) out.add(makePolymer(j + 1, {bu}), std::move(P));
      }
      break;
    }
    case LinMapId::Delta: {
      double alpha = ex.alphaScalar;
      int twoD = 2 * d;
      for (auto& [B, am] : ex.alphaMatrix) {
        // s = alpha-hat - alpha(B)
        auto s = [&](int mu, int nu) {
          double hat = 0;
          if (mu == nu) hat = alpha / 2;
          if (mu == -nu) hat = -alpha / 2;
          return hat - am[size_t(sdirIndex(mu, d) * twoD + sdirIndex(nu, d))];
        };
        FieldPolynomial P = potentialV(vol, j, B, s, K.degCap);
        if (!P.isZero()) out.add(closure(vol, makePolymer(j, {B})), std::move(P));
      }
      break;
    }
  }
  return out;
}

double polymerSumNumeric(const Volume& vol, int j,
                         const std::map<Polymer, FieldPolynomial>& entries,
                         const std::function<double(int)>& bgValue, const FieldSample& phi) {
  // product of backgrounds over all blocks, divided per covered footprint
  double bgAll = 1;
  for (int b = 0; b < vol.numBlocks(j); ++b) bgAll *= bgValue(b);
  std::vector<const Polymer*> supp;
  std::vector<double> val;
  std::vector<double> bgFoot;
  for (auto& [X, P] : entries) {
    supp.push_back(&X);
    val.push_back(P.evaluate(phi));
    double bf = 1;
    for (int b : X.blocks) bf *= bgValue(b);
    bgFoot.push_back(bf);
  }
  double total = bgAll;  // empty family
  std::vector<int> chosen;
  std::function<void(size_t)> rec = [&](size_t next) {
    for (size_t i = next; i < supp.size(); ++i) {
      bool ok = true;
      for (int ci : chosen)
        if (!strictlyDisjoint(vol, *supp[size_t(ci)], *supp[i])) ok = false;
      if (!ok) continue;
      chosen.push_back(int(i));
      double bg = bgAll;
      double kv = 1;
      for (int ci : chosen) {
        bg /= bgFoot[size_t(ci)];
        kv *= val[size_t(ci)];
      }
      total += bg * kv;
      rec(i + 1);
      chosen.pop_back();
    }
  };
  rec(0);
  return total;
}

double polymerSumWickUnitBg(const Volume& vol, int j,
                            const std::map<Polymer, FieldPolynomial>& entries,
                            const FieldSample& phiPrime, const SymKernel& gamma) {
  KernelGradCov cov(gamma);
  std::vector<const Polymer*> supp;
  std::vector<FieldPolynomial> zpoly;  // zeta-symbolic, phi' plugged in
  for (auto& [X, P] : entries) {
    supp.push_back(&X);
    zpoly.push_back(P.substPhiToPhiPlusZeta().evaluatePhiPartial(phiPrime, kMaxMonoDeg));
  }
  double total = 1.0;  // empty family integrates to 1
  std::vector<int> chosen;
  std::function<void(size_t)> rec = [&](size_t next) {
    for (size_t i = next; i < supp.size(); ++i) {
      bool ok = true;
      for (int ci : chosen)
        if (!strictlyDisjoint(vol, *supp[size_t(ci)], *supp[i])) ok = false;
      if (!ok) continue;
      chosen.push_back(int(i));
      FieldPolynomial prod = FieldPolynomial::constant(1.0, kMaxMonoDeg);
      for (int ci : chosen) prod = prod.mul(zpoly[size_t(ci)]);
      if (prod.truncationMass > 1e-12)
        throw std::runtime_error("polymerSumWickUnitBg: degree overflow in exact evaluation");
      total += prod.wickZeta(cov).constantTerm();
      rec(i + 1);
      chosen.pop_back();
    }
  };
  rec(0);
  return total;
}

}  // namespace dgt
