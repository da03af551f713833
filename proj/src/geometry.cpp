#include "dgt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace dgt {

namespace {

struct Grid {
  int d = 3;
  std::array<int, 3> n{1, 1, 1};

  long long size() const {
    long long s = 1;
    for (int a = 0; a < d; ++a) s *= n[a];
    return s;
  }
  std::array<int, 3> coords(int id) const {
    std::array<int, 3> b{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      b[a] = id % n[a];
      id /= n[a];
    }
    return b;
  }
  int id(const std::array<int, 3>& b) const {
    int r = 0;
    for (int a = d - 1; a >= 0; --a) r = r * n[a] + b[a];
    return r;
  }
  bool touch(int i, int j) const {
    auto a = coords(i), b = coords(j);
    for (int k = 0; k < d; ++k)
      if (std::abs(a[k] - b[k]) > 1) return false;
    return true;
  }
  void neighbors(int i, std::vector<int>& out) const {
    out.clear();
    auto c = coords(i);
    std::array<int, 3> q = c;
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      lo[a] = std::max(0, c[a] - 1);
      hi[a] = std::min(n[a] - 1, c[a] + 1);
      q[a] = lo[a];
    }
    while (true) {
      if (q != c) out.push_back(id(q));
      int a = 0;
      for (; a < d; ++a) {
        if (++q[a] <= hi[a]) break;
        q[a] = lo[a];
      }
      if (a == d) break;
    }
  }
};

Grid gridAt(const Volume& vol, int j) {
  Grid g;
  g.d = vol.d;
  int s = vol.blocksPerAxis(j);
  g.n = {s, s, s};
  for (int a = vol.d; a < 3; ++a) g.n[a] = 1;
  return g;
}

void checkScale(const Volume& vol, const Polymer& X) {
  if (X.j < 0 || X.j > vol.N) throw std::invalid_argument("polymer scale outside volume scales");
}

// Unique enumeration of connected subsets (Uno-style): process candidates in
// a fixed order; after branching on a candidate it is banned for the rest of
// the level.
struct ConnEnum {
  const Grid* g;
  int maxBlocks;
  long long budget;
  long long emitted = 0;
  std::vector<char> banned;
  std::vector<char> inSet;
  std::vector<char> queued;
  std::vector<int> cur;
  std::function<void(const std::vector<int>&)> emit;
  std::vector<int> nbrBuf;

  void run(const std::vector<int>& universe) {
    size_t n = size_t(g->size());
    banned.assign(n, 1);
    inSet.assign(n, 0);
    queued.assign(n, 0);
    for (int b : universe) banned[size_t(b)] = 0;
    std::vector<int> roots = universe;
    std::sort(roots.begin(), roots.end());
    for (int r : roots) {
      cur = {r};
      inSet[size_t(r)] = 1;
      doEmit();
      if (maxBlocks > 1) {
        std::deque<int> ext;
        g->neighbors(r, nbrBuf);
        std::sort(nbrBuf.begin(), nbrBuf.end());
        for (int w : nbrBuf)
          if (!banned[size_t(w)] && !inSet[size_t(w)]) {
            ext.push_back(w);
            queued[size_t(w)] = 1;
          }
        rec(ext);
        for (int w : ext) queued[size_t(w)] = 0;
      }
      inSet[size_t(r)] = 0;
      banned[size_t(r)] = 1;  // subsets containing r are done
    }
  }

  void doEmit() {
    if (++emitted > budget)
      throw std::runtime_error("enumerate_connected: budget exceeded at " + std::to_string(emitted - 1) +
                               " polymers");
    std::vector<int> s = cur;
    std::sort(s.begin(), s.end());
    emit(s);
  }

  void rec(std::deque<int> ext) {
    std::vector<int> bannedHere;
    while (!ext.empty()) {
      int u = ext.front();
      ext.pop_front();
      queued[size_t(u)] = 0;
      // branch with u
      cur.push_back(u);
      inSet[size_t(u)] = 1;
      doEmit();
      if (int(cur.size()) < maxBlocks) {
        std::deque<int> next = ext;
        std::vector<int> added;
        g->neighbors(u, nbrBuf);
        std::sort(nbrBuf.begin(), nbrBuf.end());
        for (int w : nbrBuf)
          if (!banned[size_t(w)] && !inSet[size_t(w)] && !queued[size_t(w)]) {
            next.push_back(w);
            queued[size_t(w)] = 1;
            added.push_back(w);
          }
        rec(next);
        for (int w : added) queued[size_t(w)] = 0;
      }
      inSet[size_t(u)] = 0;
      cur.pop_back();
      // u now banned for the remaining branches at this level
      banned[size_t(u)] = 1;
      bannedHere.push_back(u);
    }
    for (int u : bannedHere) banned[size_t(u)] = 0;
  }
};

std::vector<Polymer> enumerateOnGrid(const Grid& g, int j, const std::vector<int>& universe,
                                     int maxBlocks, long long budget) {
  std::vector<Polymer> out;
  ConnEnum e;
  e.g = &g;
  e.maxBlocks = maxBlocks;
  e.budget = budget;
  e.emit = [&](const std::vector<int>& s) { out.push_back(Polymer{j, s}); };
  e.run(universe);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Polymer makePolymer(int j, std::vector<int> blocks) {
  std::sort(blocks.begin(), blocks.end());
  blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
  return Polymer{j, std::move(blocks)};
}

bool blocksTouch(const Volume& vol, int j, int a, int b) {
  return gridAt(vol, j).touch(a, b);
}

std::vector<Polymer> connectedComponents(const Volume& vol, const Polymer& X) {
  checkScale(vol, X);
  Grid g = gridAt(vol, X.j);
  std::vector<Polymer> comps;
  std::vector<char> seen(X.blocks.size(), 0);
  for (size_t i = 0; i < X.blocks.size(); ++i) {
    if (seen[i]) continue;
    std::vector<int> comp{X.blocks[i]};
    seen[i] = 1;
    for (size_t k = 0; k < comp.size(); ++k) {
      for (size_t m = 0; m < X.blocks.size(); ++m) {
        if (!seen[m] && g.touch(comp[k], X.blocks[m])) {
          seen[m] = 1;
          comp.push_back(X.blocks[m]);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(Polymer{X.j, std::move(comp)});
  }
  std::sort(comps.begin(), comps.end());
  return comps;
}

bool isConnected(const Volume& vol, const Polymer& X) {
  if (X.empty()) return false;
  return connectedComponents(vol, X).size() == 1;
}

bool strictlyDisjoint(const Volume& vol, const Polymer& X, const Polymer& Y) {
  if (X.j != Y.j) throw std::invalid_argument("strictlyDisjoint: mixed scales");
  Grid g = gridAt(vol, X.j);
  for (int a : X.blocks)
    for (int b : Y.blocks)
      if (a == b || g.touch(a, b)) return false;
  return true;
}

Polymer blockStar(const Volume& vol, int j, int blockId) {
  Grid g = gridAt(vol, j);
  auto c = g.coords(blockId);
  int r = (1 << vol.d) - 1;
  std::vector<int> blocks;
  std::array<int, 3> q{0, 0, 0};
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < vol.d; ++a) {
    lo[a] = std::max(0, c[a] - r);
    hi[a] = std::min(g.n[a] - 1, c[a] + r);
    q[a] = lo[a];
  }
  while (true) {
    blocks.push_back(g.id(q));
    int a = 0;
    for (; a < vol.d; ++a) {
      if (++q[a] <= hi[a]) break;
      q[a] = lo[a];
    }
    if (a == vol.d) break;
  }
  return makePolymer(j, std::move(blocks));
}

Polymer polymerStar(const Volume& vol, const Polymer& X) {
  checkScale(vol, X);
  std::vector<int> blocks;
  for (int b : X.blocks) {
    Polymer s = blockStar(vol, X.j, b);
    blocks.insert(blocks.end(), s.blocks.begin(), s.blocks.end());
  }
  return makePolymer(X.j, std::move(blocks));
}

Polymer closure(const Volume& vol, const Polymer& X) {
  checkScale(vol, X);
  if (X.j + 1 > vol.N) throw std::invalid_argument("closure: next scale outside volume");
  std::vector<int> parents;
  parents.reserve(X.blocks.size());
  for (int b : X.blocks) parents.push_back(vol.parent(X.j, b));
  return makePolymer(X.j + 1, std::move(parents));
}

Polymer polymerUnion(const Polymer& X, const Polymer& Y) {
  if (!X.blocks.empty() && !Y.blocks.empty() && X.j != Y.j)
    throw std::invalid_argument("polymerUnion: mixed scales");
  std::vector<int> b = X.blocks;
  b.insert(b.end(), Y.blocks.begin(), Y.blocks.end());
  return makePolymer(X.blocks.empty() ? Y.j : X.j, std::move(b));
}

bool polymerContains(const Polymer& X, int blockId) {
  return std::binary_search(X.blocks.begin(), X.blocks.end(), blockId);
}

bool awayFromBoundary(const Volume& vol, const Polymer& X) {
  for (int b : X.blocks)
    if (vol.isBoundaryBlock(X.j, b)) return false;
  return true;
}

ClassifyReport classifyPolymer(const Volume& vol, const Polymer& X) {
  checkScale(vol, X);
  ClassifyReport rep;
  rep.components = connectedComponents(vol, X);
  rep.isSmall = isSmallSet(vol, X);
  rep.star = polymerStar(vol, X);
  if (X.j + 1 <= vol.N) rep.closurePoly = closure(vol, X);
  return rep;
}

std::vector<Polymer> enumerateConnected(const Volume& vol, int j, int maxBlocks, long long budget) {
  if (maxBlocks < 1) throw std::invalid_argument("enumerateConnected: maxBlocks >= 1");
  Grid g = gridAt(vol, j);
  std::vector<int> universe(size_t(g.size()));
  for (size_t i = 0; i < universe.size(); ++i) universe[i] = int(i);
  return enumerateOnGrid(g, j, universe, maxBlocks, budget);
}

std::vector<Polymer> enumerateConnectedWithin(const Volume& vol, int j,
                                              const std::vector<int>& universe, int maxBlocks,
                                              long long budget) {
  if (maxBlocks < 1) throw std::invalid_argument("enumerateConnected: maxBlocks >= 1");
  return enumerateOnGrid(gridAt(vol, j), j, universe, maxBlocks, budget);
}

void chainDecompositions(const Volume& vol, const Polymer& U,
                         const std::vector<Polymer>& kSupport,
                         const std::vector<std::pair<int, Polymer>>& jSupport,
                         const std::function<void(const Polymer&, const Chain&)>& emit) {
  int j = U.j - 1;
  if (j < 0) throw std::invalid_argument("chainDecompositions: U must live at scale >= 1");
  Grid g = gridAt(vol, j);

  // Blocks of U at scale j; the residual polymer must live inside them.
  std::vector<char> inU(size_t(g.size()), 0);
  {
    Grid gu = gridAt(vol, U.j);
    for (int bu : U.blocks) {
      (void)gu;
      // children of bu
      auto c = vol.blockCoords(U.j, bu);
      std::array<int, 3> q{0, 0, 0};
      std::function<void(int)> recAxis = [&](int a) {
        if (a == vol.d) {
          inU[size_t(vol.blockId(j, q))] = 1;
          return;
        }
        for (int t = 0; t < vol.L; ++t) {
          q[a] = c[a] * vol.L + t;
          recAxis(a + 1);
        }
      };
      recAxis(0);
    }
  }

  struct Obj {
    bool isJ;
    int B = -1;           // J objects
    const Polymer* poly;  // footprint (X_i for J, Y for K)
  };
  std::vector<Obj> objs;
  for (const auto& Y : kSupport) {
    if (Y.j != j) continue;
    bool ok = true;
    for (int b : Y.blocks)
      if (!inU[size_t(b)]) ok = false;
    if (ok) objs.push_back(Obj{false, -1, &Y});
  }
  for (const auto& [B, Xi] : jSupport) {
    if (Xi.j != j) continue;
    objs.push_back(Obj{true, B, &Xi});
  }

  std::vector<int> chosen;
  std::function<bool(const Polymer&, const Polymer&)> disj = [&](const Polymer& A, const Polymer& B2) {
    for (int a : A.blocks)
      for (int b : B2.blocks)
        if (a == b || g.touch(a, b)) return false;
    return true;
  };

  std::function<void(size_t)> rec = [&](size_t next) {
    // Test the closure condition for the current selection.
    {
      Polymer foot{j, {}};
      Chain ch;
      Polymer X{j, {}};
      bool any = false;
      for (int i : chosen) {
        const Obj& o = objs[size_t(i)];
        any = true;
        if (o.isJ) {
          ch.links.push_back({o.B, *o.poly});
          foot = polymerUnion(foot, blockStar(vol, j, o.B));
        } else {
          X = polymerUnion(X, *o.poly);
          foot = polymerUnion(foot, *o.poly);
        }
      }
      if (any) {
        Polymer cl = closure(vol, foot);
        if (cl == U) emit(X, ch);
      }
    }
    for (size_t i = next; i < objs.size(); ++i) {
      bool ok = true;
      for (int c : chosen)
        if (!disj(*objs[size_t(c)].poly, *objs[i].poly)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      chosen.push_back(int(i));
      rec(i + 1);
      chosen.pop_back();
    }
  };
  rec(0);
}

GeometricConstant geometricConstant(double A, int d, int L, BracketKind kind, int cap) {
  if (cap < 1) throw std::invalid_argument("geometricConstant: cap >= 1");
  int small = 1 << d;
  // Interior window: U-grid of side 2*cap+3 at scale j+1, child grid scale j.
  int sideU = 2 * cap + 3;
  Grid gU;
  gU.d = d;
  gU.n = {sideU, sideU, sideU};
  for (int a = d; a < 3; ++a) gU.n[a] = 1;
  Grid gX;
  gX.d = d;
  gX.n = {sideU * L, sideU * L, sideU * L};
  for (int a = d; a < 3; ++a) gX.n[a] = 1;

  auto parentOf = [&](int id) {
    auto c = gX.coords(id);
    std::array<int, 3> p{0, 0, 0};
    for (int a = 0; a < d; ++a) p[a] = c[a] / L;
    return gU.id(p);
  };

  // U connected, containing the center U-block.
  std::array<int, 3> centerC{0, 0, 0};
  for (int a = 0; a < d; ++a) centerC[a] = sideU / 2;
  int centerU = gU.id(centerC);

  // |U| <= cap and U connected through the center, so U stays in this ball.
  std::vector<int> uUniverse;
  for (int i = 0; i < int(gU.size()); ++i) {
    auto c = gU.coords(i);
    int dist = 0;
    for (int a = 0; a < d; ++a) dist = std::max(dist, std::abs(c[a] - centerC[a]));
    if (dist <= cap - 1) uUniverse.push_back(i);
  }

  GeometricConstant out;
  double logHalfA = std::log(A / 2.0);

  std::vector<Polymer> uList;
  {
    ConnEnum e;
    e.g = &gU;
    e.maxBlocks = cap;  // |U| <= |X| <= cap
    e.budget = 20'000'000;
    e.emit = [&](const std::vector<int>& s) {
      if (std::binary_search(s.begin(), s.end(), centerU)) uList.push_back(Polymer{1, s});
    };
    e.run(uUniverse);
  }

  for (const auto& U : uList) {
    // Children universe.
    std::vector<int> childUniverse;
    for (int bu : U.blocks) {
      auto c = gU.coords(bu);
      std::array<int, 3> q{0, 0, 0};
      std::function<void(int)> recAxis = [&](int a) {
        if (a == d) {
          childUniverse.push_back(gX.id(q));
          return;
        }
        for (int t = 0; t < L; ++t) {
          q[a] = c[a] * L + t;
          recAxis(a + 1);
        }
      };
      recAxis(0);
    }
    std::sort(childUniverse.begin(), childUniverse.end());

    double sum = 0;
    ConnEnum e;
    e.g = &gX;
    e.maxBlocks = cap;
    e.budget = 100'000'000;
    e.emit = [&](const std::vector<int>& s) {
      int m = int(s.size());
      bool isSmallX = m <= small;  // connected by construction
      if ((kind == BracketKind::Small) != isSmallX) return;
      // closure(X) = U?
      std::vector<int> par;
      par.reserve(s.size());
      for (int b : s) par.push_back(parentOf(b));
      std::sort(par.begin(), par.end());
      par.erase(std::unique(par.begin(), par.end()), par.end());
      if (par != U.blocks) return;
      sum += std::exp(-m * logHalfA);
    };
    e.run(childUniverse);
    double val = std::pow(A, double(U.card())) * sum;
    out.value = std::max(out.value, val);

    // Tail over |X| = m > cap: count bound |children| * (e*Delta)^{m-1}.
    double delta = std::pow(3.0, d) - 1.0;
    double q = std::exp(1.0) * delta / (A / 2.0);
    if (q >= 1.0) {
      out.capped = true;
    } else {
      double first = double(childUniverse.size()) *
                     std::pow(std::exp(1.0) * delta, double(cap)) * std::pow(A / 2.0, -double(cap + 1));
      out.truncationBound =
          std::max(out.truncationBound, std::pow(A, double(U.card())) * first / (1.0 - q));
    }
  }
  return out;
}

std::string polymerToString(const Polymer& X) {
  std::ostringstream os;
  os << "j" << X.j << "{";
  for (size_t i = 0; i < X.blocks.size(); ++i) os << (i ? "," : "") << X.blocks[i];
  os << "}";
  return os.str();
}

}  // namespace dgt
