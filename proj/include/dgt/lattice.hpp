#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgt {

// Lattice site / offset. Coordinates beyond the active dimension stay 0,
// so a Pt can be hashed and compared independently of d.
using Pt = std::array<int, 3>;

inline Pt pt(int x, int y = 0, int z = 0) { return Pt{x, y, z}; }

inline Pt operator+(Pt a, const Pt& b) {
  for (int i = 0; i < 3; ++i) a[i] += b[i];
  return a;
}
inline Pt operator-(Pt a, const Pt& b) {
  for (int i = 0; i < 3; ++i) a[i] -= b[i];
  return a;
}
inline Pt operator-(Pt a) {
  for (int i = 0; i < 3; ++i) a[i] = -a[i];
  return a;
}

inline int linfNorm(const Pt& a) {
  int m = 0;
  for (int i = 0; i < 3; ++i) m = std::max(m, std::abs(a[i]));
  return m;
}
inline double l2Norm(const Pt& a) {
  double s = 0;
  for (int i = 0; i < 3; ++i) s += double(a[i]) * a[i];
  return std::sqrt(s);
}

// Signed direction mu in {1..d} u {-1..-d}; e_{-mu} = -e_mu.
inline Pt unitVec(int mu) {
  Pt e{0, 0, 0};
  int a = std::abs(mu) - 1;
  assert(a >= 0 && a < 3);
  e[a] = mu > 0 ? 1 : -1;
  return e;
}

inline long long ipow(long long b, int e) {
  long long r = 1;
  while (e-- > 0) r *= b;
  return r;
}

// Box volume Lambda_N = [-L^N/2, L^N/2]^d on the integer lattice: side L^N,
// centered at the origin (L odd). Blocks at scale j are the L^j-cubes of the
// induced paving; block ids are flattened indices at the given scale.
struct Volume {
  int d = 3;
  int L = 3;
  int N = 1;

  Volume() = default;
  Volume(int d_, int L_, int N_) : d(d_), L(L_), N(N_) {
    if (L < 3 || L % 2 == 0) throw std::invalid_argument("Volume: L must be odd and >= 3");
    if (d < 1 || d > 3) throw std::invalid_argument("Volume: d must be 1..3");
    if (N < 0) throw std::invalid_argument("Volume: N must be >= 0");
  }

  long long side() const { return ipow(L, N); }
  long long numSites() const { return ipow(side(), d); }
  int blocksPerAxis(int j) const {
    assert(j >= 0 && j <= N);
    return int(ipow(L, N - j));
  }
  long long numBlocks(int j) const { return ipow(blocksPerAxis(j), d); }
  long long blockSites(int j) const { return ipow(ipow(L, j), d); }

  std::array<int, 3> blockCoords(int j, int id) const {
    int n = blocksPerAxis(j);
    std::array<int, 3> b{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      b[a] = id % n;
      id /= n;
    }
    return b;
  }
  int blockId(int j, const std::array<int, 3>& b) const {
    int n = blocksPerAxis(j);
    int id = 0;
    for (int a = d - 1; a >= 0; --a) {
      assert(b[a] >= 0 && b[a] < n);
      id = id * n + b[a];
    }
    return id;
  }

  // Smallest site coordinate of block b along axis a.
  int siteLo(int j, int bcoord) const {
    long long lo = -(side() - 1) / 2 + (long long)bcoord * ipow(L, j);
    return int(lo);
  }
  // Block (at scale j) containing a site; site must lie in the volume.
  int blockOfSite(int j, const Pt& x) const {
    std::array<int, 3> b{0, 0, 0};
    long long half = (side() - 1) / 2;
    long long lj = ipow(L, j);
    for (int a = 0; a < d; ++a) {
      long long s = (long long)x[a] + half;
      if (s < 0 || s >= side()) throw std::out_of_range("blockOfSite: site outside volume");
      b[a] = int(s / lj);
    }
    return blockId(j, b);
  }
  bool containsSite(const Pt& x) const {
    long long half = (side() - 1) / 2;
    for (int a = 0; a < d; ++a)
      if (std::abs((long long)x[a]) > half) return false;
    return true;
  }

  std::vector<Pt> blockSiteList(int j, int id) const {
    auto b = blockCoords(j, id);
    int lj = int(ipow(L, j));
    std::array<int, 3> lo{0, 0, 0};
    for (int a = 0; a < d; ++a) lo[a] = siteLo(j, b[a]);
    std::vector<Pt> out;
    out.reserve(ipow(lj, d));
    Pt x{0, 0, 0};
    std::array<int, 3> c{0, 0, 0};
    while (true) {
      for (int a = 0; a < d; ++a) x[a] = lo[a] + c[a];
      out.push_back(x);
      int a = 0;
      for (; a < d; ++a) {
        if (++c[a] < lj) break;
        c[a] = 0;
      }
      if (a == d) break;
    }
    return out;
  }

  // Parent block id at scale j+1 of a scale-j block.
  int parent(int j, int id) const {
    auto b = blockCoords(j, id);
    for (int a = 0; a < d; ++a) b[a] /= L;
    return blockId(j + 1, b);
  }

  bool isBoundaryBlock(int j, int id) const {
    auto b = blockCoords(j, id);
    int n = blocksPerAxis(j);
    for (int a = 0; a < d; ++a)
      if (b[a] == 0 || b[a] == n - 1) return true;
    return false;
  }

  std::vector<Pt> allSites() const {
    std::vector<Pt> out;
    long long half = (side() - 1) / 2;
    Pt x{0, 0, 0};
    std::array<long long, 3> c{0, 0, 0};
    out.reserve(numSites());
    while (true) {
      for (int a = 0; a < d; ++a) x[a] = int(c[a] - half);
      out.push_back(x);
      int a = 0;
      for (; a < d; ++a) {
        if (++c[a] < side()) break;
        c[a] = 0;
      }
      if (a == d) break;
    }
    return out;
  }
};

}  // namespace dgt
