#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dgt/lattice.hpp"

namespace dgt {

// A j-polymer: sorted block ids at a fixed scale inside a Volume.
struct Polymer {
  int j = 0;
  std::vector<int> blocks;  // sorted, unique

  bool empty() const { return blocks.empty(); }
  int card() const { return int(blocks.size()); }  // |X|_j
  bool operator<(const Polymer& o) const {
    if (j != o.j) return j < o.j;
    return blocks < o.blocks;
  }
  bool operator==(const Polymer& o) const { return j == o.j && blocks == o.blocks; }
};

Polymer makePolymer(int j, std::vector<int> blocks);

// Blocks touch iff their closed cubes intersect: block-coordinate linf
// distance <= 1 (corners count).
bool blocksTouch(const Volume& vol, int j, int a, int b);

std::vector<Polymer> connectedComponents(const Volume& vol, const Polymer& X);
bool isConnected(const Volume& vol, const Polymer& X);
inline bool isSmallSet(const Volume& vol, const Polymer& X) {
  return !X.empty() && X.card() <= (1 << vol.d) && isConnected(vol, X);
}

// Strictly disjoint: no shared blocks and no touching.
bool strictlyDisjoint(const Volume& vol, const Polymer& X, const Polymer& Y);

// Small-set neighborhood: for connected chains of <= 2^d blocks the union of
// all small sets containing B is exactly the linf block-ball of radius 2^d-1.
Polymer blockStar(const Volume& vol, int j, int blockId);
Polymer polymerStar(const Volume& vol, const Polymer& X);

// Closure: smallest (j+1)-polymer containing X.
Polymer closure(const Volume& vol, const Polymer& X);

Polymer polymerUnion(const Polymer& X, const Polymer& Y);
bool polymerContains(const Polymer& X, int blockId);

// True if no block of X meets the boundary of the volume.
bool awayFromBoundary(const Volume& vol, const Polymer& X);

struct ClassifyReport {
  std::vector<Polymer> components;
  bool isSmall = false;
  Polymer star;
  Polymer closurePoly;
};
ClassifyReport classifyPolymer(const Volume& vol, const Polymer& X);

// All connected polymers with <= maxBlocks blocks, deterministic
// lexicographic order, each exactly once. budget caps the number of emitted
// polymers; exceeding it throws with the count reached in the message.
std::vector<Polymer> enumerateConnected(const Volume& vol, int j, int maxBlocks,
                                        long long budget = 50'000'000);
// Restricted to subsets of a given block set (same order guarantees).
std::vector<Polymer> enumerateConnectedWithin(const Volume& vol, int j,
                                              const std::vector<int>& universe, int maxBlocks,
                                              long long budget = 50'000'000);

// One chain term of the reassembly sum: pairs (B_i, X_i) with X_i small,
// B_i in X_i, all X_i and X strictly disjoint.
struct Chain {
  std::vector<std::pair<int, Polymer>> links;  // (block id, small set)
};

// Enumerates (X, chain) pairs with closure(U_i B_i^* union X) = U.
// kSupport: connected polymers on which the residual activity may be nonzero;
// jSupport: (B, X_i) pairs with nonzero J. Emits every admissible pair once.
void chainDecompositions(const Volume& vol, const Polymer& U,
                         const std::vector<Polymer>& kSupport,
                         const std::vector<std::pair<int, Polymer>>& jSupport,
                         const std::function<void(const Polymer&, const Chain&)>& emit);

struct GeometricConstant {
  double value = 0;
  double truncationBound = 0;
  bool capped = false;  // cap too small for a convergence certificate
};

enum class BracketKind { NonSmall, Small };

// sup_U A^{|U|_{j+1}} sum_{X connected, closure(X)=U, kind constraint} (A/2)^{-|X|_j}
// over interior U, enumerated up to |X|_j <= cap.
GeometricConstant geometricConstant(double A, int d, int L, BracketKind kind, int cap);

std::string polymerToString(const Polymer& X);

}  // namespace dgt
