#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "piecewise/vertex.hpp"

namespace piecewise {

// Finitely supported permutation of the vertex universe.  Only moved points
// are stored; the map is kept sorted so encodings and iteration order are
// deterministic.  Invariant: values are a permutation of the keys and no
// fixed points are stored.
class FinPerm {
 public:
  FinPerm() = default;

  // Builds from moved-point pairs; throws if the pairs do not describe a
  // bijection of their own support.
  explicit FinPerm(std::map<VertexId, VertexId> moved) : map_(std::move(moved)) {
    for (auto it = map_.begin(); it != map_.end();) {
      if (it->first == it->second)
        it = map_.erase(it);
      else
        ++it;
    }
    std::map<VertexId, int> counts;
    for (const auto& [k, v] : map_) {
      counts[v]++;
      if (!map_.count(v))
        throw std::invalid_argument("FinPerm: image " + v.encode() +
                                    " escapes the support");
    }
    for (const auto& [v, c] : counts)
      if (c != 1) throw std::invalid_argument("FinPerm: not injective at " + v.encode());
  }

  static FinPerm identity() { return FinPerm(); }

  static FinPerm transposition(const VertexId& x, const VertexId& y) {
    if (x == y) return FinPerm();
    std::map<VertexId, VertexId> m;
    m[x] = y;
    m[y] = x;
    return FinPerm(std::move(m));
  }

  // Cycle (x1 x2 ... xn): x1 -> x2 -> ... -> xn -> x1.
  static FinPerm cycle(const std::vector<VertexId>& pts) {
    std::map<VertexId, VertexId> m;
    if (pts.size() < 2) return FinPerm();
    for (std::size_t i = 0; i < pts.size(); ++i) m[pts[i]] = pts[(i + 1) % pts.size()];
    return FinPerm(std::move(m));
  }

  bool is_identity() const { return map_.empty(); }

  VertexId apply(const VertexId& x) const {
    auto it = map_.find(x);
    return it == map_.end() ? x : it->second;
  }

  // (*this) after g: x -> this(g(x)).
  FinPerm compose(const FinPerm& g) const {
    std::map<VertexId, VertexId> m;
    for (const auto& [k, v] : g.map_) m[k] = apply(v);
    for (const auto& [k, v] : map_)
      if (!g.map_.count(k)) m[k] = v;
    return FinPerm(std::move(m));
  }

  FinPerm inverse() const {
    std::map<VertexId, VertexId> m;
    for (const auto& [k, v] : map_) m[v] = k;
    return FinPerm(std::move(m));
  }

  const std::map<VertexId, VertexId>& moved() const { return map_; }

  std::vector<VertexId> support() const {
    std::vector<VertexId> s;
    s.reserve(map_.size());
    for (const auto& [k, v] : map_) s.push_back(k);
    return s;
  }

  // Disjoint cycle decomposition, each cycle rotated to start at its least
  // element, cycles sorted by first element.
  std::vector<std::vector<VertexId>> cycles() const {
    std::vector<std::vector<VertexId>> out;
    std::map<VertexId, bool> seen;
    for (const auto& [k, v] : map_) {
      if (seen[k]) continue;
      std::vector<VertexId> cyc;
      VertexId cur = k;
      do {
        seen[cur] = true;
        cyc.push_back(cur);
        cur = apply(cur);
      } while (!(cur == k));
      out.push_back(std::move(cyc));
    }
    return out;
  }

  // +1 for even permutations, -1 for odd.
  int parity() const {
    int sign = 1;
    for (const auto& c : cycles())
      if (c.size() % 2 == 0) sign = -sign;
    return sign;
  }

  bool operator==(const FinPerm& o) const { return map_ == o.map_; }
  bool operator!=(const FinPerm& o) const { return !(*this == o); }
  bool operator<(const FinPerm& o) const { return map_ < o.map_; }

  std::string encode() const {
    if (map_.empty()) return "id";
    std::string s;
    for (const auto& c : cycles()) {
      s += "(";
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) s += " ";
        s += c[i].encode();
      }
      s += ")";
    }
    return s;
  }

  std::size_t hash() const {
    std::size_t h = 1469598103934665603ull;
    for (const auto& [k, v] : map_) {
      h ^= k.hash();
      h *= 1099511628211ull;
      h ^= v.hash();
      h *= 1099511628211ull;
    }
    return h;
  }

 private:
  std::map<VertexId, VertexId> map_;
};

}  // namespace piecewise
