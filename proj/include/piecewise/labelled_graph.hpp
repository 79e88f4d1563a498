#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "piecewise/letter.hpp"
#include "piecewise/vertex.hpp"

namespace piecewise {

// Raised when a letter action would leave the materialized window of an
// infinite universe.  Never silently truncated into a self-loop.
struct WindowOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotInWindow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Letter-labelled graph (X, E, m): each of the k letters acts as a partial
// injection on the vertex set; vertices without an outgoing edge for a letter
// carry an implicit self-loop, so the regularized degree is always 2k.
//
// Infinite universes are materialized on a finite window.  Edges whose head
// lies just outside the window are stored so that act() can distinguish a
// genuine self-loop from a window exit (the latter throws WindowOverflow).
class LabelledGraph {
 public:
  struct Edge {
    VertexId src, dst;
  };

  LabelledGraph(int alphabet_size, VertexId root, std::vector<VertexId> vertices,
                std::vector<std::vector<Edge>> edges_per_letter, bool finite_universe)
      : k_(alphabet_size),
        root_(std::move(root)),
        vertices_(std::move(vertices)),
        edges_(std::move(edges_per_letter)),
        finite_(finite_universe) {
    if (k_ < 1) throw std::invalid_argument("LabelledGraph: alphabet size must be >= 1");
    if (static_cast<int>(edges_.size()) != k_)
      throw std::invalid_argument("LabelledGraph: one edge list per letter required");
    std::sort(vertices_.begin(), vertices_.end());
    vertices_.erase(std::unique(vertices_.begin(), vertices_.end()), vertices_.end());
    for (const auto& v : vertices_) index_.emplace(v, index_.size());
    if (!index_.count(root_))
      throw std::invalid_argument("LabelledGraph: root not in vertex set");
    fwd_.resize(k_);
    bwd_.resize(k_);
    for (int i = 0; i < k_; ++i) {
      for (const auto& e : edges_[i]) {
        if (!index_.count(e.src) && !index_.count(e.dst))
          throw std::invalid_argument("LabelledGraph: edge with both ends off-window");
        if (!fwd_[i].emplace(e.src, e.dst).second) dup_src_.push_back({i, e.src});
        if (!bwd_[i].emplace(e.dst, e.src).second) dup_dst_.push_back({i, e.dst});
      }
    }
  }

  int alphabet_size() const { return k_; }
  const VertexId& root() const { return root_; }
  bool finite_universe() const { return finite_; }
  const std::vector<VertexId>& vertices() const { return vertices_; }
  bool contains(const VertexId& v) const { return index_.count(v) != 0; }
  std::size_t vertex_index(const VertexId& v) const {
    auto it = index_.find(v);
    if (it == index_.end()) throw NotInWindow("vertex not in window: " + v.encode());
    return it->second;
  }

  // Image of v under one letter.  Implicit self-loop when no edge is present.
  // Throws NotInWindow if v itself is outside the window and WindowOverflow
  // if the image is a materialized off-window vertex.
  VertexId act(const VertexId& v, const Letter& l) const {
    if (l.index < 1 || l.index > k_)
      throw std::invalid_argument("act: letter index out of range");
    if (!contains(v)) throw NotInWindow("act: vertex not in window: " + v.encode());
    const auto& m = l.inv ? bwd_[l.index - 1] : fwd_[l.index - 1];
    auto it = m.find(v);
    if (it == m.end()) return v;
    if (!finite_ && !contains(it->second))
      throw WindowOverflow("act: image leaves window: " + v.encode() + " --" +
                           l.encode() + "--> " + it->second.encode());
    return it->second;
  }

  // Like act() but reports an off-window image instead of throwing; used by
  // validation and boundary-aware sweeps.
  std::optional<VertexId> act_raw(const VertexId& v, const Letter& l) const {
    const auto& m = l.inv ? bwd_[l.index - 1] : fwd_[l.index - 1];
    auto it = m.find(v);
    if (it == m.end()) return v;
    return it->second;
  }

  VertexId act_word(const VertexId& v, const Word& w) const {
    // Words act on the left: the last letter of w is applied first.
    VertexId cur = v;
    for (auto it = w.rbegin(); it != w.rend(); ++it) cur = act(cur, *it);
    return cur;
  }

  const std::vector<Edge>& edges(int letter_index) const {
    return edges_.at(letter_index - 1);
  }

  struct ValidationReport {
    bool ok = true;
    std::vector<std::string> defects;
  };

  // Checks that every letter acts as a partial injection consistent with its
  // inverse, reporting each defect. Degree regularity is structural (implicit
  // self-loops), so it is asserted rather than searched for.
  ValidationReport validate() const {
    ValidationReport rep;
    auto flag = [&rep](std::string msg) {
      rep.ok = false;
      rep.defects.push_back(std::move(msg));
    };
    for (const auto& [i, v] : dup_src_)
      flag("letter +" + std::to_string(i + 1) + " has two edges out of " + v.encode());
    for (const auto& [i, v] : dup_dst_)
      flag("letter +" + std::to_string(i + 1) + " is not injective at " + v.encode());
    for (int i = 0; i < k_; ++i) {
      for (const auto& [src, dst] : fwd_[i]) {
        auto it = bwd_[i].find(dst);
        if (it == bwd_[i].end() || !(it->second == src))
          flag("letter +" + std::to_string(i + 1) + " inverse mismatch at " +
               src.encode());
      }
    }
    return rep;
  }

 private:
  int k_;
  VertexId root_;
  std::vector<VertexId> vertices_;
  std::vector<std::vector<Edge>> edges_;
  bool finite_;
  std::unordered_map<VertexId, std::size_t, VertexHash> index_;
  std::vector<std::unordered_map<VertexId, VertexId, VertexHash>> fwd_, bwd_;
  std::vector<std::pair<int, VertexId>> dup_src_, dup_dst_;
};

// Breadth-first ball around a center; vertices sorted by (distance, encoding).
struct BallEnumeration {
  VertexId center;
  int radius = 0;
  std::vector<std::pair<VertexId, int>> points;  // (vertex, distance)
  std::vector<std::int64_t> volume;              // volume[r] = |B(center, r)|

  bool contains(const VertexId& v) const {
    for (const auto& [p, d] : points)
      if (p == v) return true;
    return false;
  }
};

BallEnumeration enumerate_ball(const LabelledGraph& g, const VertexId& center,
                               int radius);

// Group oracle for Cayley-graph construction.  kind selects which parameters
// are meaningful.  Tables are given as full multiplication tables with
// element 0 = identity.
struct GroupOracle {
  enum class Kind { Z, Zd, Mod, Table } kind = Kind::Z;
  int dim = 1;                                  // Zd
  std::int64_t modulus = 0;                     // Mod
  std::vector<std::vector<int>> table;          // Table: table[g][h] = g*h
  std::int64_t window = 0;                      // half-width for Z / Zd

  static GroupOracle z(std::int64_t window) {
    GroupOracle o;
    o.kind = Kind::Z;
    o.window = window;
    return o;
  }
  static GroupOracle zd(int dim, std::int64_t window) {
    GroupOracle o;
    o.kind = Kind::Zd;
    o.dim = dim;
    o.window = window;
    return o;
  }
  static GroupOracle mod(std::int64_t b) {
    GroupOracle o;
    o.kind = Kind::Mod;
    o.modulus = b;
    return o;
  }
  static GroupOracle from_table(std::vector<std::vector<int>> t) {
    GroupOracle o;
    o.kind = Kind::Table;
    o.table = std::move(t);
    return o;
  }
};

// Generator of a group oracle: integer shift(s) for Z/Zd/Mod, element index
// for Table.
struct OracleGenerator {
  std::vector<std::int64_t> shift;  // Z: {n}; Zd: d entries; Mod: {n}
  int element = 0;                  // Table
};

// Cayley graph of the oracle group w.r.t. the given generators; letter i acts
// by left multiplication with generator i.  Infinite oracles are materialized
// on the oracle's window.
LabelledGraph build_cayley(const GroupOracle& oracle,
                           const std::vector<OracleGenerator>& generators);

}  // namespace piecewise
