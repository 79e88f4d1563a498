#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "piecewise/group_element.hpp"
#include "piecewise/labelled_graph.hpp"

namespace piecewise {

struct HoughtonInfo {
  int k = 0;
  std::int64_t depth = 0;                       // materialized ray depth
  std::vector<std::pair<int, int>> pairs;       // generator pairs (i, j)
};

struct BubbleInfo {
  std::vector<std::int64_t> a;  // bubble half-lengths, extended past the input
  int cutoff = 0;               // max materialized word length |w|

  std::int64_t s(int k) const {  // distance from the root to b(w), |w| = k-1
    std::int64_t t = 0;
    for (int j = 1; j <= k; ++j) t += a.at(j - 1);
    return t;
  }
  VertexId root() const { return VertexId::bubble({}, 0); }
  // Midpoint m_k = (1^{k-1}, a_k / 2) of the spine bubble at level k.
  VertexId midpoint(int k) const {
    return VertexId::bubble(std::vector<std::int64_t>(k - 1, 1), a.at(k - 1) / 2);
  }
  // Branching cycle b(w) = {(w, a_{|w|+1}), (w1, 0), (w2, 0)}.
  std::vector<VertexId> branching_cycle(const std::vector<std::int64_t>& w) const {
    std::vector<std::int64_t> w1 = w, w2 = w;
    w1.push_back(1);
    w2.push_back(2);
    return {VertexId::bubble(w, a.at(w.size())), VertexId::bubble(w1, 0),
            VertexId::bubble(w2, 0)};
  }
};

// A constructed graph together with its algebraic context where one exists
// (Cayley graphs, rooted gluings, pocket/star extensions, Houghton graphs)
// and construction metadata for the specialized universes.
struct GroupSystem {
  std::shared_ptr<LabelledGraph> graph;
  std::shared_ptr<GroupContext> ctx;        // null for generic Schreier graphs
  std::shared_ptr<HoughtonInfo> houghton;
  std::shared_ptr<BubbleInfo> bubble;
};

struct ComponentSpec {
  GroupOracle oracle;
  std::vector<OracleGenerator> generators;
};

// Cayley graph of one oracle group, wrapped with its context.
GroupSystem cayley_system(const GroupOracle& oracle,
                          const std::vector<OracleGenerator>& generators,
                          const std::string& name = "cayley");

// General gluing of two labelled graphs along an identified vertex list:
// identify[i].first in X1 is identified with identify[i].second in X2.
// Letters are the concatenated alphabets.  Graph-level only (no context).
GroupSystem glue(const LabelledGraph& g1, const LabelledGraph& g2,
                 const std::vector<std::pair<VertexId, VertexId>>& identify);

// Rooted gluing of Cayley graphs: roots are identified into a single shared
// root, other vertices are namespaced per component.  The resulting context
// carries the normal-form structure gamma = gamma_1 ... gamma_l' tau.
GroupSystem rooted_gluing(const std::vector<ComponentSpec>& components,
                          const std::string& name = "rooted_gluing");

// Pocket extension: adds the pocket point and the letter tau = (root *) with
// index k+1.
GroupSystem pocket_extension(const GroupSystem& base);

// Star extension: adds letters t_i = (root, s_i root), indices k+1..2k, on
// the unchanged vertex set.
GroupSystem star_extension(const GroupSystem& base);

// Houghton group H_k on k rays; generator letters are the listed pairs
// (default {h_{1,2}, ..., h_{1,k}}).  depth is the materialized ray depth.
GroupSystem build_houghton(int k, std::int64_t depth,
                           std::vector<std::pair<int, int>> pairs = {});

// h_{i,j}^m as a group element of a Houghton context (any pair, independent
// of the graph's letter set).
GroupElement houghton_element(const std::shared_ptr<const GroupContext>& ctx, int i,
                              int j, std::int64_t m);

struct BubbleSpec {
  std::vector<std::int64_t> a;  // each divisible by 4, strictly increasing
  int cutoff = 1;               // materialize all (w, u) with |w| <= cutoff
};

// Bubble graph X_a for branching sequence b = (3,3,...): letters alpha
// (bubble rotation, increasing offset) and beta (branching 3-cycles).
GroupSystem build_bubble(const BubbleSpec& spec);

}  // namespace piecewise
