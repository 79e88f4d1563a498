#include "piecewise/labelled_graph.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <unordered_map>

namespace piecewise {

BallEnumeration enumerate_ball(const LabelledGraph& g, const VertexId& center,
                               int radius) {
  if (!g.contains(center))
    throw NotInWindow("enumerate_ball: center not in window: " + center.encode());
  BallEnumeration ball;
  ball.center = center;
  ball.radius = radius;
  std::unordered_map<VertexId, int, VertexHash> dist;
  std::deque<VertexId> queue;
  dist.emplace(center, 0);
  queue.push_back(center);
  while (!queue.empty()) {
    VertexId cur = queue.front();
    queue.pop_front();
    int d = dist.at(cur);
    if (d == radius) continue;
    for (int i = 1; i <= g.alphabet_size(); ++i) {
      for (bool inv : {false, true}) {
        VertexId nxt = g.act(cur, Letter(i, inv));  // may throw WindowOverflow
        if (!dist.count(nxt)) {
          dist.emplace(nxt, d + 1);
          queue.push_back(nxt);
        }
      }
    }
  }
  ball.points.assign(dist.begin(), dist.end());
  std::sort(ball.points.begin(), ball.points.end(),
            [](const auto& x, const auto& y) {
              if (x.second != y.second) return x.second < y.second;
              return x.first < y.first;
            });
  ball.volume.assign(radius + 1, 0);
  for (const auto& [v, d] : ball.points) ball.volume[d]++;
  for (int r = 1; r <= radius; ++r) ball.volume[r] += ball.volume[r - 1];
  return ball;
}

namespace {

LabelledGraph build_cayley_z(std::int64_t window,
                             const std::vector<OracleGenerator>& gens) {
  std::vector<VertexId> verts;
  for (std::int64_t n = -window; n <= window; ++n) verts.push_back(VertexId::integer(n));
  std::vector<std::vector<LabelledGraph::Edge>> edges(gens.size());
  for (std::size_t i = 0; i < gens.size(); ++i) {
    if (gens[i].shift.size() != 1)
      throw std::invalid_argument("build_cayley: Z generator needs one shift");
    std::int64_t s = gens[i].shift[0];
    if (s == 0) continue;  // identity generator: all self-loops
    // Include edges entering the window from outside so inverse-letter
    // actions at the boundary overflow loudly instead of self-looping.
    for (std::int64_t n = -window - std::abs(s); n <= window + std::abs(s); ++n)
      if ((n >= -window && n <= window) || (n + s >= -window && n + s <= window))
        edges[i].push_back({VertexId::integer(n), VertexId::integer(n + s)});
  }
  return LabelledGraph(static_cast<int>(gens.size()), VertexId::integer(0),
                       std::move(verts), std::move(edges), /*finite=*/false);
}

LabelledGraph build_cayley_zd(int dim, std::int64_t window,
                              const std::vector<OracleGenerator>& gens) {
  std::vector<VertexId> verts;
  std::vector<std::int64_t> coord(dim, -window);
  for (;;) {
    verts.push_back(VertexId::grid(coord));
    int i = 0;
    for (; i < dim; ++i) {
      if (++coord[i] <= window) break;
      coord[i] = -window;
    }
    if (i == dim) break;
  }
  std::vector<std::vector<LabelledGraph::Edge>> edges(gens.size());
  for (std::size_t i = 0; i < gens.size(); ++i) {
    if (static_cast<int>(gens[i].shift.size()) != dim)
      throw std::invalid_argument("build_cayley: Zd generator dimension mismatch");
    bool zero = true;
    for (auto s : gens[i].shift) zero = zero && s == 0;
    if (zero) continue;
    for (const auto& v : verts) {
      std::vector<std::int64_t> img = v.vec();
      std::vector<std::int64_t> pre = v.vec();
      bool pre_inside = true;
      for (int d = 0; d < dim; ++d) {
        img[d] += gens[i].shift[d];
        pre[d] -= gens[i].shift[d];
        pre_inside = pre_inside && pre[d] >= -window && pre[d] <= window;
      }
      edges[i].push_back({v, VertexId::grid(std::move(img))});
      if (!pre_inside) edges[i].push_back({VertexId::grid(std::move(pre)), v});
    }
  }
  return LabelledGraph(static_cast<int>(gens.size()),
                       VertexId::grid(std::vector<std::int64_t>(dim, 0)),
                       std::move(verts), std::move(edges), /*finite=*/false);
}

LabelledGraph build_cayley_mod(std::int64_t b,
                               const std::vector<OracleGenerator>& gens) {
  if (b <= 0) throw std::invalid_argument("build_cayley: modulus must be positive");
  std::vector<VertexId> verts;
  for (std::int64_t n = 0; n < b; ++n) verts.push_back(VertexId::residue(n, b));
  std::vector<std::vector<LabelledGraph::Edge>> edges(gens.size());
  for (std::size_t i = 0; i < gens.size(); ++i) {
    if (gens[i].shift.size() != 1)
      throw std::invalid_argument("build_cayley: Mod generator needs one shift");
    std::int64_t s = ((gens[i].shift[0] % b) + b) % b;
    if (s == 0) continue;
    for (std::int64_t n = 0; n < b; ++n)
      edges[i].push_back({VertexId::residue(n, b), VertexId::residue(n + s, b)});
  }
  return LabelledGraph(static_cast<int>(gens.size()), VertexId::residue(0, b),
                       std::move(verts), std::move(edges), /*finite=*/true);
}

LabelledGraph build_cayley_table(const std::vector<std::vector<int>>& table,
                                 const std::vector<OracleGenerator>& gens) {
  const int n = static_cast<int>(table.size());
  if (n == 0) throw std::invalid_argument("build_cayley: empty table");
  for (const auto& row : table)
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("build_cayley: table is not square");
  // Element 0 must be the identity and every row/column a permutation.
  for (int g = 0; g < n; ++g) {
    if (table[0][g] != g || table[g][0] != g)
      throw std::invalid_argument("build_cayley: element 0 is not an identity");
    std::vector<bool> seen(n, false);
    for (int h = 0; h < n; ++h) {
      int p = table[g][h];
      if (p < 0 || p >= n || seen[p])
        throw std::invalid_argument("build_cayley: table row is not a bijection");
      seen[p] = true;
    }
  }
  std::vector<VertexId> verts;
  for (int g = 0; g < n; ++g) verts.push_back(VertexId::finite(g));
  std::vector<std::vector<LabelledGraph::Edge>> edges(gens.size());
  for (std::size_t i = 0; i < gens.size(); ++i) {
    int s = gens[i].element;
    if (s < 0 || s >= n)
      throw std::invalid_argument("build_cayley: generator element out of range");
    if (s == 0) continue;
    for (int g = 0; g < n; ++g)
      edges[i].push_back({VertexId::finite(g), VertexId::finite(table[s][g])});
  }
  return LabelledGraph(static_cast<int>(gens.size()), VertexId::finite(0),
                       std::move(verts), std::move(edges), /*finite=*/true);
}

}  // namespace

LabelledGraph build_cayley(const GroupOracle& oracle,
                           const std::vector<OracleGenerator>& generators) {
  if (generators.empty())
    throw std::invalid_argument("build_cayley: at least one generator required");
  switch (oracle.kind) {
    case GroupOracle::Kind::Z:
      return build_cayley_z(oracle.window, generators);
    case GroupOracle::Kind::Zd:
      return build_cayley_zd(oracle.dim, oracle.window, generators);
    case GroupOracle::Kind::Mod:
      return build_cayley_mod(oracle.modulus, generators);
    case GroupOracle::Kind::Table:
      return build_cayley_table(oracle.table, generators);
  }
  throw std::logic_error("build_cayley: unknown oracle kind");
}

}  // namespace piecewise
