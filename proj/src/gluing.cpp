#include "piecewise/gluing.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace piecewise {

namespace {

VertexId oracle_identity(const GroupOracle& o) {
  switch (o.kind) {
    case GroupOracle::Kind::Z: return VertexId::integer(0);
    case GroupOracle::Kind::Zd:
      return VertexId::grid(std::vector<std::int64_t>(o.dim, 0));
    case GroupOracle::Kind::Mod: return VertexId::residue(0, o.modulus);
    case GroupOracle::Kind::Table: return VertexId::finite(0);
  }
  throw std::logic_error("oracle_identity");
}

bool oracle_infinite(const GroupOracle& o) {
  return o.kind == GroupOracle::Kind::Z || o.kind == GroupOracle::Kind::Zd;
}

std::int64_t oracle_order(const GroupOracle& o) {
  switch (o.kind) {
    case GroupOracle::Kind::Mod: return o.modulus;
    case GroupOracle::Kind::Table: return static_cast<std::int64_t>(o.table.size());
    default: return 0;
  }
}

}  // namespace

GroupSystem cayley_system(const GroupOracle& oracle,
                          const std::vector<OracleGenerator>& generators,
                          const std::string& name) {
  GroupSystem sys;
  sys.graph = std::make_shared<LabelledGraph>(build_cayley(oracle, generators));
  auto ctx = std::make_shared<GroupContext>();
  ctx->name = name;
  ctx->graph = sys.graph;
  ctx->special_points = {sys.graph->root()};
  if (oracle_infinite(oracle)) {
    FactorDesc f;
    f.infinite = true;
    f.dim = oracle.kind == GroupOracle::Kind::Zd ? oracle.dim : 1;
    const int dim = f.dim;
    f.coord = [dim](const VertexId& v) -> std::optional<std::vector<std::int64_t>> {
      if (dim == 1 && v.tag() == VTag::Int) return std::vector<std::int64_t>{v.a()};
      if (dim > 1 && v.tag() == VTag::Grid &&
          static_cast<int>(v.vec().size()) == dim)
        return v.vec();
      return std::nullopt;
    };
    f.point = [dim](const std::vector<std::int64_t>& c) {
      return dim == 1 ? VertexId::integer(c[0]) : VertexId::grid(c);
    };
    ctx->factors.push_back(std::move(f));
    ctx->num_infinite = 1;
    ctx->parity_even_only = true;  // no finite factor present
    for (std::size_t i = 0; i < generators.size(); ++i) {
      GeneratorInfo gi;
      gi.letter = Letter::pos(static_cast<int>(i) + 1);
      gi.trans = {generators[i].shift};
      ctx->generators.push_back(std::move(gi));
    }
  } else {
    FactorDesc f;
    for (const auto& v : sys.graph->vertices())
      if (!(v == sys.graph->root())) f.points.push_back(v);
    ctx->parity_even_only = oracle_order(oracle) % 2 != 0;
    for (const auto& p : f.points) ctx->special_points.push_back(p);
    ctx->factors.push_back(std::move(f));
    for (std::size_t i = 0; i < generators.size(); ++i) {
      GeneratorInfo gi;
      gi.letter = Letter::pos(static_cast<int>(i) + 1);
      std::map<VertexId, VertexId> m;
      for (const auto& e : sys.graph->edges(static_cast<int>(i) + 1))
        m[e.src] = e.dst;
      gi.perm = FinPerm(std::move(m));
      ctx->generators.push_back(std::move(gi));
    }
  }
  sys.ctx = std::move(ctx);
  return sys;
}

GroupSystem glue(const LabelledGraph& g1, const LabelledGraph& g2,
                 const std::vector<std::pair<VertexId, VertexId>>& identify) {
  std::map<VertexId, VertexId> j_inv;  // X2 side -> glued name on the X1 side
  std::set<VertexId> seen1;
  for (const auto& [x1, x2] : identify) {
    if (!g1.contains(x1) || !g2.contains(x2))
      throw std::invalid_argument("glue: identified vertex outside its graph");
    if (!seen1.insert(x1).second || j_inv.count(x2))
      throw std::invalid_argument("glue: identification is not a bijection");
    j_inv.emplace(x2, VertexId::glued(1, x1));
  }
  auto map1 = [](const VertexId& v) { return VertexId::glued(1, v); };
  auto map2 = [&j_inv](const VertexId& v) {
    auto it = j_inv.find(v);
    return it == j_inv.end() ? VertexId::glued(2, v) : it->second;
  };
  std::vector<VertexId> verts;
  for (const auto& v : g1.vertices()) verts.push_back(map1(v));
  for (const auto& v : g2.vertices())
    if (!j_inv.count(v)) verts.push_back(map2(v));
  std::vector<std::vector<LabelledGraph::Edge>> edges(g1.alphabet_size() +
                                                      g2.alphabet_size());
  for (int i = 1; i <= g1.alphabet_size(); ++i)
    for (const auto& e : g1.edges(i))
      edges[i - 1].push_back({map1(e.src), map1(e.dst)});
  for (int i = 1; i <= g2.alphabet_size(); ++i)
    for (const auto& e : g2.edges(i))
      edges[g1.alphabet_size() + i - 1].push_back({map2(e.src), map2(e.dst)});
  GroupSystem sys;
  sys.graph = std::make_shared<LabelledGraph>(
      g1.alphabet_size() + g2.alphabet_size(), map1(g1.root()), std::move(verts),
      std::move(edges), g1.finite_universe() && g2.finite_universe());
  return sys;
}

GroupSystem rooted_gluing(const std::vector<ComponentSpec>& components,
                          const std::string& name) {
  if (components.empty())
    throw std::invalid_argument("rooted_gluing: no components");
  const VertexId root = VertexId::root();
  std::vector<LabelledGraph> graphs;
  std::vector<VertexId> identities;
  for (const auto& c : components) {
    graphs.push_back(build_cayley(c.oracle, c.generators));
    identities.push_back(oracle_identity(c.oracle));
  }
  auto remap = [&](std::size_t i, const VertexId& v) {
    return v == identities[i] ? root
                              : VertexId::glued(static_cast<std::int64_t>(i + 1), v);
  };
  std::vector<VertexId> verts{root};
  bool finite = true;
  int total_letters = 0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    for (const auto& v : graphs[i].vertices())
      if (!(v == identities[i])) verts.push_back(remap(i, v));
    finite = finite && graphs[i].finite_universe();
    total_letters += graphs[i].alphabet_size();
  }
  std::vector<std::vector<LabelledGraph::Edge>> edges(total_letters);
  int base_letter = 0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    for (int l = 1; l <= graphs[i].alphabet_size(); ++l)
      for (const auto& e : graphs[i].edges(l))
        edges[base_letter + l - 1].push_back({remap(i, e.src), remap(i, e.dst)});
    base_letter += graphs[i].alphabet_size();
  }
  GroupSystem sys;
  sys.graph = std::make_shared<LabelledGraph>(total_letters, root, std::move(verts),
                                              std::move(edges), finite);

  auto ctx = std::make_shared<GroupContext>();
  ctx->name = name;
  ctx->graph = sys.graph;
  ctx->special_points = {root};
  // Infinite factors first; factor_of[i] is the factor index of component i.
  std::vector<int> factor_of(components.size(), -1);
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (!oracle_infinite(components[i].oracle)) continue;
    FactorDesc f;
    f.infinite = true;
    f.dim = components[i].oracle.kind == GroupOracle::Kind::Zd
                ? components[i].oracle.dim
                : 1;
    const int dim = f.dim;
    const std::int64_t comp = static_cast<std::int64_t>(i + 1);
    f.coord = [dim, comp](const VertexId& v) -> std::optional<std::vector<std::int64_t>> {
      if (v.tag() == VTag::Root) return std::vector<std::int64_t>(dim, 0);
      if (v.tag() != VTag::Glued || v.a() != comp) return std::nullopt;
      const VertexId& in = v.inner();
      if (dim == 1 && in.tag() == VTag::Int) return std::vector<std::int64_t>{in.a()};
      if (dim > 1 && in.tag() == VTag::Grid) return in.vec();
      return std::nullopt;
    };
    f.point = [dim, comp](const std::vector<std::int64_t>& c) {
      bool zero = true;
      for (auto x : c) zero = zero && x == 0;
      if (zero) return VertexId::root();
      return VertexId::glued(comp, dim == 1 ? VertexId::integer(c[0])
                                            : VertexId::grid(c));
    };
    factor_of[i] = static_cast<int>(ctx->factors.size());
    ctx->factors.push_back(std::move(f));
  }
  ctx->num_infinite = static_cast<int>(ctx->factors.size());
  ctx->parity_even_only = true;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (oracle_infinite(components[i].oracle)) continue;
    FactorDesc f;
    for (const auto& v : graphs[i].vertices())
      if (!(v == identities[i])) f.points.push_back(remap(i, v));
    for (const auto& p : f.points) ctx->special_points.push_back(p);
    if (oracle_order(components[i].oracle) % 2 == 0) ctx->parity_even_only = false;
    factor_of[i] = static_cast<int>(ctx->factors.size());
    ctx->factors.push_back(std::move(f));
  }
  base_letter = 0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    for (int l = 1; l <= graphs[i].alphabet_size(); ++l) {
      GeneratorInfo gi;
      gi.letter = Letter::pos(base_letter + l);
      gi.trans.assign(ctx->num_infinite, {});
      for (int fi = 0; fi < ctx->num_infinite; ++fi)
        gi.trans[fi].assign(ctx->factors[fi].dim, 0);
      if (oracle_infinite(components[i].oracle)) {
        gi.trans[factor_of[i]] = components[i].generators[l - 1].shift;
      } else {
        std::map<VertexId, VertexId> m;
        for (const auto& e : graphs[i].edges(l))
          m[remap(i, e.src)] = remap(i, e.dst);
        gi.perm = FinPerm(std::move(m));
      }
      ctx->generators.push_back(std::move(gi));
    }
    base_letter += graphs[i].alphabet_size();
  }
  sys.ctx = std::move(ctx);
  return sys;
}

namespace {

// Copy of a graph's edges as mutable lists, for the extension constructors.
std::vector<std::vector<LabelledGraph::Edge>> copy_edges(const LabelledGraph& g) {
  std::vector<std::vector<LabelledGraph::Edge>> edges(g.alphabet_size());
  for (int i = 1; i <= g.alphabet_size(); ++i) edges[i - 1] = g.edges(i);
  return edges;
}

}  // namespace

GroupSystem pocket_extension(const GroupSystem& base) {
  if (!base.graph) throw std::invalid_argument("pocket_extension: no base graph");
  const LabelledGraph& g = *base.graph;
  const VertexId star = VertexId::star();
  if (g.contains(star))
    throw std::invalid_argument("pocket_extension: base already has a pocket point");
  std::vector<VertexId> verts = g.vertices();
  verts.push_back(star);
  auto edges = copy_edges(g);
  edges.push_back({{g.root(), star}, {star, g.root()}});
  GroupSystem sys;
  sys.graph = std::make_shared<LabelledGraph>(g.alphabet_size() + 1, g.root(),
                                              std::move(verts), std::move(edges),
                                              g.finite_universe());
  if (base.ctx) {
    auto ctx = std::make_shared<GroupContext>(*base.ctx);
    ctx->name += "_pocket";
    ctx->graph = sys.graph;
    ctx->special_points.push_back(star);
    ctx->parity_even_only = false;  // tau is a transposition
    GeneratorInfo gi;
    gi.letter = Letter::pos(g.alphabet_size() + 1);
    gi.trans.assign(ctx->num_infinite, {});
    for (int fi = 0; fi < ctx->num_infinite; ++fi)
      gi.trans[fi].assign(ctx->factors[fi].dim, 0);
    gi.perm = FinPerm::transposition(g.root(), star);
    ctx->generators.push_back(std::move(gi));
    sys.ctx = std::move(ctx);
  }
  sys.houghton = base.houghton;
  sys.bubble = base.bubble;
  return sys;
}

GroupSystem star_extension(const GroupSystem& base) {
  if (!base.graph) throw std::invalid_argument("star_extension: no base graph");
  const LabelledGraph& g = *base.graph;
  const int k = g.alphabet_size();
  auto edges = copy_edges(g);
  for (int i = 1; i <= k; ++i) {
    VertexId si = g.act(g.root(), Letter::pos(i));
    std::vector<LabelledGraph::Edge> e;
    if (!(si == g.root())) e.push_back({g.root(), si});
    // t_i is an involution; store one direction, the inverse map supplies the
    // other only if we add it explicitly:
    if (!(si == g.root())) e.push_back({si, g.root()});
    edges.push_back(std::move(e));
  }
  GroupSystem sys;
  sys.graph = std::make_shared<LabelledGraph>(2 * k, g.root(), g.vertices(),
                                              std::move(edges), g.finite_universe());
  if (base.ctx) {
    auto ctx = std::make_shared<GroupContext>(*base.ctx);
    ctx->name += "_star";
    ctx->graph = sys.graph;
    ctx->parity_even_only = false;
    for (int i = 1; i <= k; ++i) {
      GeneratorInfo gi;
      gi.letter = Letter::pos(k + i);
      gi.trans.assign(ctx->num_infinite, {});
      for (int fi = 0; fi < ctx->num_infinite; ++fi)
        gi.trans[fi].assign(ctx->factors[fi].dim, 0);
      gi.perm = FinPerm::transposition(g.root(), g.act(g.root(), Letter::pos(i)));
      ctx->generators.push_back(std::move(gi));
    }
    sys.ctx = std::move(ctx);
  }
  return sys;
}

namespace {

// Closed-form action of h_{i,j}^m on the Houghton universe: translation by m
// along the line R_i (negative side) -- o -- R_j (positive side).
VertexId hij_action(int i, int j, std::int64_t m, const VertexId& x) {
  std::optional<std::int64_t> c;
  if (x.tag() == VTag::Root)
    c = 0;
  else if (x.tag() == VTag::Ray && x.a() == i)
    c = -x.b();
  else if (x.tag() == VTag::Ray && x.a() == j)
    c = x.b();
  if (!c) return x;
  std::int64_t t = *c + m;
  if (t == 0) return VertexId::root();
  return t < 0 ? VertexId::ray(i, -t) : VertexId::ray(j, t);
}

}  // namespace

GroupElement houghton_element(const std::shared_ptr<const GroupContext>& ctx, int i,
                              int j, std::int64_t m) {
  const int k = ctx->houghton_k;
  if (k < 3) throw std::invalid_argument("houghton_element: not a Houghton context");
  if (i < 1 || j < 1 || i >= j || j > k)
    throw std::invalid_argument("houghton_element: need 1 <= i < j <= k");
  std::vector<std::vector<std::int64_t>> z(k - 1, std::vector<std::int64_t>{0});
  // z-coordinates w.r.t. g_i = h_{i,k}: h_{i,j} = g_i g_j^{-1} (g_k = id).
  z[i - 1][0] += m;
  if (j < k) z[j - 1][0] -= m;
  return element_from_action(
      ctx, z,
      [i, j, m](const VertexId& x) { return hij_action(i, j, m, x); }, {},
      3 * (std::abs(m) + 1));
}

GroupSystem build_houghton(int k, std::int64_t depth,
                           std::vector<std::pair<int, int>> pairs) {
  if (k < 3) throw std::invalid_argument("build_houghton: k >= 3 required");
  if (depth < 2) throw std::invalid_argument("build_houghton: depth >= 2 required");
  if (pairs.empty())
    for (int j = 2; j <= k; ++j) pairs.emplace_back(1, j);
  for (auto [i, j] : pairs)
    if (i < 1 || i >= j || j > k)
      throw std::invalid_argument("build_houghton: bad generator pair");
  std::vector<VertexId> verts{VertexId::root()};
  for (int i = 1; i <= k; ++i)
    for (std::int64_t n = 1; n <= depth; ++n) verts.push_back(VertexId::ray(i, n));
  std::vector<std::vector<LabelledGraph::Edge>> edges(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    auto [i, j] = pairs[p];
    auto pt = [&](std::int64_t c) {
      if (c == 0) return VertexId::root();
      return c < 0 ? VertexId::ray(i, -c) : VertexId::ray(j, c);
    };
    // One off-window edge at each end so act() can detect window exits.
    for (std::int64_t c = -(depth + 1); c <= depth; ++c)
      edges[p].push_back({pt(c), pt(c + 1)});
  }
  GroupSystem sys;
  sys.graph = std::make_shared<LabelledGraph>(static_cast<int>(pairs.size()),
                                              VertexId::root(), std::move(verts),
                                              std::move(edges), /*finite=*/false);
  auto ctx = std::make_shared<GroupContext>();
  ctx->name = "houghton_" + std::to_string(k);
  ctx->graph = sys.graph;
  ctx->houghton_k = k;
  ctx->special_points = {VertexId::root()};
  ctx->parity_even_only = false;  // the kernel is the full S_0(Y_k)
  for (int i = 1; i < k; ++i) {
    FactorDesc f;
    f.infinite = true;
    f.dim = 1;
    const int ray_i = i, ray_k = k;
    f.coord = [ray_i, ray_k](const VertexId& v) -> std::optional<std::vector<std::int64_t>> {
      if (v.tag() == VTag::Root) return std::vector<std::int64_t>{0};
      if (v.tag() == VTag::Ray && v.a() == ray_i)
        return std::vector<std::int64_t>{-v.b()};
      if (v.tag() == VTag::Ray && v.a() == ray_k)
        return std::vector<std::int64_t>{v.b()};
      return std::nullopt;
    };
    f.point = [ray_i, ray_k](const std::vector<std::int64_t>& c) {
      if (c[0] == 0) return VertexId::root();
      return c[0] < 0 ? VertexId::ray(ray_i, -c[0]) : VertexId::ray(ray_k, c[0]);
    };
    ctx->factors.push_back(std::move(f));
  }
  ctx->num_infinite = k - 1;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    GroupElement h = houghton_element(ctx, pairs[p].first, pairs[p].second, 1);
    GeneratorInfo gi;
    gi.letter = Letter::pos(static_cast<int>(p) + 1);
    gi.trans = h.translations();
    gi.perm = h.perm();
    ctx->generators.push_back(std::move(gi));
  }
  sys.ctx = ctx;
  sys.houghton = std::make_shared<HoughtonInfo>();
  sys.houghton->k = k;
  sys.houghton->depth = depth;
  sys.houghton->pairs = std::move(pairs);
  return sys;
}

GroupSystem build_bubble(const BubbleSpec& spec) {
  auto info = std::make_shared<BubbleInfo>();
  info->a = spec.a;
  info->cutoff = spec.cutoff;
  if (info->a.empty()) throw std::invalid_argument("build_bubble: empty sequence");
  // Extend past the input by doubling so that window actions near the cutoff
  // see the same local structure as the infinite universe.
  while (static_cast<int>(info->a.size()) < spec.cutoff + 2)
    info->a.push_back(2 * info->a.back());
  for (std::size_t i = 0; i < info->a.size(); ++i) {
    if (info->a[i] % 4 != 0)
      throw std::invalid_argument("build_bubble: entries must be divisible by 4");
    if (i && info->a[i] <= info->a[i - 1])
      throw std::invalid_argument("build_bubble: entries must be strictly increasing");
  }
  std::vector<VertexId> verts;
  std::vector<std::vector<LabelledGraph::Edge>> edges(2);
  std::vector<std::vector<std::int64_t>> level_words{{}};
  for (int len = 0; len <= spec.cutoff; ++len) {
    const std::int64_t two_a = 2 * info->a[len];  // level len+1 bubble length
    for (const auto& w : level_words) {
      for (std::int64_t u = 0; u < two_a; ++u) {
        verts.push_back(VertexId::bubble(w, u));
        edges[0].push_back(
            {VertexId::bubble(w, u), VertexId::bubble(w, (u + 1) % two_a)});
      }
      // Branching 3-cycle at the far end of this bubble.
      auto cyc = info->branching_cycle(w);
      if (len < spec.cutoff) {
        edges[1].push_back({cyc[0], cyc[1]});
        edges[1].push_back({cyc[1], cyc[2]});
        edges[1].push_back({cyc[2], cyc[0]});
      } else {
        // Children live outside the window: keep one edge in each direction
        // so window exits are detected rather than self-looped.
        edges[1].push_back({cyc[0], cyc[1]});
        edges[1].push_back({cyc[2], cyc[0]});
      }
    }
    std::vector<std::vector<std::int64_t>> next;
    for (const auto& w : level_words)
      for (std::int64_t d : {1, 2}) {
        auto w2 = w;
        w2.push_back(d);
        next.push_back(std::move(w2));
      }
    level_words = std::move(next);
  }
  GroupSystem sys;
  sys.graph = std::make_shared<LabelledGraph>(2, info->root(), std::move(verts),
                                              std::move(edges), /*finite=*/false);
  sys.bubble = std::move(info);
  return sys;
}

}  // namespace piecewise
