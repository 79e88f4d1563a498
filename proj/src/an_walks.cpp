#include "piecewise/an_walks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace piecewise {
namespace {

int perm_parity(const std::array<std::uint8_t, 8>& p, int n) {
  int inv = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (p[i] > p[j]) ++inv;
  return inv % 2;
}

}  // namespace

std::size_t AlternatingModel::index_of(const std::array<std::uint8_t, 8>& p) const {
  auto it = std::lower_bound(elements.begin(), elements.end(), p);
  if (it == elements.end() || *it != p)
    throw std::invalid_argument("AlternatingModel: permutation not in A_N");
  return static_cast<std::size_t>(it - elements.begin());
}

std::size_t AlternatingModel::mul(std::size_t a, std::size_t b) const {
  const auto& pa = elements.at(a);
  const auto& pb = elements.at(b);
  std::array<std::uint8_t, 8> c{};
  for (int i = 0; i < 8; ++i)
    c[static_cast<std::size_t>(i)] =
        i < N ? pa[pb[static_cast<std::size_t>(i)]] : static_cast<std::uint8_t>(i);
  return index_of(c);
}

AlternatingModel build_alternating(int N) {
  if (N < 3 || N > 8)
    throw std::invalid_argument("build_alternating: N must be in [3, 8]");
  AlternatingModel m;
  m.N = N;
  std::array<std::uint8_t, 8> p{};
  for (int i = 0; i < 8; ++i) p[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  // next_permutation over the first N slots; the tail stays fixed and keeps
  // the lexicographic order consistent with index_of.
  do {
    if (perm_parity(p, N) == 0) m.elements.push_back(p);
  } while (std::next_permutation(p.begin(), p.begin() + N));
  // Three-cycles (i j k) and (i k j) over i < j < k.
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      for (int k = j + 1; k < N; ++k) {
        std::array<std::uint8_t, 8> c{};
        for (int t = 0; t < 8; ++t) c[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>(t);
        c[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(j);
        c[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(k);
        c[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(i);
        m.three_cycles.push_back(static_cast<std::uint32_t>(m.index_of(c)));
        c[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(k);
        c[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(j);
        c[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(i);
        m.three_cycles.push_back(static_cast<std::uint32_t>(m.index_of(c)));
      }
  const std::size_t expected =
      2 * (static_cast<std::size_t>(N) * (N - 1) * (N - 2)) / 6;
  if (m.three_cycles.size() != expected)
    throw std::logic_error("build_alternating: three-cycle count mismatch");
  m.mu_atom = 1.0 / static_cast<double>(m.three_cycles.size());
  return m;
}

MixingSeries exact_mixing_series(const AlternatingModel& model, int t_max) {
  if (t_max < 0) throw std::invalid_argument("exact_mixing_series: t_max < 0");
  const std::size_t n = model.size();
  // Gather tables: step[c][x] = index of cycle_c * x.
  std::vector<std::vector<std::uint32_t>> step(model.three_cycles.size());
  for (std::size_t c = 0; c < step.size(); ++c) {
    step[c].resize(n);
    for (std::size_t x = 0; x < n; ++x)
      step[c][x] = static_cast<std::uint32_t>(model.mul(model.three_cycles[c], x));
  }
  MixingSeries s;
  s.N = model.N;
  s.limit = 1.0 / static_cast<double>(n);
  std::vector<double> v(n, 0.0), w(n);
  v[0] = 1.0;
  s.id_prob.push_back(v[0]);
  for (int t = 1; t <= t_max; ++t) {
    std::fill(w.begin(), w.end(), 0.0);
    for (const auto& row : step)
      for (std::size_t x = 0; x < n; ++x)
        if (v[x] != 0.0) w[row[x]] += model.mu_atom * v[x];
    v.swap(w);
    s.id_prob.push_back(v[0]);
    if (s.crossing_t < 0 &&
        std::abs(static_cast<double>(n) * v[0] - 1.0) <= 0.5)
      s.crossing_t = t;
  }
  return s;
}

ProfileTable an_dirichlet_profile(const AlternatingModel& model, int v_max,
                                  int p, std::size_t budget) {
  const std::size_t n = model.size();
  StepGraph g;
  g.s_phi = 1.0;  // every mu_N atom is a non-identity three-cycle
  g.labels.reserve(n);
  for (const auto& p : model.elements) {
    std::string l;
    for (int i = 0; i < model.N; ++i)
      l += static_cast<char>('0' + p[static_cast<std::size_t>(i)]);
    g.labels.push_back(std::move(l));
  }
  g.steps.resize(n);
  for (std::size_t x = 0; x < n; ++x)
    for (auto c : model.three_cycles)
      g.steps[x].emplace_back(static_cast<int>(model.mul(c, x)), model.mu_atom);
  g.exact_limit = static_cast<int>(n);  // finite group, no window escapes
  return lambda_profile(g, v_max, p, budget);
}

namespace {

// Simple letter path from the root to x over the allowed letters: BFS tree
// paths have strictly increasing distance, so the prefix-product root path is
// simple.  Letters are in prefix-product order (the word convention).
std::map<VertexId, std::vector<Letter>> letter_paths(
    const LabelledGraph& graph, const std::vector<Letter>& allowed,
    int max_depth) {
  std::map<VertexId, std::vector<Letter>> paths;
  paths[graph.root()] = {};
  std::queue<VertexId> q;
  q.push(graph.root());
  for (int d = 0; d < max_depth && !q.empty(); ++d) {
    std::queue<VertexId> next;
    while (!q.empty()) {
      VertexId v = q.front();
      q.pop();
      for (const auto& l : allowed) {
        auto img = graph.act_raw(v, l);
        if (!img || !graph.contains(*img) || paths.count(*img)) continue;
        auto w = paths[v];
        w.push_back(l);
        paths.emplace(*img, std::move(w));
        next.push(*img);
      }
    }
    q.swap(next);
  }
  return paths;
}

std::vector<Letter> both_signs(int lo, int hi) {
  std::vector<Letter> ls;
  for (int i = lo; i <= hi; ++i) {
    ls.push_back(Letter::pos(i));
    ls.push_back(Letter::neg(i));
  }
  return ls;
}

// Factor index of a single-factor gluing generator: the infinite factor it
// translates, else the finite factor containing its moved points.
int letter_factor(const GroupContext& ctx, int letter_index) {
  const auto& info = ctx.generators.at(static_cast<std::size_t>(letter_index - 1));
  for (std::size_t f = 0; f < info.trans.size(); ++f)
    for (auto t : info.trans[f])
      if (t != 0) return static_cast<int>(f);
  for (std::size_t f = static_cast<std::size_t>(ctx.num_infinite);
       f < ctx.factors.size(); ++f) {
    const auto& pts = ctx.factors[f].points;
    bool all = !info.perm.moved().empty();
    for (const auto& [p, q] : info.perm.moved())
      if (p != ctx.graph->root() &&
          std::find(pts.begin(), pts.end(), p) == pts.end())
        all = false;
    if (all) return static_cast<int>(f);
  }
  return -1;
}

int vertex_factor(const GroupContext& ctx, const VertexId& v) {
  for (std::size_t f = 0; f < ctx.factors.size(); ++f) {
    const auto& fd = ctx.factors[f];
    if (fd.infinite) {
      auto c = fd.coord(v);
      if (c && std::any_of(c->begin(), c->end(), [](auto t) { return t != 0; }))
        return static_cast<int>(f);
    } else if (std::find(fd.points.begin(), fd.points.end(), v) != fd.points.end()) {
      return static_cast<int>(f);
    }
  }
  return -1;
}

struct Synthesizer {
  const GroupSystem& sys;
  CycleSynthesis kind;
  std::map<VertexId, std::vector<Letter>> paths;  // base-letter paths o -> x
  int tau_letter = 0;                             // pocket only
  VertexId pocket_point;                          // pocket only

  Synthesizer(const GroupSystem& s, CycleSynthesis k, int max_depth)
      : sys(s), kind(k) {
    const auto& ctx = *sys.ctx;
    const auto& graph = *sys.graph;
    switch (kind) {
      case CycleSynthesis::Star: {
        if (ctx.generators.size() % 2 != 0)
          throw std::invalid_argument("cycle synthesis: not a star extension");
        int k_base = static_cast<int>(ctx.generators.size()) / 2;
        paths = letter_paths(graph, both_signs(1, k_base), max_depth);
        break;
      }
      case CycleSynthesis::Pocket: {
        tau_letter = graph.alphabet_size();
        const auto& tau = ctx.generators.back().perm;
        if (tau.moved().size() != 2 || !tau.moved().count(graph.root()))
          throw std::invalid_argument("cycle synthesis: not a pocket extension");
        pocket_point = tau.moved().at(graph.root());
        paths = letter_paths(graph, both_signs(1, tau_letter - 1), max_depth);
        break;
      }
      case CycleSynthesis::RootedGluing: {
        if (ctx.factors.size() < 2)
          throw std::invalid_argument(
              "cycle synthesis: rooted gluing needs at least two factors");
        paths = letter_paths(
            graph, both_signs(1, graph.alphabet_size()), max_depth);
        break;
      }
    }
  }

  // Word for the transposition (o, x); pocket/star only.
  Word transposition(const VertexId& x) const {
    if (kind == CycleSynthesis::Pocket && x == pocket_point)
      return {Letter::pos(tau_letter)};
    auto it = paths.find(x);
    if (it == paths.end())
      throw std::invalid_argument("cycle synthesis: point not reachable: " +
                                  x.encode());
    if (kind == CycleSynthesis::Star)
      return star_transposition_word(sys.ctx, it->second);
    // (o, x) = tau (x, *) tau with (x, *) = w tau w^{-1}.
    Word w{Letter::pos(tau_letter)};
    w.insert(w.end(), it->second.begin(), it->second.end());
    w.push_back(Letter::pos(tau_letter));
    Word inv = inverse_word(it->second);
    w.insert(w.end(), inv.begin(), inv.end());
    w.push_back(Letter::pos(tau_letter));
    return w;
  }

  Word three_cycle(const VertexId& a, const VertexId& b, const VertexId& c) const {
    const VertexId root = sys.graph->root();
    if (a == b || b == c || a == c)
      throw std::invalid_argument("cycle synthesis: degenerate three-cycle");
    if (kind == CycleSynthesis::RootedGluing) {
      // Rotate the cycle so the root leads; (o, x, y) = [g_x, g_y] for x, y
      // on distinct factor arms.
      VertexId x = b, y = c;
      if (b == root) {
        x = c;
        y = a;
      } else if (c == root) {
        x = a;
        y = b;
      } else if (a != root) {
        throw std::invalid_argument(
            "cycle synthesis: gluing cycles must pass through the root");
      }
      if (vertex_factor(*sys.ctx, x) < 0 || vertex_factor(*sys.ctx, y) < 0 ||
          vertex_factor(*sys.ctx, x) == vertex_factor(*sys.ctx, y))
        throw std::invalid_argument(
            "cycle synthesis: gluing cycle points must sit on distinct arms");
      auto ix = paths.find(x), iy = paths.find(y);
      if (ix == paths.end() || iy == paths.end())
        throw std::invalid_argument("cycle synthesis: point not reachable");
      Word w = ix->second;
      w.insert(w.end(), iy->second.begin(), iy->second.end());
      Word wx = inverse_word(ix->second), wy = inverse_word(iy->second);
      w.insert(w.end(), wx.begin(), wx.end());
      w.insert(w.end(), wy.begin(), wy.end());
      return w;
    }
    // (a b c) = (a b)(b c); (p q) = (o p)(o q)(o p) off the root.
    auto trans = [&](const VertexId& p, const VertexId& q) -> Word {
      if (p == root) return transposition(q);
      if (q == root) return transposition(p);
      Word w = transposition(p), wq = transposition(q), wp = transposition(p);
      w.insert(w.end(), wq.begin(), wq.end());
      w.insert(w.end(), wp.begin(), wp.end());
      return w;
    };
    Word w = trans(a, b), w2 = trans(b, c);
    w.insert(w.end(), w2.begin(), w2.end());
    return w;
  }
};

}  // namespace

Word three_cycle_word(const GroupSystem& sys, CycleSynthesis kind,
                      const VertexId& a, const VertexId& b, const VertexId& c,
                      int max_depth) {
  if (!sys.ctx || !sys.graph)
    throw std::invalid_argument("three_cycle_word: synthesis needs a group context");
  return Synthesizer(sys, kind, max_depth).three_cycle(a, b, c);
}

CycleComparisonReport cycle_comparison(const GroupSystem& sys,
                                       CycleSynthesis kind, int r,
                                       std::uint64_t seed,
                                       std::size_t max_cycles,
                                       std::size_t samples) {
  if (!sys.ctx || !sys.graph)
    throw std::invalid_argument("cycle_comparison: synthesis needs a group context");
  if (r < 1) throw std::invalid_argument("cycle_comparison: r must be >= 1");
  const auto& ctx = sys.ctx;
  const VertexId root = sys.graph->root();
  BallEnumeration ball = enumerate_ball(*sys.graph, root, r);
  std::map<VertexId, int> dist;
  for (const auto& [v, d] : ball.points) dist[v] = d;

  Synthesizer synth(sys, kind, r + 1);

  // The compared measure: all three-cycles of the ball for pocket/star, the
  // cross-factor cycles through the root for rooted gluings.
  std::vector<VertexId> points;
  for (const auto& [v, d] : ball.points) points.push_back(v);
  std::optional<Measure> mu;
  if (kind == CycleSynthesis::RootedGluing) {
    std::vector<std::pair<GroupElement, double>> atoms;
    std::vector<std::pair<VertexId, VertexId>> arms;
    for (const auto& x : points)
      for (const auto& y : points)
        if (x != y && x != root && y != root &&
            vertex_factor(*ctx, x) != vertex_factor(*ctx, y) &&
            vertex_factor(*ctx, x) >= 0 && vertex_factor(*ctx, y) >= 0)
          arms.push_back({x, y});
    if (arms.empty())
      throw std::invalid_argument("cycle_comparison: no cross-factor cycles in ball");
    for (const auto& [x, y] : arms)
      atoms.push_back({GroupElement(ctx, GroupElement::identity(ctx).translations(),
                                    FinPerm({{root, x}, {x, y}, {y, root}})),
                       1.0 / static_cast<double>(arms.size())});
    mu.emplace(ctx, std::move(atoms));
  } else {
    mu.emplace(make_mu_N(ctx, points));
  }
  mu->require_symmetric();

  // Synthesize (and verify) a word for each atom; subsample above the cap.
  std::vector<std::size_t> order(mu->atoms().size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  if (order.size() > max_cycles) {
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(max_cycles);
  }
  CycleComparisonReport rep{r, 0, 0.0, 0, 0.0, *mu, EnergyReport{}};
  bool all_verified = true;
  for (auto i : order) {
    const auto& g = mu->atoms()[i].first;
    const auto& moved = g.perm().moved();
    if (moved.size() != 3) throw std::logic_error("cycle_comparison: non-three-cycle atom");
    VertexId a = moved.begin()->first;
    VertexId b = moved.at(a), c = moved.at(b);
    Word w = synth.three_cycle(a, b, c);
    if (normal_form(ctx, w) != g) all_verified = false;
    int far = std::max({dist.at(a), dist.at(b), dist.at(c)});
    rep.D = std::max(rep.D,
                     static_cast<double>(w.size()) / static_cast<double>(far));
    ++rep.cycles;
  }
  rep.report.expect("cycles: every synthesized word evaluates to its three-cycle",
                    all_verified ? 1.0 : 0.0, 1.0, 0.0);

  // u: uniform on the generator letters and their inverses.
  std::vector<std::pair<GroupElement, double>> uatoms;
  const double uw = 1.0 / (2.0 * static_cast<double>(ctx->generators.size()));
  for (std::size_t i = 1; i <= ctx->generators.size(); ++i) {
    GroupElement g = GroupElement::generator(ctx, Letter::pos(static_cast<int>(i)));
    uatoms.push_back({g, uw});
    uatoms.push_back({g.inverse(), uw});
  }
  Measure u(ctx, std::move(uatoms));

  GroupBall fball = group_ball(ctx, 2);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0.0;
  std::size_t used = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::map<GroupElement, double> f;
    for (const auto& [e, len] : fball.elements) f[e] = unif(rng);
    const double eu = dirichlet_form(u, f, 2);
    if (eu == 0.0) continue;
    const double emu = dirichlet_form(*mu, f, 2);
    worst = std::max(worst, emu / (rep.D * static_cast<double>(r) * eu));
    ++used;
  }
  rep.samples = used;
  rep.worst_ratio = worst;
  rep.report.expect_le("cycles: E_mu <= D r E_u on sampled functions", worst,
                       1.0, 1e-9);
  return rep;
}

}  // namespace piecewise
