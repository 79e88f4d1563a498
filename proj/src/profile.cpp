#include "piecewise/profile.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace piecewise {

namespace {

constexpr int kInfDepth = std::numeric_limits<int>::max();

std::string encode_set(const std::vector<std::string>& labels,
                       const std::vector<int>& s) {
  std::vector<std::string> parts;
  parts.reserve(s.size());
  for (int i : s) parts.push_back(labels[static_cast<std::size_t>(i)]);
  std::sort(parts.begin(), parts.end());
  std::string out = "{";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ",";
    out += parts[i];
  }
  out += "}";
  return out;
}

double smallest_eigenvalue_dense(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m,
                                                        Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

}  // namespace

StepGraph step_graph_from_ball(const Measure& m, const GroupBall& ball) {
  StepGraph g;
  std::vector<GroupElement> elems;
  elems.reserve(ball.elements.size());
  for (const auto& [e, len] : ball.elements) elems.push_back(e);
  // Identity at index 0.
  for (std::size_t i = 0; i < elems.size(); ++i)
    if (elems[i].is_identity()) {
      std::swap(elems[0], elems[i]);
      break;
    }
  if (elems.empty() || !elems[0].is_identity())
    throw std::invalid_argument("ball does not contain the identity");
  std::unordered_map<GroupElement, int, GroupElementHash> index;
  for (std::size_t i = 0; i < elems.size(); ++i)
    index.emplace(elems[i], static_cast<int>(i));
  g.labels.reserve(elems.size());
  for (const auto& e : elems) g.labels.push_back(e.encode());
  g.steps.resize(elems.size());
  for (const auto& [y, w] : m.atoms()) {
    if (y.is_identity()) continue;
    g.s_phi += w;
    for (std::size_t i = 0; i < elems.size(); ++i) {
      GroupElement z = y.multiply(elems[i]);
      auto it = index.find(z);
      g.steps[i].emplace_back(it == index.end() ? -1 : it->second, w);
    }
  }
  // Largest v with every connected set of size <= v fully inside the window:
  // a vertex at step-depth d with an escaping step caps exactness at d + 1.
  std::vector<int> depth(elems.size(), kInfDepth);
  std::queue<int> bfs;
  depth[0] = 0;
  bfs.push(0);
  while (!bfs.empty()) {
    int x = bfs.front();
    bfs.pop();
    for (const auto& [j, w] : g.steps[static_cast<std::size_t>(x)])
      if (j >= 0 && depth[static_cast<std::size_t>(j)] == kInfDepth) {
        depth[static_cast<std::size_t>(j)] = depth[static_cast<std::size_t>(x)] + 1;
        bfs.push(j);
      }
  }
  g.exact_limit = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < elems.size(); ++i) {
    if (depth[i] == kInfDepth) continue;
    for (const auto& [j, w] : g.steps[i])
      if (j < 0) g.exact_limit = std::min(g.exact_limit, depth[i] + 1);
  }
  return g;
}

double dirichlet_form(const Measure& m, const std::map<GroupElement, double>& f,
                      int p) {
  if (p != 1 && p != 2) throw std::invalid_argument("p must be 1 or 2");
  auto value = [&f](const GroupElement& g) {
    auto it = f.find(g);
    return it == f.end() ? 0.0 : it->second;
  };
  double total = 0.0;
  for (const auto& [y, w] : m.atoms()) {
    if (y.is_identity()) continue;
    GroupElement yi = y.inverse();
    std::set<GroupElement> xs;
    for (const auto& [x, fx] : f) {
      xs.insert(x);
      xs.insert(yi.multiply(x));  // x with yx in the support
    }
    for (const auto& x : xs) {
      double d = std::abs(value(y.multiply(x)) - value(x));
      total += w * (p == 2 ? d * d : d);
    }
  }
  return 0.5 * total;
}

double boundary_measure(const Measure& m, const std::vector<GroupElement>& omega) {
  std::unordered_map<GroupElement, int, GroupElementHash> in;
  for (const auto& x : omega) in.emplace(x, 1);
  double total = 0.0;
  for (const auto& x : omega)
    for (const auto& [y, w] : m.atoms()) {
      if (y.is_identity()) continue;
      if (!in.count(y.multiply(x))) total += w;
    }
  return total;
}

double dirichlet_eigenvalue(const Measure& m, const std::vector<GroupElement>& omega) {
  if (omega.empty()) throw std::invalid_argument("empty element set");
  const std::size_t n = omega.size();
  std::unordered_map<GroupElement, int, GroupElementHash> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(omega[i], static_cast<int>(i));
  double s = 0.0;
  for (const auto& [y, w] : m.atoms())
    if (!y.is_identity()) s += w;
  // Sparse rows of W: W[yx][x] += m(y) for x, yx in Omega.
  std::vector<std::vector<std::pair<int, double>>> rows(n);
  for (std::size_t j = 0; j < n; ++j)
    for (const auto& [y, w] : m.atoms()) {
      if (y.is_identity()) continue;
      auto it = index.find(y.multiply(omega[j]));
      if (it != index.end())
        rows[static_cast<std::size_t>(it->second)].emplace_back(static_cast<int>(j), w);
    }
  if (n <= 2000) {
    Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = s;
      for (const auto& [j, w] : rows[i])
        mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -= w;
    }
    return smallest_eigenvalue_dense(mat);
  }
  // Shifted power iteration on 2s I - M (PSD): largest eigenvalue is
  // 2s - lambda_min.  Deterministic start; residual below 1e-10.
  auto apply_m = [&](const std::vector<double>& x, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = s * x[i];
      for (const auto& [j, w] : rows[i]) out[i] -= w * x[static_cast<std::size_t>(j)];
    }
  };
  std::vector<double> x(n), mx(n), bx(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
  double lambda = s;
  for (int iter = 0; iter < 200000; ++iter) {
    apply_m(x, mx);
    double norm2 = 0.0, ray = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      norm2 += x[i] * x[i];
      ray += x[i] * mx[i];
    }
    lambda = ray / norm2;
    double res2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = mx[i] - lambda * x[i];
      res2 += r * r;
    }
    if (std::sqrt(res2 / norm2) <= 1e-10) break;
    double bnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      bx[i] = 2.0 * s * x[i] - mx[i];
      bnorm += bx[i] * bx[i];
    }
    bnorm = std::sqrt(bnorm);
    for (std::size_t i = 0; i < n; ++i) x[i] = bx[i] / bnorm;
  }
  return lambda;
}

namespace {

// Exhaustive enumeration of connected vertex sets containing vertex 0; each
// set is visited exactly once (pop a frontier vertex: branch on including it,
// then permanently exclude it at this level).
class ConnectedSweep {
 public:
  ConnectedSweep(const StepGraph& g, int v_max, int p, std::size_t budget)
      : g_(g), v_max_(v_max), p_(p), budget_(budget) {
    adj_.resize(g.steps.size());
    for (std::size_t i = 0; i < g.steps.size(); ++i) {
      std::set<int> nb;
      for (const auto& [j, w] : g.steps[i])
        if (j >= 0) nb.insert(j);
      adj_[i].assign(nb.begin(), nb.end());
    }
    best_.assign(static_cast<std::size_t>(v_max) + 1, {});
    in_set_.assign(g.steps.size(), 0);
  }

  bool run() {
    std::vector<char> seen(g_.steps.size(), 0);
    seen[0] = 1;
    std::vector<int> ext;
    for (int u : adj_[0]) {
      seen[static_cast<std::size_t>(u)] = 1;
      ext.push_back(u);
    }
    set_.push_back(0);
    in_set_[0] = 1;
    bool complete = extend(ext, seen);
    set_.clear();
    in_set_[0] = 0;
    return complete;
  }

  struct Best {
    double value = std::numeric_limits<double>::infinity();
    std::string witness;
  };
  const std::vector<Best>& best() const { return best_; }
  std::size_t visited() const { return visited_; }

 private:
  bool extend(std::vector<int> ext, std::vector<char> seen) {
    if (!record()) return false;
    if (static_cast<int>(set_.size()) == v_max_) return true;
    while (!ext.empty()) {
      int v = ext.back();
      ext.pop_back();
      std::vector<int> ext2 = ext;
      std::vector<char> seen2 = seen;
      for (int u : adj_[static_cast<std::size_t>(v)])
        if (!seen2[static_cast<std::size_t>(u)]) {
          seen2[static_cast<std::size_t>(u)] = 1;
          ext2.push_back(u);
        }
      set_.push_back(v);
      in_set_[static_cast<std::size_t>(v)] = 1;
      bool ok = extend(std::move(ext2), std::move(seen2));
      set_.pop_back();
      in_set_[static_cast<std::size_t>(v)] = 0;
      if (!ok) return false;
    }
    return true;
  }

  // Values differing by <= kTieTol count as ties (eigensolves of isomorphic
  // sets drift at machine precision); ties break to the smaller encoding.
  static constexpr double kTieTol = 1e-12;

  bool record() {
    if (++visited_ > budget_) return false;
    double value = p_ == 1 ? l1_value() : l2_value();
    Best& slot = best_[set_.size()];
    if (value < slot.value - kTieTol) {
      slot.value = value;
      slot.witness = encode_set(g_.labels, set_);
    } else if (value <= slot.value + kTieTol) {
      std::string w = encode_set(g_.labels, set_);
      if (w < slot.witness) slot.witness = std::move(w);
      slot.value = std::min(slot.value, value);
    }
    return true;
  }

  double l1_value() const {
    double boundary = 0.0;
    for (int i : set_)
      for (const auto& [j, w] : g_.steps[static_cast<std::size_t>(i)])
        if (j < 0 || !in_set_[static_cast<std::size_t>(j)]) boundary += w;
    return boundary / static_cast<double>(set_.size());
  }

  double l2_value() const {
    const std::size_t n = set_.size();
    std::unordered_map<int, int> local;
    for (std::size_t a = 0; a < n; ++a) local.emplace(set_[a], static_cast<int>(a));
    Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a) {
      mat(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = g_.s_phi;
      for (const auto& [j, w] : g_.steps[static_cast<std::size_t>(set_[a])]) {
        if (j < 0) continue;
        auto it = local.find(j);
        if (it != local.end())
          mat(static_cast<Eigen::Index>(it->second), static_cast<Eigen::Index>(a)) -= w;
      }
    }
    return smallest_eigenvalue_dense(mat);
  }

  const StepGraph& g_;
  int v_max_;
  int p_;
  std::size_t budget_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> set_;
  std::vector<char> in_set_;
  std::vector<Best> best_;
  std::size_t visited_ = 0;
};

}  // namespace

ProfileTable lambda_profile(const StepGraph& g, int v_max, int p,
                            std::size_t budget) {
  if (p != 1 && p != 2) throw std::invalid_argument("p must be 1 or 2");
  if (v_max < 1) throw std::invalid_argument("v_max must be >= 1");
  ConnectedSweep sweep(g, v_max, p, budget);
  bool complete = sweep.run();
  ProfileTable table;
  table.kind = p == 1 ? ProfileKind::L1 : ProfileKind::L2;
  table.s_phi = g.s_phi;
  double run_min = std::numeric_limits<double>::infinity();
  std::string run_witness;
  for (int v = 1; v <= v_max; ++v) {
    const auto& slot = sweep.best()[static_cast<std::size_t>(v)];
    if (slot.value < run_min - 1e-12) {
      run_min = slot.value;
      run_witness = slot.witness;
    } else if (slot.value <= run_min + 1e-12 && slot.witness < run_witness) {
      run_min = std::min(run_min, slot.value);
      run_witness = slot.witness;
    }
    if (!std::isfinite(run_min)) continue;  // no connected set of this size
    table.points.push_back(
        {v, run_min, run_witness, complete && v <= g.exact_limit});
  }
  return table;
}

ProfileTable lambda_profile(const Measure& m, const GroupBall& ball, int v_max,
                            int p, std::size_t budget) {
  return lambda_profile(step_graph_from_ball(m, ball), v_max, p, budget);
}

InverseResult profile_inverse(const ProfileTable& t, double s) {
  for (const auto& pt : t.points)
    if (pt.value <= s) return {pt.v, false, false};
  return {0, true, true};
}

InverseResult folner(const ProfileTable& t, double t_arg) {
  if (t_arg <= 0.0) throw std::invalid_argument("t must be positive");
  return profile_inverse(t, 1.0 / t_arg);
}

CheegerReport check_cheeger(const ProfileTable& t1, const ProfileTable& t2,
                            double tol) {
  if (t1.kind != ProfileKind::L1 || t2.kind != ProfileKind::L2)
    throw std::invalid_argument("expected an L1 table and an L2 table");
  std::map<std::int64_t, double> l1;
  for (const auto& pt : t1.points)
    if (pt.exact) l1.emplace(pt.v, pt.value);
  CheegerReport report;
  for (const auto& pt : t2.points) {
    if (!pt.exact) continue;
    auto it = l1.find(pt.v);
    if (it == l1.end()) continue;
    ++report.points_checked;
    double a = it->second, b = pt.value;
    if (0.5 * a * a > b + tol || b > a + tol) {
      report.ok = false;
      report.violations.push_back(pt.v);
    }
  }
  return report;
}

std::vector<int> SatisfactoryGraph::satisfaction_counts(
    const std::vector<bool>& alive) const {
  std::vector<int> counts(vertices.size(), 0);
  for (std::size_t i = 0; i < vertices.size(); ++i)
    for (const auto& [key, targets] : locations[i])
      for (int t : targets)
        if (alive[static_cast<std::size_t>(t)]) {
          ++counts[i];
          break;
        }
  return counts;
}

std::vector<int> SatisfactoryGraph::satisfaction_counts() const {
  return satisfaction_counts(std::vector<bool>(vertices.size(), true));
}

int SatisfactoryGraph::degree(int i) const {
  int d = 0;
  for (const auto& [a, b] : edges)
    if (a == i || b == i) ++d;
  return d;
}

SatisfactoryGraph erschler_graph(const std::vector<GroupElement>& U) {
  if (U.empty()) throw std::invalid_argument("empty element set");
  auto ctx = U.front().context();
  // The beta letter: the first generator with no translation part.
  const GeneratorInfo* beta = nullptr;
  for (const auto& gen : ctx->generators) {
    bool pure = true;
    for (const auto& t : gen.trans)
      for (auto c : t) pure &= (c == 0);
    if (pure) {
      beta = &gen;
      break;
    }
  }
  if (!beta) throw std::invalid_argument("group lacks a beta letter");
  GroupElement bplus = GroupElement::generator(ctx, beta->letter);
  GroupElement bminus = bplus.inverse();

  std::unordered_map<GroupElement, int, GroupElementHash> in_u;
  for (std::size_t i = 0; i < U.size(); ++i) in_u.emplace(U[i], static_cast<int>(i));

  SatisfactoryGraph g;
  std::map<FinPerm, int> vert_index;
  auto vertex_of = [&](const FinPerm& tau) {
    auto [it, inserted] = vert_index.emplace(tau, static_cast<int>(g.vertices.size()));
    if (inserted) {
      g.vertices.push_back(tau);
      g.locations.emplace_back();
    }
    return it->second;
  };
  auto trans_key = [](const GroupElement& e) {
    std::string key;
    for (const auto& t : e.translations())
      for (auto c : t) key += std::to_string(c) + ",";
    return key;
  };

  std::set<std::pair<int, int>> edges;
  for (const auto& u : U) {
    int i = vertex_of(u.perm());
    std::string key = trans_key(u);
    auto& locs = g.locations[static_cast<std::size_t>(i)];
    auto lit = std::find_if(locs.begin(), locs.end(),
                            [&key](const auto& l) { return l.first == key; });
    if (lit == locs.end()) {
      locs.emplace_back(key, std::vector<int>{});
      lit = std::prev(locs.end());
    }
    for (const GroupElement& step : {bplus, bminus}) {
      GroupElement w = step.multiply(u);
      if (!in_u.count(w)) continue;
      int j = vertex_of(w.perm());
      lit->second.push_back(j);
      if (i != j) edges.emplace(std::min(i, j), std::max(i, j));
    }
  }
  g.edges.assign(edges.begin(), edges.end());
  return g;
}

SatisfactoryGraph edge_removal(const SatisfactoryGraph& g, double a) {
  if (a < 1.0) throw std::invalid_argument("a must be >= 1");
  double threshold = a / 4.0;
  std::vector<bool> alive(g.vertices.size(), true);
  // Nonempty-survivor guarantee: non-a-satisfactory fraction <= |E| / 4.
  std::vector<int> initial = g.satisfaction_counts();
  std::size_t ns = 0;
  for (int c : initial)
    if (static_cast<double>(c) < a) ++ns;
  bool guaranteed = !g.edges.empty() &&
                    static_cast<double>(ns) <= static_cast<double>(g.edges.size()) / 4.0;

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> counts = g.satisfaction_counts(alive);
    for (std::size_t i = 0; i < alive.size(); ++i)
      if (alive[i] && static_cast<double>(counts[i]) < threshold) {
        alive[i] = false;
        changed = true;
      }
  }

  SatisfactoryGraph out;
  std::vector<int> remap(g.vertices.size(), -1);
  for (std::size_t i = 0; i < g.vertices.size(); ++i)
    if (alive[i]) {
      remap[i] = static_cast<int>(out.vertices.size());
      out.vertices.push_back(g.vertices[i]);
      std::vector<std::pair<std::string, std::vector<int>>> locs;
      for (const auto& [key, targets] : g.locations[i]) {
        std::vector<int> kept;
        for (int t : targets)
          if (alive[static_cast<std::size_t>(t)]) kept.push_back(t);
        locs.emplace_back(key, std::move(kept));
      }
      out.locations.push_back(std::move(locs));
    }
  for (auto& locs : out.locations)
    for (auto& [key, targets] : locs)
      for (int& t : targets) t = remap[static_cast<std::size_t>(t)];
  for (const auto& [x, y] : g.edges)
    if (remap[static_cast<std::size_t>(x)] >= 0 && remap[static_cast<std::size_t>(y)] >= 0)
      out.edges.emplace_back(remap[static_cast<std::size_t>(x)],
                             remap[static_cast<std::size_t>(y)]);
  if (guaranteed && out.vertices.empty())
    throw std::logic_error("guaranteed survivor is empty");
  return out;
}

GrowthReport neighbor_growth_check(const SatisfactoryGraph& g, int b) {
  if (b < 0) throw std::invalid_argument("b must be nonnegative");
  GrowthReport report;
  if (g.vertices.empty()) return report;
  report.min_degree = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < g.vertices.size(); ++i)
    report.min_degree = std::min(report.min_degree, g.degree(static_cast<int>(i)));
  report.hypothesis_met = report.min_degree >= 2 * b;
  report.log_size = std::log(static_cast<double>(g.vertices.size()));
  report.log_b_factorial = std::lgamma(static_cast<double>(b) + 1.0);
  if (report.hypothesis_met) {
    report.passes = report.log_size >= report.log_b_factorial - 1e-12;
    if (!report.passes) throw std::logic_error("|K| < b! under the growth hypothesis");
  }
  return report;
}

}  // namespace piecewise
