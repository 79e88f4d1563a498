#include "piecewise/test_functions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "piecewise/profile.hpp"

namespace piecewise {

namespace {

double map_l2sq(const std::map<std::int64_t, double>& f) {
  double s = 0.0;
  for (const auto& [n, v] : f) s += v * v;
  return s;
}

double zvalue(const std::map<std::int64_t, double>& f, std::int64_t n) {
  auto it = f.find(n);
  return it == f.end() ? 0.0 : it->second;
}

// E_mu(f,f) = (1/2) sum_{m,u} mu(m) |f(m+u) - f(u)|^2 on Z.
double z_dirichlet(const ZMeasure& mu, const std::map<std::int64_t, double>& f) {
  double total = 0.0;
  for (const auto& [m, w] : mu.atoms) {
    if (m == 0) continue;
    std::set<std::int64_t> us;
    for (const auto& [u, v] : f) {
      us.insert(u);
      us.insert(u - m);
    }
    for (std::int64_t u : us) {
      double d = zvalue(f, u + m) - zvalue(f, u);
      total += w * d * d;
    }
  }
  return 0.5 * total;
}

std::int64_t support_radius(const std::map<std::int64_t, double>& f) {
  std::int64_t r = 0;
  for (const auto& [n, v] : f)
    if (v != 0.0) r = std::max<std::int64_t>(r, std::llabs(n));
  return r;
}

}  // namespace

TestFunction::TestFunction(std::shared_ptr<const GroupContext> ctx,
                           std::map<GroupElement, double> values)
    : ctx_(std::move(ctx)), values_(std::move(values)) {
  for (auto it = values_.begin(); it != values_.end();) {
    if (it->second == 0.0)
      it = values_.erase(it);
    else
      ++it;
  }
  for (const auto& [g, v] : values_) {
    l1_ += std::abs(v);
    l2sq_ += v * v;
  }
}

void EnergyReport::expect(const std::string& identity, double lhs, double rhs,
                          double tol) {
  IdentityCheck c;
  c.identity = identity;
  c.lhs = lhs;
  c.rhs = rhs;
  c.abs_error = std::abs(lhs - rhs);
  c.bound = false;
  c.pass = c.abs_error <= tol;
  checks.push_back(std::move(c));
}

void EnergyReport::expect_le(const std::string& identity, double lhs, double rhs,
                             double slack) {
  IdentityCheck c;
  c.identity = identity;
  c.lhs = lhs;
  c.rhs = rhs;
  c.abs_error = std::max(0.0, lhs - rhs);
  c.bound = true;
  c.pass = lhs <= rhs + slack;
  checks.push_back(std::move(c));
}

bool EnergyReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string EnergyReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"identity", c.identity},
                   {"lhs", c.lhs},
                   {"rhs", c.rhs},
                   {"abs_error", c.abs_error},
                   {"pass", c.pass}});
  }
  return arr.dump();
}

// ---------------------------------------------------------------------------
// Product test functions.

ProductFunctionResult product_test_function(
    const std::shared_ptr<const GroupContext>& ctx,
    const std::vector<ProductComponent>& components,
    const std::vector<Measure>& finite_measures) {
  if (!ctx || !ctx->graph)
    throw std::invalid_argument("product_test_function: no context");
  const int li = ctx->num_infinite;
  const int lf = static_cast<int>(ctx->factors.size()) - li;
  if (static_cast<int>(components.size()) != li)
    throw std::invalid_argument(
        "product_test_function: one component per infinite factor required");
  if (static_cast<int>(finite_measures.size()) != lf)
    throw std::invalid_argument(
        "product_test_function: one measure per finite factor required");
  for (int i = 0; i < li; ++i) {
    if (ctx->factors[i].dim != 1)
      throw std::invalid_argument("product_test_function: factors must be lines");
    if (map_l2sq(components[i].psi) == 0.0)
      throw std::invalid_argument("product_test_function: component with zero norm");
  }

  // Window points W: shared root, the inverse-support line points, and every
  // finite factor's point set.
  std::set<VertexId> wset;
  wset.insert(ctx->graph->root());
  for (int i = 0; i < li; ++i) {
    for (const auto& [u, v] : components[i].psi) {
      if (v == 0.0) continue;
      VertexId p = ctx->factors[i].point({-u});
      if (!ctx->graph->contains(p))
        throw WindowOverflow("product_test_function: support exceeds window at " +
                             p.encode());
      wset.insert(p);
    }
  }
  std::size_t sum_gamma = 0;
  for (int j = li; j < li + lf; ++j) {
    sum_gamma += ctx->factors[j].points.size() + 1;  // order counts the root
    for (const auto& p : ctx->factors[j].points) wset.insert(p);
  }
  std::vector<VertexId> w(wset.begin(), wset.end());
  if (w.size() > 8)
    throw std::invalid_argument("product_test_function: window set too large (" +
                                std::to_string(w.size()) + " points)");

  // V: all permutations of W in P0.
  std::vector<FinPerm> vperms;
  std::vector<std::size_t> idx(w.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  do {
    std::map<VertexId, VertexId> m;
    for (std::size_t i = 0; i < idx.size(); ++i) m[w[i]] = w[idx[i]];
    FinPerm p{std::move(m)};
    if (ctx->parity_even_only && p.parity() < 0) continue;
    vperms.push_back(std::move(p));
  } while (std::next_permutation(idx.begin(), idx.end()));

  // Component supports as sorted lists for the cartesian walk.
  std::vector<std::vector<std::pair<std::int64_t, double>>> supp(li);
  std::size_t sum_u = 0;
  for (int i = 0; i < li; ++i) {
    for (const auto& [u, v] : components[i].psi)
      if (v != 0.0) supp[i].push_back({u, v});
    sum_u += supp[i].size();
  }

  std::map<GroupElement, double> values;
  std::vector<std::size_t> cursor(li, 0);
  for (;;) {
    double prod = 1.0;
    std::vector<std::vector<std::int64_t>> trans(li);
    for (int i = 0; i < li; ++i) {
      trans[i] = {supp[i][cursor[i]].first};
      prod *= supp[i][cursor[i]].second;
    }
    for (const auto& tau : vperms)
      values[GroupElement(ctx, trans, tau)] = prod;
    int i = li - 1;
    for (; i >= 0; --i) {
      if (++cursor[i] < supp[i].size()) break;
      cursor[i] = 0;
    }
    if (i < 0) break;
  }
  TestFunction psi(ctx, std::move(values));

  // q = l^{-1} sum of the lifted component measures and the finite measures.
  std::vector<Measure> parts;
  for (int i = 0; i < li; ++i) {
    const GeneratorInfo* gen = nullptr;
    for (const auto& g : ctx->generators) {
      if (!g.perm.is_identity()) continue;
      bool match = true;
      for (int j = 0; j < li; ++j) {
        std::vector<std::int64_t> want(ctx->factors[j].dim, 0);
        if (j == i) want[0] = 1;
        if (g.trans[j] != want) match = false;
      }
      if (match) {
        gen = &g;
        break;
      }
    }
    if (!gen)
      throw std::invalid_argument(
          "product_test_function: no unit-translation generator for factor " +
          std::to_string(i + 1));
    parts.push_back(measure_from_z(
        ctx, GroupElement::generator(ctx, gen->letter), components[i].mu));
  }
  for (const auto& m : finite_measures) parts.push_back(m);
  Measure q = make_measure_q(parts);

  const double n_v = static_cast<double>(vperms.size());
  double prod_l2 = 1.0, sum_ratio = 0.0;
  for (int i = 0; i < li; ++i) {
    double l2 = map_l2sq(components[i].psi);
    prod_l2 *= l2;
    sum_ratio += z_dirichlet(components[i].mu, components[i].psi) / l2;
  }
  const double l_total = li + lf;
  const double e_closed = n_v * prod_l2 * sum_ratio / l_total;
  const double e_brute = dirichlet_form(q, psi.values(), 2);
  sum_u = std::max<std::size_t>(sum_u, 1);  // finite-only: identity coordinate

  EnergyReport report;
  report.expect("product: ||psi||^2 = |V| prod ||psi_i||^2", psi.l2sq(),
                n_v * prod_l2);
  report.expect("product: E_q(psi,psi) factorizes over components", e_brute,
                e_closed);
  report.expect_le(
      "product: log |supp psi| <= log(sum |U_i|) + log((sum |U_i| + sum |Gamma_i|)!)",
      std::log(static_cast<double>(psi.support_size())),
      std::log(static_cast<double>(sum_u)) +
          std::lgamma(static_cast<double>(sum_u + sum_gamma) + 1.0),
      1e-9);
  return ProductFunctionResult{std::move(psi), std::move(q), vperms.size(),
                               std::move(report)};
}

// ---------------------------------------------------------------------------
// Houghton test functions.

namespace {

// supp(tau) inside the star S(R) = {o} u {r_{a,b} : b <= R}.
bool perm_in_star(const FinPerm& tau, std::int64_t R) {
  for (const auto& [src, dst] : tau.moved()) {
    for (const VertexId* v : {&src, &dst}) {
      if (v->tag() == VTag::Root) continue;
      if (v->tag() != VTag::Ray || v->b() > R) return false;
    }
  }
  return true;
}

}  // namespace

double houghton_psi_value(const std::shared_ptr<const GroupContext>& ctx,
                          const ZMeasure& psi_s, const GroupElement& g) {
  if (!ctx || ctx->houghton_k < 2)
    throw std::invalid_argument("houghton_psi_value: not a Houghton context");
  const std::int64_t r = support_radius(psi_s.atoms) + 1;
  const std::int64_t R = (ctx->houghton_k + 3) * r;
  if (!perm_in_star(g.perm(), R)) return 0.0;
  double prod = 1.0;
  for (int i = 0; i < ctx->num_infinite; ++i)
    prod *= zvalue(psi_s.atoms, g.translations()[i][0]);
  return prod;
}

HoughtonFunctionReport houghton_test_function(
    const std::shared_ptr<const GroupContext>& ctx, const ZMeasure& psi_s,
    const std::map<std::pair<int, int>, ZMeasure>& p) {
  if (!ctx || ctx->houghton_k < 2)
    throw std::invalid_argument("houghton_test_function: not a Houghton context");
  const int k = ctx->houghton_k;
  const double l2 = [&] {
    double s = 0.0;
    for (const auto& [n, v] : psi_s.atoms) s += v * v;
    return s;
  }();
  if (std::abs(l2 - 1.0) > 1e-12)
    throw std::invalid_argument("houghton_test_function: psi_s must have unit norm");
  if (!psi_s.symmetric())
    throw std::invalid_argument("houghton_test_function: psi_s must be symmetric");
  const std::int64_t r = support_radius(psi_s.atoms) + 1;
  const std::int64_t R = (k + 3) * r;
  for (int i = 1; i <= k; ++i)
    if (!ctx->graph->contains(VertexId::ray(i, R)))
      throw WindowOverflow("houghton_test_function: window smaller than S((k+3)r)");
  for (const auto& [uv, m] : p) {
    if (uv.first < 1 || uv.first >= uv.second || uv.second > k)
      throw std::invalid_argument("houghton_test_function: bad generator pair");
    if (!m.symmetric())
      throw std::invalid_argument("houghton_test_function: p must be symmetric");
    if (support_radius(m.atoms) > 2 * r)
      throw std::invalid_argument(
          "houghton_test_function: p support exceeds [-2r, 2r]");
  }

  HoughtonFunctionReport rep;
  rep.k = k;
  rep.r = r;
  rep.star_radius = R;
  rep.log_v_size = std::lgamma(static_cast<double>(k * R + 1) + 1.0);
  rep.log_norm_sq = rep.log_v_size + (k - 1) * std::log(l2);

  // Crux: h_{u,v}^m (z, tau) = (z', tau') with z'_i = z_i + m [i=u] - m [i=v:v<k],
  // supp(tau') within supp(tau) u S(2|m| + sum |z_i|), and tau in V_s => tau' in V_s.
  std::vector<FinPerm> taus = {
      FinPerm(), FinPerm::transposition(VertexId::root(), VertexId::ray(1, 1)),
      FinPerm::transposition(VertexId::ray(1, R), VertexId::ray(k, R)),
      FinPerm::transposition(VertexId::ray(1, R + 1), VertexId::ray(2, R + 1))};
  bool crux_ok = true;
  auto z_grid = [&](auto&& visit) {
    std::vector<std::int64_t> z(k - 1, -(r - 1));
    for (;;) {
      visit(z);
      int i = k - 2;
      for (; i >= 0; --i) {
        if (++z[i] <= r - 1) break;
        z[i] = -(r - 1);
      }
      if (i < 0) break;
    }
  };
  for (const auto& [uv, pm] : p) {
    const auto [u, v] = uv;
    for (const auto& [m, w] : pm.atoms) {
      GroupElement h = houghton_element(ctx, u, v, m);
      for (const auto& tau : taus) {
        z_grid([&](const std::vector<std::int64_t>& z) {
          std::vector<std::vector<std::int64_t>> trans(k - 1);
          std::int64_t zsum = 0;
          for (int i = 0; i < k - 1; ++i) {
            trans[i] = {z[i]};
            zsum += std::llabs(z[i]);
          }
          GroupElement g(ctx, trans, tau);
          GroupElement hg = h.multiply(g);
          for (int i = 0; i < k - 1; ++i) {
            std::int64_t want = z[i];
            if (i + 1 == u) want += m;
            if (i + 1 == v) want -= m;  // only reachable when v < k
            if (hg.translations()[i][0] != want) crux_ok = false;
          }
          std::set<VertexId> allowed;
          for (const auto& [s, d] : tau.moved()) allowed.insert(s);
          const std::int64_t near = 2 * (std::llabs(m) + zsum) + 2;
          for (const auto& [s, d] : hg.perm().moved()) {
            bool ok = allowed.count(s) || s.tag() == VTag::Root ||
                      (s.tag() == VTag::Ray && s.b() <= near);
            if (!ok) crux_ok = false;
          }
          if (perm_in_star(tau, R) && !perm_in_star(hg.perm(), R)) crux_ok = false;
        });
      }
    }
  }
  rep.crux_ok = crux_ok;
  rep.report.expect("houghton: crux shift rule and V_s preservation",
                    crux_ok ? 1.0 : 0.0, 1.0, 0.0);

  // Factorized energy per unit |V_s|, cross-checked against the engine on the
  // tau = id slice of the z-grid.
  const double binom = k * (k - 1) / 2.0;
  double energy = 0.0;  // E_{q_p}(Psi,Psi) / |V_s|
  for (int u = 1; u < k; ++u) {
    for (int v = u + 1; v <= k; ++v) {
      auto it = p.find({u, v});
      if (it == p.end()) continue;
      double e_pair = 0.0;
      for (const auto& [m, w] : it->second.atoms) {
        if (m == 0) continue;
        double t = 0.0;
        if (v < k) {
          for (std::int64_t zu = -3 * r; zu <= 3 * r; ++zu)
            for (std::int64_t zv = -3 * r; zv <= 3 * r; ++zv) {
              double d = zvalue(psi_s.atoms, zu + m) * zvalue(psi_s.atoms, zv - m) -
                         zvalue(psi_s.atoms, zu) * zvalue(psi_s.atoms, zv);
              t += d * d;
            }
        } else {
          for (std::int64_t zu = -3 * r; zu <= 3 * r; ++zu) {
            double d = zvalue(psi_s.atoms, zu + m) - zvalue(psi_s.atoms, zu);
            t += d * d;
          }
        }
        e_pair += w * t;
      }
      energy += 0.5 * e_pair / binom;
    }
  }
  // Brute slice: same energy from explicit group elements over a wide grid.
  Measure qp = make_measure_houghton(ctx, p);
  double brute = 0.0;
  {
    std::vector<std::int64_t> z(k - 1, -3 * r);
    for (;;) {
      std::vector<std::vector<std::int64_t>> trans(k - 1);
      for (int i = 0; i < k - 1; ++i) trans[i] = {z[i]};
      GroupElement g(ctx, trans, FinPerm());
      double fg = houghton_psi_value(ctx, psi_s, g);
      for (const auto& [y, w] : qp.atoms()) {
        if (y.is_identity()) continue;
        double d = houghton_psi_value(ctx, psi_s, y.multiply(g)) - fg;
        brute += w * d * d;
      }
      int i = k - 2;
      for (; i >= 0; --i) {
        if (++z[i] <= 3 * r) break;
        z[i] = -3 * r;
      }
      if (i < 0) break;
    }
    brute *= 0.5;
  }
  rep.report.expect("houghton: factorized energy matches engine evaluation",
                    energy, brute);

  double s = 0.0;
  for (const auto& [uv, pm] : p) {
    std::map<std::int64_t, double> f = psi_s.atoms;
    s = std::max(s, z_dirichlet(pm, f));
  }
  rep.s = s;
  rep.ratio = energy;  // ||Psi||^2 = |V_s| for a unit-norm psi_s
  rep.report.expect_le("houghton: E/||Psi||^2 <= 2s", rep.ratio, 2.0 * s, 1e-12);
  return rep;
}

// ---------------------------------------------------------------------------
// Star-extension test functions.

StarFunctionResult star_test_function(
    const std::shared_ptr<const GroupContext>& ctx,
    const std::map<GroupElement, double>& phi, double eta,
    std::size_t materialize_limit) {
  if (!ctx || !ctx->graph || ctx->generators.size() % 2 != 0)
    throw std::invalid_argument("star_test_function: not a star extension");
  const int k = static_cast<int>(ctx->generators.size()) / 2;
  const VertexId root = ctx->graph->root();
  std::vector<GroupElement> s_gen, t_gen;
  std::vector<VertexId> s_root(k);
  for (int i = 1; i <= k; ++i) {
    s_gen.push_back(GroupElement::generator(ctx, Letter::pos(i)));
    t_gen.push_back(GroupElement::generator(ctx, Letter::pos(k + i)));
    s_root[i - 1] = s_gen.back().apply(root);
    const auto& tp = t_gen.back();
    if (!tp.perm().moved().empty() &&
        tp.perm() == FinPerm::transposition(root, s_root[i - 1]))
      continue;
    throw std::invalid_argument("star_test_function: letter " +
                                std::to_string(k + i) + " is not (root, s_i root)");
  }
  double phi_l2 = 0.0;
  for (const auto& [g, v] : phi) {
    if (!g.perm().is_identity())
      throw std::invalid_argument(
          "star_test_function: phi must live on the base group");
    phi_l2 += v * v;
  }
  if (phi_l2 == 0.0)
    throw std::invalid_argument("star_test_function: phi has zero norm");

  // V = U^{-1}(S u S^{-1}) o  together with  U^{-1} o  so that both points of
  // every conjugated transposition g^{-1} t_i g lie in V.
  std::set<VertexId> vset;
  std::size_t u_count = 0;
  for (const auto& [g, v] : phi) {
    if (v == 0.0) continue;
    ++u_count;
    vset.insert(g.apply_inverse(root));
    for (int i = 0; i < k; ++i) {
      vset.insert(g.apply_inverse(s_root[i]));
      vset.insert(g.apply_inverse(s_gen[i].apply_inverse(root)));
    }
  }

  // nu = (nu_1 + nu_2)/2: nu_1 uniform on the 2k base letters, nu_2 uniform on
  // the k transpositions.
  std::vector<std::pair<GroupElement, double>> atoms, atoms1, atoms2;
  for (int i = 0; i < k; ++i) {
    atoms.push_back({s_gen[i], 1.0 / (4 * k)});
    atoms.push_back({s_gen[i].inverse(), 1.0 / (4 * k)});
    atoms.push_back({t_gen[i], 1.0 / (2 * k)});
    atoms1.push_back({s_gen[i], 1.0 / (2 * k)});
    atoms1.push_back({s_gen[i].inverse(), 1.0 / (2 * k)});
    atoms2.push_back({t_gen[i], 1.0 / (2 * k)});
  }
  Measure nu(ctx, atoms);
  Measure nu1(ctx, atoms1);

  EnergyReport report;

  // nu_2 term: g^{-1} t_i g is the transposition (g^{-1} o, g^{-1} s_i o);
  // both points lie in V, so 1_V is unchanged and every difference vanishes.
  bool conj_ok = true;
  for (const auto& [g, v] : phi) {
    if (v == 0.0) continue;
    GroupElement gi = g.inverse();
    for (int i = 0; i < k; ++i) {
      VertexId p1 = g.apply_inverse(root), p2 = g.apply_inverse(s_root[i]);
      if (!vset.count(p1) || !vset.count(p2)) conj_ok = false;
      if (t_gen[i].conjugate(gi) !=
          GroupElement(ctx, GroupElement::identity(ctx).translations(),
                       FinPerm::transposition(p1, p2)))
        conj_ok = false;
    }
  }
  report.expect("star: g^{-1} t_i g = (g^{-1} o, g^{-1} s_i o) inside V",
                conj_ok ? 1.0 : 0.0, 1.0, 0.0);

  const double e1 = dirichlet_form(nu1, phi, 2);
  const double ratio = 0.5 * e1 / phi_l2;
  report.expect_le("star: E_nu/||psi||^2 <= eta/2", ratio, eta / 2.0, 1e-12);

  const double log_perm = std::lgamma(static_cast<double>(vset.size()) + 1.0);
  const double log_support =
      std::log(static_cast<double>(u_count)) + log_perm;
  const double v_card = static_cast<double>(u_count);
  report.expect_le("star: log |supp psi| <= log(((2k+1) v)!)", log_support,
                   std::lgamma((2.0 * k + 1.0) * v_card + 1.0), 1e-9);

  // The factorized identities read off cosets g S(V); they are exact only when
  // distinct coset representatives stay distinct.  A finite base can collapse
  // them (Z/3: the star closure is all of S_3 and psi is constant).
  auto in_sv = [&](const GroupElement& e) {
    if (e != GroupElement(ctx, GroupElement::identity(ctx).translations(),
                          e.perm()))
      return false;
    for (const auto& [p, q] : e.perm().moved())
      if (!vset.count(p) || !vset.count(q)) return false;
    return true;
  };
  std::vector<GroupElement> supp_reps, nbr_reps;
  for (const auto& [g, v] : phi) {
    if (v == 0.0) continue;
    supp_reps.push_back(g);
    nbr_reps.push_back(g);
    for (int i = 0; i < k; ++i) {
      nbr_reps.push_back(s_gen[i].multiply(g));
      nbr_reps.push_back(s_gen[i].inverse().multiply(g));
    }
  }
  auto cosets_separate = [&](const std::vector<GroupElement>& reps) {
    for (std::size_t i = 0; i < reps.size(); ++i)
      for (std::size_t j = i + 1; j < reps.size(); ++j)
        if (reps[i] != reps[j] &&
            in_sv(reps[i].inverse().multiply(reps[j])))
          return false;
    return true;
  };
  const bool supp_injective = cosets_separate(supp_reps);
  const bool nbrs_injective = cosets_separate(nbr_reps);

  std::optional<TestFunction> psi;
  if (vset.size() <= materialize_limit) {
    std::vector<VertexId> vv(vset.begin(), vset.end());
    std::vector<std::size_t> idx(vv.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::map<GroupElement, double> values;
    std::size_t n_v = 0;
    do {
      std::map<VertexId, VertexId> m;
      for (std::size_t i = 0; i < idx.size(); ++i) m[vv[i]] = vv[idx[i]];
      FinPerm tau{std::move(m)};
      ++n_v;
      GroupElement t(ctx, GroupElement::identity(ctx).translations(), tau);
      for (const auto& [g, val] : phi)
        if (val != 0.0) values[g.multiply(t)] = val;
    } while (std::next_permutation(idx.begin(), idx.end()));
    psi.emplace(ctx, std::move(values));
    if (supp_injective)
      report.expect("star: ||psi||^2 = |V|! ||phi||^2", psi->l2sq(),
                    static_cast<double>(n_v) * phi_l2);
    if (nbrs_injective)
      report.expect("star: E_nu(psi,psi) = |V|! E_{nu_1}(phi,phi)/2",
                    dirichlet_form(nu, psi->values(), 2),
                    0.5 * static_cast<double>(n_v) * e1, 1e-9);
    else
      report.expect_le("star: E_nu(psi,psi) <= |V|! E_{nu_1}(phi,phi)/2",
                       dirichlet_form(nu, psi->values(), 2),
                       0.5 * static_cast<double>(n_v) * e1, 1e-9);
    Measure nu2(ctx, [&] {
      auto a = atoms2;
      for (auto& [g, w] : a) w *= 2.0;  // probability-normalized; scale is moot
      return a;
    }());
    report.expect("star: nu_2 term vanishes exactly",
                  dirichlet_form(nu2, psi->values(), 2), 0.0, 0.0);
  }

  StarFunctionResult res{std::move(psi), vset.size(),   log_perm,
                         log_support,    0.0,           ratio,
                         std::move(nu),  std::move(report)};
  return res;
}

Word star_transposition_word(const std::shared_ptr<const GroupContext>& ctx,
                             const std::vector<Letter>& sigma) {
  if (sigma.empty())
    throw std::invalid_argument("star_transposition_word: empty word");
  if (!ctx || ctx->generators.size() % 2 != 0)
    throw std::invalid_argument("star_transposition_word: not a star extension");
  const int k = static_cast<int>(ctx->generators.size()) / 2;
  for (const auto& l : sigma)
    if (l.index < 1 || l.index > k)
      throw std::invalid_argument("star_transposition_word: not a base letter");
  // The staircase telescopes only along a simple root path o, sigma_1 o, ...
  {
    std::set<VertexId> seen{ctx->graph->root()};
    GroupElement pre = GroupElement::identity(ctx);
    for (const auto& l : sigma) {
      pre = pre.multiply(GroupElement::generator(ctx, l));
      if (!seen.insert(pre.apply(ctx->graph->root())).second)
        throw std::invalid_argument(
            "star_transposition_word: the word's root path revisits a vertex");
    }
  }

  // t_sigma: the transposition (o, sigma o).  For sigma = s_i this is the
  // letter t_i; for sigma = s_i^{-1} it is s_i^{-1} t_i s_i.
  auto t_word = [&](const Letter& l) {
    Word w;
    if (l.inv) {
      w.push_back(Letter::neg(l.index));
      w.push_back(Letter::pos(k + l.index));
      w.push_back(Letter::pos(l.index));
    } else {
      w.push_back(Letter::pos(k + l.index));
    }
    return w;
  };

  // Staircase: (e, x) = [prod_{i<l} t_{sigma_i} sigma_i] t_{sigma_l}
  //                     [prod_{i=l-1..1} sigma_i^{-1} t_{sigma_i}].
  Word out;
  const std::size_t l = sigma.size();
  for (std::size_t i = 0; i + 1 < l; ++i) {
    Word t = t_word(sigma[i]);
    out.insert(out.end(), t.begin(), t.end());
    out.push_back(sigma[i]);
  }
  {
    Word t = t_word(sigma[l - 1]);
    out.insert(out.end(), t.begin(), t.end());
  }
  for (std::size_t i = l - 1; i-- > 0;) {
    out.push_back(sigma[i].inverse());
    Word t = t_word(sigma[i]);
    out.insert(out.end(), t.begin(), t.end());
  }
  if (out.size() > 8 * l)
    throw std::logic_error("star_transposition_word: length exceeds 8l");

  GroupElement x = normal_form(ctx, sigma);
  VertexId xo = x.apply(ctx->graph->root());
  if (xo == ctx->graph->root())
    throw std::invalid_argument("star_transposition_word: x fixes the root");
  GroupElement expect(ctx, GroupElement::identity(ctx).translations(),
                      FinPerm::transposition(ctx->graph->root(), xo));
  if (normal_form(ctx, out) != expect)
    throw std::logic_error(
        "star_transposition_word: word does not evaluate to (o, x o)");
  return out;
}

// ---------------------------------------------------------------------------
// Bubble groups.

namespace {

// Closed-form generator action on the (unbounded) bubble universe.  Depths
// beyond the stored half-length sequence raise out_of_range, reported to the
// caller as a cutoff overflow.
struct BubbleOps {
  const BubbleInfo* info;
  bool pocket;

  VertexId act(const Letter& l, const VertexId& x) const {
    if (x.tag() == VTag::Star) {
      if (l.index == 3 && pocket) return VertexId::bubble({}, 0);
      return x;
    }
    if (x.tag() != VTag::Bub) return x;
    const auto& w = x.vec();
    const std::int64_t u = x.a();
    switch (l.index) {
      case 1: {  // alpha: rotation of every bubble
        const std::int64_t len = 2 * info->a.at(w.size());
        return VertexId::bubble(w, ((u + (l.inv ? -1 : 1)) % len + len) % len);
      }
      case 2: {  // beta: 3-cycle (w,a) -> (w1,0) -> (w2,0) at every junction
        const std::int64_t a = info->a.at(w.size());
        if (!l.inv) {
          if (u == a) {
            auto c = w;
            c.push_back(1);
            return VertexId::bubble(c, 0);
          }
          if (u == 0 && !w.empty()) {
            auto v = w;
            v.pop_back();
            if (w.back() == 1) {
              v.push_back(2);
              return VertexId::bubble(v, 0);
            }
            return VertexId::bubble(v, info->a.at(v.size()));
          }
        } else {
          if (u == a) {
            auto c = w;
            c.push_back(2);
            return VertexId::bubble(c, 0);
          }
          if (u == 0 && !w.empty()) {
            auto v = w;
            v.pop_back();
            if (w.back() == 2) {
              v.push_back(1);
              return VertexId::bubble(v, 0);
            }
            return VertexId::bubble(v, info->a.at(v.size()));
          }
        }
        return x;
      }
      case 3:  // tau: (o *)
        if (pocket && w.empty() && u == 0) return VertexId::star();
        return x;
      default:
        return x;
    }
  }
};

// Shared interning + lazy per-generator image tables over a growable vertex
// universe.
struct BubbleEngine {
  BubbleOps ops;
  std::vector<VertexId> universe;
  std::unordered_map<VertexId, std::int32_t, VertexHash> id_of;
  std::vector<Letter> gens;
  std::vector<std::vector<std::int32_t>> img;  // per gen, -1 = not yet computed

  explicit BubbleEngine(const BubbleInfo* info, bool pocket,
                        std::vector<VertexId> window, bool use_tau)
      : ops{info, pocket} {
    universe = std::move(window);
    for (std::size_t i = 0; i < universe.size(); ++i)
      id_of.emplace(universe[i], static_cast<std::int32_t>(i));
    gens = {Letter::pos(1), Letter::neg(1), Letter::pos(2), Letter::neg(2)};
    if (use_tau) gens.push_back(Letter::pos(3));  // an involution
    img.resize(gens.size());
  }

  std::int32_t intern(const VertexId& v) {
    auto it = id_of.find(v);
    if (it != id_of.end()) return it->second;
    std::int32_t id = static_cast<std::int32_t>(universe.size());
    universe.push_back(v);
    id_of.emplace(v, id);
    return id;
  }

  std::int32_t image(std::size_t gi, std::int32_t vid) {
    auto& t = img[gi];
    if (static_cast<std::size_t>(vid) >= t.size())
      t.resize(universe.size(), -1);
    if (t[vid] < 0) {
      try {
        t[vid] = intern(ops.act(gens[gi], universe[vid]));
      } catch (const std::out_of_range&) {
        throw std::runtime_error(
            "bubble universe cutoff exceeded: deepen the window");
      }
    }
    return t[vid];
  }

  // gamma g as a window state: slot -> gamma(g(slot)).
  std::vector<std::int32_t> compose(std::size_t gi,
                                    const std::vector<std::int32_t>& state) {
    std::vector<std::int32_t> out(state.size());
    for (std::size_t s = 0; s < state.size(); ++s) out[s] = image(gi, state[s]);
    return out;
  }
};

std::optional<std::int64_t> state_t(const BubbleEngine& eng,
                                    const std::vector<std::int32_t>& state,
                                    std::size_t m_slot,
                                    const std::vector<std::int64_t>& spine,
                                    std::int64_t half, std::int64_t ell) {
  const VertexId& im = eng.universe[state[m_slot]];
  if (im.tag() != VTag::Bub || im.vec() != spine) return std::nullopt;
  const std::int64_t t = im.a() - half;
  if (std::llabs(t) > ell) return std::nullopt;
  return t;
}

std::optional<std::size_t> member_lookup(
    const std::vector<std::vector<std::int32_t>>& members,
    const std::vector<std::int32_t>& state) {
  auto it = std::lower_bound(members.begin(), members.end(), state);
  if (it == members.end() || *it != state) return std::nullopt;
  return static_cast<std::size_t>(it - members.begin());
}

}  // namespace

BubbleAction BubbleUSet::action_of(std::size_t i) const {
  BubbleAction a;
  const auto& st = members.at(i);
  for (std::size_t s = 0; s < window_size; ++s)
    if (st[s] != static_cast<std::int32_t>(s)) a[universe[s]] = universe[st[s]];
  return a;
}

std::optional<std::size_t> BubbleUSet::find(const BubbleAction& a) const {
  std::unordered_map<VertexId, std::int32_t, VertexHash> id_of;
  for (std::size_t i = 0; i < universe.size(); ++i)
    id_of.emplace(universe[i], static_cast<std::int32_t>(i));
  std::vector<std::int32_t> state(window_size);
  for (std::size_t s = 0; s < window_size; ++s)
    state[s] = static_cast<std::int32_t>(s);
  for (const auto& [src, dst] : a) {
    auto si = id_of.find(src), di = id_of.find(dst);
    if (si == id_of.end() || di == id_of.end() ||
        static_cast<std::size_t>(si->second) >= window_size)
      return std::nullopt;
    state[si->second] = di->second;
  }
  return member_lookup(members, state);
}

BubbleUSet bubble_U_set(const GroupSystem& sys, int k, std::int64_t ell,
                        bool use_tau, std::size_t budget) {
  if (!sys.bubble || !sys.graph)
    throw std::invalid_argument("bubble_U_set: not a bubble system");
  const auto& info = *sys.bubble;
  if (k < 1 || k > info.cutoff)
    throw std::invalid_argument(
        "bubble_U_set: need 1 <= k <= cutoff for a faithful window");
  if (ell < 0 || ell > info.a.at(k - 1) / 2 - 1)
    throw std::invalid_argument("bubble_U_set: l out of range");
  const bool pocket = sys.graph->contains(VertexId::star());

  BubbleUSet u;
  u.k = k;
  u.ell = ell;
  u.used_pocket_letter = use_tau && pocket;
  u.info = sys.bubble;
  u.graph = sys.graph;
  u.m_k = info.midpoint(k);

  BubbleEngine eng(&info, pocket, sys.graph->vertices(), u.used_pocket_letter);
  const std::size_t n = eng.universe.size();
  const std::size_t m_slot = sys.graph->vertex_index(u.m_k);
  const std::vector<std::int64_t> spine(k - 1, 1);
  const std::int64_t half = info.a.at(k - 1) / 2;

  std::vector<std::int32_t> id_state(n);
  for (std::size_t i = 0; i < n; ++i) id_state[i] = static_cast<std::int32_t>(i);
  std::map<std::vector<std::int32_t>, std::int64_t> seen;
  std::deque<std::vector<std::int32_t>> frontier;
  seen.emplace(id_state, 0);
  frontier.push_back(std::move(id_state));
  while (!frontier.empty()) {
    auto state = std::move(frontier.front());
    frontier.pop_front();
    for (std::size_t gi = 0; gi < eng.gens.size(); ++gi) {
      auto next = eng.compose(gi, state);
      auto t = state_t(eng, next, m_slot, spine, half, ell);
      if (!t) continue;  // leaves B_k(l): no word through here is admissible
      if (seen.emplace(next, *t).second) {
        if (seen.size() > budget)
          throw std::runtime_error("bubble_U_set: state budget exceeded");
        frontier.push_back(std::move(next));
      }
    }
  }

  u.members.reserve(seen.size());
  u.t_of.reserve(seen.size());
  u.classes.assign(2 * ell + 1, {});
  for (auto& [state, t] : seen) {  // std::map iteration = sorted members
    u.classes[t + ell].push_back(u.members.size());
    u.t_of.push_back(t);
    u.members.push_back(state);
  }
  u.universe = eng.universe;
  u.window_size = n;

  for (const auto& cls : u.classes)
    if (cls.size() != u.classes.front().size())
      throw std::logic_error("bubble_U_set: partition classes differ in size");
  // alpha^{-t} U(l,t) = U(l,0) elementwise.
  const std::size_t a_inv = 1, a_fwd = 0;
  for (std::size_t i = 0; i < u.members.size(); ++i) {
    if (u.t_of[i] == 0) continue;
    auto state = u.members[i];
    for (std::int64_t s = 0; s < std::llabs(u.t_of[i]); ++s)
      state = eng.compose(u.t_of[i] > 0 ? a_inv : a_fwd, state);
    auto j = member_lookup(u.members, state);
    if (!j || u.t_of[*j] != 0)
      throw std::logic_error("bubble_U_set: alpha^{-t} conjugate escapes U(l,0)");
  }
  return u;
}

BubbleTestFunctionResult bubble_test_function(const BubbleUSet& u) {
  const std::int64_t l = u.ell;
  if (l < 1)
    throw std::invalid_argument("bubble_test_function: l = 0 is degenerate");
  const std::int64_t size = static_cast<std::int64_t>(u.members.size());

  BubbleTestFunctionResult res;
  res.values.reserve(u.members.size());
  std::int64_t s2 = 0;  // sum over U of (l - |t|)^2
  for (std::int64_t t : u.t_of) {
    const std::int64_t v = l - std::llabs(t);
    s2 += v * v;
    res.values.push_back(static_cast<double>(v) / static_cast<double>(l));
  }
  res.l2sq = static_cast<double>(s2) / static_cast<double>(l * l);

  std::size_t cmin = u.members.size(), cmax = 0;
  for (const auto& c : u.classes) {
    cmin = std::min(cmin, c.size());
    cmax = std::max(cmax, c.size());
  }
  res.report.expect("bubble: partition classes share one cardinality",
                    static_cast<double>(cmax), static_cast<double>(cmin), 0.0);

  BubbleEngine eng(u.info.get(), u.graph->contains(VertexId::star()),
                   std::vector<VertexId>(u.universe.begin(),
                                         u.universe.begin() + u.window_size),
                   u.used_pocket_letter);
  for (std::size_t i = u.window_size; i < u.universe.size(); ++i)
    eng.intern(u.universe[i]);

  auto int_value = [&](const std::vector<std::int32_t>& state) -> std::int64_t {
    auto j = member_lookup(u.members, state);
    return j ? l - std::llabs(u.t_of[*j]) : 0;
  };

  // Integer energy sums: alpha steps change |t| by one (difference 1/l), beta
  // and tau fix m_k (difference 0); boundary exits carry value 0.
  std::int64_t s_e = 0, s_tau = 0;
  for (std::size_t i = 0; i < u.members.size(); ++i) {
    const std::int64_t vg = l - std::llabs(u.t_of[i]);
    for (std::size_t gi = 0; gi < eng.gens.size(); ++gi) {
      const std::int64_t d = int_value(eng.compose(gi, u.members[i])) - vg;
      if (eng.gens[gi].index == 3)
        s_tau += d * d;
      else
        s_e += d * d;
    }
  }
  res.energy = static_cast<double>(s_e) / static_cast<double>(8 * l * l);
  res.ratio = res.energy / res.l2sq;

  // ||psi||^2 = (2l^2+1)/(3l(2l+1)) |U|  <=>  3 (2l+1) s2 = l (2l^2+1) |U|.
  res.report.expect("bubble: 3(2l+1) sum (l-|t|)^2 = l(2l^2+1) |U|",
                    static_cast<double>(3 * (2 * l + 1) * s2),
                    static_cast<double>(l * (2 * l * l + 1) * size), 0.0);
  // E = |U| / (2l(2l+1))  <=>  (2l+1) sum of squared integer steps = 4l |U|.
  res.report.expect("bubble: (2l+1) sum |l psi(yg) - l psi(g)|^2 = 4l |U|",
                    static_cast<double>((2 * l + 1) * s_e),
                    static_cast<double>(4 * l * size), 0.0);
  if (u.used_pocket_letter)
    res.report.expect("bubble: pocket letter difference sum vanishes",
                      static_cast<double>(s_tau), 0.0, 0.0);
  res.report.expect("bubble: ratio = 3/(2(2l^2+1))", res.ratio,
                    3.0 / static_cast<double>(2 * (2 * l * l + 1)), 1e-12);
  res.report.expect_le("bubble: ratio <= 3/(2l^2)", res.ratio,
                       3.0 / static_cast<double>(2 * l * l), 1e-12);
  if (u.k < 8)
    res.report.expect(
        "bubble: note - asymptotic regime wants k >= 8; identities are exact "
        "for any k with l >= 1",
        static_cast<double>(u.k), static_cast<double>(u.k), 0.0);
  return res;
}

namespace {

struct BubbleRegions {
  std::set<VertexId> buffer;
  std::set<VertexId> root_region;
  struct Junction {
    std::vector<std::int64_t> w;
    bool interior = false;  // children materialized: local form fully visible
    std::map<VertexId, std::pair<int, std::int64_t>> local;  // point -> (arm, d)
  };
  std::vector<Junction> junctions;
};

BubbleRegions bubble_regions(const BubbleUSet& u) {
  const auto& info = *u.info;
  const std::int64_t l = u.ell;
  BubbleRegions r;
  std::set<std::vector<std::int64_t>> words;
  for (std::size_t s = 0; s < u.window_size; ++s) {
    const VertexId& v = u.universe[s];
    if (v.tag() != VTag::Bub) continue;
    words.insert(v.vec());
    const int level = static_cast<int>(v.vec().size()) + 1;
    if (level < u.k) continue;
    // Buffer: points farther than l from both junction-adjacent offsets 0, a.
    const std::int64_t a = info.a.at(v.vec().size());
    const std::int64_t off = v.a();
    const std::int64_t d = std::min<std::int64_t>(
        std::min(off, 2 * a - off), std::llabs(off - a));
    if (d > l) {
      if (a / 2 - l - 1 < 1)
        throw std::invalid_argument(
            "bubble_regions: buffers collapse (need l <= a_k/2 - 2)");
      r.buffer.insert(v);
    }
  }

  for (const auto& w : words) {
    if (static_cast<int>(w.size()) < u.k - 1) continue;
    BubbleRegions::Junction j;
    j.w = w;
    j.interior = static_cast<int>(w.size()) < info.cutoff;
    const std::int64_t a = info.a.at(w.size());
    const std::int64_t len = 2 * a;
    auto w1 = w, w2 = w;
    w1.push_back(1);
    w2.push_back(2);
    const std::int64_t clen = 2 * info.a.at(w.size() + 1);
    for (std::int64_t d = -l; d <= l; ++d) {
      j.local[VertexId::bubble(w, ((a + d) % len + len) % len)] = {0, d};
      j.local[VertexId::bubble(w1, (d % clen + clen) % clen)] = {1, d};
      j.local[VertexId::bubble(w2, (d % clen + clen) % clen)] = {2, d};
    }
    r.junctions.push_back(std::move(j));
  }

  // Root region: component of the root in the window minus buffers and
  // junction regions (adjacency from the labelled graph).
  std::set<VertexId> in_junction;
  for (const auto& j : r.junctions)
    for (const auto& [p, c] : j.local) in_junction.insert(p);
  const auto& g = *u.graph;
  std::deque<VertexId> q;
  q.push_back(g.root());
  r.root_region.insert(g.root());
  while (!q.empty()) {
    VertexId v = q.front();
    q.pop_front();
    for (int i = 1; i <= g.alphabet_size(); ++i)
      for (bool inv : {false, true}) {
        auto nb = g.act_raw(v, Letter(i, inv));
        if (!nb || !g.contains(*nb)) continue;
        if (r.buffer.count(*nb) || in_junction.count(*nb)) continue;
        if (r.root_region.insert(*nb).second) q.push_back(*nb);
      }
  }
  return r;
}

}  // namespace

BubbleFactorization bubble_support_factorization(const BubbleUSet& u,
                                                 std::size_t member_index) {
  if (member_index >= u.members.size() || u.t_of.at(member_index) != 0)
    throw std::invalid_argument(
        "bubble_support_factorization: member is not in U(l,0)");
  BubbleRegions regions = bubble_regions(u);
  BubbleAction action = u.action_of(member_index);

  BubbleFactorization out;
  BubbleAction root_factor;
  std::vector<BubbleAction> junc_factor(regions.junctions.size());
  bool disjoint = true;
  for (const auto& [src, dst] : action) {
    if (regions.buffer.count(src)) {
      disjoint = false;
      continue;
    }
    if (regions.root_region.count(src)) {
      root_factor[src] = dst;
      if (!regions.root_region.count(dst)) disjoint = false;
      continue;
    }
    bool placed = false;
    for (std::size_t j = 0; j < regions.junctions.size(); ++j) {
      if (!regions.junctions[j].local.count(src)) continue;
      junc_factor[j][src] = dst;
      if (!regions.junctions[j].local.count(dst)) disjoint = false;
      placed = true;
      break;
    }
    if (!placed) disjoint = false;
  }

  // Determinacy: in junction-local coordinates (arm, d) all interior factors
  // coincide; boundary factors (children off-window) agree where visible.
  using LocalForm = std::map<std::pair<int, std::int64_t>,
                             std::pair<int, std::int64_t>>;
  std::optional<LocalForm> common;
  bool determined = disjoint;
  std::vector<LocalForm> forms(regions.junctions.size());
  for (std::size_t j = 0; j < regions.junctions.size(); ++j) {
    for (const auto& [src, dst] : junc_factor[j]) {
      auto si = regions.junctions[j].local.find(src);
      auto di = regions.junctions[j].local.find(dst);
      if (si == regions.junctions[j].local.end() ||
          di == regions.junctions[j].local.end()) {
        determined = false;
        continue;
      }
      forms[j][si->second] = di->second;
    }
    if (regions.junctions[j].interior) {
      if (!common)
        common = forms[j];
      else if (*common != forms[j])
        determined = false;
    }
  }
  if (common) {
    for (std::size_t j = 0; j < regions.junctions.size(); ++j) {
      if (regions.junctions[j].interior) continue;
      for (const auto& [from, to] : forms[j]) {
        auto it = common->find(from);
        if (it == common->end() || it->second != to) determined = false;
      }
    }
  }

  out.factors.push_back({"B", std::move(root_factor)});
  for (std::size_t j = 0; j < regions.junctions.size(); ++j) {
    std::string name = "N(";
    for (auto d : regions.junctions[j].w) name += static_cast<char>('0' + d);
    name += ")";
    out.factors.push_back({std::move(name), std::move(junc_factor[j])});
  }
  out.disjoint = disjoint;
  out.determined = determined;
  out.report.expect("bubble factorization: buffers fixed, factors disjoint",
                    disjoint ? 1.0 : 0.0, 1.0, 0.0);
  out.report.expect("bubble factorization: junction factors share one local form",
                    determined ? 1.0 : 0.0, 1.0, 0.0);
  return out;
}

BubbleCountBound bubble_factorization_bound(const BubbleUSet& u) {
  BubbleRegions regions = bubble_regions(u);
  BubbleCountBound b;
  b.root_region_size = regions.root_region.size();
  b.junction_region_size = static_cast<std::size_t>(3 * (2 * u.ell + 1));

  const auto& class0 = u.classes.at(u.ell);
  b.log_class0 = std::log(static_cast<double>(class0.size()));
  b.log_bound = std::lgamma(static_cast<double>(b.root_region_size) + 1.0) +
                std::lgamma(static_cast<double>(b.junction_region_size) + 1.0);

  // The spine junction, atop bubble 1^{k-1}, plus the root factor key the
  // whole element.
  const std::vector<std::int64_t> spine(u.k - 1, 1);
  std::size_t spine_idx = regions.junctions.size();
  for (std::size_t j = 0; j < regions.junctions.size(); ++j)
    if (regions.junctions[j].w == spine) spine_idx = j;
  if (spine_idx == regions.junctions.size())
    throw std::logic_error("bubble_factorization_bound: spine junction missing");
  std::set<std::pair<BubbleAction, BubbleAction>> keys;
  for (std::size_t i : class0) {
    BubbleAction act = u.action_of(i), root_part, spine_part;
    for (const auto& [src, dst] : act) {
      if (regions.root_region.count(src)) root_part[src] = dst;
      if (regions.junctions[spine_idx].local.count(src)) spine_part[src] = dst;
    }
    keys.insert({std::move(root_part), std::move(spine_part)});
  }
  b.injective = keys.size() == class0.size();
  b.passes = b.injective && b.log_class0 <= b.log_bound + 1e-9;
  return b;
}

}  // namespace piecewise
