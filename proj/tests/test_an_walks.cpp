#include "piecewise/an_walks.hpp"

#include <cmath>
#include <cstdint>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

using namespace piecewise;

TEST_CASE("alternating model: sizes, atoms, and a hand multiplication") {
  auto a4 = build_alternating(4);
  CHECK(a4.size() == 12);
  CHECK(a4.three_cycles.size() == 8);  // 2 C(4,3)
  CHECK(a4.mu_atom == doctest::Approx(1.0 / 8.0));
  // Index 0 is the identity.
  for (int i = 0; i < 4; ++i) CHECK(a4.elements[0][static_cast<std::size_t>(i)] == i);
  // Oracle: (0 1 2) o (0 1 2) = (0 2 1).
  std::array<std::uint8_t, 8> c012 = {1, 2, 0, 3, 4, 5, 6, 7};
  std::array<std::uint8_t, 8> c021 = {2, 0, 1, 3, 4, 5, 6, 7};
  std::size_t i012 = a4.index_of(c012);
  CHECK(a4.mul(i012, i012) == a4.index_of(c021));
  CHECK(a4.mul(i012, a4.index_of(c021)) == 0);

  auto a3 = build_alternating(3);
  CHECK(a3.size() == 3);
  CHECK(a3.three_cycles.size() == 2);

  CHECK_THROWS_AS(build_alternating(9), std::invalid_argument);
  CHECK_THROWS_AS(build_alternating(2), std::invalid_argument);
}

TEST_CASE("mixing: A_3 matches the Z/3 closed form") {
  // A_3 = Z/3 with mu uniform on the two non-identity elements; the spectrum
  // of the walk operator is {1, -1/2, -1/2}, so p_t(id) = 1/3 + (2/3)(-1/2)^t.
  auto m = build_alternating(3);
  auto s = exact_mixing_series(m, 20);
  CHECK(s.limit == doctest::Approx(1.0 / 3.0));
  CHECK(s.id_prob[0] == 1.0);
  CHECK(s.id_prob[1] == 0.0);
  CHECK(s.id_prob[2] == doctest::Approx(0.5).epsilon(1e-14));
  for (int t = 0; t <= 20; ++t)
    CHECK(s.id_prob[static_cast<std::size_t>(t)] ==
          doctest::Approx(1.0 / 3.0 + (2.0 / 3.0) * std::pow(-0.5, t))
              .epsilon(1e-12));
}

TEST_CASE("mixing: A_4 second step and convergence to 2/N!") {
  auto m = build_alternating(4);
  auto s = exact_mixing_series(m, 200);
  // mu^{(2)}(id) = sum_g mu(g)^2 = 8 (1/8)^2 = 1/8 by symmetry of mu.
  CHECK(s.id_prob[2] == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
  CHECK(s.limit == doctest::Approx(1.0 / 12.0));
  CHECK(std::abs(s.id_prob[200] - s.limit) <= 1e-10 * s.limit);
  CHECK(s.crossing_t >= 1);
}

TEST_CASE("mixing: A_6 crosses near (2/3) N log N and dominates the limit on even t") {
  auto m = build_alternating(6);
  auto s = exact_mixing_series(m, 60);
  CHECK(s.limit == doctest::Approx(2.0 / 720.0));
  // Qualitative: within-factor-2 crossing happens in the small neighborhood
  // of t_N = (2/3) 6 log 6 ~ 7.2; no constant asserted.
  CHECK(s.crossing_t >= 2);
  CHECK(s.crossing_t <= 20);
  // mu^{(t)}(id) >= 2/N! on even t (spectral positivity of even powers).
  for (int t = 0; t <= 60; t += 2)
    CHECK(s.id_prob[static_cast<std::size_t>(t)] >= s.limit - 1e-15);
  // Convergence from above along even times.
  CHECK(std::abs(s.id_prob[60] - s.limit) < 1e-9);
}

TEST_CASE("dirichlet profile: A_4 singleton value is s_mu = 1") {
  auto m = build_alternating(4);
  auto table = an_dirichlet_profile(m, 4);
  CHECK(table.s_phi == doctest::Approx(1.0));
  REQUIRE(!table.points.empty());
  CHECK(table.points[0].v == 1);
  CHECK(table.points[0].value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(table.points[0].exact);
  for (std::size_t i = 1; i < table.points.size(); ++i)
    CHECK(table.points[i].value <= table.points[i - 1].value + 1e-12);
}

TEST_CASE("dirichlet profile: A_5 stays above 1/2 through v = 4") {
  auto m = build_alternating(5);
  auto table = an_dirichlet_profile(m, 4);
  REQUIRE(table.points.size() == 4);
  for (const auto& pt : table.points) {
    CHECK(pt.exact);
    CHECK(pt.value >= 0.5);
  }
}

TEST_CASE("cycle words: pocket of Z synthesizes every ball cycle") {
  auto sys = pocket_extension(cayley_system(GroupOracle::z(16), {{.shift = {1}}}));
  auto rep = cycle_comparison(sys, CycleSynthesis::Pocket, 3, 2026);
  // B(o,3) = {-3..3} + pocket point: 8 points, 2 C(8,3) = 112 cycles.
  CHECK(rep.cycles == 112);
  CHECK(rep.D > 0.0);
  CHECK(rep.samples == 8);
  CHECK(rep.report.pass());
  CHECK(rep.worst_ratio <= 1.0 + 1e-9);

  // Direct word check: (o, 1, -1).
  Word w = three_cycle_word(sys, CycleSynthesis::Pocket, VertexId::integer(0),
                            VertexId::integer(1), VertexId::integer(-1), 4);
  GroupElement e = normal_form(sys.ctx, w);
  CHECK(e == GroupElement(sys.ctx, GroupElement::identity(sys.ctx).translations(),
                          FinPerm({{VertexId::integer(0), VertexId::integer(1)},
                                   {VertexId::integer(1), VertexId::integer(-1)},
                                   {VertexId::integer(-1), VertexId::integer(0)}})));
}

TEST_CASE("cycle words: star of Z feeds the 8l transposition words") {
  auto sys = star_extension(cayley_system(GroupOracle::z(16), {{.shift = {1}}}));
  auto rep = cycle_comparison(sys, CycleSynthesis::Star, 3, 7);
  CHECK(rep.cycles == 70);  // 2 C(7,3) over B(o,3) = {-3..3}
  CHECK(rep.report.pass());
  // Each cycle is two transpositions, each three (o,x) words of length <= 8r.
  CHECK(rep.D <= 6.0 * 8.0 * 3.0);
}

TEST_CASE("cycle words: rooted gluing uses commutator products through the root") {
  auto sys = rooted_gluing({{GroupOracle::z(16), {{.shift = {1}}}},
                            {GroupOracle::z(16), {{.shift = {1}}}}});
  auto rep = cycle_comparison(sys, CycleSynthesis::RootedGluing, 2, 11);
  // Arms {-2,-1,1,2} each: 4*4 ordered cross-factor pairs, both orientations.
  CHECK(rep.cycles == 32);
  CHECK(rep.report.pass());
  // [g_1, g_2] with |g_i| <= 2: word length 8, distance 2 -> D <= 4.
  CHECK(rep.D <= 4.0 + 1e-12);
}

TEST_CASE("cycle words: degenerate and off-arm requests are rejected") {
  auto pocket =
      pocket_extension(cayley_system(GroupOracle::z(16), {{.shift = {1}}}));
  CHECK_THROWS_AS(three_cycle_word(pocket, CycleSynthesis::Pocket,
                                   VertexId::integer(1), VertexId::integer(1),
                                   VertexId::integer(2), 4),
                  std::invalid_argument);
  auto glued = rooted_gluing({{GroupOracle::z(16), {{.shift = {1}}}},
                              {GroupOracle::z(16), {{.shift = {1}}}}});
  // Same-arm cycle: no commutator synthesis.
  auto arm = [](int c) { return VertexId::glued(0, VertexId::integer(c)); };
  CHECK_THROWS_AS(three_cycle_word(glued, CycleSynthesis::RootedGluing,
                                   glued.graph->root(), arm(1), arm(2), 4),
                  std::invalid_argument);
}
