#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "piecewise/gluing.hpp"
#include "piecewise/profile.hpp"
#include "piecewise/test_functions.hpp"

namespace piecewise {

// Dense model of the alternating group A_N (N <= 8) with the uniform
// three-cycle measure mu_N.  Elements are one-line permutations of {0..N-1}
// in lexicographic order; index 0 is the identity.  Invariant: |elements| =
// N!/2 and |three_cycles| = 2 C(N,3).
struct AlternatingModel {
  int N = 0;
  std::vector<std::array<std::uint8_t, 8>> elements;
  std::vector<std::uint32_t> three_cycles;  // element indices of the mu_N atoms
  double mu_atom = 0.0;                     // 1 / (2 C(N,3))

  std::size_t size() const { return elements.size(); }
  std::size_t index_of(const std::array<std::uint8_t, 8>& p) const;
  // Index of the composition a after b (b applied first).
  std::size_t mul(std::size_t a, std::size_t b) const;
};

AlternatingModel build_alternating(int N);

struct MixingSeries {
  int N = 0;
  double limit = 0.0;           // 2 / N!
  std::vector<double> id_prob;  // id_prob[t] = mu_N^{(t)}(id), t = 0..t_max
  int crossing_t = -1;          // first t >= 1 with |(N!/2) p_t - 1| <= 1/2
};

// Exact dense convolution of mu_N with itself; no truncation.
MixingSeries exact_mixing_series(const AlternatingModel& model, int t_max);

// L^p profile of (A_N, mu_N), p in {1,2}: exhaustive sweep over connected
// subsets of the three-cycle Cayley graph containing the identity.
ProfileTable an_dirichlet_profile(const AlternatingModel& model, int v_max,
                                  int p = 2, std::size_t budget = kSubsetBudget);

// Word-synthesis family available for three-cycles of ball points:
// commutator products for rooted gluings, transposition conjugates through
// the pocket point, staircase transposition words for star extensions.
enum class CycleSynthesis { RootedGluing, Pocket, Star };

// Generator word evaluating to the three-cycle a -> b -> c -> a of ball
// points.  Rooted gluings require the cycle to pass through the root with the
// other two points on distinct factor arms; degenerate cycles are rejected.
Word three_cycle_word(const GroupSystem& sys, CycleSynthesis kind,
                      const VertexId& a, const VertexId& b, const VertexId& c,
                      int max_depth);

struct CycleComparisonReport {
  int r = 0;
  std::size_t cycles = 0;    // synthesized (and verified) three-cycle words
  double D = 0.0;            // max |word| / max root-distance of the support
  std::size_t samples = 0;   // sampled functions checked
  double worst_ratio = 0.0;  // max_f E_mu(f) / (D r E_u(f))
  Measure mu;                // the compared three-cycle measure
  EnergyReport report;
};

// Synthesizes generator words for the three-cycles of B_X(o, r) (all of them
// for pocket/star; the cross-factor cycles through the root for rooted
// gluings), verifies each word evaluates to its cycle, and checks the
// comparison E_mu(f) <= D r E_u(f) on seeded random functions, u uniform on
// the generators.
CycleComparisonReport cycle_comparison(const GroupSystem& sys,
                                       CycleSynthesis kind, int r,
                                       std::uint64_t seed,
                                       std::size_t max_cycles = 512,
                                       std::size_t samples = 8);

}  // namespace piecewise
