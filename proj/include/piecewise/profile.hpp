#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "piecewise/walk.hpp"

namespace piecewise {

enum class ProfileKind { L1, L2 };

struct ProfilePoint {
  std::int64_t v;
  double value;
  std::string witness;  // canonical set encoding of a minimizer
  bool exact;           // exhaustive sweep covered all connected sets of size <= v
};

struct ProfileTable {
  ProfileKind kind;
  double s_phi = 0.0;  // sum of non-identity atom mass; value at v = 1
  std::vector<ProfilePoint> points;
};

// Finite window of the step graph x -> y x over the measure's non-identity
// atoms.  Vertex 0 is the identity; -1 marks steps leaving the window.
// exact_limit is the largest set size v for which every connected set
// containing the identity provably lies inside the window.
struct StepGraph {
  double s_phi = 0.0;
  std::vector<std::string> labels;
  std::vector<std::vector<std::pair<int, double>>> steps;
  int exact_limit = 0;
};

StepGraph step_graph_from_ball(const Measure& m, const GroupBall& ball);

// E_m(f,f) = (1/2) sum_{x,y} |f(yx) - f(x)|^p m(y), exact over the union of
// the support and its atom shifts.
double dirichlet_form(const Measure& m, const std::map<GroupElement, double>& f,
                      int p);

// Lowest eigenvalue of the Dirichlet restriction to Omega: dense solve up to
// 2000 elements, shifted power iteration (residual <= 1e-10) above.
double dirichlet_eigenvalue(const Measure& m, const std::vector<GroupElement>& omega);

// q(boundary of Omega) = sum_{x in Omega} sum_{y: yx not in Omega} m(y).
double boundary_measure(const Measure& m, const std::vector<GroupElement>& omega);

inline constexpr std::size_t kSubsetBudget = 10'000'000;

// L1 / L2 profile by exhaustive enumeration of connected subsets containing
// the identity (lossless: both functionals are invariant under right
// translation and minimized on connected sets).  Sizes beyond the window's
// exact_limit, or beyond the enumeration budget, are flagged upper-bound-only.
ProfileTable lambda_profile(const StepGraph& g, int v_max, int p,
                            std::size_t budget = kSubsetBudget);
ProfileTable lambda_profile(const Measure& m, const GroupBall& ball, int v_max,
                            int p, std::size_t budget = kSubsetBudget);

struct InverseResult {
  std::int64_t v = 0;
  bool infinite = false;
  bool range_exceeded = false;  // all computed values exceed s
};

// Right-continuous inverse inf{v : Lambda(v) <= s} over the computed range.
InverseResult profile_inverse(const ProfileTable& t, double s);
// Folner function: inf{v : Lambda_1(v) <= 1/t}.
InverseResult folner(const ProfileTable& t, double t_arg);

struct CheegerReport {
  bool ok = true;
  std::size_t points_checked = 0;
  std::vector<std::int64_t> violations;
};

// (1/2) Lambda_1(v)^2 <= Lambda_2(v) <= Lambda_1(v) on shared exhaustive points.
CheegerReport check_cheeger(const ProfileTable& t1, const ProfileTable& t2,
                            double tol = 1e-10);

// K(U) / EK(U) of the satisfactory-vertex machinery: vertices are the
// permutation parts of U, edges join permutation parts related by a beta step
// inside U, and each vertex carries its locations (translation parts g with
// (g, tau) in U) together with the beta-step targets that stay in U.
struct SatisfactoryGraph {
  std::vector<FinPerm> vertices;
  std::vector<std::pair<int, int>> edges;  // index pairs i < j, sorted
  std::vector<std::vector<std::pair<std::string, std::vector<int>>>> locations;

  // Locations with at least one target still alive; alive defaults to all.
  std::vector<int> satisfaction_counts(const std::vector<bool>& alive) const;
  std::vector<int> satisfaction_counts() const;
  int degree(int i) const;
};

SatisfactoryGraph erschler_graph(const std::vector<GroupElement>& U);

// Iteratively removes non-(a/4)-satisfactory vertices and incident edges
// until fixpoint.  When the non-a-satisfactory fraction of the input is
// <= |E|/4, the survivor is guaranteed nonempty and this asserts it.
SatisfactoryGraph edge_removal(const SatisfactoryGraph& g, double a);

struct GrowthReport {
  bool hypothesis_met = false;  // nonempty and min degree >= 2b
  int min_degree = 0;
  double log_size = 0.0;      // log |K|
  double log_b_factorial = 0.0;
  bool passes = false;        // |K| >= b! (checked in log space)
};

GrowthReport neighbor_growth_check(const SatisfactoryGraph& g, int b);

}  // namespace piecewise
