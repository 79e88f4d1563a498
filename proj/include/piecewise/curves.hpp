#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "piecewise/profile.hpp"
#include "piecewise/walk.hpp"

namespace piecewise {

// Closed-form reference curve.  Curves are equivalence-class representatives
// of the ~ relation: comparisons fit constants, they never assert equality.
struct ReferenceCurve {
  std::string name;
  std::function<double(double)> eval;  // throws std::domain_error off-domain
  bool decreasing = true;              // stated monotone direction
};

double eval_curve(const ReferenceCurve& c, double x);

ReferenceCurve curve_one_over_v();
// v -> inner(log(1+v) / log(1+log(1+v))), the profile argument shared by the
// pocket/star/Houghton upper bounds; domain v > 0.
ReferenceCurve curve_composite_log(const ReferenceCurve& inner);
// s -> rho_alpha(s), the L2 rate table; domain s in (0, 1].
ReferenceCurve curve_rho(const AlphaParam& alpha);
// n -> exp(-n^{(k+1)/(3k+1)} (log n)^{2k/(3k+1)}), the bubble return-decay
// shape at a_k ~ 2^{kappa k}; domain n > 1.
ReferenceCurve curve_bubble_decay(double kappa);
// Piecewise bubble functions of the sequence a:
//   V_a(t) = sum_{j<k} 2 a_j 2^{j-1} + 2 (t - s_{k-1}) 2^{k-1},  s_{k-1} <= t <= s_k
//   W_a(t) = sum_{j<k} 2 a_j 2^{j-1} + (a_k/2) 2^{k-1},          a_{k-1} < 2t <= a_k
//   A_a(t) = a_k / 2,                                            a_{k-1} < 2t <= a_k
ReferenceCurve curve_V_a(std::vector<std::int64_t> a);
ReferenceCurve curve_W_a(std::vector<std::int64_t> a);
ReferenceCurve curve_A_a(std::vector<std::int64_t> a);

// Ratio-envelope fit of a computed profile against a curve:
//   c1 f(c2 v) <= Lambda(v) <= c3 f(c4 v) over the exhaustive points, with
// the argument constants fixed at 1.  Report only; never a pass/fail proof.
struct CurveFit {
  std::string curve;
  std::size_t points = 0;
  double c1 = 0.0, c2 = 1.0, c3 = 0.0, c4 = 1.0;
  bool zero_wall = false;  // finite group: profile hits 0 inside the range
  std::vector<std::string> notes;
};

CurveFit compare_profile_to_curve(const ProfileTable& t, const ReferenceCurve& c);

}  // namespace piecewise
