#include "piecewise/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace piecewise {
namespace {

void check_a(const std::vector<std::int64_t>& a) {
  if (a.empty()) throw std::invalid_argument("bubble curve: empty sequence");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 4 || a[i] % 4 != 0)
      throw std::invalid_argument("bubble curve: entries must be multiples of 4");
    if (i > 0 && a[i] <= a[i - 1])
      throw std::invalid_argument("bubble curve: sequence must increase");
  }
}

// Segment index k (1-based) with a_{k-1} < 2t <= a_k.
std::size_t half_segment(const std::vector<std::int64_t>& a, double t) {
  const double u = 2.0 * t;
  if (t < 0.0 || u > static_cast<double>(a.back()))
    throw std::domain_error("bubble curve: 2t beyond the sequence range");
  for (std::size_t k = 0; k < a.size(); ++k)
    if (u <= static_cast<double>(a[k])) return k + 1;
  throw std::domain_error("bubble curve: 2t beyond the sequence range");
}

double prefix_weight(const std::vector<std::int64_t>& a, std::size_t k) {
  double s = 0.0;
  for (std::size_t j = 1; j < k; ++j)
    s += 2.0 * static_cast<double>(a[j - 1]) * std::pow(2.0, static_cast<double>(j - 1));
  return s;
}

}  // namespace

double eval_curve(const ReferenceCurve& c, double x) { return c.eval(x); }

ReferenceCurve curve_one_over_v() {
  return {"1/v",
          [](double v) {
            if (v <= 0.0) throw std::domain_error("1/v: v must be positive");
            return 1.0 / v;
          },
          true};
}

ReferenceCurve curve_composite_log(const ReferenceCurve& inner) {
  auto f = inner.eval;
  return {inner.name + " o log(1+v)/log(1+log(1+v))",
          [f](double v) {
            if (v <= 0.0)
              throw std::domain_error("composite argument needs v > 0");
            const double num = std::log1p(v);
            const double den = std::log1p(num);
            return f(num / den);
          },
          inner.decreasing};
}

ReferenceCurve curve_rho(const AlphaParam& alpha) {
  return {"rho_alpha",
          [alpha](double s) {
            if (s <= 0.0 || s > 1.0)
              throw std::domain_error("rho_alpha: s must be in (0, 1]");
            return rho_alpha(alpha, s);
          },
          true};
}

ReferenceCurve curve_bubble_decay(double kappa) {
  if (kappa <= 0.0)
    throw std::invalid_argument("bubble decay: kappa must be positive");
  const double e1 = (kappa + 1.0) / (3.0 * kappa + 1.0);
  const double e2 = 2.0 * kappa / (3.0 * kappa + 1.0);
  return {"exp(-n^{(k+1)/(3k+1)} (log n)^{2k/(3k+1)})",
          [e1, e2](double n) {
            if (n <= 1.0) throw std::domain_error("bubble decay: n must exceed 1");
            return std::exp(-std::pow(n, e1) * std::pow(std::log(n), e2));
          },
          true};
}

ReferenceCurve curve_V_a(std::vector<std::int64_t> a) {
  check_a(a);
  return {"V_a",
          [a](double t) {
            double s_prev = 0.0, s = 0.0;
            for (std::size_t k = 1; k <= a.size(); ++k) {
              s += static_cast<double>(a[k - 1]);
              if (t >= s_prev && t <= s)
                return prefix_weight(a, k) +
                       2.0 * (t - s_prev) * std::pow(2.0, static_cast<double>(k - 1));
              s_prev = s;
            }
            throw std::domain_error("V_a: t beyond the sequence range");
          },
          false};
}

ReferenceCurve curve_W_a(std::vector<std::int64_t> a) {
  check_a(a);
  return {"W_a",
          [a](double t) {
            const std::size_t k = half_segment(a, t);
            return prefix_weight(a, k) +
                   0.5 * static_cast<double>(a[k - 1]) *
                       std::pow(2.0, static_cast<double>(k - 1));
          },
          false};
}

ReferenceCurve curve_A_a(std::vector<std::int64_t> a) {
  check_a(a);
  return {"A_a",
          [a](double t) {
            return 0.5 * static_cast<double>(a[half_segment(a, t) - 1]);
          },
          false};
}

CurveFit compare_profile_to_curve(const ProfileTable& t, const ReferenceCurve& c) {
  CurveFit fit;
  fit.curve = c.name;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& pt : t.points) {
    if (!pt.exact) continue;
    if (pt.value <= 0.0) {
      fit.zero_wall = true;
      continue;
    }
    double cv;
    try {
      cv = c.eval(static_cast<double>(pt.v));
    } catch (const std::domain_error&) {
      continue;
    }
    if (cv <= 0.0) continue;
    lo = std::min(lo, pt.value / cv);
    hi = std::max(hi, pt.value / cv);
    ++fit.points;
  }
  if (fit.zero_wall)
    fit.notes.push_back("finite group, profile hits 0 wall");
  if (fit.points < 3)
    throw std::invalid_argument(
        "compare_profile_to_curve: fewer than 3 usable exhaustive points");
  fit.c1 = lo;
  fit.c3 = hi;
  return fit;
}

}  // namespace piecewise
