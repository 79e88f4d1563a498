#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "piecewise/group_element.hpp"
#include "piecewise/labelled_graph.hpp"

namespace piecewise {

struct MeasureError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Step distribution on Z: atoms on integers plus truncated tail mass.
struct ZMeasure {
  std::map<std::int64_t, double> atoms;
  double defect = 0.0;

  bool symmetric(double tol = 1e-12) const;
  double mass() const;
};

// alpha parameter of the xi_alpha / rho_alpha family: a positive real or one
// of the two symbolic values (s = spread-out uniform, t = trivial).
struct AlphaParam {
  enum class Kind { Real, S, T } kind = Kind::Real;
  double value = 0.0;

  static AlphaParam real(double a) { return {Kind::Real, a}; }
  static AlphaParam s() { return {Kind::S, 0.0}; }
  static AlphaParam t() { return {Kind::T, 0.0}; }
};

// Finitely supported symmetric step measure on a group.  Atoms are kept
// sorted by element; atom mass + defect = 1 within 1e-12.
class Measure {
 public:
  Measure(std::shared_ptr<const GroupContext> ctx,
          std::vector<std::pair<GroupElement, double>> atoms, double defect = 0.0);

  const std::shared_ptr<const GroupContext>& context() const { return ctx_; }
  const std::vector<std::pair<GroupElement, double>>& atoms() const { return atoms_; }
  double defect() const { return defect_; }
  double mass() const;
  bool symmetric(double tol = 1e-12) const;
  void require_symmetric() const;  // throws MeasureError

 private:
  std::shared_ptr<const GroupContext> ctx_;
  std::vector<std::pair<GroupElement, double>> atoms_;  // sorted, merged
  double defect_;
};

// Sparse distribution over group elements; atoms below the prune threshold
// are moved to the defect so convolution results stay honest intervals.
class Distribution {
 public:
  explicit Distribution(std::shared_ptr<const GroupContext> ctx);
  static Distribution point_mass(std::shared_ptr<const GroupContext> ctx,
                                 const GroupElement& g);

  const std::shared_ptr<const GroupContext>& context() const { return ctx_; }
  double at(const GroupElement& g) const;
  double defect() const { return defect_; }
  double mass() const;
  std::size_t support_size() const { return map_.size(); }

  // Sorted (element, probability) export; canonical order for determinism.
  std::vector<std::pair<GroupElement, double>> sorted_atoms() const;

  static constexpr double kPruneThreshold = 1e-15;

  friend Distribution convolve(const Distribution& d, const Measure& m);

 private:
  std::shared_ptr<const GroupContext> ctx_;
  std::unordered_map<GroupElement, double, GroupElementHash> map_;
  double defect_ = 0.0;
};

// q = l^{-1} sum mu_i: equal-weight mixture of the component measures.
Measure make_measure_q(const std::vector<Measure>& components);

// Houghton measure q_p: atoms on the powers h_{i,j}^n weighted by
// C(k,2)^{-1} p_{i,j}(n), summed over all unordered pairs i < j.
// p.at({i,j}) may be omitted for a pair; omitted pairs default to delta_0.
Measure make_measure_houghton(
    const std::shared_ptr<const GroupContext>& ctx,
    const std::map<std::pair<int, int>, ZMeasure>& p);

// xi_alpha(m) = c_alpha (1+|m|)^{-alpha-1} truncated to atom mass >= 1-eps;
// alpha = s gives uniform{-1,0,1}, alpha = t gives delta_0.
ZMeasure make_xi_alpha(const AlphaParam& alpha, double eps = 1e-6);

// Lifts a Z measure to the group via n -> g^n for a generator g.
Measure measure_from_z(const std::shared_ptr<const GroupContext>& ctx,
                       const GroupElement& g, const ZMeasure& zm);

// mu_N: uniform measure on all 2*C(N,3) three-cycles of the given points,
// as permutation-only group elements.
Measure make_mu_N(const std::shared_ptr<const GroupContext>& ctx,
                  const std::vector<VertexId>& points);
Measure make_mu_N(const std::shared_ptr<const GroupContext>& ctx,
                  const BallEnumeration& ball);

// Exact left convolution: out(y x) += m(y) d(x).
Distribution convolve(const Distribution& d, const Measure& m);

struct ReturnSeries {
  struct Entry {
    int n;         // even step count
    double value;  // exact atom probability of id
    double upper;  // value + accumulated defect
    double defect;
  };
  std::vector<Entry> entries;
};

// Phi(2n) = phi^{(2n)}(id) for n = 1..n_max, with defect intervals.
// Asserts monotone decay of the even subsequence up to defect slack.
ReturnSeries return_probability(const Measure& m, int n_max);

struct MonteCarloResult {
  double estimate;
  double stderr_;
  std::int64_t hits;
  std::int64_t trials;
};

// Unbiased estimate of phi^{(n)}(id) for the truncated measure: tail mass is
// an absorbing miss.  Per-trial seeds derive from master_seed; the result is
// independent of evaluation order.
MonteCarloResult monte_carlo_return(const Measure& m, int n, std::int64_t trials,
                                    std::uint64_t master_seed);

// rho_alpha(s) rate table: s^{-1/alpha} for alpha in (0,2);
// s^{-1/2}(1+log(1/s))^{1/2} at alpha = 2; s^{-1/2} for alpha in (2,inf) and
// alpha = s; 0 at alpha = t.
double rho_alpha(const AlphaParam& alpha, double s);

// SplitMix64 stream; used to derive independent per-trial seeds.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace piecewise
