#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "piecewise/fin_perm.hpp"
#include "piecewise/labelled_graph.hpp"
#include "piecewise/letter.hpp"
#include "piecewise/vertex.hpp"

namespace piecewise {

// One factor of a piecewise-defined group acting on a glued vertex set.
//
// Infinite factors are copies of Z^d embedded as a "line" through the shared
// root: coord() gives the lattice coordinate of a vertex on that line (total
// over the abstract universe, not just the window) and point() its inverse.
// Finite factors contribute nothing here beyond their point set; their
// generators are plain finite-support permutations.
struct FactorDesc {
  bool infinite = false;
  int dim = 1;
  std::function<std::optional<std::vector<std::int64_t>>(const VertexId&)> coord;
  std::function<VertexId(const std::vector<std::int64_t>&)> point;
  std::vector<VertexId> points;  // finite factor: its non-root vertices
};

struct GeneratorInfo {
  Letter letter;
  std::vector<std::vector<std::int64_t>> trans;  // per infinite factor
  FinPerm perm;
};

// Shared immutable description of the group: factor list (infinite factors
// first), generator normal forms, and the materialized window graph used for
// word evaluation and far-field probes.
struct GroupContext {
  std::string name;
  std::vector<FactorDesc> factors;
  int num_infinite = 0;
  std::vector<GeneratorInfo> generators;  // generators[i] belongs to letter i+1
  bool parity_even_only = false;  // P0 = A0(X); S0(X) when some finite factor has even order
  std::shared_ptr<const LabelledGraph> graph;
  std::vector<VertexId> special_points;  // shared root, pocket point, finite-factor points
  int houghton_k = 0;                    // >0 marks a Houghton context

  const GeneratorInfo& generator(const Letter& l) const;
};

// Group element in normal form: gamma = T_t * tau where T_t is the product of
// infinite-factor translations (factor 1 applied last) and tau is a finitely
// supported permutation of the vertex universe.  All arithmetic is
// window-free: translations act in closed form.
class GroupElement {
 public:
  GroupElement() = default;
  GroupElement(std::shared_ptr<const GroupContext> ctx,
               std::vector<std::vector<std::int64_t>> trans, FinPerm perm);

  static GroupElement identity(std::shared_ptr<const GroupContext> ctx);
  static GroupElement generator(std::shared_ptr<const GroupContext> ctx,
                                const Letter& l);

  const std::shared_ptr<const GroupContext>& context() const { return ctx_; }
  const std::vector<std::vector<std::int64_t>>& translations() const { return trans_; }
  const FinPerm& perm() const { return perm_; }
  bool is_identity() const;

  VertexId apply(const VertexId& x) const;          // T_t(tau(x))
  VertexId apply_inverse(const VertexId& x) const;  // tau^{-1}(T_t^{-1}(x))

  GroupElement multiply(const GroupElement& rhs) const;
  GroupElement inverse() const;
  GroupElement conjugate(const GroupElement& by) const;  // by * this * by^{-1}

  int parity() const { return perm_.parity(); }

  bool operator==(const GroupElement& o) const {
    return trans_ == o.trans_ && perm_ == o.perm_;
  }
  bool operator!=(const GroupElement& o) const { return !(*this == o); }
  bool operator<(const GroupElement& o) const {
    if (trans_ != o.trans_) return trans_ < o.trans_;
    return perm_ < o.perm_;
  }

  std::string encode() const;
  std::size_t hash() const;

 private:
  friend GroupElement element_from_action(
      const std::shared_ptr<const GroupContext>&,
      const std::vector<std::vector<std::int64_t>>&,
      const std::function<VertexId(const VertexId&)>&,
      const std::vector<VertexId>&, std::int64_t);
  std::shared_ptr<const GroupContext> ctx_;
  std::vector<std::vector<std::int64_t>> trans_;
  FinPerm perm_;
};

struct GroupElementHash {
  std::size_t operator()(const GroupElement& g) const { return g.hash(); }
};

// T_t and its inverse in closed form.
VertexId apply_translations(const GroupContext& ctx,
                            const std::vector<std::vector<std::int64_t>>& t,
                            const VertexId& x);
VertexId apply_translations_inverse(const GroupContext& ctx,
                                    const std::vector<std::vector<std::int64_t>>& t,
                                    const VertexId& x);

// Recovers the normal form T_t * tau of the map `action` whose translation
// part is already known to be t; `touched` are extra points that may be moved
// besides the structural candidates derived from t.
GroupElement element_from_action(
    const std::shared_ptr<const GroupContext>& ctx,
    const std::vector<std::vector<std::int64_t>>& t,
    const std::function<VertexId(const VertexId&)>& action,
    const std::vector<VertexId>& touched, std::int64_t stage_mass);

// Normal form of a word in the generator letters (algebraic path: product of
// generator normal forms; exact, window-free).
GroupElement normal_form(const std::shared_ptr<const GroupContext>& ctx,
                         const Word& word);

GroupElement commutator(const GroupElement& a, const GroupElement& b);

// Window evaluation of a word: the action on every window vertex, plus the
// translation vector per infinite factor read off by far-field probes.
// Probes sit at coordinate magnitudes |word|+1 and |word|+2; a length-L word
// displaces markers by at most L, so agreement of the two probes certifies
// the translation exactly.  Throws WindowOverflow when the window is too
// small and UnstableFarField when the probes disagree.
struct UnstableFarField : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WordEvaluation {
  std::vector<std::pair<VertexId, VertexId>> window_action;  // moved pairs only
  std::vector<std::vector<std::int64_t>> translations;
};

WordEvaluation evaluate_word(const GroupContext& ctx, const Word& word);

// phi quotient: Houghton contexts map to the eventual-translation vector in
// Z^k (coordinates sum to zero); other contexts return the flattened
// translation vector.
std::vector<std::int64_t> phi_quotient(const GroupElement& g);

// Breadth-first ball in the group: all elements of word length <= radius in
// the context's generators (and their inverses), sorted by (length, encode).
struct GroupBall {
  std::vector<std::pair<GroupElement, int>> elements;
  std::vector<std::int64_t> volume;
};
GroupBall group_ball(const std::shared_ptr<const GroupContext>& ctx, int radius,
                     std::size_t budget = 10'000'000);

}  // namespace piecewise
