#include "piecewise/group_element.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace piecewise {

const GeneratorInfo& GroupContext::generator(const Letter& l) const {
  if (l.index < 1 || l.index > static_cast<int>(generators.size()))
    throw std::invalid_argument("GroupContext: no generator for letter " + l.encode());
  return generators[l.index - 1];
}

GroupElement::GroupElement(std::shared_ptr<const GroupContext> ctx,
                           std::vector<std::vector<std::int64_t>> trans, FinPerm perm)
    : ctx_(std::move(ctx)), trans_(std::move(trans)), perm_(std::move(perm)) {
  if (static_cast<int>(trans_.size()) != ctx_->num_infinite)
    throw std::invalid_argument("GroupElement: translation arity mismatch");
  for (int i = 0; i < ctx_->num_infinite; ++i)
    if (static_cast<int>(trans_[i].size()) != ctx_->factors[i].dim)
      throw std::invalid_argument("GroupElement: translation dimension mismatch");
}

GroupElement GroupElement::identity(std::shared_ptr<const GroupContext> ctx) {
  std::vector<std::vector<std::int64_t>> t;
  for (int i = 0; i < ctx->num_infinite; ++i)
    t.emplace_back(ctx->factors[i].dim, 0);
  return GroupElement(std::move(ctx), std::move(t), FinPerm());
}

GroupElement GroupElement::generator(std::shared_ptr<const GroupContext> ctx,
                                     const Letter& l) {
  const GeneratorInfo& gi = ctx->generator(l);
  GroupElement g(ctx, gi.trans, gi.perm);
  return l.inv ? g.inverse() : g;
}

bool GroupElement::is_identity() const {
  if (!perm_.is_identity()) return false;
  for (const auto& t : trans_)
    for (auto c : t)
      if (c != 0) return false;
  return true;
}

VertexId apply_translations(const GroupContext& ctx,
                            const std::vector<std::vector<std::int64_t>>& t,
                            const VertexId& x) {
  // T_t = F_1^{t_1} o ... o F_n^{t_n}: the last factor acts first.
  VertexId cur = x;
  for (int i = static_cast<int>(t.size()) - 1; i >= 0; --i) {
    const auto& f = ctx.factors[i];
    if (auto c = f.coord(cur)) {
      auto v = *c;
      for (int d = 0; d < f.dim; ++d) v[d] += t[i][d];
      cur = f.point(v);
    }
  }
  return cur;
}

VertexId apply_translations_inverse(const GroupContext& ctx,
                                    const std::vector<std::vector<std::int64_t>>& t,
                                    const VertexId& x) {
  VertexId cur = x;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& f = ctx.factors[i];
    if (auto c = f.coord(cur)) {
      auto v = *c;
      for (int d = 0; d < f.dim; ++d) v[d] -= t[i][d];
      cur = f.point(v);
    }
  }
  return cur;
}

VertexId GroupElement::apply(const VertexId& x) const {
  return apply_translations(*ctx_, trans_, perm_.apply(x));
}

VertexId GroupElement::apply_inverse(const VertexId& x) const {
  return perm_.inverse().apply(apply_translations_inverse(*ctx_, trans_, x));
}

namespace {

// Candidate moved set for recovering a finite-support residue: translation
// interaction zone around the root plus all explicitly touched points.  M
// bounds the total displacement any composition stage can apply, so points
// with every line coordinate beyond M are moved exactly as T_t moves them.
std::vector<VertexId> candidate_points(const GroupContext& ctx, std::int64_t M,
                                       const std::vector<VertexId>& touched) {
  std::set<VertexId> s(touched.begin(), touched.end());
  for (const auto& v : ctx.special_points) s.insert(v);
  for (int i = 0; i < ctx.num_infinite; ++i) {
    const auto& f = ctx.factors[i];
    std::vector<std::int64_t> c(f.dim, -M);
    for (;;) {
      s.insert(f.point(c));
      int d = 0;
      for (; d < f.dim; ++d) {
        if (++c[d] <= M) break;
        c[d] = -M;
      }
      if (d == f.dim) break;
    }
  }
  for (const auto& f : ctx.factors)
    for (const auto& p : f.points) s.insert(p);
  return std::vector<VertexId>(s.begin(), s.end());
}

std::int64_t translation_mass(const std::vector<std::vector<std::int64_t>>& t) {
  std::int64_t m = 0;
  for (const auto& v : t)
    for (auto c : v) m += std::llabs(c);
  return m;
}

}  // namespace

GroupElement element_from_action(
    const std::shared_ptr<const GroupContext>& ctx,
    const std::vector<std::vector<std::int64_t>>& t,
    const std::function<VertexId(const VertexId&)>& action,
    const std::vector<VertexId>& touched, std::int64_t stage_mass) {
  // stage_mass bounds the displacement any intermediate stage of `action` can
  // apply; beyond it every line point is moved exactly as T_t moves it.
  std::int64_t M = stage_mass + 1;
  // Include coordinates of touched points so lines through them are covered.
  for (const auto& p : touched)
    for (int i = 0; i < ctx->num_infinite; ++i)
      if (auto c = ctx->factors[i].coord(p))
        for (auto x : *c) M = std::max<std::int64_t>(M, std::llabs(x) + stage_mass + 1);
  std::map<VertexId, VertexId> moved;
  for (const auto& x : candidate_points(*ctx, M, touched)) {
    VertexId y = apply_translations_inverse(*ctx, t, action(x));
    if (!(y == x)) moved[x] = y;
  }
  return GroupElement(ctx, t, FinPerm(std::move(moved)));
}

GroupElement GroupElement::multiply(const GroupElement& rhs) const {
  if (ctx_.get() != rhs.ctx_.get())
    throw std::invalid_argument("multiply: mixed group contexts");
  std::vector<std::vector<std::int64_t>> t = trans_;
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t d = 0; d < t[i].size(); ++d) t[i][d] += rhs.trans_[i][d];
  // Pure translations in a single abelian infinite factor compose in closed
  // form; skips the candidate-set scan (whose size grows with |t|).
  if (ctx_->factors.size() == 1 && ctx_->num_infinite == 1 &&
      perm_.is_identity() && rhs.perm_.is_identity())
    return GroupElement(ctx_, std::move(t), FinPerm());
  std::vector<VertexId> touched = perm_.support();
  for (const auto& p : rhs.perm_.support()) touched.push_back(p);
  for (const auto& p : perm_.support()) touched.push_back(rhs.apply_inverse(p));
  const GroupElement& lhs = *this;
  return element_from_action(
      ctx_, t,
      [&lhs, &rhs](const VertexId& x) { return lhs.apply(rhs.apply(x)); }, touched,
      translation_mass(trans_) + translation_mass(rhs.trans_));
}

GroupElement GroupElement::inverse() const {
  std::vector<std::vector<std::int64_t>> t = trans_;
  for (auto& v : t)
    for (auto& c : v) c = -c;
  if (ctx_->factors.size() == 1 && ctx_->num_infinite == 1 && perm_.is_identity())
    return GroupElement(ctx_, std::move(t), FinPerm());
  std::vector<VertexId> touched = perm_.support();
  for (const auto& p : perm_.support())
    touched.push_back(apply_translations(*ctx_, trans_, p));
  const GroupElement& self = *this;
  return element_from_action(
      ctx_, t, [&self](const VertexId& x) { return self.apply_inverse(x); }, touched,
      translation_mass(trans_));
}

GroupElement GroupElement::conjugate(const GroupElement& by) const {
  return by.multiply(*this).multiply(by.inverse());
}

GroupElement commutator(const GroupElement& a, const GroupElement& b) {
  return a.multiply(b).multiply(a.inverse()).multiply(b.inverse());
}

std::string GroupElement::encode() const {
  std::string s = "t=[";
  for (std::size_t i = 0; i < trans_.size(); ++i) {
    if (i) s += ";";
    for (std::size_t d = 0; d < trans_[i].size(); ++d) {
      if (d) s += ",";
      s += std::to_string(trans_[i][d]);
    }
  }
  return s + "] " + perm_.encode();
}

std::size_t GroupElement::hash() const {
  std::size_t h = perm_.hash();
  for (const auto& v : trans_)
    for (auto c : v) h ^= std::hash<std::int64_t>()(c) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

GroupElement normal_form(const std::shared_ptr<const GroupContext>& ctx,
                         const Word& word) {
  GroupElement g = GroupElement::identity(ctx);
  // Left action: w = l_1 l_2 ... l_n acts as l_1 o (l_2 o ...); the product
  // is accumulated in the same order.
  for (const auto& l : word) g = g.multiply(GroupElement::generator(ctx, l));
  return g;
}

WordEvaluation evaluate_word(const GroupContext& ctx, const Word& word) {
  if (!ctx.graph) throw std::logic_error("evaluate_word: context has no window graph");
  const LabelledGraph& g = *ctx.graph;
  WordEvaluation out;
  const std::int64_t L = static_cast<std::int64_t>(word.size());
  if (ctx.houghton_k > 0) {
    // Houghton rays are not independent lines: read the eventual depth shift
    // of every ray and convert to z-coordinates (ray i shifts by -z_i for
    // i < k; ray k by sum z_i).  The shifts must sum to zero.
    const int k = ctx.houghton_k;
    std::vector<std::int64_t> delta(k, 0);
    std::int64_t sum = 0;
    for (int r = 1; r <= k; ++r) {
      std::optional<std::int64_t> agreed;
      for (std::int64_t depth : {L + 1, L + 2}) {
        VertexId probe = VertexId::ray(r, depth);
        VertexId img = g.act_word(probe, word);
        if (!(img.tag() == VTag::Ray) || img.a() != r)
          throw UnstableFarField("evaluate_word: ray probe left its ray");
        std::int64_t d = img.b() - depth;
        if (agreed && *agreed != d)
          throw UnstableFarField("evaluate_word: far-field probes disagree");
        agreed = d;
      }
      delta[r - 1] = *agreed;
      sum += *agreed;
    }
    if (sum != 0)
      throw UnstableFarField("evaluate_word: ray shifts do not balance");
    for (int i = 0; i < k - 1; ++i)
      out.translations.push_back({-delta[i]});
    for (const auto& v : g.vertices()) {
      VertexId img;
      try {
        img = g.act_word(v, word);
      } catch (const WindowOverflow&) {
        continue;
      }
      if (!(img == v)) out.window_action.emplace_back(v, img);
    }
    return out;
  }
  for (int i = 0; i < ctx.num_infinite; ++i) {
    const auto& f = ctx.factors[i];
    std::vector<std::int64_t> shift(f.dim, 0);
    for (int d = 0; d < f.dim; ++d) {
      std::optional<std::int64_t> agreed;
      for (std::int64_t depth : {L + 1, L + 2}) {
        for (std::int64_t sign : {+1, -1}) {
          std::vector<std::int64_t> c(f.dim, 0);
          c[d] = sign * depth;
          VertexId probe = f.point(c);
          VertexId img = g.act_word(probe, word);  // throws if window too small
          auto ic = f.coord(img);
          if (!ic)
            throw UnstableFarField("evaluate_word: probe left its line at " +
                                   probe.encode());
          std::int64_t delta = (*ic)[d] - c[d];
          for (int dd = 0; dd < f.dim; ++dd)
            if (dd != d && (*ic)[dd] != 0)
              throw UnstableFarField("evaluate_word: probe drifted off-axis");
          if (agreed && *agreed != delta)
            throw UnstableFarField("evaluate_word: far-field probes disagree");
          agreed = delta;
        }
      }
      shift[d] = *agreed;
    }
    out.translations.push_back(std::move(shift));
  }
  for (const auto& v : g.vertices()) {
    VertexId img;
    try {
      img = g.act_word(v, word);
    } catch (const WindowOverflow&) {
      continue;  // boundary-shell vertices may exit; interior action suffices
    }
    if (!(img == v)) out.window_action.emplace_back(v, img);
  }
  return out;
}

std::vector<std::int64_t> phi_quotient(const GroupElement& g) {
  const GroupContext& ctx = *g.context();
  if (ctx.houghton_k > 0) {
    // z-coordinates are w.r.t. g_i = h_{i,k}; phi = (-z_1,...,-z_{k-1}, sum z_i).
    const int k = ctx.houghton_k;
    std::vector<std::int64_t> phi(k, 0);
    std::int64_t sum = 0;
    for (int i = 0; i < k - 1; ++i) {
      std::int64_t z = g.translations()[i][0];
      phi[i] = -z;
      sum += z;
    }
    phi[k - 1] = sum;
    return phi;
  }
  std::vector<std::int64_t> flat;
  for (const auto& v : g.translations())
    for (auto c : v) flat.push_back(c);
  return flat;
}

GroupBall group_ball(const std::shared_ptr<const GroupContext>& ctx, int radius,
                     std::size_t budget) {
  GroupBall ball;
  std::unordered_map<std::string, int> dist;
  std::deque<GroupElement> queue;
  GroupElement id = GroupElement::identity(ctx);
  dist.emplace(id.encode(), 0);
  ball.elements.emplace_back(id, 0);
  queue.push_back(id);
  std::vector<GroupElement> gens;
  for (const auto& gi : ctx->generators) {
    GroupElement g = GroupElement::generator(ctx, gi.letter);
    gens.push_back(g);
    gens.push_back(g.inverse());
  }
  while (!queue.empty()) {
    GroupElement cur = queue.front();
    queue.pop_front();
    int d = dist.at(cur.encode());
    if (d == radius) continue;
    for (const auto& s : gens) {
      GroupElement nxt = s.multiply(cur);
      auto [it, fresh] = dist.emplace(nxt.encode(), d + 1);
      if (fresh) {
        if (ball.elements.size() >= budget)
          throw std::runtime_error("group_ball: budget exceeded");
        ball.elements.emplace_back(nxt, d + 1);
        queue.push_back(nxt);
      }
    }
  }
  std::sort(ball.elements.begin(), ball.elements.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second < b.second;
              return a.first.encode() < b.first.encode();
            });
  ball.volume.assign(radius + 1, 0);
  for (const auto& [g, d] : ball.elements) ball.volume[d]++;
  for (int r = 1; r <= radius; ++r) ball.volume[r] += ball.volume[r - 1];
  return ball;
}

}  // namespace piecewise
