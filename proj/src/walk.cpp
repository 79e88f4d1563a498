#include "piecewise/walk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "piecewise/gluing.hpp"

namespace piecewise {

namespace {

constexpr double kMassTol = 1e-12;

std::vector<std::vector<std::int64_t>> zero_translations(const GroupContext& ctx) {
  std::vector<std::vector<std::int64_t>> t;
  for (int i = 0; i < ctx.num_infinite; ++i)
    t.emplace_back(ctx.factors[i].dim, 0);
  return t;
}

}  // namespace

bool ZMeasure::symmetric(double tol) const {
  for (const auto& [n, w] : atoms) {
    auto it = atoms.find(-n);
    if (it == atoms.end() || std::abs(it->second - w) > tol) return false;
  }
  return true;
}

double ZMeasure::mass() const {
  double s = 0.0;
  for (const auto& [n, w] : atoms) s += w;
  return s;
}

Measure::Measure(std::shared_ptr<const GroupContext> ctx,
                 std::vector<std::pair<GroupElement, double>> atoms, double defect)
    : ctx_(std::move(ctx)), defect_(defect) {
  if (!ctx_) throw MeasureError("measure requires a group context");
  if (defect_ < -kMassTol) throw MeasureError("negative defect");
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [g, w] : atoms) {
    if (w < -kMassTol) throw MeasureError("negative atom probability");
    if (!atoms_.empty() && atoms_.back().first == g)
      atoms_.back().second += w;
    else
      atoms_.emplace_back(g, w);
  }
  if (std::abs(mass() + defect_ - 1.0) > kMassTol)
    throw MeasureError("measure mass + defect != 1");
}

double Measure::mass() const {
  double s = 0.0;
  for (const auto& [g, w] : atoms_) s += w;
  return s;
}

bool Measure::symmetric(double tol) const {
  for (const auto& [g, w] : atoms_) {
    GroupElement gi = g.inverse();
    auto it = std::lower_bound(
        atoms_.begin(), atoms_.end(), gi,
        [](const auto& a, const GroupElement& e) { return a.first < e; });
    if (it == atoms_.end() || !(it->first == gi) || std::abs(it->second - w) > tol)
      return false;
  }
  return true;
}

void Measure::require_symmetric() const {
  if (!symmetric()) throw MeasureError("measure is not symmetric");
}

Distribution::Distribution(std::shared_ptr<const GroupContext> ctx)
    : ctx_(std::move(ctx)) {}

Distribution Distribution::point_mass(std::shared_ptr<const GroupContext> ctx,
                                      const GroupElement& g) {
  Distribution d(std::move(ctx));
  d.map_.emplace(g, 1.0);
  return d;
}

double Distribution::at(const GroupElement& g) const {
  auto it = map_.find(g);
  return it == map_.end() ? 0.0 : it->second;
}

double Distribution::mass() const {
  double s = 0.0;
  for (const auto& [g, w] : map_) s += w;
  return s;
}

std::vector<std::pair<GroupElement, double>> Distribution::sorted_atoms() const {
  std::vector<std::pair<GroupElement, double>> out(map_.begin(), map_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

Measure make_measure_q(const std::vector<Measure>& components) {
  if (components.empty()) throw MeasureError("empty component list");
  const auto& ctx = components.front().context();
  double inv_l = 1.0 / static_cast<double>(components.size());
  std::vector<std::pair<GroupElement, double>> atoms;
  double defect = 0.0;
  for (const auto& mu : components) {
    if (mu.context() != ctx) throw MeasureError("mixed group contexts");
    mu.require_symmetric();
    for (const auto& [g, w] : mu.atoms()) atoms.emplace_back(g, w * inv_l);
    defect += mu.defect() * inv_l;
  }
  return Measure(ctx, std::move(atoms), defect);
}

Measure make_measure_houghton(
    const std::shared_ptr<const GroupContext>& ctx,
    const std::map<std::pair<int, int>, ZMeasure>& p) {
  int k = ctx->houghton_k;
  if (k < 2) throw MeasureError("context is not a Houghton group");
  for (const auto& [pair, zm] : p) {
    if (!zm.symmetric()) throw MeasureError("asymmetric p component");
    if (pair.first < 1 || pair.second <= pair.first || pair.second > k)
      throw MeasureError("pair out of range");
  }
  double pairs = static_cast<double>(k) * (k - 1) / 2.0;
  std::vector<std::pair<GroupElement, double>> atoms;
  double defect = 0.0;
  for (int i = 1; i < k; ++i) {
    for (int j = i + 1; j <= k; ++j) {
      auto it = p.find({i, j});
      if (it == p.end()) {  // omitted pairs default to delta_0
        atoms.emplace_back(GroupElement::identity(ctx), 1.0 / pairs);
        continue;
      }
      for (const auto& [n, w] : it->second.atoms)
        atoms.emplace_back(houghton_element(ctx, i, j, n), w / pairs);
      defect += it->second.defect / pairs;
    }
  }
  return Measure(ctx, std::move(atoms), defect);
}

ZMeasure make_xi_alpha(const AlphaParam& alpha, double eps) {
  ZMeasure out;
  if (alpha.kind == AlphaParam::Kind::T) {
    out.atoms[0] = 1.0;
    return out;
  }
  if (alpha.kind == AlphaParam::Kind::S) {
    out.atoms[-1] = out.atoms[0] = out.atoms[1] = 1.0 / 3.0;
    return out;
  }
  double a = alpha.value;
  if (a <= 0.0) throw MeasureError("alpha must be positive");
  if (!(eps > 0.0 && eps <= 1e-3)) throw MeasureError("eps out of (0, 1e-3]");
  // Normalizer 1 + 2 sum_{m>=1} (1+m)^{-a-1} = 2 zeta(a+1) - 1, with zeta by
  // Euler-Maclaurin: partial sum to N, integral tail, and the first two
  // correction terms (error O(s^3 N^{-s-3}), far below 1e-15 at N = 1e5).
  long double s = static_cast<long double>(a) + 1.0L;
  const long double N = 100000.0L;
  long double partial = 0.0L;
  for (long double n = 1.0L; n <= N; n += 1.0L) {
    long double term = std::pow(n, -s);
    partial += term;
    if (term < 1e-22L * partial) break;
  }
  long double zeta = partial + std::pow(N, 1.0L - s) / (s - 1.0L) -
                     0.5L * std::pow(N, -s) + (s / 12.0L) * std::pow(N, -s - 1.0L);
  double c = static_cast<double>(1.0L / (2.0L * zeta - 1.0L));
  out.atoms[0] = c;
  double mass = c;
  for (std::int64_t n = 1; mass < 1.0 - eps; ++n) {
    double w = c * std::pow(1.0 + static_cast<double>(n), -a - 1.0);
    out.atoms[n] = w;
    out.atoms[-n] = w;
    mass += 2.0 * w;
  }
  out.defect = std::max(0.0, 1.0 - mass);
  return out;
}

Measure measure_from_z(const std::shared_ptr<const GroupContext>& ctx,
                       const GroupElement& g, const ZMeasure& zm) {
  std::vector<std::pair<GroupElement, double>> atoms;
  std::int64_t lo = zm.atoms.begin()->first, hi = zm.atoms.rbegin()->first;
  GroupElement pos = GroupElement::identity(ctx);
  for (std::int64_t n = 0; n <= hi; ++n) {
    if (auto it = zm.atoms.find(n); it != zm.atoms.end())
      atoms.emplace_back(pos, it->second);
    pos = g.multiply(pos);
  }
  GroupElement gi = g.inverse();
  GroupElement neg = gi;
  for (std::int64_t n = -1; n >= lo; --n) {
    if (auto it = zm.atoms.find(n); it != zm.atoms.end())
      atoms.emplace_back(neg, it->second);
    neg = gi.multiply(neg);
  }
  return Measure(ctx, std::move(atoms), zm.defect);
}

Measure make_mu_N(const std::shared_ptr<const GroupContext>& ctx,
                  const std::vector<VertexId>& points) {
  std::size_t n = points.size();
  if (n < 3) throw MeasureError("mu_N needs at least 3 points");
  double cycles = static_cast<double>(n) * (n - 1) * (n - 2) / 3.0;  // 2*C(n,3)
  auto t0 = zero_translations(*ctx);
  std::vector<std::pair<GroupElement, double>> atoms;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t l = j + 1; l < n; ++l) {
        atoms.emplace_back(
            GroupElement(ctx, t0, FinPerm::cycle({points[i], points[j], points[l]})),
            1.0 / cycles);
        atoms.emplace_back(
            GroupElement(ctx, t0, FinPerm::cycle({points[i], points[l], points[j]})),
            1.0 / cycles);
      }
  return Measure(ctx, std::move(atoms));
}

Measure make_mu_N(const std::shared_ptr<const GroupContext>& ctx,
                  const BallEnumeration& ball) {
  std::vector<VertexId> pts;
  for (const auto& [v, d] : ball.points) pts.push_back(v);
  return make_mu_N(ctx, pts);
}

Distribution convolve(const Distribution& d, const Measure& m) {
  if (d.context() != m.context()) throw MeasureError("mismatched groups");
  Distribution out(d.context());
  double d_mass = 0.0;
  auto dx = d.sorted_atoms();
  // Sorted loops fix the floating-point accumulation order, so the result is
  // bitwise-deterministic regardless of hash layout or worker sharding.
  for (const auto& [y, wy] : m.atoms()) {
    for (const auto& [x, wx] : dx) out.map_[y.multiply(x)] += wy * wx;
  }
  for (const auto& [x, wx] : dx) d_mass += wx;
  out.defect_ = d.defect() + m.defect() * d_mass;
  // Deterministic prune: collect, sort, move to defect.
  std::vector<GroupElement> prune;
  for (const auto& [g, w] : out.map_)
    if (w < Distribution::kPruneThreshold) prune.push_back(g);
  std::sort(prune.begin(), prune.end());
  for (const auto& g : prune) {
    out.defect_ += out.map_.at(g);
    out.map_.erase(g);
  }
  return out;
}

ReturnSeries return_probability(const Measure& m, int n_max) {
  m.require_symmetric();
  GroupElement id = GroupElement::identity(m.context());
  Distribution d = Distribution::point_mass(m.context(), id);
  ReturnSeries series;
  for (int step = 1; step <= 2 * n_max; ++step) {
    d = convolve(d, m);
    if (step % 2 == 0) {
      ReturnSeries::Entry e{step, d.at(id), d.at(id) + d.defect(), d.defect()};
      if (!series.entries.empty()) {
        const auto& prev = series.entries.back();
        if (e.value > prev.value + e.defect + kMassTol)
          throw std::logic_error("return probability failed monotone decay");
      }
      series.entries.push_back(e);
    }
  }
  return series;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

MonteCarloResult monte_carlo_return(const Measure& m, int n, std::int64_t trials,
                                    std::uint64_t master_seed) {
  if (trials < 1) throw MeasureError("trials must be >= 1");
  // Cumulative table over sorted atoms; tail mass is an absorbing miss so the
  // estimator is unbiased for the truncated measure.
  std::vector<double> cum;
  cum.reserve(m.atoms().size());
  double acc = 0.0;
  for (const auto& [g, w] : m.atoms()) cum.push_back(acc += w);
  std::int64_t hits = 0;
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    std::uint64_t seed = master_seed;
    std::uint64_t trial_key = splitmix64(seed) ^ static_cast<std::uint64_t>(trial);
    std::uint64_t state = trial_key * 0x9e3779b97f4a7c15ULL + master_seed;
    GroupElement pos = GroupElement::identity(m.context());
    bool lost = false;
    for (int step = 0; step < n; ++step) {
      double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
      auto it = std::lower_bound(cum.begin(), cum.end(), u);
      if (it == cum.end()) {
        lost = true;
        break;
      }
      pos = m.atoms()[static_cast<std::size_t>(it - cum.begin())].first.multiply(pos);
    }
    if (!lost && pos.is_identity()) ++hits;
  }
  double p = static_cast<double>(hits) / static_cast<double>(trials);
  double se = std::sqrt(std::max(p * (1.0 - p), 1.0 / static_cast<double>(trials)) /
                        static_cast<double>(trials));
  return {p, se, hits, trials};
}

double rho_alpha(const AlphaParam& alpha, double s) {
  if (!(s > 0.0 && s <= 1.0)) throw MeasureError("s out of (0, 1]");
  switch (alpha.kind) {
    case AlphaParam::Kind::T:
      return 0.0;
    case AlphaParam::Kind::S:
      return std::pow(s, -0.5);
    case AlphaParam::Kind::Real:
      break;
  }
  double a = alpha.value;
  if (a <= 0.0) throw MeasureError("alpha must be positive");
  if (a < 2.0) return std::pow(s, -1.0 / a);
  if (a == 2.0) return std::pow(s, -0.5) * std::sqrt(1.0 + std::log(1.0 / s));
  return std::pow(s, -0.5);
}

}  // namespace piecewise
