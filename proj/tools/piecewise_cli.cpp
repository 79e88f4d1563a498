// Command-line front end: graph/group construction, walks, profiles,
// identity-report verification, reference curves, and the ball cache.
//
// Exit codes: 0 success, 2 validation failure, 3 budget/window errors,
// 64 usage errors.  All outputs are deterministic for fixed inputs and
// seeds, and independent of --workers.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "piecewise/an_walks.hpp"
#include "piecewise/curves.hpp"
#include "piecewise/gluing.hpp"
#include "piecewise/profile.hpp"
#include "piecewise/test_functions.hpp"
#include "piecewise/walk.hpp"

using nlohmann::json;
using namespace piecewise;

namespace {

constexpr int kSchemaVersion = 1;
constexpr int kCacheFormatVersion = 1;

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open output file: " + out);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

// RFC-4180: quote fields containing commas, quotes, or newlines; LF endings.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string num(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::int64_t to_int(const std::string& s) {
  std::size_t pos = 0;
  std::int64_t v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad integer: " + s);
  return v;
}

// Base specs: z:W, z2:W, mod:N (alias zN).  Constructions: pocket-BASE,
// star-BASE, houghton:k:depth, bubble:a1,a2,...:cutoff, or a bare base.
GroupSystem parse_base(const std::string& spec) {
  auto parts = split(spec, ':');
  const std::string& kind = parts[0];
  if (kind == "z" && parts.size() == 2)
    return cayley_system(GroupOracle::z(to_int(parts[1])), {{.shift = {1}}});
  if (kind == "z2" && parts.size() == 2)
    return cayley_system(GroupOracle::zd(2, to_int(parts[1])),
                         {{.shift = {1, 0}}, {.shift = {0, 1}}});
  if (kind == "mod" && parts.size() == 2)
    return cayley_system(GroupOracle::mod(to_int(parts[1])), {{.shift = {1}}});
  if (parts.size() == 1 && kind.size() > 1 && kind[0] == 'z')
    return cayley_system(GroupOracle::mod(to_int(kind.substr(1))), {{.shift = {1}}});
  throw std::invalid_argument("unknown base group spec: " + spec);
}

GroupSystem parse_group_spec(const std::string& spec) {
  if (spec.rfind("pocket-", 0) == 0)
    return pocket_extension(parse_base(spec.substr(7)));
  if (spec.rfind("star-", 0) == 0)
    return star_extension(parse_base(spec.substr(5)));
  auto parts = split(spec, ':');
  if (parts[0] == "houghton" && parts.size() == 3)
    return build_houghton(static_cast<int>(to_int(parts[1])), to_int(parts[2]));
  if (parts[0] == "bubble" && parts.size() == 3) {
    BubbleSpec bs;
    for (const auto& e : split(parts[1], ',')) bs.a.push_back(to_int(e));
    bs.cutoff = static_cast<int>(to_int(parts[2]));
    return build_bubble(bs);
  }
  return parse_base(spec);
}

Measure uniform_measure(const std::shared_ptr<const GroupContext>& ctx) {
  std::vector<std::pair<GroupElement, double>> atoms;
  const double w = 1.0 / (2.0 * static_cast<double>(ctx->generators.size()));
  for (std::size_t i = 1; i <= ctx->generators.size(); ++i) {
    GroupElement g = GroupElement::generator(ctx, Letter::pos(static_cast<int>(i)));
    atoms.push_back({g, w});
    atoms.push_back({g.inverse(), w});
  }
  return Measure(ctx, std::move(atoms));
}

Measure parse_measure(const GroupSystem& sys, const std::string& spec) {
  if (spec == "uniform") return uniform_measure(sys.ctx);
  auto parts = split(spec, ':');
  if (parts[0] == "xi" && parts.size() == 2) {
    AlphaParam a = parts[1] == "s"   ? AlphaParam::s()
                   : parts[1] == "t" ? AlphaParam::t()
                                     : AlphaParam::real(std::stod(parts[1]));
    return measure_from_z(sys.ctx,
                          GroupElement::generator(sys.ctx, Letter::pos(1)),
                          make_xi_alpha(a));
  }
  throw std::invalid_argument("unknown measure spec: " + spec);
}

json graph_summary(const GroupSystem& sys, const std::string& spec) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["spec"] = spec;
  j["alphabet"] = sys.graph->alphabet_size();
  j["vertices"] = sys.graph->vertices().size();
  j["root"] = sys.graph->root().encode();
  j["finite_universe"] = sys.graph->finite_universe();
  j["has_context"] = sys.ctx != nullptr;
  if (sys.ctx) {
    j["generators"] = sys.ctx->generators.size();
    j["parity_even_only"] = sys.ctx->parity_even_only;
  }
  return j;
}

int run_build(const std::string& spec, const std::string& out) {
  emit(out, graph_summary(parse_group_spec(spec), spec).dump(2) + "\n");
  return 0;
}

int run_glue(const std::string& components, const std::string& out) {
  std::vector<ComponentSpec> comps;
  for (const auto& c : split(components, ',')) {
    GroupSystem base = parse_base(c);  // validates the spec
    auto parts = split(c, ':');
    if (parts[0] == "z")
      comps.push_back({GroupOracle::z(to_int(parts[1])), {{.shift = {1}}}});
    else if (parts[0] == "mod")
      comps.push_back({GroupOracle::mod(to_int(parts[1])), {{.shift = {1}}}});
    else if (parts[0] == "z2")
      comps.push_back({GroupOracle::zd(2, to_int(parts[1])),
                       {{.shift = {1, 0}}, {.shift = {0, 1}}}});
    else
      throw std::invalid_argument("glue: unsupported component: " + c);
  }
  GroupSystem sys = rooted_gluing(comps);
  emit(out, graph_summary(sys, "glue:" + components).dump(2) + "\n");
  return 0;
}

int run_walk(const std::string& spec, const std::string& measure_spec, int steps,
             std::int64_t mc_trials, std::uint64_t seed, const std::string& out) {
  GroupSystem sys = parse_group_spec(spec);
  if (!sys.ctx) throw std::invalid_argument("walk: group has no algebraic context");
  Measure m = parse_measure(sys, measure_spec);
  std::string text;
  if (mc_trials > 0) {
    MonteCarloResult r = monte_carlo_return(m, steps, mc_trials, seed);
    text = "n,estimate,stderr,hits,trials\n";
    text += std::to_string(steps) + "," + num(r.estimate) + "," + num(r.stderr_) +
            "," + std::to_string(r.hits) + "," + std::to_string(r.trials) + "\n";
  } else {
    ReturnSeries s = return_probability(m, steps / 2);
    text = "n,value,upper,defect\n";
    for (const auto& e : s.entries)
      text += std::to_string(e.n) + "," + num(e.value) + "," + num(e.upper) + "," +
              num(e.defect) + "\n";
  }
  emit(out, text);
  return 0;
}

int run_profile(const std::string& spec, int p, int vmax, int radius,
                const std::string& out) {
  GroupSystem sys = parse_group_spec(spec);
  if (!sys.ctx) throw std::invalid_argument("profile: group has no algebraic context");
  Measure m = uniform_measure(sys.ctx);
  GroupBall ball = group_ball(sys.ctx, radius);
  ProfileTable t = lambda_profile(m, ball, vmax, p);
  std::string text = "v,value,exact,witness\n";
  for (const auto& pt : t.points)
    text += std::to_string(pt.v) + "," + num(pt.value) + "," +
            (pt.exact ? "1" : "0") + "," + csv_field(pt.witness) + "\n";
  emit(out, text);
  return 0;
}

json suite_bubble_energy(const std::vector<std::int64_t>& a, int k) {
  BubbleSpec bs{a, k + 1};
  GroupSystem sys = build_bubble(bs);
  const std::int64_t ell = a.at(static_cast<std::size_t>(k - 1)) / 4 - 1;
  BubbleUSet u = bubble_U_set(sys, k, ell);
  BubbleTestFunctionResult r = bubble_test_function(u);
  json j;
  j["checks"] = json::parse(r.report.to_json());
  j["pass"] = r.report.pass();
  j["suite"] = "bubble-energy";
  j["k"] = k;
  j["ell"] = ell;
  j["universe"] = u.members.size();
  j["ratio"] = r.ratio;
  return j;
}

json suite_star_tent() {
  auto sys = star_extension(cayley_system(GroupOracle::z(16), {{.shift = {1}}}));
  std::map<GroupElement, double> phi;
  for (std::int64_t x = -3; x <= 3; ++x)
    phi[GroupElement(sys.ctx, {{x}}, FinPerm())] = 4.0 - std::llabs(x);
  StarFunctionResult r = star_test_function(sys.ctx, phi, 2.0 / 22.0 * 2.0);
  json j;
  j["checks"] = json::parse(r.report.to_json());
  j["pass"] = r.report.pass();
  j["suite"] = "star-tent";
  j["ratio"] = r.ratio;
  j["nu2_term"] = r.nu2_term;
  return j;
}

json suite_houghton() {
  auto sys = build_houghton(3, 40);
  const double c = 1.0 / std::sqrt(6.0);
  ZMeasure psi{{{-1, c}, {0, 2.0 * c}, {1, c}}, 0.0};
  std::map<std::pair<int, int>, ZMeasure> p;
  ZMeasure pm{{{-1, 0.5}, {1, 0.5}}, 0.0};
  p[{1, 2}] = pm;
  p[{1, 3}] = pm;
  p[{2, 3}] = pm;
  HoughtonFunctionReport r = houghton_test_function(sys.ctx, psi, p);
  json j;
  j["checks"] = json::parse(r.report.to_json());
  j["pass"] = r.report.pass();
  j["suite"] = "houghton";
  j["s"] = r.s;
  j["ratio"] = r.ratio;
  return j;
}

int run_verify(const std::string& suite, const std::string& a_csv, int k,
               int workers, const std::string& out) {
  std::vector<std::int64_t> a;
  for (const auto& e : split(a_csv, ',')) a.push_back(to_int(e));
  std::vector<std::function<json()>> jobs;
  if (suite == "bubble-energy") {
    jobs.push_back([a, k] { return suite_bubble_energy(a, k); });
  } else if (suite == "star-tent") {
    jobs.push_back([] { return suite_star_tent(); });
  } else if (suite == "houghton") {
    jobs.push_back([] { return suite_houghton(); });
  } else if (suite == "all") {
    jobs.push_back([a, k] { return suite_bubble_energy(a, k); });
    jobs.push_back([] { return suite_star_tent(); });
    jobs.push_back([] { return suite_houghton(); });
  } else {
    throw std::invalid_argument("unknown suite: " + suite);
  }
  // Deterministic parallelism: jobs run concurrently, the merge order is the
  // fixed job order, so the output is independent of the worker count.
  std::vector<json> results(jobs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) results[i] = jobs[i]();
  } else {
    std::vector<std::future<json>> fs;
    for (auto& job : jobs)
      fs.push_back(std::async(std::launch::async, job));
    for (std::size_t i = 0; i < fs.size(); ++i) results[i] = fs[i].get();
  }
  json j;
  j["schema_version"] = kSchemaVersion;
  j["reports"] = results;
  bool all = true;
  for (const auto& r : results)
    if (!r.at("pass").get<bool>()) all = false;
  j["pass"] = all;
  emit(out, j.dump(2) + "\n");
  return all ? 0 : 2;
}

int run_curves(const std::string& name, double from, double to, int count,
               const std::string& out) {
  ReferenceCurve c;
  auto parts = split(name, ':');
  if (name == "one-over-v") {
    c = curve_one_over_v();
  } else if (name == "composite-one-over-v") {
    c = curve_composite_log(curve_one_over_v());
  } else if (parts[0] == "rho" && parts.size() == 2) {
    AlphaParam a = parts[1] == "s"   ? AlphaParam::s()
                   : parts[1] == "t" ? AlphaParam::t()
                                     : AlphaParam::real(std::stod(parts[1]));
    c = curve_rho(a);
  } else if (parts[0] == "bubble-decay" && parts.size() == 2) {
    c = curve_bubble_decay(std::stod(parts[1]));
  } else if ((parts[0] == "w-a" || parts[0] == "v-a" || parts[0] == "a-a") &&
             parts.size() == 2) {
    std::vector<std::int64_t> a;
    for (const auto& e : split(parts[1], ',')) a.push_back(to_int(e));
    c = parts[0] == "w-a" ? curve_W_a(a)
        : parts[0] == "v-a" ? curve_V_a(a)
                            : curve_A_a(a);
  } else {
    throw std::invalid_argument("unknown curve: " + name);
  }
  if (count < 2) throw std::invalid_argument("curves: need at least 2 points");
  std::string text = "x,value\n";
  for (int i = 0; i < count; ++i) {
    double x = from + (to - from) * static_cast<double>(i) /
                          static_cast<double>(count - 1);
    text += num(x) + "," + num(eval_curve(c, x)) + "\n";
  }
  emit(out, text);
  return 0;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int run_cache(const std::string& spec, int radius, std::string dir,
              const std::string& out) {
  if (dir.empty()) {
    const char* env = std::getenv("PIECEWISE_CACHE_DIR");
    if (!env || !*env)
      throw std::invalid_argument(
          "cache: set --dir or the PIECEWISE_CACHE_DIR environment variable");
    dir = env;
  }
  GroupSystem sys = parse_group_spec(spec);
  if (!sys.ctx) throw std::invalid_argument("cache: group has no algebraic context");
  GroupBall ball = group_ball(sys.ctx, radius);
  json payload = json::array();
  for (const auto& [e, len] : ball.elements)
    payload.push_back({{"element", e.encode()}, {"length", len}});
  json entry;
  entry["format_version"] = kCacheFormatVersion;
  entry["kind"] = "group_ball";
  entry["key"] = spec + "|r=" + std::to_string(radius);
  entry["volume"] = ball.volume;
  entry["payload"] = payload;
  const std::string body = entry.dump(2);
  entry["content_hash"] = fnv1a(body);
  const std::string key_name =
      "ball_" + std::to_string(fnv1a(entry["key"].get<std::string>())) + ".json";
  const std::string path = dir + "/" + key_name;
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("cache: cannot write " + path);
    f << entry.dump(2) << "\n";
  }
  // Round trip: reload, strip the hash, recompute, compare.
  json back;
  {
    std::ifstream f(path, std::ios::binary);
    f >> back;
  }
  if (back.at("format_version").get<int>() != kCacheFormatVersion)
    throw std::invalid_argument("cache: format version mismatch");
  json stripped = back;
  stripped.erase("content_hash");
  const bool ok = fnv1a(stripped.dump(2)) == back.at("content_hash").get<std::uint64_t>();
  json j;
  j["schema_version"] = kSchemaVersion;
  j["path"] = path;
  j["elements"] = ball.elements.size();
  j["content_hash"] = back.at("content_hash");
  j["roundtrip"] = ok ? "ok" : "hash mismatch";
  emit(out, j.dump(2) + "\n");
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"piecewise-action group computations"};
  app.require_subcommand(1);

  std::string group, out, measure = "uniform", components, suite = "all",
              a_csv = "8,16", curve_name;
  int steps = 20, p = 2, vmax = 8, radius = 8, k = 1, workers = 1, count = 9;
  std::int64_t mc_trials = 0;
  std::uint64_t seed = 0;
  double from = 1.0, to = 9.0;
  bool seed_set = false;

  auto* b = app.add_subcommand("build", "construct a labelled graph / group");
  b->add_option("--group", group)->required();
  b->add_option("--out", out);

  auto* g = app.add_subcommand("glue", "rooted gluing of Cayley components");
  g->add_option("--components", components)->required();
  g->add_option("--out", out);

  auto* w = app.add_subcommand("walk", "return probabilities of a step measure");
  w->add_option("--group", group)->required();
  w->add_option("--measure", measure);
  w->add_option("--steps", steps);
  w->add_option("--mc-trials", mc_trials);
  auto* seed_opt =
      w->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) {
        seed = s;
        seed_set = true;
      });
  w->add_option("--out", out);

  auto* pr = app.add_subcommand("profile", "isoperimetric profile table");
  pr->add_option("--group", group)->required();
  pr->add_option("--p", p);
  pr->add_option("--vmax", vmax);
  pr->add_option("--radius", radius);
  pr->add_option("--out", out);

  auto* v = app.add_subcommand("verify", "identity report suites");
  v->add_option("--suite", suite);
  v->add_option("--a", a_csv);
  v->add_option("--k", k);
  v->add_option("--workers", workers);
  v->add_option("--out", out);

  auto* cu = app.add_subcommand("curves", "closed-form reference curves");
  cu->add_option("--name", curve_name)->required();
  cu->add_option("--from", from);
  cu->add_option("--to", to);
  cu->add_option("--count", count);
  cu->add_option("--out", out);

  auto* ca = app.add_subcommand("cache", "ball cache round trip");
  ca->add_option("--group", group)->required();
  ca->add_option("--radius", radius);
  std::string cache_dir;
  ca->add_option("--dir", cache_dir);
  ca->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 64;
  }

  try {
    if (b->parsed()) return run_build(group, out);
    if (g->parsed()) return run_glue(components, out);
    if (w->parsed()) {
      if (mc_trials > 0 && !seed_set) {
        std::cerr << "walk: --mc-trials requires an explicit --seed\n";
        return 64;
      }
      (void)seed_opt;
      return run_walk(group, measure, steps, mc_trials, seed, out);
    }
    if (pr->parsed()) return run_profile(group, p, vmax, radius, out);
    if (v->parsed()) return run_verify(suite, a_csv, k, workers, out);
    if (cu->parsed()) return run_curves(curve_name, from, to, count, out);
    if (ca->parsed()) return run_cache(group, radius, cache_dir, out);
  } catch (const WindowOverflow& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const NotInWindow& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::runtime_error& e) {
    std::cerr << e.what() << "\n";
    return std::string(e.what()).find("budget") != std::string::npos ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 64;
}
