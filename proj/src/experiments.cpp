#include "cat0lab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cat0lab/errors.hpp"
#include "cat0lab/harmonic.hpp"
#include "cat0lab/walk.hpp"

namespace cat0lab {

const char* kVersion = "cat0lab 0.1.0";

namespace {

using json = nlohmann::json;

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

std::string utc_now_iso() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const char* ctx) {
  if (!j.is_object())
    throw SchemaError(std::string(ctx) + ": config must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (k == a) { ok = true; break; }
    if (!ok)
      throw SchemaError(std::string(ctx) + ": unknown key \"" + k + "\"");
  }
}

std::uint64_t seed_of(const json& j) {
  return j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;
}

// "exact" (default) or "monte_carlo"; monte_carlo requires samples > 0
std::pair<bool, int> mode_of(const json& j, const char* ctx) {
  std::string mode = j.contains("mode") ? j.at("mode").get<std::string>() : "exact";
  if (mode == "exact") {
    if (j.contains("samples"))
      throw SchemaError(std::string(ctx) + ": \"samples\" requires monte_carlo mode");
    return {true, 0};
  }
  if (mode != "monte_carlo")
    throw SchemaError(std::string(ctx) + ": unknown mode \"" + mode + "\"");
  if (!j.contains("samples"))
    throw SchemaError(std::string(ctx) + ": monte_carlo mode needs \"samples\"");
  int samples = j.at("samples").get<int>();
  if (samples < 1) throw SchemaError(std::string(ctx) + ": samples must be >= 1");
  return {false, samples};
}

json series_to_json(const DriftSeries& s) {
  json out{{"n_max", s.n_max},
           {"exact", s.exact},
           {"Ln", s.Ln},
           {"Ltilde", s.Ltilde},
           {"Ln_over_n", s.Ln_over_n},
           {"stderr", s.stderrs},
           {"drift_estimate", s.drift_estimate},
           {"drift_argmin", s.drift_argmin},
           {"last_ratio", s.last_ratio},
           {"drift_stderr", s.drift_stderr}};
  if (s.exact) {
    json ex = json::array();
    for (const auto& r : s.Ln_exact) ex.push_back(r.str());
    out["Ln_rational"] = ex;
  }
  return out;
}

void finalize(RunRecord& rec, const json& config, const DriftSeries* csv) {
  rec.config = config;
  rec.config_hash = fnv1a_hex(config.dump());
  rec.version = kVersion;
  rec.timestamp = utc_now_iso();
  if (config.contains("out_dir")) {
    std::filesystem::path dir = config.at("out_dir").get<std::string>();
    std::filesystem::create_directories(dir);
    std::ofstream rj(dir / "record.json");
    rj << rec.to_json().dump(2) << "\n";
    if (csv) {
      std::ofstream cs(dir / "drift.csv");
      write_drift_csv(cs, *csv);
    }
  }
}

// parse group+space+action+start bundle shared by fixed-point and shalom
struct ActionSetup {
  std::shared_ptr<const Group> group;
  std::shared_ptr<const Space> space;
  IsometricAction action;
  Point start;
};

ActionSetup parse_action_setup(const json& config, const char* ctx) {
  for (const char* k : {"group", "space", "action", "start"})
    if (!config.contains(k))
      throw SchemaError(std::string(ctx) + ": missing \"" + k + "\"");
  ActionSetup as;
  as.group = Group::from_json(config.at("group"));
  as.space = Space::from_json(config.at("space"));
  as.action = IsometricAction::from_json(as.group, as.space, config.at("action"));
  as.start = as.space->point_from_json(config.at("start"));
  return as;
}

}  // namespace

json RunRecord::to_json() const {
  return json{{"subcommand", subcommand}, {"config_hash", config_hash},
              {"version", version},       {"timestamp", timestamp},
              {"config", config},         {"payload", payload},
              {"warnings", warnings},     {"exit_code", exit_code}};
}

std::string resolve_cache_dir(const json& config) {
  if (config.contains("cache_dir")) return config.at("cache_dir").get<std::string>();
  if (const char* env = std::getenv("CAT0LAB_CACHE_DIR")) return env;
  return {};
}

RunRecord cmd_drift(const json& config) {
  require_keys(config,
               {"group", "measure", "n_max", "mode", "samples", "seed",
                "pair_budget", "out_dir", "cache_dir"},
               "drift");
  if (!config.contains("group") || !config.contains("measure") ||
      !config.contains("n_max"))
    throw SchemaError("drift: \"group\", \"measure\" and \"n_max\" are required");
  auto group = Group::from_json(config.at("group"));
  auto mu = FiniteSupportMeasure::from_json(group, config.at("measure"));
  int n_max = config.at("n_max").get<int>();
  auto [exact, samples] = mode_of(config, "drift");
  std::size_t budget = config.contains("pair_budget")
                           ? config.at("pair_budget").get<std::size_t>()
                           : 80'000'000;
  GeneratingSet S = group->standard_generators();

  RunRecord rec;
  rec.subcommand = "drift";
  DriftSeries series =
      exact ? drift_series_exact(mu, S, n_max, budget)
            : drift_series_monte_carlo(mu, S, n_max, samples, seed_of(config));
  if (!exact)
    rec.warnings.push_back("monte_carlo estimates; stderr column quantifies "
                           "the sampling error");
  rec.payload = json{{"series", series_to_json(series)},
                     {"drift_estimate", series.drift_estimate},
                     {"drift_argmin", series.drift_argmin}};
  finalize(rec, config, &series);
  return rec;
}

RunRecord cmd_conv_comb(const json& config) {
  require_keys(config,
               {"group", "measure", "combination", "n_max", "mode", "samples",
                "seed", "pair_budget", "out_dir", "cache_dir"},
               "conv-comb");
  for (const char* k : {"group", "measure", "combination", "n_max"})
    if (!config.contains(k))
      throw SchemaError(std::string("conv-comb: missing \"") + k + "\"");
  auto group = Group::from_json(config.at("group"));
  auto mu = FiniteSupportMeasure::from_json(group, config.at("measure"));
  ConvexCombinationSpec spec = ConvexCombinationSpec::from_json(config.at("combination"));
  int n_max = config.at("n_max").get<int>();
  auto [exact, samples] = mode_of(config, "conv-comb");
  std::size_t budget = config.contains("pair_budget")
                           ? config.at("pair_budget").get<std::size_t>()
                           : 80'000'000;
  GeneratingSet S = group->standard_generators();

  ConvCombReport rep =
      verify_conv_comb_bound(mu, spec, S, n_max, samples, seed_of(config), budget);
  RunRecord rec;
  rec.subcommand = "conv-comb";
  rec.warnings.push_back("combination truncated at N = " +
                         std::to_string(spec.truncation()));
  if (!exact)
    rec.warnings.push_back("monte_carlo estimates; the bound is checked up to "
                           "3 combined standard errors");
  rec.payload = json{{"factor", rep.factor.str()},
                     {"lhs", rep.lhs},
                     {"rhs", rep.rhs},
                     {"lhs_stderr", rep.lhs_stderr},
                     {"rhs_stderr", rep.rhs_stderr},
                     {"holds", rep.holds},
                     {"exact", rep.exact},
                     {"second_moment", rep.second_moment.str()},
                     {"covers_punctured_ball", rep.covers_punctured_ball},
                     {"mu_series", series_to_json(rep.mu_series)},
                     {"nu_series", series_to_json(rep.nu_series)}};
  rec.exit_code = rep.holds ? 0 : 2;
  finalize(rec, config, &rep.nu_series);
  return rec;
}

RunRecord cmd_fixed_point(const json& config) {
  require_keys(config,
               {"group", "space", "action", "start", "measure", "tol",
                "orbit_radius", "max_iter", "seed", "out_dir", "cache_dir"},
               "fixed-point");
  ActionSetup as = parse_action_setup(config, "fixed-point");
  FiniteSupportMeasure mu =
      config.contains("measure")
          ? FiniteSupportMeasure::from_json(as.group, config.at("measure"))
          : FiniteSupportMeasure::uniform(
                as.group, as.group->standard_generators().elements);
  FixedPointOptions opts;
  if (config.contains("tol")) opts.tol = config.at("tol").get<double>();
  if (config.contains("orbit_radius"))
    opts.orbit_radius = config.at("orbit_radius").get<int>();
  if (config.contains("max_iter"))
    opts.minimize.max_iter = config.at("max_iter").get<int>();

  FixedPointResult res = fixed_point_search(
      as.action, mu, as.group->standard_generators(), as.start, opts);
  RunRecord rec;
  rec.subcommand = "fixed-point";
  rec.payload = json{{"found", res.found},
                     {"point", as.space->point_to_json(res.point)},
                     {"minimize_status", to_string(res.minimize_status)},
                     {"delta_infimum", res.delta_infimum},
                     {"energy_infimum", res.energy_infimum},
                     {"note", res.note}};
  if (!res.found)
    rec.warnings.push_back("no fixed point found; payload carries the "
                           "delta/energy infimum estimates");
  finalize(rec, config, nullptr);
  return rec;
}

RunRecord cmd_shalom(const json& config) {
  require_keys(config,
               {"group", "space", "action", "start", "n_max", "starts", "seed",
                "out_dir", "cache_dir"},
               "shalom");
  ActionSetup as = parse_action_setup(config, "shalom");
  if (!config.contains("n_max")) throw SchemaError("shalom: missing \"n_max\"");
  int n_max = config.at("n_max").get<int>();
  if (n_max < 1) throw SchemaError("shalom: n_max must be >= 1");
  GeneratingSet S = as.group->standard_generators();

  RunRecord rec;
  rec.subcommand = "shalom";
  json runs = json::array();
  bool violated = false;
  for (int n = 1; n <= n_max; ++n) {
    ShalomOptions so;
    so.seed = seed_of(config) + static_cast<std::uint64_t>(n);
    if (config.contains("starts")) so.starts = config.at("starts").get<int>();
    ShalomResult res = shalom_search(as.action, S, n, as.start, so);
    json r{{"n", n},
           {"outcome", to_string(res.outcome)},
           {"delta_infimum", res.delta_infimum},
           {"note", res.note}};
    if (res.certificate) {
      const ShalomCertificate& c = *res.certificate;
      r["certificate"] = json{
          {"v_n", as.space->point_to_json(c.v_n)},
          {"r_n", c.r_n},
          {"delta_at_vn", c.delta_at_vn},
          {"sampled_min_delta_in_ball", c.sampled_min_delta_in_ball},
          {"sample_count", c.sample_count}};
      if (!(c.delta_at_vn <= c.r_n / n &&
            c.sampled_min_delta_in_ball >= c.r_n / (2.0 * n)))
        violated = true;
    }
    if (res.fixed_point)
      r["fixed_point"] = as.space->point_to_json(*res.fixed_point);
    runs.push_back(std::move(r));
  }
  rec.warnings.push_back("ball minima are sampled evidence, not proofs");
  rec.payload = json{{"runs", runs}};
  rec.exit_code = violated ? 2 : 0;
  finalize(rec, config, nullptr);
  return rec;
}

RunRecord cmd_grigorchuk_audit(const json& config) {
  require_keys(config,
               {"radius", "order_cap", "spot_checks", "seed", "out_dir",
                "cache_dir"},
               "grigorchuk-audit");
  int radius = config.contains("radius") ? config.at("radius").get<int>() : 6;
  std::int64_t cap = config.contains("order_cap")
                         ? config.at("order_cap").get<std::int64_t>()
                         : 1024;
  int spot = config.contains("spot_checks") ? config.at("spot_checks").get<int>() : 0;
  auto G = Group::grigorchuk();
  GeneratingSet S = G->standard_generators();
  WordMetricBall ball = G->ball(radius, S, 50'000'000, resolve_cache_dir(config));

  RunRecord rec;
  rec.subcommand = "grigorchuk-audit";

  std::map<std::int64_t, std::int64_t> histogram;
  std::int64_t max_order = 0, exceeds_cap = 0;
  bool powers_of_two = true;
  for (const auto& e : ball.entries) {
    auto ord = G->grigorchuk_order_recursive(e.element, cap);
    if (!ord) {
      ++exceeds_cap;
      continue;
    }
    ++histogram[*ord];
    max_order = std::max(max_order, *ord);
    if ((*ord & (*ord - 1)) != 0) powers_of_two = false;
  }
  if (exceeds_cap > 0)
    rec.warnings.push_back(std::to_string(exceeds_cap) +
                           " element(s) exceed the order cap " +
                           std::to_string(cap));

  // relations: a^2 = b^2 = c^2 = d^2 = e and bcd = e
  json relations = json::object();
  bool relations_pass = true;
  auto gen = [&](char c) {
    return GroupElement{G.get(), GrigWord{std::string(1, c)}};
  };
  for (char c : {'a', 'b', 'c', 'd'}) {
    bool ok = G->is_identity(G->multiply(gen(c), gen(c)));
    relations[std::string(1, c) + "^2"] = ok;
    relations_pass = relations_pass && ok;
  }
  {
    bool ok = G->is_identity(G->multiply(G->multiply(gen('b'), gen('c')), gen('d')));
    relations["bcd"] = ok;
    relations_pass = relations_pass && ok;
  }

  // sampled cross-check: recursive order vs iterated multiplication
  std::int64_t agree = 0, disagree = 0;
  if (spot > 0) {
    std::mt19937_64 rng(seed_of(config));
    std::uniform_int_distribution<std::size_t> pick(0, ball.size() - 1);
    for (int i = 0; i < spot; ++i) {
      const auto& g = ball.entries[pick(rng)].element;
      auto a = G->grigorchuk_order_recursive(g, cap);
      auto b = G->element_order(g, cap);
      (a == b ? agree : disagree)++;
    }
  }

  json hist = json::array();
  for (const auto& [ord, count] : histogram)
    hist.push_back(json{{"order", ord}, {"count", count}});
  rec.payload = json{{"radius", radius},
                     {"element_count", ball.size()},
                     {"order_histogram", hist},
                     {"max_order", max_order},
                     {"orders_all_powers_of_two", powers_of_two},
                     {"exceeds_cap", exceeds_cap},
                     {"relations", relations},
                     {"spot_checks", json{{"total", spot},
                                          {"agree", agree},
                                          {"disagree", disagree}}}};
  rec.exit_code = (powers_of_two && relations_pass && disagree == 0) ? 0 : 2;
  finalize(rec, config, nullptr);
  return rec;
}

RunRecord cmd_space_check(const json& config) {
  require_keys(config, {"spaces", "triples", "tol", "seed", "out_dir", "cache_dir"},
               "space-check");
  int triples = config.contains("triples") ? config.at("triples").get<int>() : 10'000;
  double tol = config.contains("tol") ? config.at("tol").get<double>() : 1e-9;

  std::vector<std::shared_ptr<const Space>> spaces;
  if (config.contains("spaces")) {
    for (const auto& sj : config.at("spaces"))
      spaces.push_back(Space::from_json(sj));
  } else {
    spaces.push_back(Space::euclidean(2));
    spaces.push_back(Space::euclidean(8));
    spaces.push_back(Space::tree(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}}));
    spaces.push_back(Space::tree(4, {{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 0.5}}));
    spaces.push_back(Space::tree(7, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0},
                                     {0, 4, 1.0}, {0, 5, 1.0}, {0, 6, 1.0}}));
    spaces.push_back(Space::hyperbolic_plane());
    spaces.push_back(Space::product({Space::euclidean(1), Space::euclidean(1)}));
    spaces.push_back(Space::product(
        {Space::hyperbolic_plane(),
         Space::tree(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}})}));
  }

  RunRecord rec;
  rec.subcommand = "space-check";
  json results = json::array();
  bool pass = true;
  for (const auto& s : spaces) {
    std::mt19937_64 rng(seed_of(config));
    double metric_viol = 0.0, cn_viol = 0.0;
    for (int i = 0; i < triples; ++i) {
      Point x = s->random_point(rng), p = s->random_point(rng),
            q = s->random_point(rng);
      double dxp = s->distance(x, p), dxq = s->distance(x, q),
             dpq = s->distance(p, q);
      metric_viol = std::max(metric_viol, -dxp);
      metric_viol = std::max(metric_viol, std::abs(dxp - s->distance(p, x)));
      metric_viol = std::max(metric_viol, s->distance(x, x));
      metric_viol = std::max(metric_viol, dpq - dxp - dxq);  // triangle
      Point m = s->geodesic_point(p, q, 0.5);
      double dxm = s->distance(x, m);
      cn_viol = std::max(cn_viol, dxm * dxm - (0.5 * dxp * dxp +
                                               0.5 * dxq * dxq -
                                               0.25 * dpq * dpq));
    }
    bool ok = metric_viol <= tol && cn_viol <= tol;
    pass = pass && ok;
    results.push_back(json{{"space", s->descriptor()},
                           {"max_metric_violation", metric_viol},
                           {"max_cn_violation", cn_viol},
                           {"pass", ok}});
  }
  rec.payload = json{{"triples", triples}, {"tol", tol}, {"spaces", results}};
  rec.exit_code = pass ? 0 : 2;
  finalize(rec, config, nullptr);
  return rec;
}

RunRecord run_experiment(const std::string& subcommand, const json& config) {
  if (subcommand == "drift") return cmd_drift(config);
  if (subcommand == "conv-comb") return cmd_conv_comb(config);
  if (subcommand == "fixed-point") return cmd_fixed_point(config);
  if (subcommand == "shalom") return cmd_shalom(config);
  if (subcommand == "grigorchuk-audit") return cmd_grigorchuk_audit(config);
  if (subcommand == "space-check") return cmd_space_check(config);
  throw SchemaError("unknown subcommand \"" + subcommand + "\"");
}

}  // namespace cat0lab
