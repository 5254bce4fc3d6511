#include "tsroute/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "tsroute/errors.hpp"

namespace tsroute {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "expected a finite number");
  return v;
}

std::uint64_t unsigned_int(const json& j, const std::string& where) {
  if (!j.is_number_unsigned()) {
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
    fail(where, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::string string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

template <class F>
auto guarded(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ParameterError& e) {
    fail(where, e.what());
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
}

WtpDistribution parse_wtp(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "mu", "sigma", "lo", "hi"});
  const std::string kind = j.contains("kind") ? string(j["kind"], where + ".kind") : "lognormal";
  if (kind == "lognormal") {
    LogNormalWtp w;
    if (j.contains("mu")) w.mu = number(j["mu"], where + ".mu");
    if (j.contains("sigma")) w.sigma = number(j["sigma"], where + ".sigma");
    return w;
  }
  if (kind == "uniform") {
    UniformWtp w;
    if (j.contains("lo")) w.lo = number(j["lo"], where + ".lo");
    if (j.contains("hi")) w.hi = number(j["hi"], where + ".hi");
    return w;
  }
  fail(where + ".kind", "expected 'lognormal' or 'uniform', got '" + kind + "'");
}

HistoricalPricing parse_historical(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "price", "lo", "hi"});
  const std::string kind = j.contains("kind") ? string(j["kind"], where + ".kind") : "uniform";
  if (kind == "constant") {
    ConstantPricing p;
    if (j.contains("price")) p.price = number(j["price"], where + ".price");
    return p;
  }
  if (kind == "uniform") {
    UniformPricing p;
    if (j.contains("lo")) p.lo = number(j["lo"], where + ".lo");
    if (j.contains("hi")) p.hi = number(j["hi"], where + ".hi");
    return p;
  }
  fail(where + ".kind", "expected 'constant' or 'uniform', got '" + kind + "'");
}

GeneratorConfig parse_generator_at(const json& j, const std::string& where) {
  check_keys(j, where,
             {"n", "feature_dim", "wtp", "pricing", "loadings", "noise_sd", "changepoint", "wtp_after"});
  GeneratorConfig g;
  if (j.contains("n")) g.n = unsigned_int(j["n"], where + ".n");
  if (j.contains("feature_dim")) g.feature_dim = unsigned_int(j["feature_dim"], where + ".feature_dim");
  if (j.contains("wtp")) g.wtp = parse_wtp(j["wtp"], where + ".wtp");
  if (j.contains("pricing")) g.pricing = parse_historical(j["pricing"], where + ".pricing");
  if (j.contains("loadings")) g.loadings = numbers(j["loadings"], where + ".loadings");
  if (j.contains("noise_sd")) g.noise_sd = number(j["noise_sd"], where + ".noise_sd");
  if (j.contains("changepoint")) g.changepoint = unsigned_int(j["changepoint"], where + ".changepoint");
  if (j.contains("wtp_after")) g.wtp_after = parse_wtp(j["wtp_after"], where + ".wtp_after");
  if (g.n == 0) fail(where + ".n", "must be positive");
  guarded(where, [&] {
    g.validate();
    return 0;
  });
  return g;
}

std::filesystem::path existing_file(const json& j, const std::string& where,
                                    const std::filesystem::path& base_dir) {
  std::filesystem::path p = string(j, where);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  if (!std::filesystem::is_regular_file(p)) fail(where, "file not found: " + p.string());
  return p;
}

BernoulliSpec parse_bernoulli(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "theta", "prices", "arm_names", "steps", "changepoint", "theta_after"});
  BernoulliSpec spec = RunConfig::default_bernoulli();
  if (j.contains("theta")) spec.env.theta = numbers(j["theta"], where + ".theta");
  if (j.contains("prices")) spec.env.prices = numbers(j["prices"], where + ".prices");
  if (j.contains("steps")) spec.steps = unsigned_int(j["steps"], where + ".steps");
  if (j.contains("changepoint")) spec.env.changepoint = unsigned_int(j["changepoint"], where + ".changepoint");
  if (j.contains("theta_after")) spec.env.theta_after = numbers(j["theta_after"], where + ".theta_after");
  if (spec.env.theta_after.size() > 0 && !spec.env.changepoint) {
    fail(where + ".theta_after", "requires changepoint");
  }
  spec.arm_names.clear();
  if (j.contains("arm_names")) {
    const auto& names = j["arm_names"];
    if (!names.is_array()) fail(where + ".arm_names", "expected an array of strings");
    for (std::size_t i = 0; i < names.size(); ++i) {
      spec.arm_names.push_back(string(names[i], where + ".arm_names[" + std::to_string(i) + "]"));
    }
  }
  guarded(where, [&] {
    spec.env.validate();
    return 0;
  });
  if (spec.arm_names.empty()) {
    for (std::size_t a = 0; a < spec.env.arms(); ++a) spec.arm_names.push_back("arm" + std::to_string(a));
  }
  if (spec.arm_names.size() != spec.env.arms()) fail(where + ".arm_names", "need one name per arm");
  if (spec.steps == 0) fail(where + ".steps", "must be positive");
  return spec;
}

ArmSpec parse_arm(const json& j, const std::string& where, const std::filesystem::path& base_dir) {
  check_keys(j, where,
             {"name", "kind", "k", "price", "path", "epochs", "learning_rate", "w_pos", "hidden",
              "steepness", "midpoint"});
  ArmSpec a;
  if (!j.contains("name")) fail(where, "missing 'name'");
  if (!j.contains("kind")) fail(where, "missing 'kind'");
  a.name = string(j["name"], where + ".name");
  a.kind = string(j["kind"], where + ".kind");
  if (a.name.empty() || a.name.find_first_of(",\r\n/\\") != std::string::npos || a.name == "all") {
    fail(where + ".name", "must be non-empty, not 'all', and free of , / \\ and newlines");
  }
  if (a.kind == "gnbc") {
    if (j.contains("k")) a.k = unsigned_int(j["k"], where + ".k");
    if (a.k == 0) fail(where + ".k", "must be positive");
  } else if (a.kind == "dnn") {
    if (j.contains("epochs")) a.mlp.epochs = unsigned_int(j["epochs"], where + ".epochs");
    if (j.contains("learning_rate")) a.mlp.learning_rate = number(j["learning_rate"], where + ".learning_rate");
    if (j.contains("w_pos")) a.mlp.w_pos = number(j["w_pos"], where + ".w_pos");
    if (j.contains("hidden")) {
      const auto& h = j["hidden"];
      if (!h.is_array()) fail(where + ".hidden", "expected an array of layer widths");
      a.mlp.hidden.clear();
      for (std::size_t i = 0; i < h.size(); ++i) {
        const auto w = unsigned_int(h[i], where + ".hidden[" + std::to_string(i) + "]");
        if (w == 0) fail(where + ".hidden", "layer widths must be positive");
        a.mlp.hidden.push_back(w);
      }
    }
    if (a.mlp.epochs == 0) fail(where + ".epochs", "must be positive");
    if (!(a.mlp.learning_rate > 0.0)) fail(where + ".learning_rate", "must be positive");
    if (!(a.mlp.w_pos > 0.0)) fail(where + ".w_pos", "must be positive");
  } else if (a.kind == "fixed") {
    if (!j.contains("price")) fail(where, "fixed arm needs 'price'");
    a.price = number(j["price"], where + ".price");
    if (!(a.price > 0.0)) fail(where + ".price", "must be positive");
  } else if (a.kind == "file") {
    if (!j.contains("path")) fail(where, "file arm needs 'path'");
    a.path = existing_file(j["path"], where + ".path", base_dir);
    std::ifstream in(a.path);
    try {
      (void)load_pricing_model(json::parse(in));
    } catch (const std::exception& e) {
      fail(where + ".path", std::string("cannot load model: ") + e.what());
    }
  } else if (a.kind != "gnb") {
    fail(where + ".kind", "expected gnb, gnbc, dnn, fixed or file, got '" + a.kind + "'");
  }
  if (j.contains("steepness")) a.steepness = number(j["steepness"], where + ".steepness");
  if (j.contains("midpoint")) a.midpoint = number(j["midpoint"], where + ".midpoint");
  if (a.steepness && !(*a.steepness > 0.0)) fail(where + ".steepness", "must be positive");
  return a;
}

}  // namespace

BernoulliSpec RunConfig::default_bernoulli() {
  BernoulliSpec spec;
  spec.env.theta = {0.45, 0.55, 0.60};
  spec.steps = 2000;
  spec.arm_names = {"arm0", "arm1", "arm2"};
  return spec;
}

std::vector<std::string> RunConfig::arm_names() const {
  if (const auto* b = std::get_if<BernoulliSpec>(&environment)) return b->arm_names;
  std::vector<std::string> names;
  for (const auto& a : arms) names.push_back(a.name);
  return names;
}

Policy RunConfig::resolve_policy(const json& j) const {
  const std::string where = "policy";
  check_keys(j, where, {"name", "kind", "alpha", "beta", "tau", "r_floor", "n_samples", "top_k", "feature", "cuts", "arm"});
  if (!j.contains("kind")) fail(where, "missing 'kind'");
  const std::string kind = string(j["kind"], where + ".kind");
  const auto names = arm_names();

  Policy p;
  if (kind == "thompson") {
    p.variant = ThompsonPolicy{};
  } else if (kind == "thompson_windowed") {
    WindowedThompsonPolicy w;
    if (j.contains("tau")) w.tau = unsigned_int(j["tau"], where + ".tau");
    p.variant = w;
  } else if (kind == "thompson_contextual") {
    ContextQuantizer q;
    if (j.contains("feature")) q.feature = unsigned_int(j["feature"], where + ".feature");
    if (j.contains("cuts")) q.cuts = numbers(j["cuts"], where + ".cuts");
    if (std::holds_alternative<BernoulliSpec>(environment)) {
      fail(where + ".kind", "thompson_contextual needs session features (replay or synthetic environment)");
    }
    p.variant = ContextualThompsonPolicy{q};
  } else if (kind == "thompson_cautious") {
    CautiousThompsonPolicy c;
    if (j.contains("r_floor")) c.r_floor = number(j["r_floor"], where + ".r_floor");
    p.variant = c;
  } else if (kind == "concurrent") {
    ConcurrentPolicy c;
    if (j.contains("n_samples")) c.n_samples = unsigned_int(j["n_samples"], where + ".n_samples");
    if (j.contains("top_k")) c.top_k = unsigned_int(j["top_k"], where + ".top_k");
    p.variant = c;
  } else if (kind == "uniform_random") {
    p.variant = UniformRandomPolicy{};
  } else if (kind == "fixed") {
    if (!j.contains("arm")) fail(where, "fixed policy needs 'arm'");
    FixedPolicy f;
    if (j["arm"].is_string()) {
      const auto name = j["arm"].get<std::string>();
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) fail(where + ".arm", "unknown arm '" + name + "'");
      f.arm = static_cast<std::size_t>(it - names.begin());
    } else {
      f.arm = unsigned_int(j["arm"], where + ".arm");
    }
    p.variant = f;
  } else {
    fail(where + ".kind", "unknown policy kind '" + kind + "'");
  }
  const double alpha = j.contains("alpha") ? number(j["alpha"], where + ".alpha") : 1.0;
  const double beta = j.contains("beta") ? number(j["beta"], where + ".beta") : 1.0;
  guarded(where, [&] {
    p.prior = BetaPosterior(alpha, beta);
    p.validate(names.size());
    return 0;
  });
  p.name = j.contains("name") ? string(j["name"], where + ".name") : p.kind();
  if (const auto* f = std::get_if<FixedPolicy>(&p.variant); f && !j.contains("name")) {
    p.name = "fixed_" + names[f->arm];
  }
  return p;
}

GeneratorConfig parse_generator(const json& j) { return parse_generator_at(j, "generator"); }

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "config",
             {"seed", "out", "environment", "arms", "price_grid", "price_map", "policy", "policies",
              "metrics", "compare", "generator"});
  RunConfig c;
  if (j.contains("seed")) c.seed = unsigned_int(j["seed"], "seed");
  if (j.contains("out")) c.out = string(j["out"], "out");
  if (j.contains("generator")) c.generator = parse_generator(j["generator"]);

  if (j.contains("environment")) {
    const auto& e = j["environment"];
    if (!e.is_object() || !e.contains("kind")) fail("environment", "expected an object with 'kind'");
    const std::string kind = string(e["kind"], "environment.kind");
    if (kind == "bernoulli") {
      c.environment = parse_bernoulli(e, "environment");
    } else if (kind == "replay") {
      check_keys(e, "environment", {"kind", "sessions", "train_sessions"});
      ReplaySpec r;
      if (!e.contains("sessions")) fail("environment", "replay needs 'sessions'");
      r.sessions = existing_file(e["sessions"], "environment.sessions", base_dir);
      if (e.contains("train_sessions")) {
        r.train_sessions = existing_file(e["train_sessions"], "environment.train_sessions", base_dir);
      }
      c.environment = r;
    } else if (kind == "synthetic") {
      check_keys(e, "environment", {"kind", "generator", "train_n"});
      SyntheticSpec s;
      s.generator = e.contains("generator") ? parse_generator_at(e["generator"], "environment.generator")
                                            : c.generator;
      if (e.contains("train_n")) s.train_n = unsigned_int(e["train_n"], "environment.train_n");
      if (s.train_n == 0) fail("environment.train_n", "must be positive");
      c.environment = s;
    } else {
      fail("environment.kind", "expected bernoulli, replay or synthetic, got '" + kind + "'");
    }
  }

  if (j.contains("arms")) {
    const auto& arms = j["arms"];
    if (!arms.is_array()) fail("arms", "expected an array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < arms.size(); ++i) {
      auto a = parse_arm(arms[i], "arms[" + std::to_string(i) + "]", base_dir);
      if (!seen.insert(a.name).second) fail("arms", "duplicate arm name '" + a.name + "'");
      c.arms.push_back(std::move(a));
    }
  }
  if (!std::holds_alternative<BernoulliSpec>(c.environment) && c.arms.empty()) {
    fail("arms", "replay and synthetic environments need at least one arm");
  }

  if (j.contains("price_grid")) {
    const auto& g = j["price_grid"];
    check_keys(g, "price_grid", {"min", "max", "step"});
    if (!g.contains("min") || !g.contains("max")) fail("price_grid", "needs 'min' and 'max'");
    const double step = g.contains("step") ? number(g["step"], "price_grid.step") : 0.0;
    c.grid = guarded("price_grid", [&] {
      auto grid = PriceGrid::make(number(g["min"], "price_grid.min"), number(g["max"], "price_grid.max"), step);
      grid.validate();
      if (!(grid.min_price > 0.0)) throw ParameterError("min must be positive");
      return grid;
    });
  }
  if (j.contains("price_map")) {
    const auto& m = j["price_map"];
    check_keys(m, "price_map", {"steepness", "midpoint"});
    if (m.contains("steepness")) c.steepness = number(m["steepness"], "price_map.steepness");
    if (m.contains("midpoint") && !m["midpoint"].is_null()) c.midpoint = number(m["midpoint"], "price_map.midpoint");
    if (!(c.steepness > 0.0)) fail("price_map.steepness", "must be positive");
  }

  if (j.contains("metrics")) {
    const auto& m = j["metrics"];
    check_keys(m, "metrics", {"stride", "window", "posterior_samples"});
    if (m.contains("stride")) c.metrics.stride = unsigned_int(m["stride"], "metrics.stride");
    if (m.contains("window")) c.metrics.window = unsigned_int(m["window"], "metrics.window");
    if (m.contains("posterior_samples")) {
      c.metrics.posterior_samples = unsigned_int(m["posterior_samples"], "metrics.posterior_samples");
    }
    if (c.metrics.stride == 0) fail("metrics.stride", "must be positive");
    if (c.metrics.window == 0) fail("metrics.window", "must be positive");
  }
  if (j.contains("compare")) {
    const auto& m = j["compare"];
    check_keys(m, "compare", {"n_seeds"});
    if (m.contains("n_seeds")) c.n_seeds = unsigned_int(m["n_seeds"], "compare.n_seeds");
    if (c.n_seeds == 0) fail("compare.n_seeds", "must be positive");
  }

  if (j.contains("policy")) {
    c.policy = j["policy"];
    (void)c.resolve_policy(*c.policy);
  }
  if (j.contains("policies")) {
    if (!j["policies"].is_array()) fail("policies", "expected an array");
    std::set<std::string> seen;
    for (const auto& p : j["policies"]) {
      const auto policy = c.resolve_policy(p);
      if (!seen.insert(policy.name).second) fail("policies", "duplicate policy name '" + policy.name + "'");
      c.policies.push_back(p);
    }
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

}  // namespace tsroute
