#include "tsroute/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "tsroute/config.hpp"
#include "tsroute/errors.hpp"

namespace tsroute {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
  std::uint64_t steps = 0;
  bool has_seed = false;
  bool has_out = false;
  bool has_steps = false;
};

RunConfig resolve_config(const Flags& flags) {
  RunConfig c = flags.config.empty() ? RunConfig{} : load_config(flags.config);
  if (flags.has_seed) c.seed = flags.seed;
  if (flags.has_out) c.out = flags.out;
  return c;
}

// Refuses to clobber existing outputs unless forced.
void prepare_outputs(const fs::path& dir, const std::vector<fs::path>& files, bool force) {
  if (fs::exists(dir) && !fs::is_directory(dir)) {
    throw ConfigError("output path " + dir.string() + " exists and is not a directory");
  }
  if (!force) {
    for (const auto& f : files) {
      if (fs::exists(dir / f)) {
        throw ConfigError("output file " + (dir / f).string() + " exists; pass --force to overwrite");
      }
    }
  }
  fs::create_directories(dir);
  for (const auto& f : files) {
    if (f.has_parent_path()) fs::create_directories(dir / f.parent_path());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Policy default_thompson() {
  Policy p;
  p.name = "thompson";
  p.variant = ThompsonPolicy{};
  return p;
}

// --- arms -------------------------------------------------------------------

struct ArmData {
  SessionLog training;
  std::shared_ptr<const SessionLog> evaluation;  // replay only
};

ArmData load_arm_data(const RunConfig& c) {
  ArmData data;
  if (const auto* r = std::get_if<ReplaySpec>(&c.environment)) {
    auto sessions = std::make_shared<SessionLog>(load_sessions(r->sessions));
    if (sessions->empty()) throw ConfigError(r->sessions.string() + ": no sessions");
    data.training = r->train_sessions ? load_sessions(*r->train_sessions) : *sessions;
    if (data.training.empty()) throw ConfigError("training sessions are empty");
    if (data.training.front().features.size() != sessions->front().features.size()) {
      throw ConfigError("training and replay sessions have different feature counts");
    }
    data.evaluation = std::move(sessions);
  } else if (const auto* s = std::get_if<SyntheticSpec>(&c.environment)) {
    GeneratorConfig g = s->generator;
    g.n = s->train_n;
    g.seed = derive_seed(c.seed, "training-sessions");
    g.changepoint.reset();
    g.wtp_after.reset();
    data.training = generate_synthetic_sessions(g);
  }
  return data;
}

PriceGrid arm_grid(const RunConfig& c, const SessionLog& training) {
  if (c.grid) return *c.grid;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& s : training) {
    lo = std::min(lo, s.historical_price);
    hi = std::max(hi, s.historical_price);
  }
  if (!(hi > lo)) hi = 2.0 * lo;
  return PriceGrid::make(lo, hi);
}

std::vector<NamedArm> build_arms(const RunConfig& c, const SessionLog& training) {
  const PriceGrid grid = arm_grid(c, training);
  std::vector<NamedArm> arms;
  for (const auto& spec : c.arms) {
    LogisticPriceMap map;
    map.p_min = grid.min_price;
    map.p_max = grid.max_price;
    map.steepness = spec.steepness.value_or(c.steepness);
    map.midpoint = spec.midpoint ? *spec.midpoint
                                 : c.midpoint.value_or(std::numeric_limits<double>::quiet_NaN());
    Rng rng = make_stream(derive_seed(c.seed, "arm-training"), spec.name);

    std::shared_ptr<const PricingModel> model;
    if (spec.kind == "gnb") {
      auto arm = std::make_shared<GnbArm>(map, grid);
      arm->fit(training);
      model = arm;
    } else if (spec.kind == "gnbc") {
      auto arm = std::make_shared<GnbcArm>(spec.k, map, grid);
      arm->fit(training, rng);
      model = arm;
    } else if (spec.kind == "dnn") {
      auto arm = std::make_shared<DnnArm>(spec.mlp, grid);
      arm->fit(training, rng);
      model = arm;
    } else if (spec.kind == "fixed") {
      model = std::make_shared<FixedPriceArm>(spec.price);
    } else {
      std::ifstream in(spec.path);
      model = load_pricing_model(json::parse(in));
    }
    arms.push_back({spec.name, std::move(model)});
  }
  return arms;
}

std::vector<fs::path> model_files(const RunConfig& c) {
  std::vector<fs::path> files;
  for (const auto& a : c.arms) files.push_back(fs::path("models") / (a.name + ".json"));
  return files;
}

void save_models(const fs::path& dir, const std::vector<NamedArm>& arms) {
  for (const auto& a : arms) write_file(dir / "models" / (a.name + ".json"), dump(a.model->to_json()));
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// --- commands ---------------------------------------------------------------

int cmd_synth_bench(const Flags& flags, std::ostream& out) {
  RunConfig c = resolve_config(flags);
  auto* spec = std::get_if<BernoulliSpec>(&c.environment);
  if (!spec) throw ConfigError("synth-bench needs a bernoulli environment");
  if (flags.has_steps) {
    if (flags.steps == 0) throw ConfigError("--steps must be positive");
    spec->steps = flags.steps;
  }
  const Policy policy = c.policy ? c.resolve_policy(*c.policy) : default_thompson();
  prepare_outputs(c.out, {"table.csv", "records.csv", "series.csv", "summary.json"}, flags.force);

  const RunResult result = run_bernoulli_bench(policy, spec->env, spec->steps, c.seed, c.metrics, spec->arm_names);

  std::ostringstream table;
  table << "arm,true_theta,inferred_mean,pulls\n";
  out << std::left << std::setw(12) << "arm" << std::right << std::setw(12) << "true_theta" << std::setw(16)
      << "inferred_mean" << std::setw(10) << "pulls" << '\n';
  for (std::size_t a = 0; a < spec->env.arms(); ++a) {
    const double theta = spec->env.rate(a, spec->steps - 1);
    std::optional<double> mean;
    if (result.final_state) mean = posterior_mean(result.final_state->posterior(a));
    table << spec->arm_names[a] << ',' << format_double(theta) << ','
          << (mean ? format_double(*mean) : std::string("NA")) << ',' << result.pull_counts[a] << '\n';
    out << std::left << std::setw(12) << spec->arm_names[a] << std::right << std::setw(12) << fixed(theta, 4)
        << std::setw(16) << (mean ? fixed(*mean, 4) : std::string("NA")) << std::setw(10)
        << result.pull_counts[a] << '\n';
  }

  std::ostringstream records, series;
  write_records_csv(result, records);
  write_series_csv(metric_series(result, c.metrics), series);
  write_file(c.out / "table.csv", table.str());
  write_file(c.out / "records.csv", records.str());
  write_file(c.out / "series.csv", series.str());
  json summary = run_summary_json(result);
  summary["seed"] = c.seed;
  write_file(c.out / "summary.json", dump(summary));
  return 0;
}

int cmd_simulate(const Flags& flags, std::ostream& out) {
  RunConfig c = resolve_config(flags);
  const Policy policy = c.policy ? c.resolve_policy(*c.policy) : default_thompson();
  std::vector<fs::path> files{"records.csv", "series.csv", "summary.json"};

  if (const auto* b = std::get_if<BernoulliSpec>(&c.environment)) {
    prepare_outputs(c.out, files, flags.force);
    const RunResult result = run_bernoulli_bench(policy, b->env, b->steps, c.seed, c.metrics, b->arm_names);
    std::ostringstream records, series;
    write_records_csv(result, records);
    write_series_csv(metric_series(result, c.metrics), series);
    write_file(c.out / "records.csv", records.str());
    write_file(c.out / "series.csv", series.str());
    json summary = run_summary_json(result);
    summary["seed"] = c.seed;
    write_file(c.out / "summary.json", dump(summary));
    out << "policy " << policy.name << ": " << result.records.size() << " steps, revenue/offer "
        << fixed(summary["revenue_per_offer"].get<double>(), 4) << ", conversion "
        << fixed(summary["conversion_score"].get<double>(), 2) << "%\n";
    return 0;
  }

  ArmData data = load_arm_data(c);
  SessionLog sessions;
  if (data.evaluation) {
    sessions = *data.evaluation;
  } else {
    GeneratorConfig g = std::get<SyntheticSpec>(c.environment).generator;
    g.seed = derive_seed(c.seed, "synthetic-sessions");
    sessions = generate_synthetic_sessions(g);
  }
  for (auto& f : model_files(c)) files.push_back(f);
  prepare_outputs(c.out, files, flags.force);

  const auto arms = build_arms(c, data.training);
  save_models(c.out, arms);

  const RunResult result = run_experiment(policy, sessions, arms, WtpOracle{}, c.seed, c.metrics);
  std::ostringstream records, series;
  write_records_csv(result, records);
  write_series_csv(metric_series(result, c.metrics), series);
  write_file(c.out / "records.csv", records.str());
  write_file(c.out / "series.csv", series.str());
  json summary = run_summary_json(result);
  summary["seed"] = c.seed;
  write_file(c.out / "summary.json", dump(summary));

  out << "policy " << policy.name << ": " << result.records.size() << " sessions, revenue/offer "
      << fixed(summary["revenue_per_offer"].get<double>(), 4) << ", conversion "
      << fixed(summary["conversion_score"].get<double>(), 2) << "%\n";
  for (std::size_t a = 0; a < arms.size(); ++a) {
    out << "  " << std::left << std::setw(12) << arms[a].name << std::right << std::setw(8)
        << result.pull_counts[a] << " pulls\n";
  }
  return 0;
}

std::vector<Policy> compare_policy_set(const RunConfig& c) {
  std::vector<Policy> policies;
  if (!c.policies.empty()) {
    for (const auto& j : c.policies) policies.push_back(c.resolve_policy(j));
    return policies;
  }
  const auto names = c.arm_names();
  for (std::size_t a = 0; a < names.size(); ++a) {
    policies.push_back({"fixed_" + names[a], FixedPolicy{a}, {}});
  }
  policies.push_back({"random", UniformRandomPolicy{}, {}});
  policies.push_back(default_thompson());
  return policies;
}

int cmd_compare(const Flags& flags, std::ostream& out) {
  RunConfig c = resolve_config(flags);
  const auto policies = compare_policy_set(c);
  std::vector<fs::path> files{"summary.json", "comparison.csv"};

  EnvironmentSetup setup;
  if (const auto* b = std::get_if<BernoulliSpec>(&c.environment)) {
    prepare_outputs(c.out, files, flags.force);
    setup = BernoulliSetup{b->env, b->steps, b->arm_names};
  } else {
    ArmData data = load_arm_data(c);
    for (auto& f : model_files(c)) files.push_back(f);
    prepare_outputs(c.out, files, flags.force);
    auto arms = build_arms(c, data.training);
    save_models(c.out, arms);
    if (data.evaluation) {
      setup = ReplaySetup{data.evaluation, std::move(arms)};
    } else {
      setup = SyntheticSetup{std::get<SyntheticSpec>(c.environment).generator, std::move(arms)};
    }
  }

  const ComparisonTable table = compare_policies(policies, setup, c.n_seeds, c.seed, c.metrics);

  std::ostringstream csv;
  csv << "policy,kind,revenue_per_offer_mean,revenue_per_offer_sd,conversion_mean,conversion_sd\n";
  out << std::left << std::setw(24) << "policy" << std::right << std::setw(14) << "rev/offer" << std::setw(12)
      << "sd" << std::setw(14) << "conversion%" << std::setw(12) << "sd" << '\n';
  for (const auto& p : table.policies) {
    csv << p.name << ',' << p.kind << ',' << format_double(p.revenue_per_offer.mean) << ','
        << format_double(p.revenue_per_offer.stddev) << ',' << format_double(p.conversion.mean) << ','
        << format_double(p.conversion.stddev) << '\n';
    out << std::left << std::setw(24) << p.name << std::right << std::setw(14)
        << fixed(p.revenue_per_offer.mean, 4) << std::setw(12) << fixed(p.revenue_per_offer.stddev, 4)
        << std::setw(14) << fixed(p.conversion.mean, 3) << std::setw(12) << fixed(p.conversion.stddev, 3)
        << '\n';
  }
  for (const char* key : {"mab_over_random_revenue", "mab_over_random_conversion"}) {
    if (const auto it = table.ratios.find(key); it != table.ratios.end()) {
      out << key << " = " << fixed(it->second, 4) << '\n';
    }
  }
  write_file(c.out / "summary.json", dump(table.to_json()));
  write_file(c.out / "comparison.csv", csv.str());
  return 0;
}

int cmd_gen_data(const Flags& flags, std::ostream& out) {
  RunConfig c = resolve_config(flags);
  GeneratorConfig g = c.generator;
  if (const auto* s = std::get_if<SyntheticSpec>(&c.environment)) g = s->generator;
  g.seed = c.seed;
  prepare_outputs(c.out, {"sessions.csv"}, flags.force);
  const SessionLog log = generate_synthetic_sessions(g);
  std::ostringstream csv;
  write_sessions(log, csv);
  write_file(c.out / "sessions.csv", csv.str());
  std::size_t buys = 0;
  for (const auto& s : log) buys += s.y;
  out << "wrote " << log.size() << " sessions (" << buys << " purchases) to "
      << (c.out / "sessions.csv").string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thompson-sampling router over pricing models: simulation and comparison tool", "tsroute"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Flags flags;
  app.add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", flags.seed, "base seed (overrides the config)");
  auto* out_opt = app.add_option("--out", flags.out, "output directory (overrides the config)");
  app.add_flag("--force", flags.force, "overwrite existing output files");

  auto* synth = app.add_subcommand("synth-bench", "Bernoulli-arm convergence run (true vs inferred rates)");
  auto* steps_opt = synth->add_option("--steps", flags.steps, "number of steps (overrides the config)");
  auto* simulate = app.add_subcommand("simulate", "train or load arms and run one policy on a session stream");
  auto* compare = app.add_subcommand("compare", "compare fixed, random and bandit policies over seeds");
  auto* gen = app.add_subcommand("gen-data", "write a synthetic session log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) {
      err << app.help();
      return 2;
    }
    return 0;
  }
  flags.has_seed = seed_opt->count() > 0;
  flags.has_out = out_opt->count() > 0;
  flags.has_steps = steps_opt->count() > 0;

  try {
    if (synth->parsed()) return cmd_synth_bench(flags, out);
    if (simulate->parsed()) return cmd_simulate(flags, out);
    if (compare->parsed()) return cmd_compare(flags, out);
    if (gen->parsed()) return cmd_gen_data(flags, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ParameterError& e) {
    err << "invalid parameter: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace tsroute
