#include "tsroute/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tsroute/errors.hpp"

namespace tsroute {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<std::string> default_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("arm" + std::to_string(i));
  return names;
}

}  // namespace

// --- Policy -----------------------------------------------------------------

std::string Policy::kind() const {
  return std::visit(overloaded{
                        [](const ThompsonPolicy&) { return std::string("thompson"); },
                        [](const WindowedThompsonPolicy&) { return std::string("thompson_windowed"); },
                        [](const ContextualThompsonPolicy&) { return std::string("thompson_contextual"); },
                        [](const CautiousThompsonPolicy&) { return std::string("thompson_cautious"); },
                        [](const ConcurrentPolicy&) { return std::string("concurrent"); },
                        [](const UniformRandomPolicy&) { return std::string("uniform_random"); },
                        [](const FixedPolicy&) { return std::string("fixed"); },
                    },
                    variant);
}

bool Policy::learns() const {
  return !std::holds_alternative<UniformRandomPolicy>(variant) &&
         !std::holds_alternative<FixedPolicy>(variant);
}

void Policy::validate(std::size_t n_arms) const {
  if (n_arms == 0) throw ParameterError("policy '" + name + "': no arms");
  std::visit(overloaded{
                 [](const ThompsonPolicy&) {},
                 [](const WindowedThompsonPolicy&) {},
                 [](const ContextualThompsonPolicy& p) {
                   if (!std::is_sorted(p.quantizer.cuts.begin(), p.quantizer.cuts.end())) {
                     throw ParameterError("context quantizer cuts must be ascending");
                   }
                 },
                 [&](const CautiousThompsonPolicy& p) {
                   if (!(p.r_floor >= 0.0 && p.r_floor <= 1.0)) {
                     throw ParameterError("policy '" + name + "': r_floor must lie in [0, 1]");
                   }
                 },
                 [&](const ConcurrentPolicy& p) {
                   if (p.n_samples == 0) throw ParameterError("policy '" + name + "': n_samples must be >= 1");
                 },
                 [](const UniformRandomPolicy&) {},
                 [&](const FixedPolicy& p) {
                   if (p.arm >= n_arms) {
                     throw ParameterError("policy '" + name + "': fixed arm " + std::to_string(p.arm) +
                                          " out of range");
                   }
                 },
             },
             variant);
}

double RunResult::total_revenue() const {
  return std::accumulate(arm_revenue.begin(), arm_revenue.end(), 0.0);
}

// --- the decision loop ------------------------------------------------------

namespace {

struct Decision {
  std::size_t arm = 0;
  std::vector<double> weights;  // non-empty only for concurrent offers
  ContextBucket context{};
  bool fallback = false;
};

struct Offer {
  double price = 0.0;
  int response = 0;
  int reward = 0;
};

// Owns the per-run learning state of one policy.
class Router {
 public:
  Router(const Policy& policy, const std::vector<std::string>& names) : policy_(policy), n_(names.size()) {
    std::visit(overloaded{
                   [&](const WindowedThompsonPolicy& p) { windowed_.emplace(names, p.tau, policy.prior); },
                   [&](const ContextualThompsonPolicy&) { contextual_.emplace(names, policy.prior); },
                   [&](const UniformRandomPolicy&) {},
                   [&](const FixedPolicy&) {},
                   [&](const auto&) { bandit_.emplace(names, policy.prior); },
               },
               policy.variant);
  }

  Decision decide(std::span<const double> features, Rng& rng) {
    Decision d;
    std::visit(overloaded{
                   [&](const ThompsonPolicy&) { d.arm = select_arm(*bandit_, rng).ordinal; },
                   [&](const WindowedThompsonPolicy&) { d.arm = windowed_->select(rng).ordinal; },
                   [&](const ContextualThompsonPolicy& p) {
                     d.context = p.quantizer(features);
                     d.arm = select_arm_contextual(*contextual_, d.context, rng).ordinal;
                   },
                   [&](const CautiousThompsonPolicy& p) {
                     const auto choice = select_arm_cautious(*bandit_, p.r_floor, rng);
                     d.arm = choice.arm.ordinal;
                     d.fallback = choice.fallback;
                   },
                   [&](const ConcurrentPolicy& p) {
                     const auto w = concurrence_weights(*bandit_, rng, p.n_samples, p.top_k);
                     d.weights.reserve(n_);
                     for (const auto& [arm, weight] : w) d.weights.push_back(weight);
                     d.arm = argmax_lowest(d.weights);
                   },
                   [&](const UniformRandomPolicy&) {
                     d.arm = std::uniform_int_distribution<std::size_t>(0, n_ - 1)(rng);
                   },
                   [&](const FixedPolicy& p) { d.arm = p.arm; },
               },
               policy_.variant);
    return d;
  }

  void learn(const Decision& d, int reward) {
    std::visit(overloaded{
                   [&](const ThompsonPolicy&) { bandit_->update(d.arm, reward); },
                   [&](const CautiousThompsonPolicy&) { bandit_->update(d.arm, reward); },
                   [&](const WindowedThompsonPolicy&) { windowed_->update(d.arm, reward); },
                   [&](const ContextualThompsonPolicy&) {
                     contextual_->update(d.context, ArmId{d.arm, {}}, reward);
                   },
                   [&](const ConcurrentPolicy&) {
                     for (std::size_t a = 0; a < n_; ++a) {
                       if (d.weights[a] > 0.0) bandit_->update(a, reward);
                     }
                   },
                   [](const UniformRandomPolicy&) {},
                   [](const FixedPolicy&) {},
               },
               policy_.variant);
  }

  // Posterior used for the posterior_assignment series, when one exists.
  std::optional<BanditState> state() const {
    if (bandit_) return *bandit_;
    if (windowed_) return windowed_->state();
    return std::nullopt;
  }

 private:
  const Policy& policy_;
  std::size_t n_;
  std::optional<BanditState> bandit_;
  std::optional<WindowedBandit> windowed_;
  std::optional<ContextualState> contextual_;
};

// Env must provide features(t) and offer(t, decision).
template <class Env>
RunResult run_loop(const Policy& policy, const std::vector<std::string>& names, std::uint64_t steps,
                   std::uint64_t seed, const MetricOptions& options, Env& env) {
  policy.validate(names.size());
  if (options.stride == 0 || options.window == 0) {
    throw ParameterError("metric stride and window must be >= 1");
  }

  RunResult result;
  result.policy = policy.name;
  result.arm_names = names;
  result.pull_counts.assign(names.size(), 0);
  result.arm_revenue.assign(names.size(), 0.0);
  result.records.reserve(steps);

  Router router(policy, names);
  Rng selection = make_stream(seed, "selection");
  Rng series_rng = make_stream(seed, "posterior-series");

  for (std::uint64_t t = 0; t < steps; ++t) {
    try {
      const Decision d = router.decide(env.features(t), selection);
      if (d.fallback) result.events.push_back({t, "caution_fallback"});
      const Offer offer = env.offer(t, d);
      router.learn(d, offer.reward);

      result.records.push_back({t, d.arm, offer.price, offer.response, offer.reward});
      ++result.pull_counts[d.arm];
      result.arm_revenue[d.arm] += offer.price * offer.reward;

      const std::uint64_t done = t + 1;
      if (options.posterior_samples > 0 && (done % options.stride == 0 || done == steps)) {
        if (const auto state = router.state()) {
          const auto w = concurrence_weights(*state, series_rng, options.posterior_samples);
          for (const auto& [arm, weight] : w) {
            result.posterior_series.push_back({done, "posterior_assignment", names[arm.ordinal], weight});
          }
        }
      }
    } catch (const StepError&) {
      throw;
    } catch (const std::exception& e) {
      throw StepError(e.what(), t);
    }
  }
  result.final_state = router.state();
  return result;
}

class ReplayEnv {
 public:
  ReplayEnv(const SessionLog& sessions, const PriceTable& prices, const WtpOracle& oracle)
      : sessions_(sessions), prices_(prices), oracle_(oracle) {}

  std::span<const double> features(std::uint64_t t) const { return sessions_[t].features; }

  Offer offer(std::uint64_t t, const Decision& d) const {
    const Session& s = sessions_[t];
    double price = 0.0;
    if (d.weights.empty()) {
      price = prices_.at(t, d.arm);
    } else {
      ArmPrices p;
      ConcurrenceWeights w;
      for (std::size_t a = 0; a < prices_.arms; ++a) {
        p.emplace(ArmId{a, {}}, prices_.at(t, a));
        w.emplace(ArmId{a, {}}, d.weights[a]);
      }
      price = concurrent_price(p, w);
    }
    return {price, s.y, oracle_(s, price)};
  }

 private:
  const SessionLog& sessions_;
  const PriceTable& prices_;
  const WtpOracle& oracle_;
};

class BernoulliRun {
 public:
  BernoulliRun(const BernoulliEnv& env, std::uint64_t seed)
      : env_(env), rng_(make_stream(seed, "environment")) {}

  std::span<const double> features(std::uint64_t) const { return {}; }

  Offer offer(std::uint64_t t, const Decision& d) {
    if (d.weights.empty()) {
      const int r = bernoulli_step(env_, d.arm, t, rng_);
      return {env_.price(d.arm), r, r};
    }
    double rate = 0.0;
    ArmPrices p;
    ConcurrenceWeights w;
    for (std::size_t a = 0; a < env_.arms(); ++a) {
      rate += d.weights[a] * env_.rate(a, t);
      p.emplace(ArmId{a, {}}, env_.price(a));
      w.emplace(ArmId{a, {}}, d.weights[a]);
    }
    const int r = uniform01(rng_) < rate ? 1 : 0;
    return {concurrent_price(p, w), r, r};
  }

 private:
  const BernoulliEnv& env_;
  Rng rng_;
};

}  // namespace

PriceTable price_sessions(const SessionLog& sessions, std::span<const NamedArm> arms, Execution exec) {
  PriceTable table;
  table.sessions = sessions.size();
  table.arms = arms.size();
  for (const auto& a : arms) {
    if (!a.model) throw std::invalid_argument("arm '" + a.name + "' has no model");
    if (!a.model->trained()) throw std::logic_error("arm '" + a.name + "' is not trained");
  }
  auto rows = replicate(exec, sessions.size(), [&](std::size_t i) {
    std::vector<double> row(arms.size());
    for (std::size_t a = 0; a < arms.size(); ++a) {
      try {
        row[a] = arms[a].model->price(sessions[i]);
      } catch (const std::exception& e) {
        throw StepError("arm '" + arms[a].name + "': " + e.what(), i);
      }
    }
    return row;
  });
  table.prices.reserve(sessions.size() * arms.size());
  for (const auto& row : rows) table.prices.insert(table.prices.end(), row.begin(), row.end());
  return table;
}

RunResult run_experiment(const Policy& policy, const SessionLog& sessions, const PriceTable& prices,
                         const std::vector<std::string>& arm_names, const WtpOracle& oracle,
                         std::uint64_t seed, const MetricOptions& options) {
  if (sessions.empty()) throw std::invalid_argument("replay needs at least one session");
  if (prices.sessions != sessions.size() || prices.arms != arm_names.size()) {
    throw std::invalid_argument("price table does not match sessions x arms");
  }
  ReplayEnv env(sessions, prices, oracle);
  return run_loop(policy, arm_names, sessions.size(), seed, options, env);
}

RunResult run_experiment(const Policy& policy, const SessionLog& sessions,
                         std::span<const NamedArm> arms, const WtpOracle& oracle, std::uint64_t seed,
                         const MetricOptions& options) {
  if (arms.empty()) throw std::invalid_argument("replay needs at least one arm");
  if (sessions.empty()) throw std::invalid_argument("replay needs at least one session");
  std::vector<std::string> names;
  for (const auto& a : arms) names.push_back(a.name);
  const PriceTable table = price_sessions(sessions, arms, Execution::serial);
  return run_experiment(policy, sessions, table, names, oracle, seed, options);
}

RunResult run_bernoulli_bench(const Policy& policy, const BernoulliEnv& env, std::uint64_t steps,
                              std::uint64_t seed, const MetricOptions& options,
                              const std::vector<std::string>& arm_names) {
  env.validate();
  if (steps == 0) throw ParameterError("Bernoulli bench needs steps >= 1");
  if (std::holds_alternative<ContextualThompsonPolicy>(policy.variant)) {
    throw ParameterError("contextual policy needs session features; not available in the Bernoulli bench");
  }
  const auto names = arm_names.empty() ? default_names(env.arms()) : arm_names;
  if (names.size() != env.arms()) throw ParameterError("arm name count does not match the environment");
  BernoulliRun run(env, seed);
  return run_loop(policy, names, steps, seed, options, run);
}

// --- metrics ----------------------------------------------------------------

double conversion_score(std::span<const OutcomeRecord> records) {
  if (records.empty()) throw std::invalid_argument("conversion score of an empty run");
  double hits = 0.0;
  for (const auto& r : records) hits += r.reward;
  return 100.0 * hits / static_cast<double>(records.size());
}

double revenue_per_offer(std::span<const OutcomeRecord> records) {
  if (records.empty()) throw std::invalid_argument("revenue per offer of an empty run");
  double revenue = 0.0;
  for (const auto& r : records) revenue += r.offered_price * r.reward;
  return revenue / static_cast<double>(records.size());
}

std::vector<std::uint64_t> sample_steps(std::size_t n_records, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("stride must be >= 1");
  std::vector<std::uint64_t> out;
  for (std::size_t k = stride; k <= n_records; k += stride) out.push_back(k);
  if (n_records > 0 && (out.empty() || out.back() != n_records)) out.push_back(n_records);
  return out;
}

namespace {

// Walks a trailing window over the records and calls emit(step_index) at
// each sample point with the window's per-arm pull and success counts.
template <class Emit>
void sweep_window(std::span<const OutcomeRecord> records, std::size_t n_arms, std::size_t window,
                  const std::vector<std::uint64_t>& steps, Emit&& emit) {
  if (window == 0) throw std::invalid_argument("window must be >= 1");
  std::vector<std::size_t> pulls(n_arms, 0);
  std::vector<std::size_t> hits(n_arms, 0);
  std::size_t next = 0;
  for (std::size_t i = 0; i < records.size() && next < steps.size(); ++i) {
    const auto& r = records[i];
    if (r.arm >= n_arms) throw std::out_of_range("record arm outside the arm set");
    ++pulls[r.arm];
    hits[r.arm] += static_cast<std::size_t>(r.reward);
    if (i >= window) {
      const auto& old = records[i - window];
      --pulls[old.arm];
      hits[old.arm] -= static_cast<std::size_t>(old.reward);
    }
    if (i + 1 == steps[next]) {
      emit(next, pulls, hits, std::min(window, i + 1));
      ++next;
    }
  }
}

}  // namespace

ArmSeries assignment_probability_series(std::span<const OutcomeRecord> records, std::size_t n_arms,
                                        std::size_t window, std::size_t stride) {
  ArmSeries s;
  s.steps = sample_steps(records.size(), stride);
  s.values.assign(n_arms, std::vector<std::optional<double>>(s.steps.size()));
  sweep_window(records, n_arms, window, s.steps,
               [&](std::size_t k, const auto& pulls, const auto&, std::size_t in_window) {
                 for (std::size_t a = 0; a < n_arms; ++a) {
                   s.values[a][k] = static_cast<double>(pulls[a]) / static_cast<double>(in_window);
                 }
               });
  return s;
}

ArmSeries per_arm_conversion_series(std::span<const OutcomeRecord> records, std::size_t n_arms,
                                    std::size_t window, std::size_t stride) {
  ArmSeries s;
  s.steps = sample_steps(records.size(), stride);
  s.values.assign(n_arms, std::vector<std::optional<double>>(s.steps.size()));
  sweep_window(records, n_arms, window, s.steps,
               [&](std::size_t k, const auto& pulls, const auto& hits, std::size_t) {
                 for (std::size_t a = 0; a < n_arms; ++a) {
                   if (pulls[a] > 0) {
                     s.values[a][k] = static_cast<double>(hits[a]) / static_cast<double>(pulls[a]);
                   }
                 }
               });
  return s;
}

std::vector<SeriesPoint> metric_series(const RunResult& result, const MetricOptions& options) {
  std::vector<SeriesPoint> out;
  const std::size_t n_arms = result.arm_names.size();
  auto flatten = [&](const ArmSeries& s, const std::string& metric) {
    for (std::size_t k = 0; k < s.steps.size(); ++k) {
      for (std::size_t a = 0; a < n_arms; ++a) {
        out.push_back({s.steps[k], metric, result.arm_names[a], s.values[a][k]});
      }
    }
  };
  flatten(assignment_probability_series(result.records, n_arms, options.window, options.stride),
          "assignment");
  out.insert(out.end(), result.posterior_series.begin(), result.posterior_series.end());
  flatten(per_arm_conversion_series(result.records, n_arms, options.window, options.stride),
          "conversion");

  const auto steps = sample_steps(result.records.size(), options.stride);
  double hits = 0.0;
  double revenue = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < result.records.size() && next < steps.size(); ++i) {
    hits += result.records[i].reward;
    revenue += result.records[i].offered_price * result.records[i].reward;
    if (i + 1 == steps[next]) {
      const double n = static_cast<double>(i + 1);
      out.push_back({steps[next], "conversion_score_cumulative", "all", 100.0 * hits / n});
      out.push_back({steps[next], "revenue_per_offer_cumulative", "all", revenue / n});
      ++next;
    }
  }
  return out;
}

// --- comparison -------------------------------------------------------------

Stats summarize(std::span<const double> values) {
  Stats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t i) {
  return derive_seed(base_seed, "replication-" + std::to_string(i));
}

namespace {

struct RunDigest {
  double revenue = 0.0;
  double conversion = 0.0;
  std::vector<double> share;
};

RunDigest digest(const RunResult& r) {
  RunDigest d{revenue_per_offer(r.records), conversion_score(r.records), {}};
  for (auto c : r.pull_counts) d.share.push_back(static_cast<double>(c) / static_cast<double>(r.records.size()));
  return d;
}

double ratio(double a, double b) {
  return b != 0.0 ? a / b : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ComparisonTable compare_policies(const std::vector<Policy>& policies, const EnvironmentSetup& env,
                                 std::size_t n_seeds, std::uint64_t base_seed,
                                 const MetricOptions& options, Execution exec) {
  if (policies.size() < 2) throw ParameterError("comparison needs at least two policies");
  if (n_seeds == 0) throw ParameterError("comparison needs at least one seed");
  MetricOptions run_options = options;
  run_options.posterior_samples = 0;

  ComparisonTable table;
  table.base_seed = base_seed;
  for (std::size_t i = 0; i < n_seeds; ++i) table.seeds.push_back(replication_seed(base_seed, i));

  std::optional<PriceTable> shared_prices;
  std::vector<std::string> names;
  std::visit(overloaded{
                 [&](const BernoulliSetup& b) {
                   b.env.validate();
                   names = b.arm_names.empty() ? default_names(b.env.arms()) : b.arm_names;
                 },
                 [&](const ReplaySetup& r) {
                   if (!r.sessions || r.sessions->empty()) throw ParameterError("replay needs sessions");
                   for (const auto& a : r.arms) names.push_back(a.name);
                   shared_prices = price_sessions(*r.sessions, r.arms, exec);
                 },
                 [&](const SyntheticSetup& s) {
                   s.generator.validate();
                   for (const auto& a : s.arms) names.push_back(a.name);
                 },
             },
             env);
  for (const auto& p : policies) p.validate(names.size());
  table.arm_names = names;

  const WtpOracle oracle;
  auto per_seed = replicate(exec, n_seeds, [&](std::size_t i) {
    const std::uint64_t seed = table.seeds[i];
    std::vector<RunDigest> out;
    std::visit(overloaded{
                   [&](const BernoulliSetup& b) {
                     for (const auto& p : policies) {
                       out.push_back(digest(run_bernoulli_bench(p, b.env, b.steps, seed, run_options, names)));
                     }
                   },
                   [&](const ReplaySetup& r) {
                     for (const auto& p : policies) {
                       out.push_back(digest(run_experiment(p, *r.sessions, *shared_prices, names, oracle,
                                                           seed, run_options)));
                     }
                   },
                   [&](const SyntheticSetup& s) {
                     GeneratorConfig g = s.generator;
                     g.seed = derive_seed(seed, "synthetic-sessions");
                     const SessionLog sessions = generate_synthetic_sessions(g);
                     const PriceTable prices = price_sessions(sessions, s.arms, Execution::serial);
                     for (const auto& p : policies) {
                       out.push_back(digest(run_experiment(p, sessions, prices, names, oracle, seed, run_options)));
                     }
                   },
               },
               env);
    return out;
  });

  for (std::size_t p = 0; p < policies.size(); ++p) {
    PolicySummary s;
    s.name = policies[p].name;
    s.kind = policies[p].kind();
    s.pull_share.assign(names.size(), 0.0);
    for (std::size_t i = 0; i < n_seeds; ++i) {
      const auto& d = per_seed[i][p];
      s.per_seed_revenue.push_back(d.revenue);
      s.per_seed_conversion.push_back(d.conversion);
      for (std::size_t a = 0; a < names.size(); ++a) s.pull_share[a] += d.share[a] / static_cast<double>(n_seeds);
    }
    s.revenue_per_offer = summarize(s.per_seed_revenue);
    s.conversion = summarize(s.per_seed_conversion);
    table.policies.push_back(std::move(s));
  }

  for (const auto& a : table.policies) {
    for (const auto& b : table.policies) {
      if (&a == &b) continue;
      table.ratios[a.name + "_over_" + b.name + "_revenue"] =
          ratio(a.revenue_per_offer.mean, b.revenue_per_offer.mean);
      table.ratios[a.name + "_over_" + b.name + "_conversion"] = ratio(a.conversion.mean, b.conversion.mean);
    }
  }
  const PolicySummary* mab = nullptr;
  const PolicySummary* random = nullptr;
  for (const auto& s : table.policies) {
    if (!mab && s.kind == "thompson") mab = &s;
    if (!random && s.kind == "uniform_random") random = &s;
  }
  if (!mab) {
    for (std::size_t p = 0; p < policies.size(); ++p) {
      if (policies[p].learns()) {
        mab = &table.policies[p];
        break;
      }
    }
  }
  if (mab && random) {
    table.ratios["mab_over_random_revenue"] = ratio(mab->revenue_per_offer.mean, random->revenue_per_offer.mean);
    table.ratios["mab_over_random_conversion"] = ratio(mab->conversion.mean, random->conversion.mean);
  }
  return table;
}

nlohmann::json ComparisonTable::to_json() const {
  nlohmann::json j;
  j["base_seed"] = base_seed;
  j["n_seeds"] = seeds.size();
  j["arms"] = arm_names;
  nlohmann::json ps = nlohmann::json::array();
  for (const auto& p : policies) {
    nlohmann::json share = nlohmann::json::object();
    for (std::size_t a = 0; a < arm_names.size(); ++a) share[arm_names[a]] = p.pull_share[a];
    ps.push_back({{"name", p.name},
                  {"kind", p.kind},
                  {"revenue_per_offer", {{"mean", p.revenue_per_offer.mean}, {"std", p.revenue_per_offer.stddev}}},
                  {"conversion_score", {{"mean", p.conversion.mean}, {"std", p.conversion.stddev}}},
                  {"pull_share", share}});
  }
  j["policies"] = ps;
  nlohmann::json pairwise = nlohmann::json::object();
  for (const auto& [k, v] : ratios) {
    nlohmann::json value = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    if (k.rfind("mab_over_random_", 0) == 0) {
      j[k] = value;
    } else {
      pairwise[k] = value;
    }
  }
  j["pairwise_ratios"] = pairwise;
  return j;
}

}  // namespace tsroute
