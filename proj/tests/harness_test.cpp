#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "tsroute/errors.hpp"
#include "tsroute/harness.hpp"

namespace tsroute {
namespace {

Policy thompson() { return {"thompson", ThompsonPolicy{}, {}}; }
Policy random_policy() { return {"random", UniformRandomPolicy{}, {}}; }
Policy fixed(std::size_t arm) { return {"fixed" + std::to_string(arm), FixedPolicy{arm}, {}}; }

MetricOptions quiet() {
  MetricOptions o;
  o.posterior_samples = 0;
  return o;
}

// Every session purchased at 10; feature 0 alternates sign.
SessionLog flat_sessions(std::size_t n) {
  SessionLog log;
  for (std::size_t i = 0; i < n; ++i) {
    log.push_back({"s" + std::to_string(i), {i % 2 ? 1.0 : -1.0}, 10.0, i % 3 == 0 ? 0 : 1});
  }
  return log;
}

std::vector<NamedArm> fixed_arms(std::vector<double> prices) {
  std::vector<NamedArm> arms;
  for (std::size_t a = 0; a < prices.size(); ++a) {
    arms.push_back({"p" + std::to_string(a), std::make_shared<FixedPriceArm>(prices[a])});
  }
  return arms;
}

class ThrowingArm final : public PricingModel {
 public:
  std::string_view kind() const override { return "test"; }
  bool trained() const override { return true; }
  double price(const Session& s) const override {
    if (s.id == "s7") throw std::runtime_error("no price");
    return 5.0;
  }
  nlohmann::json to_json() const override { return {}; }
};

TEST(Bench, FixedPolicyPullsOnlyItsArm) {
  BernoulliEnv env{{0.3, 0.6, 0.5}, {}, {}, {}};
  const auto r = run_bernoulli_bench(fixed(0), env, 500, 1, quiet());
  EXPECT_EQ(r.pull_counts, (std::vector<std::size_t>{500, 0, 0}));
  const auto series = assignment_probability_series(r.records, 3, 100, 10);
  for (std::size_t k = 0; k < series.steps.size(); ++k) {
    EXPECT_EQ(series.values[0][k], 1.0);
    EXPECT_EQ(series.values[1][k], 0.0);
    EXPECT_EQ(series.values[2][k], 0.0);
  }
}

TEST(Bench, UniformRandomIsBalanced) {
  BernoulliEnv env{{0.1, 0.2, 0.3}, {}, {}, {}};
  const auto r = run_bernoulli_bench(random_policy(), env, 30000, 2, quiet());
  for (auto c : r.pull_counts) EXPECT_NEAR(c / 30000.0, 1.0 / 3.0, 0.01);
  EXPECT_FALSE(r.final_state.has_value());
}

TEST(Bench, DeterministicRewardsConverge) {
  BernoulliEnv env{{1.0, 0.0}, {}, {}, {}};
  const auto r = run_bernoulli_bench(thompson(), env, 100, 3, quiet());
  EXPECT_GE(r.pull_counts[0], 95u);
}

TEST(Bench, SingleArmTakesEveryStep) {
  BernoulliEnv env{{0.4}, {}, {}, {}};
  const auto r = run_bernoulli_bench(thompson(), env, 250, 4, quiet());
  EXPECT_EQ(r.pull_counts[0], 250u);
}

TEST(Bench, TableOneSetupConverges) {
  BernoulliEnv env{{0.45, 0.55, 0.60}, {}, {}, {}};
  int close = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto r = run_bernoulli_bench(thompson(), env, 2000, seed, quiet());
    const auto best = std::max_element(r.pull_counts.begin(), r.pull_counts.end()) - r.pull_counts.begin();
    close += std::abs(posterior_mean(r.final_state->posterior(best)) - env.theta[best]) <= 0.05;
  }
  EXPECT_GE(close, 34);
}

TEST(Bench, RejectsBadInput) {
  BernoulliEnv env{{0.5, 0.5}, {}, {}, {}};
  EXPECT_THROW(run_bernoulli_bench(thompson(), env, 0, 1), ParameterError);
  EXPECT_THROW(run_bernoulli_bench(fixed(2), env, 10, 1), ParameterError);
  Policy ctx{"ctx", ContextualThompsonPolicy{}, {}};
  EXPECT_THROW(run_bernoulli_bench(ctx, env, 10, 1), ParameterError);
}

TEST(Run, AccountingAndFoldedState) {
  BernoulliEnv env{{0.2, 0.5, 0.4}, {5.0, 7.0, 9.0}, {}, {}};
  const auto r = run_bernoulli_bench(thompson(), env, 3000, 5, quiet());
  std::size_t pulls = 0;
  for (auto c : r.pull_counts) pulls += c;
  EXPECT_EQ(pulls, 3000u);
  EXPECT_NEAR(r.total_revenue(), revenue_per_offer(r.records) * 3000, 1e-9);

  BanditState folded({"arm0", "arm1", "arm2"});
  for (const auto& rec : r.records) folded.update(rec.arm, rec.reward);
  ASSERT_TRUE(r.final_state.has_value());
  EXPECT_EQ(*r.final_state, folded);
}

TEST(Run, SameSeedSameResult) {
  const auto sessions = flat_sessions(800);
  const auto arms = fixed_arms({8.0, 12.0, 9.0});
  const auto a = run_experiment(thompson(), sessions, arms, WtpOracle{}, 9);
  const auto b = run_experiment(thompson(), sessions, arms, WtpOracle{}, 9);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].arm, b.records[i].arm);
    EXPECT_EQ(a.records[i].reward, b.records[i].reward);
  }
  EXPECT_EQ(a.posterior_series.size(), b.posterior_series.size());
}

TEST(Run, ReplayUsesOracleAndArmPrices) {
  const auto sessions = flat_sessions(300);
  const auto arms = fixed_arms({8.0, 12.0});
  const auto r = run_experiment(thompson(), sessions, arms, WtpOracle{}, 10, quiet());
  for (const auto& rec : r.records) {
    const double expected_price = rec.arm == 0 ? 8.0 : 12.0;
    EXPECT_EQ(rec.offered_price, expected_price);
    EXPECT_EQ(rec.response, sessions[rec.t].y);
    EXPECT_EQ(rec.reward, oracle_reward(sessions[rec.t], rec.offered_price));
  }
  // Arm 1 never converts (12 > 10), so the folded state must match exactly.
  BanditState folded({"p0", "p1"});
  for (const auto& rec : r.records) folded.update(rec.arm, rec.reward);
  EXPECT_EQ(*r.final_state, folded);
}

TEST(Run, IdenticalPoliciesSeeIdenticalInputs) {
  const auto sessions = flat_sessions(400);
  const auto arms = fixed_arms({8.0, 12.0});
  const auto a = run_experiment(fixed(0), sessions, arms, WtpOracle{}, 11, quiet());
  const auto b = run_experiment(Policy{"other", FixedPolicy{0}, {}}, sessions, arms, WtpOracle{}, 11, quiet());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].t, b.records[i].t);
    EXPECT_EQ(a.records[i].offered_price, b.records[i].offered_price);
    EXPECT_EQ(a.records[i].reward, b.records[i].reward);
  }
}

TEST(Run, StepErrorNamesTheStep) {
  const auto sessions = flat_sessions(20);
  std::vector<NamedArm> arms{{"bad", std::make_shared<ThrowingArm>()}};
  try {
    run_experiment(thompson(), sessions, arms, WtpOracle{}, 1, quiet());
    FAIL() << "expected a step error";
  } catch (const StepError& e) {
    EXPECT_EQ(e.step(), 7u);
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
  }
}

TEST(Run, CautiousPolicyLogsFallbacks) {
  BernoulliEnv env{{0.05, 0.1}, {}, {}, {}};
  Policy p{"cautious", CautiousThompsonPolicy{0.5}, {}};
  const auto r = run_bernoulli_bench(p, env, 500, 12, quiet());
  EXPECT_FALSE(r.events.empty());
  for (const auto& e : r.events) EXPECT_EQ(e.kind, "caution_fallback");
}

TEST(Run, ConcurrentOfferBlendsPrices) {
  const auto sessions = flat_sessions(300);
  const auto arms = fixed_arms({8.0, 12.0});
  Policy p{"concurrent", ConcurrentPolicy{200, 0}, {}};
  const auto r = run_experiment(p, sessions, arms, WtpOracle{}, 13, quiet());
  for (const auto& rec : r.records) {
    EXPECT_GE(rec.offered_price, 8.0);
    EXPECT_LE(rec.offered_price, 12.0);
  }
}

TEST(Run, ContextualPolicySplitsBySegment) {
  // Feature sign decides which arm converts; the contextual router should learn both.
  SessionLog log;
  for (std::size_t i = 0; i < 4000; ++i) log.push_back({"s" + std::to_string(i), {i % 2 ? 1.0 : -1.0}, 10.0, 1});
  class SegmentArm final : public PricingModel {
   public:
    explicit SegmentArm(bool positive) : positive_(positive) {}
    std::string_view kind() const override { return "test"; }
    bool trained() const override { return true; }
    double price(const Session& s) const override { return (s.features[0] > 0) == positive_ ? 9.0 : 11.0; }
    nlohmann::json to_json() const override { return {}; }

   private:
    bool positive_;
  };
  std::vector<NamedArm> arms{{"neg", std::make_shared<SegmentArm>(false)}, {"pos", std::make_shared<SegmentArm>(true)}};
  Policy p{"ctx", ContextualThompsonPolicy{ContextQuantizer{0, {0.0}}}, {}};
  const auto r = run_experiment(p, log, arms, WtpOracle{}, 14, quiet());
  EXPECT_GT(conversion_score(r.records), 90.0);
  EXPECT_FALSE(r.final_state.has_value());
}

TEST(Metrics, ConversionScore) {
  auto recs = [](std::vector<int> rewards) {
    std::vector<OutcomeRecord> out;
    for (std::size_t i = 0; i < rewards.size(); ++i) out.push_back({i, 0, 10.0, rewards[i], rewards[i]});
    return out;
  };
  EXPECT_DOUBLE_EQ(conversion_score(recs({1, 1, 1})), 100.0);
  EXPECT_DOUBLE_EQ(conversion_score(recs({1, 0, 0, 1})), 50.0);
  EXPECT_DOUBLE_EQ(conversion_score(recs({0, 0})), 0.0);
  EXPECT_THROW(conversion_score(recs({})), std::invalid_argument);
}

TEST(Metrics, RevenuePerOffer) {
  std::vector<OutcomeRecord> recs;
  for (std::size_t i = 0; i < 5; ++i) recs.push_back({i, 0, 10.0, 0, i == 2 ? 1 : 0});
  EXPECT_DOUBLE_EQ(revenue_per_offer(recs), 2.0);
  for (auto& r : recs) r.reward = 0;
  EXPECT_DOUBLE_EQ(revenue_per_offer(recs), 0.0);
  for (auto& r : recs) {
    r.reward = 1;
    r.offered_price = 7.5;
  }
  EXPECT_DOUBLE_EQ(revenue_per_offer(recs), 7.5);
}

TEST(Metrics, AssignmentSumsToOne) {
  BernoulliEnv env{{0.3, 0.5, 0.4}, {}, {}, {}};
  const auto r = run_bernoulli_bench(thompson(), env, 2000, 15, quiet());
  const auto s = assignment_probability_series(r.records, 3, 250, 7);
  for (std::size_t k = 0; k < s.steps.size(); ++k) {
    double total = 0.0;
    for (std::size_t a = 0; a < 3; ++a) total += s.values[a][k].value();
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_EQ(s.steps.back(), 2000u);
}

TEST(Metrics, BetterArmDominatesAssignment) {
  BernoulliEnv env{{0.2, 0.8}, {}, {}, {}};
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = run_bernoulli_bench(thompson(), env, 10000, seed, quiet());
    const auto s = assignment_probability_series(r.records, 2, 1000, 10000);
    total += s.values[1].back().value();
  }
  EXPECT_GE(total / 50, 0.8);
}

TEST(Metrics, PerArmConversion) {
  std::vector<OutcomeRecord> recs;
  for (std::size_t i = 0; i < 10; ++i) recs.push_back({i, 0, 1.0, 1, 1});
  const auto s = per_arm_conversion_series(recs, 2, 5, 5);
  EXPECT_EQ(s.values[0].back(), 1.0);
  EXPECT_FALSE(s.values[1].back().has_value());
}

TEST(Metrics, StationaryArmConversionHoversAroundRate) {
  BernoulliEnv env{{0.6}, {}, {}, {}};
  const auto r = run_bernoulli_bench(fixed(0), env, 20000, 16, quiet());
  const auto s = per_arm_conversion_series(r.records, 1, 1000, 1000);
  const double sigma = std::sqrt(0.6 * 0.4 / 1000);
  for (const auto& v : s.values[0]) EXPECT_NEAR(v.value(), 0.6, 4.0 * sigma);
}

TEST(Metrics, SeriesIncludeBothAssignmentDefinitions) {
  BernoulliEnv env{{0.3, 0.6}, {}, {}, {}};
  MetricOptions o;
  o.stride = 100;
  o.window = 200;
  o.posterior_samples = 200;
  const auto r = run_bernoulli_bench(thompson(), env, 1000, 17, o);
  const auto series = metric_series(r, o);
  std::set<std::string> metrics;
  for (const auto& p : series) metrics.insert(p.metric);
  EXPECT_TRUE(metrics.count("assignment"));
  EXPECT_TRUE(metrics.count("posterior_assignment"));
  EXPECT_TRUE(metrics.count("conversion"));

  std::ostringstream csv;
  write_series_csv(series, csv);
  EXPECT_EQ(csv.str().rfind("step,metric,arm,value\n", 0), 0u);
  std::ostringstream rec;
  write_records_csv(r, rec);
  EXPECT_EQ(rec.str().rfind("t,arm,price,reward\n0,", 0), 0u);
}

TEST(Compare, IdenticalFixedPoliciesMatchPerSeed) {
  BernoulliSetup setup{BernoulliEnv{{0.2, 0.5}, {10.0, 6.0}, {}, {}}, 2000, {"a", "b"}};
  const auto table = compare_policies({fixed(1), Policy{"again", FixedPolicy{1}, {}}}, setup, 8, 3, quiet());
  EXPECT_EQ(table.policies[0].per_seed_revenue, table.policies[1].per_seed_revenue);
  EXPECT_EQ(table.policies[0].per_seed_conversion, table.policies[1].per_seed_conversion);
  EXPECT_EQ(table.seeds.size(), 8u);
}

TEST(Compare, OrderedArmsAndMabBeatsRandom) {
  BernoulliSetup setup{BernoulliEnv{{0.00627, 0.00943, 0.01976}, {10.0, 10.0, 10.0}, {}, {}}, 16000, {"a", "b", "c"}};
  const auto table = compare_policies({fixed(0), fixed(2), random_policy(), thompson()}, setup, 100, 4, quiet());
  EXPECT_GE(table.policies[1].revenue_per_offer.mean, table.policies[0].revenue_per_offer.mean);
  EXPECT_GT(table.ratios.at("mab_over_random_conversion"), 1.0);
  EXPECT_GT(table.ratios.at("mab_over_random_revenue"), 1.0);
  const auto j = table.to_json();
  EXPECT_TRUE(j.contains("mab_over_random_revenue"));
  EXPECT_EQ(j["policies"].size(), 4u);
}

TEST(Compare, SerialAndParallelAgree) {
  BernoulliSetup setup{BernoulliEnv{{0.3, 0.5}, {}, {}, {}}, 1500, {"a", "b"}};
  const std::vector<Policy> policies{random_policy(), thompson()};
  const auto a = compare_policies(policies, setup, 6, 5, quiet(), Execution::serial);
  const auto b = compare_policies(policies, setup, 6, 5, quiet(), Execution::parallel);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(Compare, SyntheticSessionsRegeneratedPerSeed) {
  GeneratorConfig g;
  g.n = 500;
  g.feature_dim = 1;
  SyntheticSetup setup{g, fixed_arms({8.0, 12.0})};
  const auto table = compare_policies({fixed(0), fixed(1)}, setup, 4, 6, quiet());
  const auto& rev = table.policies[0].per_seed_revenue;
  EXPECT_NE(rev[0], rev[1]);
}

TEST(Compare, NeedsTwoPolicies) {
  BernoulliSetup setup{BernoulliEnv{{0.3}, {}, {}, {}}, 10, {"a"}};
  EXPECT_THROW(compare_policies({thompson()}, setup, 2, 1), ParameterError);
}

}  // namespace
}  // namespace tsroute
