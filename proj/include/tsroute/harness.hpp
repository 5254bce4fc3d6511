#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tsroute/bandit_core.hpp"
#include "tsroute/bandit_ext.hpp"
#include "tsroute/parallel.hpp"
#include "tsroute/pricing.hpp"
#include "tsroute/simenv.hpp"

namespace tsroute {

// --- policies ---------------------------------------------------------------

struct ThompsonPolicy {};
struct WindowedThompsonPolicy {
  std::size_t tau = 1000;
};
struct ContextualThompsonPolicy {
  ContextQuantizer quantizer;
};
struct CautiousThompsonPolicy {
  double r_floor = 0.0;
};
struct ConcurrentPolicy {
  std::size_t n_samples = 1000;
  std::size_t top_k = 0;  // 0 = every arm may contribute
};
struct UniformRandomPolicy {};
struct FixedPolicy {
  std::size_t arm = 0;
};

using PolicyVariant = std::variant<ThompsonPolicy, WindowedThompsonPolicy, ContextualThompsonPolicy,
                                   CautiousThompsonPolicy, ConcurrentPolicy, UniformRandomPolicy,
                                   FixedPolicy>;

struct Policy {
  std::string name;
  PolicyVariant variant;
  BetaPosterior prior{};

  // "thompson", "thompson_windowed", ..., "uniform_random", "fixed"
  std::string kind() const;
  // True for the Thompson-sampling family (the policies that update a posterior).
  bool learns() const;
  void validate(std::size_t n_arms) const;
};

// --- run results ------------------------------------------------------------

struct MetricOptions {
  std::size_t stride = 100;
  std::size_t window = 1000;
  std::size_t posterior_samples = 1000;
};

struct RunEvent {
  std::uint64_t t = 0;
  std::string kind;  // "caution_fallback"
};

struct SeriesPoint {
  std::uint64_t step = 0;  // sessions processed so far
  std::string metric;
  std::string arm;         // arm name, or "all"
  std::optional<double> value;  // nullopt = missing (e.g. arm unpulled in window)
};

struct RunResult {
  std::string policy;
  std::vector<std::string> arm_names;
  std::vector<OutcomeRecord> records;
  std::vector<std::size_t> pull_counts;
  std::vector<double> arm_revenue;
  std::vector<RunEvent> events;
  std::vector<SeriesPoint> posterior_series;  // MC P(argmax) from the live posterior
  std::optional<BanditState> final_state;

  double total_revenue() const;
};

struct NamedArm {
  std::string name;
  std::shared_ptr<const PricingModel> model;
};

// Offered price of every arm for every session: prices[session * arms + arm].
struct PriceTable {
  std::size_t sessions = 0;
  std::size_t arms = 0;
  std::vector<double> prices;

  double at(std::size_t session, std::size_t arm) const { return prices[session * arms + arm]; }
};

PriceTable price_sessions(const SessionLog& sessions, std::span<const NamedArm> arms,
                          Execution exec = Execution::parallel);

// Replay loop: policy picks an arm, the arm prices the session, the oracle
// scores the offer, the reward feeds the policy.
RunResult run_experiment(const Policy& policy, const SessionLog& sessions,
                         std::span<const NamedArm> arms, const WtpOracle& oracle,
                         std::uint64_t seed, const MetricOptions& options = {});
RunResult run_experiment(const Policy& policy, const SessionLog& sessions, const PriceTable& prices,
                         const std::vector<std::string>& arm_names, const WtpOracle& oracle,
                         std::uint64_t seed, const MetricOptions& options = {});

// Pure bandit loop against Bernoulli arms.
RunResult run_bernoulli_bench(const Policy& policy, const BernoulliEnv& env, std::uint64_t steps,
                              std::uint64_t seed, const MetricOptions& options = {},
                              const std::vector<std::string>& arm_names = {});

// --- metrics ----------------------------------------------------------------

// Percent of offers accepted.
double conversion_score(std::span<const OutcomeRecord> records);
// Mean realized revenue per offer; rejected offers count as zero.
double revenue_per_offer(std::span<const OutcomeRecord> records);

// Values per arm at the sampled steps; values[arm][k] belongs to steps[k].
struct ArmSeries {
  std::vector<std::uint64_t> steps;
  std::vector<std::vector<std::optional<double>>> values;
};

// Sample points: every `stride` records, plus the final record.
std::vector<std::uint64_t> sample_steps(std::size_t n_records, std::size_t stride);

// Trailing-window routing frequency per arm.
ArmSeries assignment_probability_series(std::span<const OutcomeRecord> records, std::size_t n_arms,
                                        std::size_t window, std::size_t stride = 1);
// Trailing-window conversion among each arm's own pulls; missing when unpulled.
ArmSeries per_arm_conversion_series(std::span<const OutcomeRecord> records, std::size_t n_arms,
                                    std::size_t window, std::size_t stride = 1);

// Every exported series for one run: assignment, posterior_assignment,
// conversion (per arm), conversion_cumulative and revenue_per_offer_cumulative.
std::vector<SeriesPoint> metric_series(const RunResult& result, const MetricOptions& options);

// --- policy comparison ------------------------------------------------------

struct BernoulliSetup {
  BernoulliEnv env;
  std::uint64_t steps = 0;
  std::vector<std::string> arm_names;
};
struct ReplaySetup {
  std::shared_ptr<const SessionLog> sessions;
  std::vector<NamedArm> arms;
};
// Sessions are regenerated per replication from a seed-derived generator seed.
struct SyntheticSetup {
  GeneratorConfig generator;
  std::vector<NamedArm> arms;
};
using EnvironmentSetup = std::variant<BernoulliSetup, ReplaySetup, SyntheticSetup>;

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};
Stats summarize(std::span<const double> values);

struct PolicySummary {
  std::string name;
  std::string kind;
  Stats revenue_per_offer;
  Stats conversion;
  std::vector<double> per_seed_revenue;
  std::vector<double> per_seed_conversion;
  std::vector<double> pull_share;  // mean routing share per arm
};

struct ComparisonTable {
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> arm_names;
  std::vector<PolicySummary> policies;
  // "mab_over_random_revenue", "mab_over_random_conversion" and
  // "<a>_over_<b>_{revenue,conversion}" for every ordered policy pair.
  std::map<std::string, double> ratios;

  nlohmann::json to_json() const;
};

// Seed of replication i under a base seed.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t i);

// Every policy sees the same environment stream for a given replication.
ComparisonTable compare_policies(const std::vector<Policy>& policies, const EnvironmentSetup& env,
                                 std::size_t n_seeds, std::uint64_t base_seed,
                                 const MetricOptions& options = {},
                                 Execution exec = Execution::parallel);

// --- export -----------------------------------------------------------------

// records.csv: t,arm,price,reward
void write_records_csv(const RunResult& result, std::ostream& out);
// series.csv: step,metric,arm,value (missing values written as NA)
void write_series_csv(std::span<const SeriesPoint> series, std::ostream& out);
// summary.json for a single run
nlohmann::json run_summary_json(const RunResult& result);

}  // namespace tsroute
