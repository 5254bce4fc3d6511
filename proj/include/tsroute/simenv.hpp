#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "tsroute/random.hpp"
#include "tsroute/session.hpp"

namespace tsroute {

// Willingness-to-pay reward rule over (session, offered price):
// purchased at p_i  =>  accepted at any price <= p_i; everything else scores 0,
// including the unobservable y = 0 / lower-price cell.
struct WtpOracle {
  int operator()(const Session& session, double offered_price) const;
};

int oracle_reward(const Session& session, double offered_price);

// --- synthetic sessions -----------------------------------------------------

struct LogNormalWtp {
  double mu = 2.3;
  double sigma = 0.5;
};
struct UniformWtp {
  double lo = 0.0;
  double hi = 1.0;
};
using WtpDistribution = std::variant<LogNormalWtp, UniformWtp>;

struct ConstantPricing {
  double price = 10.0;
};
struct UniformPricing {
  double lo = 5.0;
  double hi = 15.0;
};
using HistoricalPricing = std::variant<ConstantPricing, UniformPricing>;

struct GeneratorConfig {
  std::size_t n = 1000;
  std::size_t feature_dim = 3;
  WtpDistribution wtp = LogNormalWtp{};
  HistoricalPricing pricing = UniformPricing{};
  // feature_j = loading_j * standardized(w) + noise_sd * N(0, 1); empty loadings mean all 1.
  std::vector<double> loadings;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;
  // Sessions with index >= changepoint draw WTP from wtp_after instead.
  std::optional<std::size_t> changepoint;
  std::optional<WtpDistribution> wtp_after;

  void validate() const;
};

SessionLog generate_synthetic_sessions(const GeneratorConfig& config);

// --- Bernoulli arms ---------------------------------------------------------

// Plain Bernoulli arms, optionally with a per-arm price (for revenue metrics)
// and a changepoint step after which theta_after applies.
struct BernoulliEnv {
  std::vector<double> theta;
  std::vector<double> prices;  // empty or one per arm
  std::optional<std::uint64_t> changepoint;
  std::vector<double> theta_after;

  void validate() const;
  std::size_t arms() const { return theta.size(); }
  double rate(std::size_t arm, std::uint64_t t) const;
  double price(std::size_t arm) const { return prices.empty() ? 0.0 : prices.at(arm); }
};

// One uniform is consumed per call, whatever the arm, so competing policies
// on the same stream see common random numbers.
int bernoulli_step(const BernoulliEnv& env, std::size_t arm, std::uint64_t t, Rng& rng);

// --- session CSV ------------------------------------------------------------
// Header: id,f0,...,f{d-1},historical_price,y

SessionLog read_sessions(std::istream& in);
void write_sessions(const SessionLog& log, std::ostream& out);
SessionLog load_sessions(const std::filesystem::path& path);
void save_sessions(const SessionLog& log, const std::filesystem::path& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace tsroute
