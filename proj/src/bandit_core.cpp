#include "tsroute/bandit_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "tsroute/errors.hpp"

namespace tsroute {

namespace {

void check_shape(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw ParameterError("beta parameters must be finite and positive (alpha=" +
                         std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
  }
}

void check_reward(int reward) {
  if (reward != 0 && reward != 1) {
    throw std::invalid_argument("reward must be 0 or 1, got " + std::to_string(reward));
  }
}

// theta^(a-1) in log space, with the 0^0 = 1 convention at the boundary.
double log_power(double base, double exponent) {
  if (exponent == 0.0) return 0.0;
  if (base == 0.0) {
    return exponent > 0.0 ? -std::numeric_limits<double>::infinity()
                          : std::numeric_limits<double>::infinity();
  }
  return exponent * std::log(base);
}

}  // namespace

BetaPosterior::BetaPosterior(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  check_shape(alpha, beta);
}

void BetaPosterior::observe(int reward) {
  check_reward(reward);
  alpha_ += reward;
  beta_ += 1 - reward;
}

double beta_pdf(double theta, double alpha, double beta) {
  check_shape(alpha, beta);
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw ParameterError("theta must lie in [0, 1], got " + std::to_string(theta));
  }
  const double log_norm = std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta);
  return std::exp(log_norm + log_power(theta, alpha - 1.0) + log_power(1.0 - theta, beta - 1.0));
}

double posterior_mean(const BetaPosterior& p) { return p.alpha() / (p.alpha() + p.beta()); }

double posterior_variance(const BetaPosterior& p) {
  const double s = p.alpha() + p.beta();
  return p.alpha() * p.beta() / (s * s * (s + 1.0));
}

double sample_theta(const BetaPosterior& p, Rng& rng) {
  std::gamma_distribution<double> ga(p.alpha(), 1.0);
  std::gamma_distribution<double> gb(p.beta(), 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  double theta = x / (x + y);
  if (!std::isfinite(theta)) theta = 0.5;  // both gammas underflowed to 0
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(theta, lo, hi);
}

BanditState::BanditState(const std::vector<std::string>& names, BetaPosterior prior) {
  if (names.empty()) throw std::invalid_argument("bandit needs at least one arm");
  std::set<std::string> seen;
  arms_.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) throw std::invalid_argument("arm names must be non-empty");
    if (!seen.insert(names[i]).second) {
      throw std::invalid_argument("duplicate arm name '" + names[i] + "'");
    }
    arms_.push_back({ArmId{i, names[i]}, prior});
  }
}

BanditState BanditState::from_arms(std::vector<Arm> arms, std::uint64_t step) {
  BanditState out;
  out.arms_ = std::move(arms);
  out.step_ = step;
  if (out.arms_.empty()) throw std::invalid_argument("bandit needs at least one arm");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < out.arms_.size(); ++i) {
    out.arms_[i].id.ordinal = i;
    if (!seen.insert(out.arms_[i].id.name).second) {
      throw std::invalid_argument("duplicate arm name '" + out.arms_[i].id.name + "'");
    }
  }
  return out;
}

const ArmId& BanditState::arm(std::size_t ordinal) const {
  if (ordinal >= arms_.size()) {
    throw std::out_of_range("unknown arm ordinal " + std::to_string(ordinal));
  }
  return arms_[ordinal].id;
}

const BetaPosterior& BanditState::posterior(std::size_t ordinal) const {
  if (ordinal >= arms_.size()) {
    throw std::out_of_range("unknown arm ordinal " + std::to_string(ordinal));
  }
  return arms_[ordinal].posterior;
}

const BetaPosterior& BanditState::posterior(const ArmId& arm) const {
  return posterior(arm.ordinal);
}

void BanditState::update(std::size_t ordinal, int reward) {
  if (ordinal >= arms_.size()) {
    throw std::out_of_range("unknown arm ordinal " + std::to_string(ordinal));
  }
  arms_[ordinal].posterior.observe(reward);
  ++step_;
}

void BanditState::update(const ArmId& arm, int reward) {
  if (arm.ordinal >= arms_.size() ||
      (!arm.name.empty() && arms_[arm.ordinal].id.name != arm.name)) {
    throw std::out_of_range("unknown arm '" + arm.name + "'");
  }
  update(arm.ordinal, reward);
}

nlohmann::json BanditState::to_json() const {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : arms_) {
    arms.push_back({{"id", a.id.name}, {"alpha", a.posterior.alpha()}, {"beta", a.posterior.beta()}});
  }
  return {{"arms", std::move(arms)}, {"step", step_}};
}

BanditState BanditState::from_json(const nlohmann::json& j) {
  std::vector<Arm> arms;
  for (const auto& a : j.at("arms")) {
    arms.push_back({ArmId{arms.size(), a.at("id").get<std::string>()},
                    BetaPosterior(a.at("alpha").get<double>(), a.at("beta").get<double>())});
  }
  return from_arms(std::move(arms), j.at("step").get<std::uint64_t>());
}

bool operator==(const BanditState& a, const BanditState& b) {
  if (a.step_ != b.step_ || a.arms_.size() != b.arms_.size()) return false;
  for (std::size_t i = 0; i < a.arms_.size(); ++i) {
    if (a.arms_[i].id.name != b.arms_[i].id.name ||
        !(a.arms_[i].posterior == b.arms_[i].posterior)) {
      return false;
    }
  }
  return true;
}

std::size_t argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of an empty set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

ArmId select_arm(const BanditState& state, Rng& rng) {
  std::vector<double> draws(state.size());
  for (std::size_t a = 0; a < state.size(); ++a) draws[a] = sample_theta(state.posterior(a), rng);
  return state.arm(argmax_lowest(draws));
}

ArmId select_arm_among(const BanditState& state, std::span<const std::size_t> candidates,
                       Rng& rng) {
  if (candidates.empty()) throw std::invalid_argument("no candidate arms to select from");
  std::vector<double> draws(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    draws[i] = sample_theta(state.posterior(candidates[i]), rng);
  }
  // candidates are expected in ascending ordinal order, so index ties map to ordinal ties
  return state.arm(candidates[argmax_lowest(draws)]);
}

BanditState update(BanditState state, const ArmId& arm, int reward) {
  state.update(arm, reward);
  return state;
}

}  // namespace tsroute
