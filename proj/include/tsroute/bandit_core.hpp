#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsroute/random.hpp"

namespace tsroute {

// Beta(alpha, beta) belief over the Bernoulli success rate of one arm.
// Both pseudo-counts stay strictly positive; construction validates them.
class BetaPosterior {
 public:
  BetaPosterior() = default;
  BetaPosterior(double alpha, double beta);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  // Conjugate update with a single Bernoulli reward in {0, 1}.
  void observe(int reward);

  friend bool operator==(const BetaPosterior&, const BetaPosterior&) = default;

 private:
  double alpha_ = 1.0;
  double beta_ = 1.0;
};

// Density of Beta(alpha, beta) at theta, evaluated in log space.
double beta_pdf(double theta, double alpha, double beta);

double posterior_mean(const BetaPosterior& posterior);
double posterior_variance(const BetaPosterior& posterior);

// One draw from the posterior. The result lies in the open interval (0, 1).
double sample_theta(const BetaPosterior& posterior, Rng& rng);

// Stable ordinal plus a human-readable name. Ordering and equality use the
// ordinal only; the ordinal is also the arm's index inside a BanditState.
struct ArmId {
  std::size_t ordinal = 0;
  std::string name;

  friend bool operator==(const ArmId& a, const ArmId& b) { return a.ordinal == b.ordinal; }
  friend auto operator<=>(const ArmId& a, const ArmId& b) { return a.ordinal <=> b.ordinal; }
};

class BanditState {
 public:
  struct Arm {
    ArmId id;
    BetaPosterior posterior;
  };

  // Every arm starts from `prior`. Names must be non-empty and unique.
  explicit BanditState(const std::vector<std::string>& names, BetaPosterior prior = {});
  static BanditState from_arms(std::vector<Arm> arms, std::uint64_t step = 0);

  std::size_t size() const { return arms_.size(); }
  std::uint64_t step() const { return step_; }
  std::span<const Arm> arms() const { return arms_; }

  const ArmId& arm(std::size_t ordinal) const;
  const BetaPosterior& posterior(const ArmId& arm) const;
  const BetaPosterior& posterior(std::size_t ordinal) const;

  // Only the chosen arm's posterior changes; step advances by one.
  void update(const ArmId& arm, int reward);
  void update(std::size_t ordinal, int reward);

  nlohmann::json to_json() const;
  static BanditState from_json(const nlohmann::json& j);

  friend bool operator==(const BanditState& a, const BanditState& b);

 private:
  BanditState() = default;

  std::vector<Arm> arms_;
  std::uint64_t step_ = 0;
};

// Thompson selection: draws one theta per arm and returns the argmax.
// Ties go to the lowest ordinal.
ArmId select_arm(const BanditState& state, Rng& rng);

// Thompson selection restricted to `candidates` (ordinals into `state`).
ArmId select_arm_among(const BanditState& state, std::span<const std::size_t> candidates,
                       Rng& rng);

// Argmax of a vector of draws with the lowest-index tie rule.
std::size_t argmax_lowest(std::span<const double> values);

// Returns a new state; the value-semantics form of BanditState::update.
BanditState update(BanditState state, const ArmId& arm, int reward);

// One simulation step. `response` is the raw environment observation y_t,
// `reward` the bandit reward r_t.
struct OutcomeRecord {
  std::uint64_t t = 0;
  std::size_t arm = 0;
  double offered_price = 0.0;
  int response = 0;
  int reward = 0;
};

}  // namespace tsroute
