#pragma once

#include <compare>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsroute/bandit_core.hpp"

namespace tsroute {

// ---------------------------------------------------------------------------
// Caution: restrict selection to arms whose estimated reward clears a floor.
// ---------------------------------------------------------------------------

// Arms whose posterior mean is >= r_floor, in ordinal order. May be empty.
std::vector<ArmId> caution_filter(const BanditState& state, double r_floor);

struct CautiousChoice {
  ArmId arm;
  bool fallback = false;  // no arm cleared the floor; selection was unconstrained
};

CautiousChoice select_arm_cautious(const BanditState& state, double r_floor, Rng& rng);

// ---------------------------------------------------------------------------
// Context: one posterior per (arm, context bucket) pair.
// ---------------------------------------------------------------------------

struct ContextBucket {
  int id = 0;
  friend auto operator<=>(const ContextBucket&, const ContextBucket&) = default;
};

// Buckets one session feature by ascending cut points:
// bucket = number of cut points <= value.
struct ContextQuantizer {
  std::size_t feature = 0;
  std::vector<double> cuts;

  ContextBucket operator()(std::span<const double> features) const;
  std::size_t bucket_count() const { return cuts.size() + 1; }
};

class ContextualState {
 public:
  explicit ContextualState(std::vector<std::string> arm_names, BetaPosterior prior = {});

  // Posteriors for z; an unseen bucket is initialized to the prior for every arm.
  const BanditState& bucket(ContextBucket z);
  const BanditState* find(ContextBucket z) const;
  std::size_t bucket_count() const { return buckets_.size(); }

  void update(ContextBucket z, const ArmId& arm, int reward);

 private:
  std::vector<std::string> names_;
  BetaPosterior prior_;
  std::map<ContextBucket, BanditState> buckets_;
};

// Thompson selection among the posteriors keyed (., z).
ArmId select_arm_contextual(ContextualState& ctx_state, ContextBucket z, Rng& rng);

// ---------------------------------------------------------------------------
// Sliding window: posteriors conditioned on the most recent tau observations.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kUnboundedWindow = std::numeric_limits<std::size_t>::max();

class ObservationWindow {
 public:
  struct Entry {
    std::size_t arm = 0;
    int reward = 0;
  };

  explicit ObservationWindow(std::size_t tau) : tau_(tau) {}

  std::size_t tau() const { return tau_; }
  std::size_t size() const { return entries_.size(); }
  const std::deque<Entry>& entries() const { return entries_; }

  // Appends and returns the entry that fell out of the window, if any.
  // With tau == 0 the new entry itself is returned.
  std::optional<Entry> push(std::size_t arm, int reward);

 private:
  std::size_t tau_;
  std::deque<Entry> entries_;
};

// Prior plus this arm's reward counts inside the window only.
BetaPosterior windowed_posterior(const ObservationWindow& window, const ArmId& arm,
                                 const BetaPosterior& prior);

// Thompson sampling over the windowed posteriors. Counts are maintained
// incrementally as entries enter and leave the window.
class WindowedBandit {
 public:
  WindowedBandit(const std::vector<std::string>& arm_names, std::size_t tau,
                 BetaPosterior prior = {});

  BanditState state() const;
  const ObservationWindow& window() const { return window_; }
  const BetaPosterior& prior() const { return prior_; }

  ArmId select(Rng& rng) const;
  void update(std::size_t arm, int reward);

 private:
  std::vector<std::string> names_;
  BetaPosterior prior_;
  ObservationWindow window_;
  std::vector<std::size_t> successes_;
  std::vector<std::size_t> failures_;
};

// ---------------------------------------------------------------------------
// Concurrence: a weighted blend of several arms' prices in one offer.
// ---------------------------------------------------------------------------

using ConcurrenceWeights = std::map<ArmId, double>;
using ArmPrices = std::map<ArmId, double>;

// Monte-Carlo estimate of P(arm = argmax of joint Thompson draws). With
// top_k > 0 only the k heaviest arms keep weight (renormalized; ties to the
// lower ordinal). Weights are non-negative and sum to one.
ConcurrenceWeights concurrence_weights(const BanditState& state, Rng& rng, std::size_t n_samples,
                                       std::size_t top_k = 0);

// Sum of weight * price. The two maps must have the same keys.
double concurrent_price(const ArmPrices& prices, const ConcurrenceWeights& weights);

}  // namespace tsroute
