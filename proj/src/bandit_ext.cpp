#include "tsroute/bandit_ext.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tsroute/errors.hpp"

namespace tsroute {

std::vector<ArmId> caution_filter(const BanditState& state, double r_floor) {
  std::vector<ArmId> out;
  for (const auto& a : state.arms()) {
    if (posterior_mean(a.posterior) >= r_floor) out.push_back(a.id);
  }
  return out;
}

CautiousChoice select_arm_cautious(const BanditState& state, double r_floor, Rng& rng) {
  const auto allowed = caution_filter(state, r_floor);
  if (allowed.empty()) return {select_arm(state, rng), true};
  std::vector<std::size_t> ordinals;
  ordinals.reserve(allowed.size());
  for (const auto& a : allowed) ordinals.push_back(a.ordinal);
  return {select_arm_among(state, ordinals, rng), false};
}

ContextBucket ContextQuantizer::operator()(std::span<const double> features) const {
  if (feature >= features.size()) {
    throw std::out_of_range("context feature index " + std::to_string(feature) +
                            " outside a " + std::to_string(features.size()) + "-feature session");
  }
  const auto it = std::upper_bound(cuts.begin(), cuts.end(), features[feature]);
  return ContextBucket{static_cast<int>(it - cuts.begin())};
}

ContextualState::ContextualState(std::vector<std::string> arm_names, BetaPosterior prior)
    : names_(std::move(arm_names)), prior_(prior) {
  if (names_.empty()) throw std::invalid_argument("bandit needs at least one arm");
}

const BanditState& ContextualState::bucket(ContextBucket z) {
  auto it = buckets_.find(z);
  if (it == buckets_.end()) it = buckets_.emplace(z, BanditState(names_, prior_)).first;
  return it->second;
}

const BanditState* ContextualState::find(ContextBucket z) const {
  const auto it = buckets_.find(z);
  return it == buckets_.end() ? nullptr : &it->second;
}

void ContextualState::update(ContextBucket z, const ArmId& arm, int reward) {
  bucket(z);
  buckets_.at(z).update(arm, reward);
}

ArmId select_arm_contextual(ContextualState& ctx_state, ContextBucket z, Rng& rng) {
  return select_arm(ctx_state.bucket(z), rng);
}

std::optional<ObservationWindow::Entry> ObservationWindow::push(std::size_t arm, int reward) {
  if (reward != 0 && reward != 1) {
    throw std::invalid_argument("reward must be 0 or 1, got " + std::to_string(reward));
  }
  if (tau_ == 0) return Entry{arm, reward};
  entries_.push_back({arm, reward});
  if (entries_.size() <= tau_) return std::nullopt;
  const Entry old = entries_.front();
  entries_.pop_front();
  return old;
}

BetaPosterior windowed_posterior(const ObservationWindow& window, const ArmId& arm,
                                 const BetaPosterior& prior) {
  double ones = 0.0;
  double zeros = 0.0;
  for (const auto& e : window.entries()) {
    if (e.arm != arm.ordinal) continue;
    (e.reward == 1 ? ones : zeros) += 1.0;
  }
  return BetaPosterior(prior.alpha() + ones, prior.beta() + zeros);
}

WindowedBandit::WindowedBandit(const std::vector<std::string>& arm_names, std::size_t tau,
                               BetaPosterior prior)
    : names_(arm_names),
      prior_(prior),
      window_(tau),
      successes_(arm_names.size(), 0),
      failures_(arm_names.size(), 0) {
  if (names_.empty()) throw std::invalid_argument("bandit needs at least one arm");
}

BanditState WindowedBandit::state() const {
  std::vector<BanditState::Arm> arms;
  arms.reserve(names_.size());
  for (std::size_t a = 0; a < names_.size(); ++a) {
    arms.push_back({ArmId{a, names_[a]},
                    BetaPosterior(prior_.alpha() + static_cast<double>(successes_[a]),
                                  prior_.beta() + static_cast<double>(failures_[a]))});
  }
  return BanditState::from_arms(std::move(arms), window_.size());
}

ArmId WindowedBandit::select(Rng& rng) const {
  std::vector<double> draws(names_.size());
  for (std::size_t a = 0; a < names_.size(); ++a) {
    draws[a] = sample_theta(BetaPosterior(prior_.alpha() + static_cast<double>(successes_[a]),
                                          prior_.beta() + static_cast<double>(failures_[a])),
                            rng);
  }
  const auto best = argmax_lowest(draws);
  return ArmId{best, names_[best]};
}

void WindowedBandit::update(std::size_t arm, int reward) {
  if (arm >= names_.size()) throw std::out_of_range("unknown arm ordinal " + std::to_string(arm));
  const auto evicted = window_.push(arm, reward);
  if (window_.tau() > 0) (reward == 1 ? successes_ : failures_)[arm] += 1;
  if (evicted && window_.tau() > 0) (evicted->reward == 1 ? successes_ : failures_)[evicted->arm] -= 1;
}

ConcurrenceWeights concurrence_weights(const BanditState& state, Rng& rng, std::size_t n_samples,
                                       std::size_t top_k) {
  if (n_samples == 0) throw ParameterError("concurrence needs at least one sample");
  std::vector<std::size_t> wins(state.size(), 0);
  std::vector<double> draws(state.size());
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t a = 0; a < state.size(); ++a) draws[a] = sample_theta(state.posterior(a), rng);
    ++wins[argmax_lowest(draws)];
  }

  std::vector<double> w(state.size());
  for (std::size_t a = 0; a < state.size(); ++a) {
    w[a] = static_cast<double>(wins[a]) / static_cast<double>(n_samples);
  }

  if (top_k > 0 && top_k < state.size()) {
    std::vector<std::size_t> order(state.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
    for (std::size_t i = top_k; i < order.size(); ++i) w[order[i]] = 0.0;
    const double kept = std::accumulate(w.begin(), w.end(), 0.0);
    if (kept > 0.0) {
      for (auto& x : w) x /= kept;
    }
  }

  ConcurrenceWeights out;
  for (std::size_t a = 0; a < state.size(); ++a) out.emplace(state.arm(a), w[a]);
  return out;
}

double concurrent_price(const ArmPrices& prices, const ConcurrenceWeights& weights) {
  if (prices.size() != weights.size()) {
    throw std::invalid_argument("concurrent price: " + std::to_string(prices.size()) +
                                " prices but " + std::to_string(weights.size()) + " weights");
  }
  double total = 0.0;
  double weight_sum = 0.0;
  for (const auto& [arm, price] : prices) {
    const auto it = weights.find(arm);
    if (it == weights.end()) {
      throw std::invalid_argument("concurrent price: no weight for arm '" + arm.name + "'");
    }
    if (it->second < 0.0) throw std::invalid_argument("concurrence weights must be non-negative");
    total += it->second * price;
    weight_sum += it->second;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    throw std::invalid_argument("concurrence weights sum to " + std::to_string(weight_sum));
  }
  return total;
}

}  // namespace tsroute
