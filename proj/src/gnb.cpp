#include "tsroute/gnb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tsroute/errors.hpp"

namespace tsroute {

namespace {

void check_dim(const GnbModel& model, std::span<const double> features) {
  if (features.size() != model.feature_dim()) {
    throw std::invalid_argument("GNB expects " + std::to_string(model.feature_dim()) +
                                " features, got " + std::to_string(features.size()));
  }
}

}  // namespace

GnbModel gnb_fit(std::span<const LabeledExample> examples) {
  if (examples.empty()) throw std::invalid_argument("GNB fit on an empty training set");
  const std::size_t d = examples.front().features.size() + 1;

  std::array<std::size_t, 2> count{0, 0};
  GnbModel m;
  for (int c = 0; c < 2; ++c) {
    m.means[c].assign(d, 0.0);
    m.variances[c].assign(d, 0.0);
  }
  std::vector<double> pooled_mean(d, 0.0);

  auto column = [](const LabeledExample& e, std::size_t j) {
    return j == e.features.size() ? e.price : e.features[j];
  };

  for (const auto& e : examples) {
    if (e.features.size() + 1 != d) throw std::invalid_argument("GNB fit: ragged feature rows");
    if (e.label != 0 && e.label != 1) throw std::invalid_argument("GNB fit: labels must be 0/1");
    ++count[e.label];
    for (std::size_t j = 0; j < d; ++j) {
      const double x = column(e, j);
      if (!std::isfinite(x)) throw std::invalid_argument("GNB fit: non-finite feature value");
      m.means[e.label][j] += x;
      pooled_mean[j] += x;
    }
  }
  if (count[0] == 0 || count[1] == 0) {
    throw std::invalid_argument("GNB fit needs examples of both classes");
  }
  const double n = static_cast<double>(examples.size());
  for (int c = 0; c < 2; ++c) {
    for (auto& v : m.means[c]) v /= static_cast<double>(count[c]);
  }
  for (auto& v : pooled_mean) v /= n;

  std::vector<double> pooled_var(d, 0.0);
  for (const auto& e : examples) {
    for (std::size_t j = 0; j < d; ++j) {
      const double x = column(e, j);
      const double dc = x - m.means[e.label][j];
      const double dp = x - pooled_mean[j];
      m.variances[e.label][j] += dc * dc;
      pooled_var[j] += dp * dp;
    }
  }
  for (int c = 0; c < 2; ++c) {
    for (auto& v : m.variances[c]) v /= static_cast<double>(count[c]);
  }
  double max_var = 0.0;
  for (auto v : pooled_var) max_var = std::max(max_var, v / n);
  m.var_floor = max_var > 0.0 ? 1e-9 * max_var : 1e-9;

  for (std::size_t j = 0; j < d; ++j) {
    bool hit = false;
    for (int c = 0; c < 2; ++c) {
      if (m.variances[c][j] < m.var_floor) {
        m.variances[c][j] = m.var_floor;
        hit = true;
      }
    }
    if (hit) m.floored.push_back(j);
  }

  m.log_priors = {std::log(count[0] / n), std::log(count[1] / n)};
  return m;
}

double GnbModel::log_joint(int cls, std::span<const double> features, double price) const {
  double lj = log_priors[cls];
  const auto& mu = means[cls];
  const auto& var = variances[cls];
  const std::size_t d = mu.size();
  for (std::size_t j = 0; j < d; ++j) {
    const double x = j + 1 == d ? price : features[j];
    const double diff = x - mu[j];
    lj += -0.5 * std::log(2.0 * std::numbers::pi * var[j]) - 0.5 * diff * diff / var[j];
  }
  return lj;
}

double posterior_from_log_joints(double log_joint0, double log_joint1) {
  // 1 / (1 + exp(l0 - l1)), arranged so the exponent is never positive
  const double diff = log_joint0 - log_joint1;
  if (diff > 0.0) {
    const double e = std::exp(-diff);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(diff));
}

double gnb_predict_proba(const GnbModel& model, std::span<const double> features, double price) {
  check_dim(model, features);
  return posterior_from_log_joints(model.log_joint(0, features, price),
                                   model.log_joint(1, features, price));
}

nlohmann::json GnbModel::to_json() const {
  return {{"means", {means[0], means[1]}},
          {"variances", {variances[0], variances[1]}},
          {"log_priors", {log_priors[0], log_priors[1]}},
          {"var_floor", var_floor}};
}

GnbModel GnbModel::from_json(const nlohmann::json& j) {
  GnbModel m;
  for (int c = 0; c < 2; ++c) {
    m.means[c] = j.at("means").at(c).get<std::vector<double>>();
    m.variances[c] = j.at("variances").at(c).get<std::vector<double>>();
    m.log_priors[c] = j.at("log_priors").at(c).get<double>();
  }
  m.var_floor = j.at("var_floor").get<double>();
  if (m.means[0].size() != m.means[1].size() || m.variances[0].size() != m.means[0].size() ||
      m.variances[1].size() != m.means[0].size() || m.means[0].empty()) {
    throw ParameterError("GNB model JSON has inconsistent shapes");
  }
  for (int c = 0; c < 2; ++c) {
    for (double v : m.variances[c]) {
      if (!(v > 0.0)) throw ParameterError("GNB model JSON has a non-positive variance");
    }
  }
  return m;
}

}  // namespace tsroute
