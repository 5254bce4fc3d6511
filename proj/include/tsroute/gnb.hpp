#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

namespace tsroute {

// Training row for the purchase-probability estimators. The offered price
// is carried separately but enters the model as one more feature.
struct LabeledExample {
  std::vector<double> features;
  double price = 0.0;
  int label = 0;
};

// Gaussian naive Bayes over (features..., price) with two classes.
struct GnbModel {
  std::array<std::vector<double>, 2> means;
  std::array<std::vector<double>, 2> variances;
  std::array<double, 2> log_priors{};
  double var_floor = 0.0;
  std::vector<std::size_t> floored;  // dimensions whose variance was raised to var_floor

  // Number of session features, excluding the price column.
  std::size_t feature_dim() const { return means[0].empty() ? 0 : means[0].size() - 1; }

  // log p(y = cls) + sum_j log N(x_j; mean, var), with x = (features, price).
  double log_joint(int cls, std::span<const double> features, double price) const;

  nlohmann::json to_json() const;
  static GnbModel from_json(const nlohmann::json& j);
};

GnbModel gnb_fit(std::span<const LabeledExample> examples);

// P(y = 1 | features, price), computed from the two log-joints.
double gnb_predict_proba(const GnbModel& model, std::span<const double> features, double price);

// Posterior of class 1 from the two class log-joints.
double posterior_from_log_joints(double log_joint0, double log_joint1);

}  // namespace tsroute
