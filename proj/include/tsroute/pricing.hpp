#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tsroute/gnb.hpp"
#include "tsroute/kmeans.hpp"
#include "tsroute/mlp.hpp"
#include "tsroute/random.hpp"
#include "tsroute/session.hpp"

namespace tsroute {

// Discrete permissible prices min, min + step, ... up to max.
struct PriceGrid {
  double min_price = 0.0;
  double max_price = 0.0;
  double step = 0.0;

  // step <= 0 selects the default (max - min) / 100.
  static PriceGrid make(double min_price, double max_price, double step = 0.0);

  void validate() const;
  std::vector<double> points() const;
  // Nearest grid point, ties to the lower price.
  double snap(double price) const;

  nlohmann::json to_json() const;
  static PriceGrid from_json(const nlohmann::json& j);
};

// price = p_min + (p_max - p_min) * sigmoid(steepness * (prob - midpoint))
struct LogisticPriceMap {
  double p_min = 0.0;
  double p_max = 1.0;
  double steepness = 10.0;
  double midpoint = 0.5;

  void validate() const;
  nlohmann::json to_json() const;
  static LogisticPriceMap from_json(const nlohmann::json& j);
};

double logistic_price_map(double prob, const LogisticPriceMap& map);

// argmax over the grid of price * prob_fn(price); ties go to the lower price.
double exhaustive_search_price(const std::function<double(double)>& prob_fn,
                               std::span<const double> grid);
double exhaustive_search_price(const std::function<double(double)>& prob_fn, const PriceGrid& grid);

// A pricing arm: purchase-probability estimation, then price selection.
class PricingModel {
 public:
  virtual ~PricingModel() = default;

  virtual std::string_view kind() const = 0;
  virtual bool trained() const = 0;
  // Offered price for the session, inside the arm's permissible range.
  virtual double price(const Session& session) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

// Gaussian naive Bayes estimate at the reference (historical) price, mapped
// through the logistic price map and snapped to the grid.
class GnbArm final : public PricingModel {
 public:
  // A map with NaN midpoint is calibrated at fit time to the median
  // training prediction.
  GnbArm(LogisticPriceMap map, PriceGrid grid);
  GnbArm(GnbModel model, LogisticPriceMap map, PriceGrid grid);

  void fit(std::span<const Session> training);

  std::string_view kind() const override { return "gnb"; }
  bool trained() const override { return model_.has_value(); }
  double price(const Session& session) const override;
  nlohmann::json to_json() const override;
  static GnbArm from_json(const nlohmann::json& j);

  double purchase_probability(const Session& session) const;
  const GnbModel& model() const;
  const LogisticPriceMap& price_map() const { return map_; }

 private:
  std::optional<GnbModel> model_;
  LogisticPriceMap map_;
  PriceGrid grid_;
};

// Naive Bayes with an extra categorical feature: the k-means cluster of the
// session features, with Laplace-smoothed P(cluster | y).
struct GnbcModel {
  ClusterModel clusters;
  GnbModel gnb;
  std::array<std::vector<double>, 2> cluster_log_probs;

  nlohmann::json to_json() const;
  static GnbcModel from_json(const nlohmann::json& j);
};

GnbcModel gnbc_fit(std::span<const LabeledExample> examples, std::size_t k, Rng& rng);
double gnbc_predict_proba(const GnbcModel& model, std::span<const double> features, double price);

class GnbcArm final : public PricingModel {
 public:
  GnbcArm(std::size_t k, LogisticPriceMap map, PriceGrid grid);
  GnbcArm(GnbcModel model, LogisticPriceMap map, PriceGrid grid);

  void fit(std::span<const Session> training, Rng& rng);

  std::string_view kind() const override { return "gnbc"; }
  bool trained() const override { return model_.has_value(); }
  double price(const Session& session) const override;
  nlohmann::json to_json() const override;
  static GnbcArm from_json(const nlohmann::json& j);

  double purchase_probability(const Session& session) const;
  const GnbcModel& model() const;
  const LogisticPriceMap& price_map() const { return map_; }

 private:
  std::size_t k_;
  std::optional<GnbcModel> model_;
  LogisticPriceMap map_;
  PriceGrid grid_;
};

// Neural purchase-probability estimate with price as an input, followed by
// exhaustive search of the price grid for maximal expected revenue.
class DnnArm final : public PricingModel {
 public:
  DnnArm(MlpConfig config, PriceGrid grid);
  DnnArm(MlpModel model, PriceGrid grid);

  void fit(std::span<const Session> training, Rng& rng);

  std::string_view kind() const override { return "dnn"; }
  bool trained() const override { return model_.has_value(); }
  double price(const Session& session) const override;
  nlohmann::json to_json() const override;
  static DnnArm from_json(const nlohmann::json& j);

  double purchase_probability(const Session& session, double price) const;
  const MlpModel& model() const;

 private:
  MlpConfig config_;
  std::optional<MlpModel> model_;
  PriceGrid grid_;
};

// Constant price regardless of the session. Baseline and test arm.
class FixedPriceArm final : public PricingModel {
 public:
  explicit FixedPriceArm(double price);

  std::string_view kind() const override { return "fixed"; }
  bool trained() const override { return true; }
  double price(const Session&) const override { return price_; }
  nlohmann::json to_json() const override;

 private:
  double price_;
};

std::vector<LabeledExample> to_labeled_examples(std::span<const Session> sessions);

// Dispatches on the "kind" field written by PricingModel::to_json.
std::unique_ptr<PricingModel> load_pricing_model(const nlohmann::json& j);

}  // namespace tsroute
