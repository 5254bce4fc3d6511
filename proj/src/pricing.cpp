#include "tsroute/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tsroute/errors.hpp"

namespace tsroute {

namespace {

std::vector<double> with_price(const SessionFeatures& features, double price) {
  std::vector<double> x(features);
  x.push_back(price);
  return x;
}

void require_trained(bool trained, std::string_view kind) {
  if (!trained) throw std::logic_error(std::string(kind) + " arm used before training");
}

}  // namespace

// --- grid & price map -------------------------------------------------------

PriceGrid PriceGrid::make(double min_price, double max_price, double step) {
  PriceGrid g{min_price, max_price, step > 0.0 ? step : (max_price - min_price) / 100.0};
  g.validate();
  return g;
}

void PriceGrid::validate() const {
  if (!std::isfinite(min_price) || !std::isfinite(max_price) || !(min_price < max_price)) {
    throw ParameterError("price grid needs finite min < max");
  }
  if (!(step > 0.0) || step > max_price - min_price) {
    throw ParameterError("price grid step must be in (0, max - min]");
  }
}

std::vector<double> PriceGrid::points() const {
  validate();
  const auto n = static_cast<std::size_t>(std::floor((max_price - min_price) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::min(min_price + static_cast<double>(i) * step, max_price);
  return out;
}

double PriceGrid::snap(double price) const {
  const auto pts = points();
  double best = pts.front();
  double best_d = std::abs(price - best);
  for (double p : pts) {
    const double d = std::abs(price - p);
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

nlohmann::json PriceGrid::to_json() const {
  return {{"min", min_price}, {"max", max_price}, {"step", step}};
}

PriceGrid PriceGrid::from_json(const nlohmann::json& j) {
  return make(j.at("min").get<double>(), j.at("max").get<double>(), j.value("step", 0.0));
}

void LogisticPriceMap::validate() const {
  if (!(p_min < p_max)) throw ParameterError("logistic price map needs p_min < p_max");
  if (!(steepness > 0.0)) throw ParameterError("logistic price map needs steepness > 0");
}

nlohmann::json LogisticPriceMap::to_json() const {
  nlohmann::json j = {{"p_min", p_min}, {"p_max", p_max}, {"steepness", steepness}};
  j["midpoint"] = std::isnan(midpoint) ? nlohmann::json(nullptr) : nlohmann::json(midpoint);
  return j;
}

LogisticPriceMap LogisticPriceMap::from_json(const nlohmann::json& j) {
  LogisticPriceMap m;
  m.p_min = j.at("p_min").get<double>();
  m.p_max = j.at("p_max").get<double>();
  m.steepness = j.value("steepness", 10.0);
  const auto mid = j.find("midpoint");
  m.midpoint = (mid == j.end() || mid->is_null()) ? std::numeric_limits<double>::quiet_NaN()
                                                  : mid->get<double>();
  m.validate();
  return m;
}

double logistic_price_map(double prob, const LogisticPriceMap& map) {
  map.validate();
  return map.p_min + (map.p_max - map.p_min) * sigmoid(map.steepness * (prob - map.midpoint));
}

double exhaustive_search_price(const std::function<double(double)>& prob_fn,
                               std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("exhaustive price search over an empty grid");
  std::vector<double> prices(grid.begin(), grid.end());
  std::sort(prices.begin(), prices.end());
  double best_price = prices.front();
  double best_revenue = best_price * prob_fn(best_price);
  for (std::size_t i = 1; i < prices.size(); ++i) {
    const double revenue = prices[i] * prob_fn(prices[i]);
    if (revenue > best_revenue) {
      best_revenue = revenue;
      best_price = prices[i];
    }
  }
  return best_price;
}

double exhaustive_search_price(const std::function<double(double)>& prob_fn, const PriceGrid& grid) {
  const auto pts = grid.points();
  return exhaustive_search_price(prob_fn, std::span<const double>(pts));
}

std::vector<LabeledExample> to_labeled_examples(std::span<const Session> sessions) {
  std::vector<LabeledExample> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back({s.features, s.historical_price, s.y});
  return out;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

LogisticPriceMap checked_map(LogisticPriceMap map, const PriceGrid& grid) {
  map.validate();
  grid.validate();
  if (map.p_min < grid.min_price || map.p_max > grid.max_price) {
    throw ParameterError("logistic price map range must lie inside the price grid");
  }
  return map;
}

}  // namespace

// --- GNB arm ----------------------------------------------------------------

GnbArm::GnbArm(LogisticPriceMap map, PriceGrid grid) : map_(checked_map(map, grid)), grid_(grid) {}

GnbArm::GnbArm(GnbModel model, LogisticPriceMap map, PriceGrid grid)
    : model_(std::move(model)), map_(checked_map(map, grid)), grid_(grid) {
  if (std::isnan(map_.midpoint)) throw ParameterError("trained GNB arm needs a calibrated midpoint");
}

void GnbArm::fit(std::span<const Session> training) {
  const auto examples = to_labeled_examples(training);
  model_ = gnb_fit(examples);
  if (std::isnan(map_.midpoint)) {
    std::vector<double> probs;
    probs.reserve(training.size());
    for (const auto& s : training) probs.push_back(purchase_probability(s));
    map_.midpoint = median(std::move(probs));
  }
}

const GnbModel& GnbArm::model() const {
  require_trained(trained(), kind());
  return *model_;
}

double GnbArm::purchase_probability(const Session& session) const {
  return gnb_predict_proba(model(), session.features, session.historical_price);
}

double GnbArm::price(const Session& session) const {
  return grid_.snap(logistic_price_map(purchase_probability(session), map_));
}

nlohmann::json GnbArm::to_json() const {
  return {{"kind", "gnb"}, {"model", model().to_json()}, {"price_map", map_.to_json()},
          {"grid", grid_.to_json()}};
}

GnbArm GnbArm::from_json(const nlohmann::json& j) {
  return GnbArm(GnbModel::from_json(j.at("model")), LogisticPriceMap::from_json(j.at("price_map")),
                PriceGrid::from_json(j.at("grid")));
}

// --- GNBC -------------------------------------------------------------------

GnbcModel gnbc_fit(std::span<const LabeledExample> examples, std::size_t k, Rng& rng) {
  if (examples.empty()) throw std::invalid_argument("GNBC fit on an empty training set");
  std::vector<Point> points;
  points.reserve(examples.size());
  for (const auto& e : examples) points.push_back(e.features);

  GnbcModel m;
  m.gnb = gnb_fit(examples);
  m.clusters = cluster_features(points, k, rng);

  std::array<std::vector<double>, 2> counts{std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)};
  std::array<double, 2> totals{0.0, 0.0};
  for (std::size_t i = 0; i < examples.size(); ++i) {
    counts[examples[i].label][m.clusters.assignment[i]] += 1.0;
    totals[examples[i].label] += 1.0;
  }
  for (int c = 0; c < 2; ++c) {
    m.cluster_log_probs[c].resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      m.cluster_log_probs[c][j] = std::log((counts[c][j] + 1.0) / (totals[c] + static_cast<double>(k)));
    }
  }
  return m;
}

double gnbc_predict_proba(const GnbcModel& model, std::span<const double> features, double price) {
  if (features.size() != model.gnb.feature_dim()) {
    throw std::invalid_argument("GNBC expects " + std::to_string(model.gnb.feature_dim()) +
                                " features, got " + std::to_string(features.size()));
  }
  const std::size_t cluster = model.clusters.assign(features);
  return posterior_from_log_joints(
      model.gnb.log_joint(0, features, price) + model.cluster_log_probs[0][cluster],
      model.gnb.log_joint(1, features, price) + model.cluster_log_probs[1][cluster]);
}

nlohmann::json GnbcModel::to_json() const {
  return {{"gnb", gnb.to_json()},
          {"clusters", clusters.to_json()},
          {"cluster_log_probs", {cluster_log_probs[0], cluster_log_probs[1]}}};
}

GnbcModel GnbcModel::from_json(const nlohmann::json& j) {
  GnbcModel m;
  m.gnb = GnbModel::from_json(j.at("gnb"));
  m.clusters = ClusterModel::from_json(j.at("clusters"));
  for (int c = 0; c < 2; ++c) {
    m.cluster_log_probs[c] = j.at("cluster_log_probs").at(c).get<std::vector<double>>();
    if (m.cluster_log_probs[c].size() != m.clusters.k()) {
      throw ParameterError("GNBC JSON: cluster probabilities do not match k");
    }
  }
  return m;
}

GnbcArm::GnbcArm(std::size_t k, LogisticPriceMap map, PriceGrid grid)
    : k_(k), map_(checked_map(map, grid)), grid_(grid) {
  if (k_ == 0) throw ParameterError("GNBC needs k >= 1");
}

GnbcArm::GnbcArm(GnbcModel model, LogisticPriceMap map, PriceGrid grid)
    : k_(model.clusters.k()), model_(std::move(model)), map_(checked_map(map, grid)), grid_(grid) {
  if (std::isnan(map_.midpoint)) throw ParameterError("trained GNBC arm needs a calibrated midpoint");
}

void GnbcArm::fit(std::span<const Session> training, Rng& rng) {
  const auto examples = to_labeled_examples(training);
  model_ = gnbc_fit(examples, k_, rng);
  if (std::isnan(map_.midpoint)) {
    std::vector<double> probs;
    probs.reserve(training.size());
    for (const auto& s : training) probs.push_back(purchase_probability(s));
    map_.midpoint = median(std::move(probs));
  }
}

const GnbcModel& GnbcArm::model() const {
  require_trained(trained(), kind());
  return *model_;
}

double GnbcArm::purchase_probability(const Session& session) const {
  return gnbc_predict_proba(model(), session.features, session.historical_price);
}

double GnbcArm::price(const Session& session) const {
  return grid_.snap(logistic_price_map(purchase_probability(session), map_));
}

nlohmann::json GnbcArm::to_json() const {
  return {{"kind", "gnbc"}, {"model", model().to_json()}, {"price_map", map_.to_json()},
          {"grid", grid_.to_json()}};
}

GnbcArm GnbcArm::from_json(const nlohmann::json& j) {
  return GnbcArm(GnbcModel::from_json(j.at("model")), LogisticPriceMap::from_json(j.at("price_map")),
                 PriceGrid::from_json(j.at("grid")));
}

// --- DNN --------------------------------------------------------------------

DnnArm::DnnArm(MlpConfig config, PriceGrid grid) : config_(std::move(config)), grid_(grid) {
  grid_.validate();
}

DnnArm::DnnArm(MlpModel model, PriceGrid grid) : model_(std::move(model)), grid_(grid) {
  grid_.validate();
  config_.w_pos = model_->w_pos;
}

void DnnArm::fit(std::span<const Session> training, Rng& rng) {
  std::vector<MlpSample> data;
  data.reserve(training.size());
  for (const auto& s : training) data.push_back({with_price(s.features, s.historical_price), s.y});
  model_ = mlp_train(data, config_, rng);
}

const MlpModel& DnnArm::model() const {
  require_trained(trained(), kind());
  return *model_;
}

double DnnArm::purchase_probability(const Session& session, double price) const {
  return mlp_forward(model(), with_price(session.features, price));
}

double DnnArm::price(const Session& session) const {
  const auto& m = model();
  auto x = with_price(session.features, 0.0);
  return exhaustive_search_price(
      [&](double p) {
        x.back() = p;
        return mlp_forward(m, x);
      },
      grid_);
}

nlohmann::json DnnArm::to_json() const {
  return {{"kind", "dnn"}, {"model", model().to_json()}, {"grid", grid_.to_json()}};
}

DnnArm DnnArm::from_json(const nlohmann::json& j) {
  return DnnArm(MlpModel::from_json(j.at("model")), PriceGrid::from_json(j.at("grid")));
}

// --- fixed ------------------------------------------------------------------

FixedPriceArm::FixedPriceArm(double price) : price_(price) {
  if (!(price > 0.0) || !std::isfinite(price)) throw ParameterError("fixed price must be positive");
}

nlohmann::json FixedPriceArm::to_json() const { return {{"kind", "fixed"}, {"price", price_}}; }

std::unique_ptr<PricingModel> load_pricing_model(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "gnb") return std::make_unique<GnbArm>(GnbArm::from_json(j));
  if (kind == "gnbc") return std::make_unique<GnbcArm>(GnbcArm::from_json(j));
  if (kind == "dnn") return std::make_unique<DnnArm>(DnnArm::from_json(j));
  if (kind == "fixed") return std::make_unique<FixedPriceArm>(j.at("price").get<double>());
  throw ParameterError("unknown pricing model kind '" + kind + "'");
}

}  // namespace tsroute
