#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tsroute/random.hpp"

namespace tsroute {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

// Feed-forward purchase-probability network: sigmoid hidden layers and a
// single sigmoid output. Inputs are (features..., price), standardized by
// the stored shift/scale before the first layer.
struct MlpModel {
  std::vector<DenseLayer> layers;
  Eigen::VectorXd input_shift;
  Eigen::VectorXd input_scale;
  double w_pos = 1.0;

  std::size_t input_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols()); }

  // Zero-initialized network with identity input scaling.
  static MlpModel zeros(std::size_t input_dim, const std::vector<std::size_t>& hidden);

  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);
};

double sigmoid(double z);

double mlp_forward(const MlpModel& model, std::span<const double> input);

// Mean weighted cross-entropy over a batch of standardized rows (one row per
// example): -(1/n) sum [w_pos y log q + (1 - y) log(1 - q)].
double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels,
                double w_pos);

// Same loss, plus d(loss)/d(parameter) for every layer in `grad`.
double mlp_loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs,
                             const Eigen::VectorXd& labels, double w_pos,
                             std::vector<DenseLayer>& grad);

struct MlpConfig {
  std::size_t epochs = 2000;
  double learning_rate = 0.5;
  double w_pos = 1.0;
  std::vector<std::size_t> hidden{16};
};

struct MlpSample {
  std::vector<double> input;  // features followed by price
  int label = 0;
};

// Full-batch gradient descent. `loss_history`, when given, receives the
// training loss before every epoch and once after the last.
MlpModel mlp_train(std::span<const MlpSample> data, const MlpConfig& config, Rng& rng,
                   std::vector<double>* loss_history = nullptr);

}  // namespace tsroute
