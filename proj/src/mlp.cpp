#include "tsroute/mlp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tsroute/errors.hpp"

namespace tsroute {

namespace {

// log(1 + exp(x)) without overflow
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Eigen::MatrixXd sigmoid_m(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

void check_shapes(const MlpModel& m) {
  if (m.layers.empty()) throw std::invalid_argument("MLP has no layers");
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& L = m.layers[l];
    if (L.bias.size() != L.weights.rows()) throw std::invalid_argument("MLP bias/weight shape mismatch");
    if (l > 0 && L.weights.cols() != m.layers[l - 1].weights.rows()) {
      throw std::invalid_argument("MLP layer shapes do not chain");
    }
  }
  if (m.layers.back().weights.rows() != 1) throw std::invalid_argument("MLP output must be scalar");
  if (m.input_shift.size() != m.layers.front().weights.cols() ||
      m.input_scale.size() != m.layers.front().weights.cols()) {
    throw std::invalid_argument("MLP input scaling shape mismatch");
  }
}

// Activations a_0 = x (columns are examples), a_l = sigmoid(W_l a_{l-1} + b_l);
// the output layer's pre-activation is returned separately for a stable loss.
void forward_batch(const MlpModel& m, const Eigen::MatrixXd& x, std::vector<Eigen::MatrixXd>& acts,
                   Eigen::RowVectorXd& logits) {
  acts.clear();
  acts.push_back(x);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    Eigen::MatrixXd z = m.layers[l].weights * acts.back();
    z.colwise() += m.layers[l].bias;
    if (l + 1 == m.layers.size()) {
      logits = z.row(0);
      acts.push_back(sigmoid_m(z));
    } else {
      acts.push_back(sigmoid_m(z));
    }
  }
}

double batch_loss(const Eigen::RowVectorXd& logits, const Eigen::VectorXd& labels, double w_pos) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double y = labels[i];
    // -log q = softplus(-z), -log(1 - q) = softplus(z)
    total += w_pos * y * softplus(-z) + (1.0 - y) * softplus(z);
  }
  return total / static_cast<double>(logits.size());
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

MlpModel MlpModel::zeros(std::size_t input_dim, const std::vector<std::size_t>& hidden) {
  MlpModel m;
  std::size_t in = input_dim;
  for (std::size_t h : hidden) {
    m.layers.push_back({Eigen::MatrixXd::Zero(h, in), Eigen::VectorXd::Zero(h)});
    in = h;
  }
  m.layers.push_back({Eigen::MatrixXd::Zero(1, in), Eigen::VectorXd::Zero(1)});
  m.input_shift = Eigen::VectorXd::Zero(input_dim);
  m.input_scale = Eigen::VectorXd::Ones(input_dim);
  return m;
}

double mlp_forward(const MlpModel& model, std::span<const double> input) {
  check_shapes(model);
  if (input.size() != model.input_dim()) {
    throw std::invalid_argument("MLP expects " + std::to_string(model.input_dim()) +
                                " inputs, got " + std::to_string(input.size()));
  }
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
  a = (a - model.input_shift).cwiseQuotient(model.input_scale);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    Eigen::VectorXd z = model.layers[l].weights * a + model.layers[l].bias;
    a = z.unaryExpr([](double v) { return sigmoid(v); });
  }
  return a[0];
}

double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels,
                double w_pos) {
  check_shapes(model);
  std::vector<Eigen::MatrixXd> acts;
  Eigen::RowVectorXd logits;
  forward_batch(model, inputs.transpose(), acts, logits);
  return batch_loss(logits, labels, w_pos);
}

double mlp_loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs,
                             const Eigen::VectorXd& labels, double w_pos,
                             std::vector<DenseLayer>& grad) {
  check_shapes(model);
  if (inputs.rows() != labels.size() || inputs.rows() == 0) {
    throw std::invalid_argument("MLP batch: inputs and labels disagree in length");
  }
  std::vector<Eigen::MatrixXd> acts;
  Eigen::RowVectorXd logits;
  forward_batch(model, inputs.transpose(), acts, logits);
  const double n = static_cast<double>(inputs.rows());

  // dL/dz at the output: ((1 - y) q - w_pos y (1 - q)) / n
  const Eigen::RowVectorXd q = acts.back().row(0);
  Eigen::MatrixXd delta(1, q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double y = labels[i];
    delta(0, i) = ((1.0 - y) * q[i] - w_pos * y * (1.0 - q[i])) / n;
  }

  grad.resize(model.layers.size());
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    grad[l].weights = delta * acts[l].transpose();
    grad[l].bias = delta.rowwise().sum();
    if (l == 0) break;
    const Eigen::MatrixXd& a = acts[l];
    delta = (model.layers[l].weights.transpose() * delta).cwiseProduct(
        a.cwiseProduct((1.0 - a.array()).matrix()));
  }
  return batch_loss(logits, labels, w_pos);
}

MlpModel mlp_train(std::span<const MlpSample> data, const MlpConfig& config, Rng& rng,
                   std::vector<double>* loss_history) {
  if (data.empty()) throw std::invalid_argument("MLP training on an empty data set");
  if (!(config.learning_rate > 0.0) || !(config.w_pos > 0.0)) {
    throw ParameterError("MLP learning rate and w_pos must be positive");
  }
  const std::size_t d = data.front().input.size();
  const auto n = static_cast<Eigen::Index>(data.size());

  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(n);
  bool seen[2] = {false, false};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = data[static_cast<std::size_t>(i)];
    if (s.input.size() != d) throw std::invalid_argument("MLP training: ragged input rows");
    if (s.label != 0 && s.label != 1) throw std::invalid_argument("MLP training: labels must be 0/1");
    seen[s.label] = true;
    for (std::size_t j = 0; j < d; ++j) x(i, static_cast<Eigen::Index>(j)) = s.input[j];
    y[i] = s.label;
  }
  if (!seen[0] || !seen[1]) throw std::invalid_argument("MLP training needs both classes");

  MlpModel m = MlpModel::zeros(d, config.hidden);
  m.w_pos = config.w_pos;
  m.input_shift = x.colwise().mean().transpose();
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = x.col(static_cast<Eigen::Index>(j)).array() - m.input_shift[static_cast<Eigen::Index>(j)];
    const double sd = std::sqrt(col.square().mean());
    m.input_scale[static_cast<Eigen::Index>(j)] = sd > 0.0 ? sd : 1.0;
  }
  const Eigen::MatrixXd xs =
      (x.rowwise() - m.input_shift.transpose()).array().rowwise() / m.input_scale.transpose().array();

  // Glorot-uniform initialization
  for (auto& layer : m.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = u(rng);
    }
  }

  std::vector<DenseLayer> grad;
  for (std::size_t epoch = 0; epoch <= config.epochs; ++epoch) {
    const double loss = mlp_loss_and_gradient(m, xs, y, config.w_pos, grad);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "MLP training diverged at epoch " << epoch << ": loss=" << loss
          << " (learning_rate=" << config.learning_rate << ", w_pos=" << config.w_pos << ")";
      throw std::runtime_error(msg.str());
    }
    if (loss_history) loss_history->push_back(loss);
    if (epoch == config.epochs) break;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      m.layers[l].weights -= config.learning_rate * grad[l].weights;
      m.layers[l].bias -= config.learning_rate * grad[l].bias;
    }
  }
  return m;
}

nlohmann::json MlpModel::to_json() const {
  nlohmann::json layers_j = nlohmann::json::array();
  for (const auto& L : layers) {
    std::vector<std::vector<double>> w(static_cast<std::size_t>(L.weights.rows()));
    for (Eigen::Index r = 0; r < L.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < L.weights.cols(); ++c) w[static_cast<std::size_t>(r)].push_back(L.weights(r, c));
    }
    layers_j.push_back({{"weights", w}, {"bias", std::vector<double>(L.bias.data(), L.bias.data() + L.bias.size())}});
  }
  return {{"layers", layers_j},
          {"input_shift", std::vector<double>(input_shift.data(), input_shift.data() + input_shift.size())},
          {"input_scale", std::vector<double>(input_scale.data(), input_scale.data() + input_scale.size())},
          {"w_pos", w_pos}};
}

MlpModel MlpModel::from_json(const nlohmann::json& j) {
  MlpModel m;
  for (const auto& lj : j.at("layers")) {
    const auto w = lj.at("weights").get<std::vector<std::vector<double>>>();
    const auto b = lj.at("bias").get<std::vector<double>>();
    DenseLayer L;
    const auto rows = static_cast<Eigen::Index>(w.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(w.front().size()) : 0;
    L.weights.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (static_cast<Eigen::Index>(w[static_cast<std::size_t>(r)].size()) != cols) {
        throw ParameterError("MLP JSON: ragged weight matrix");
      }
      for (Eigen::Index c = 0; c < cols; ++c) L.weights(r, c) = w[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    L.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    m.layers.push_back(std::move(L));
  }
  const auto shift = j.at("input_shift").get<std::vector<double>>();
  const auto scale = j.at("input_scale").get<std::vector<double>>();
  m.input_shift = Eigen::Map<const Eigen::VectorXd>(shift.data(), static_cast<Eigen::Index>(shift.size()));
  m.input_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  m.w_pos = j.at("w_pos").get<double>();
  try {
    check_shapes(m);
  } catch (const std::invalid_argument& e) {
    throw ParameterError(std::string("MLP JSON: ") + e.what());
  }
  return m;
}

}  // namespace tsroute
