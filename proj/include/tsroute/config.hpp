#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tsroute/harness.hpp"
#include "tsroute/mlp.hpp"
#include "tsroute/pricing.hpp"
#include "tsroute/simenv.hpp"

namespace tsroute {

// Invalid run configuration or command-line usage (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ArmSpec {
  std::string name;
  std::string kind;  // gnb | gnbc | dnn | fixed | file
  std::size_t k = 4;
  MlpConfig mlp;
  double price = 0.0;
  std::filesystem::path path;
  std::optional<double> steepness;
  std::optional<double> midpoint;
};

struct BernoulliSpec {
  BernoulliEnv env;
  std::uint64_t steps = 2000;
  std::vector<std::string> arm_names;
};
struct ReplaySpec {
  std::filesystem::path sessions;
  std::optional<std::filesystem::path> train_sessions;
};
struct SyntheticSpec {
  GeneratorConfig generator;
  std::size_t train_n = 4000;
};
using EnvironmentSpec = std::variant<BernoulliSpec, ReplaySpec, SyntheticSpec>;

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  EnvironmentSpec environment = default_bernoulli();
  std::vector<ArmSpec> arms;
  std::optional<PriceGrid> grid;
  double steepness = 10.0;
  std::optional<double> midpoint;
  std::optional<nlohmann::json> policy;
  std::vector<nlohmann::json> policies;
  MetricOptions metrics;
  std::size_t n_seeds = 20;
  GeneratorConfig generator;

  // Three arms at 0.45 / 0.55 / 0.60 for 2000 steps.
  static BernoulliSpec default_bernoulli();

  std::vector<std::string> arm_names() const;
  // Resolve a policy object against the configured arms.
  Policy resolve_policy(const nlohmann::json& j) const;
};

// Parses and validates everything up front; throws ConfigError.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

GeneratorConfig parse_generator(const nlohmann::json& j);

}  // namespace tsroute
