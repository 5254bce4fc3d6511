#include "tsroute/simenv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tsroute/errors.hpp"

namespace tsroute {

int WtpOracle::operator()(const Session& session, double offered_price) const {
  if (!(offered_price > 0.0)) {
    throw std::invalid_argument("offered price must be positive, got " + std::to_string(offered_price));
  }
  return session.y == 1 && offered_price <= session.historical_price ? 1 : 0;
}

int oracle_reward(const Session& session, double offered_price) {
  return WtpOracle{}(session, offered_price);
}

// --- generator --------------------------------------------------------------

namespace {

struct Moments {
  double mean;
  double sd;
};

Moments moments(const WtpDistribution& d) {
  return std::visit(
      [](const auto& w) -> Moments {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, LogNormalWtp>) {
          const double s2 = w.sigma * w.sigma;
          const double mean = std::exp(w.mu + 0.5 * s2);
          return {mean, mean * std::sqrt(std::expm1(s2))};
        } else {
          return {0.5 * (w.lo + w.hi), (w.hi - w.lo) / std::sqrt(12.0)};
        }
      },
      d);
}

double draw(const WtpDistribution& d, Rng& rng) {
  return std::visit(
      [&](const auto& w) -> double {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, LogNormalWtp>) {
          return std::lognormal_distribution<double>(w.mu, w.sigma)(rng);
        } else {
          return std::uniform_real_distribution<double>(w.lo, w.hi)(rng);
        }
      },
      d);
}

double draw(const HistoricalPricing& p, Rng& rng) {
  return std::visit(
      [&](const auto& h) -> double {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, ConstantPricing>) {
          return h.price;
        } else {
          return std::uniform_real_distribution<double>(h.lo, h.hi)(rng);
        }
      },
      p);
}

void validate_wtp(const WtpDistribution& d) {
  std::visit(
      [](const auto& w) {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, LogNormalWtp>) {
          if (!std::isfinite(w.mu) || !(w.sigma > 0.0)) {
            throw ParameterError("log-normal WTP needs finite mu and sigma > 0");
          }
        } else {
          if (!(w.lo >= 0.0) || !(w.lo < w.hi)) throw ParameterError("uniform WTP needs 0 <= lo < hi");
        }
      },
      d);
}

}  // namespace

void GeneratorConfig::validate() const {
  validate_wtp(wtp);
  if (wtp_after) validate_wtp(*wtp_after);
  if (changepoint.has_value() != wtp_after.has_value()) {
    throw ParameterError("changepoint and wtp_after must be given together");
  }
  std::visit(
      [](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, ConstantPricing>) {
          if (!(h.price > 0.0)) throw ParameterError("constant historical price must be positive");
        } else {
          if (!(h.lo > 0.0) || !(h.lo < h.hi)) {
            throw ParameterError("uniform historical pricing needs 0 < lo < hi");
          }
        }
      },
      pricing);
  if (!loadings.empty() && loadings.size() != feature_dim) {
    throw ParameterError("loadings must have one entry per feature");
  }
  if (!(noise_sd >= 0.0)) throw ParameterError("noise_sd must be non-negative");
}

SessionLog generate_synthetic_sessions(const GeneratorConfig& config) {
  config.validate();
  Rng rng = make_stream(config.seed, "sessions");
  std::normal_distribution<double> noise(0.0, 1.0);

  SessionLog log;
  log.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    const bool shifted = config.changepoint && i >= *config.changepoint;
    const WtpDistribution& dist = shifted ? *config.wtp_after : config.wtp;
    const Moments mom = moments(dist);

    const double w = draw(dist, rng);
    const double price = draw(config.pricing, rng);
    const double z = mom.sd > 0.0 ? (w - mom.mean) / mom.sd : 0.0;

    Session s;
    s.id = "s" + std::to_string(i);
    s.features.resize(config.feature_dim);
    for (std::size_t j = 0; j < config.feature_dim; ++j) {
      const double loading = config.loadings.empty() ? 1.0 : config.loadings[j];
      s.features[j] = loading * z + config.noise_sd * noise(rng);
    }
    s.historical_price = price;
    s.y = price <= w ? 1 : 0;
    log.push_back(std::move(s));
  }
  return log;
}

// --- Bernoulli --------------------------------------------------------------

void BernoulliEnv::validate() const {
  if (theta.empty()) throw ParameterError("Bernoulli environment needs at least one arm");
  auto check = [](const std::vector<double>& v) {
    for (double x : v) {
      if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("Bernoulli rates must lie in [0, 1]");
    }
  };
  check(theta);
  if (!prices.empty() && prices.size() != theta.size()) {
    throw ParameterError("Bernoulli prices must have one entry per arm");
  }
  for (double p : prices) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ParameterError("Bernoulli prices must be non-negative");
  }
  if (changepoint) {
    if (theta_after.size() != theta.size()) {
      throw ParameterError("theta_after must have one entry per arm");
    }
    check(theta_after);
  }
}

double BernoulliEnv::rate(std::size_t arm, std::uint64_t t) const {
  if (arm >= theta.size()) throw std::out_of_range("unknown Bernoulli arm " + std::to_string(arm));
  return changepoint && t >= *changepoint ? theta_after[arm] : theta[arm];
}

int bernoulli_step(const BernoulliEnv& env, std::size_t arm, std::uint64_t t, Rng& rng) {
  const double p = env.rate(arm, t);
  return uniform01(rng) < p ? 1 : 0;
}

// --- CSV --------------------------------------------------------------------

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, std::size_t line, std::size_t col,
                    const std::string& name) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + " (" +
                         name + "): not a finite number: '" + text + "'",
                     line, col);
  }
  return v;
}

}  // namespace

SessionLog read_sessions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("session CSV: missing header", 1, 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  const auto bad_header = [&](std::size_t col, const std::string& want) {
    return ParseError("line 1, column " + std::to_string(col) + ": header expected '" + want + "'", 1,
                      col);
  };
  if (header.size() < 3) throw ParseError("line 1: header must be id,f0..,historical_price,y", 1, 1);
  if (header.front() != "id") throw bad_header(1, "id");
  const std::size_t d = header.size() - 3;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j + 1] != "f" + std::to_string(j)) throw bad_header(j + 2, "f" + std::to_string(j));
  }
  if (header[d + 1] != "historical_price") throw bad_header(d + 2, "historical_price");
  if (header[d + 2] != "y") throw bad_header(d + 3, "y");

  SessionLog log;
  std::set<std::string> ids;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                           std::to_string(header.size()) + " columns, got " +
                           std::to_string(fields.size()),
                       lineno, std::min(fields.size(), header.size()) + 1);
    }
    Session s;
    s.id = fields[0];
    if (s.id.empty() || !ids.insert(s.id).second) {
      throw ParseError("line " + std::to_string(lineno) + ", column 1 (id): empty or duplicate id '" +
                           s.id + "'",
                       lineno, 1);
    }
    s.features.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      s.features[j] = parse_number(fields[j + 1], lineno, j + 2, header[j + 1]);
    }
    s.historical_price = parse_number(fields[d + 1], lineno, d + 2, "historical_price");
    if (!(s.historical_price > 0.0)) {
      throw ParseError("line " + std::to_string(lineno) + ", column " + std::to_string(d + 2) +
                           " (historical_price): must be positive",
                       lineno, d + 2);
    }
    const auto& yf = fields[d + 2];
    if (yf != "0" && yf != "1") {
      throw ParseError("line " + std::to_string(lineno) + ", column " + std::to_string(d + 3) +
                           " (y): must be 0 or 1, got '" + yf + "'",
                       lineno, d + 3);
    }
    s.y = yf == "1" ? 1 : 0;
    log.push_back(std::move(s));
  }
  return log;
}

void write_sessions(const SessionLog& log, std::ostream& out) {
  const std::size_t d = log.empty() ? 0 : log.front().features.size();
  out << "id";
  for (std::size_t j = 0; j < d; ++j) out << ",f" << j;
  out << ",historical_price,y\n";
  for (const auto& s : log) {
    if (s.features.size() != d) throw std::invalid_argument("sessions have differing feature counts");
    if (s.id.empty() || s.id.find_first_of(",\r\n") != std::string::npos) {
      throw std::invalid_argument("session id '" + s.id + "' cannot be written as a CSV field");
    }
    out << s.id;
    for (double f : s.features) out << ',' << format_double(f);
    out << ',' << format_double(s.historical_price) << ',' << s.y << '\n';
  }
}

SessionLog load_sessions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open session file " + path.string());
  try {
    return read_sessions(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line(), e.column());
  }
}

void save_sessions(const SessionLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write session file " + path.string());
  write_sessions(log, out);
}

}  // namespace tsroute
