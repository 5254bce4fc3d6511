#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "tsroute/errors.hpp"
#include "tsroute/simenv.hpp"

namespace tsroute {
namespace {

Session session(int y, double price) { return Session{"s", {0.0}, price, y}; }

TEST(Oracle, Examples) {
  EXPECT_EQ(oracle_reward(session(1, 10.0), 8.0), 1);
  EXPECT_EQ(oracle_reward(session(1, 10.0), 12.0), 0);
  EXPECT_EQ(oracle_reward(session(0, 10.0), 15.0), 0);
  EXPECT_EQ(oracle_reward(session(1, 10.0), 10.0), 1);
  EXPECT_EQ(oracle_reward(session(0, 10.0), 5.0), 0);
  EXPECT_THROW(oracle_reward(session(1, 10.0), 0.0), std::invalid_argument);
}

TEST(Oracle, MonotoneStepInOfferedPrice) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.5, 30.0);
  for (int i = 0; i < 2000; ++i) {
    const Session s = session(static_cast<int>(gen() % 2), u(gen));
    int prev = 1;
    for (int k = 1; k <= 100; ++k) {
      const double offer = 0.3 * k;
      const int d = oracle_reward(s, offer);
      EXPECT_LE(d, prev);
      EXPECT_EQ(d, s.y == 1 && offer <= s.historical_price ? 1 : 0);
      prev = d;
    }
  }
}

TEST(Generator, EmptyLog) {
  GeneratorConfig g;
  g.n = 0;
  EXPECT_TRUE(generate_synthetic_sessions(g).empty());
}

TEST(Generator, PurchaseRateMatchesAnalyticValue) {
  // WTP ~ U(0, 10) with constant price 7: P(7 <= W) = 0.3.
  GeneratorConfig g;
  g.n = 10000;
  g.wtp = UniformWtp{0.0, 10.0};
  g.pricing = ConstantPricing{7.0};
  g.seed = 3;
  const auto log = generate_synthetic_sessions(g);
  double buys = 0;
  for (const auto& s : log) buys += s.y;
  const double sigma = std::sqrt(0.3 * 0.7 / g.n);
  EXPECT_NEAR(buys / g.n, 0.3, 3.0 * sigma);
}

TEST(Generator, LogNormalPurchaseRate) {
  // P(W >= 10) for log W ~ N(2.3, 0.5) is 1 - Phi((ln 10 - 2.3) / 0.5).
  GeneratorConfig g;
  g.n = 10000;
  g.pricing = ConstantPricing{10.0};
  g.seed = 4;
  const auto log = generate_synthetic_sessions(g);
  double buys = 0;
  for (const auto& s : log) buys += s.y;
  const double p = 0.5 * std::erfc((std::log(10.0) - 2.3) / 0.5 / std::sqrt(2.0));
  EXPECT_NEAR(buys / g.n, p, 3.0 * std::sqrt(p * (1 - p) / g.n));
}

TEST(Generator, SameSeedIsByteIdentical) {
  GeneratorConfig g;
  g.n = 500;
  g.seed = 9;
  std::ostringstream a, b;
  write_sessions(generate_synthetic_sessions(g), a);
  write_sessions(generate_synthetic_sessions(g), b);
  EXPECT_EQ(a.str(), b.str());
  g.seed = 10;
  std::ostringstream c;
  write_sessions(generate_synthetic_sessions(g), c);
  EXPECT_NE(a.str(), c.str());
}

TEST(Generator, FeaturesTrackWillingnessToPay) {
  GeneratorConfig g;
  g.n = 4000;
  g.feature_dim = 2;
  g.noise_sd = 0.3;
  g.loadings = {1.0, -1.0};
  g.seed = 5;
  const auto log = generate_synthetic_sessions(g);
  double m1 = 0, m0 = 0;
  int n1 = 0, n0 = 0;
  for (const auto& s : log) {
    (s.y ? m1 : m0) += s.features[0];
    (s.y ? n1 : n0) += 1;
    EXPECT_EQ(s.features.size(), 2u);
  }
  EXPECT_GT(m1 / n1, m0 / n0);
}

TEST(Generator, ChangepointShiftsPurchaseRate) {
  GeneratorConfig g;
  g.n = 8000;
  g.wtp = UniformWtp{0.0, 10.0};
  g.pricing = ConstantPricing{7.0};
  g.changepoint = 4000;
  g.wtp_after = UniformWtp{0.0, 20.0};
  g.seed = 6;
  const auto log = generate_synthetic_sessions(g);
  double before = 0, after = 0;
  for (std::size_t i = 0; i < log.size(); ++i) (i < 4000 ? before : after) += log[i].y;
  EXPECT_NEAR(before / 4000, 0.30, 0.03);
  EXPECT_NEAR(after / 4000, 0.65, 0.03);
}

TEST(Generator, InvalidConfigRejected) {
  GeneratorConfig g;
  g.loadings = {1.0};
  EXPECT_THROW(g.validate(), ParameterError);
  GeneratorConfig h;
  h.wtp = UniformWtp{5.0, 1.0};
  EXPECT_THROW(h.validate(), ParameterError);
  GeneratorConfig k;
  k.changepoint = 3;
  EXPECT_THROW(k.validate(), ParameterError);
}

TEST(Bernoulli, DeterministicRates) {
  BernoulliEnv env{{1.0, 0.0}, {}, {}, {}};
  Rng rng = make_stream(1, "environment");
  for (int t = 0; t < 1000; ++t) {
    EXPECT_EQ(bernoulli_step(env, 0, t, rng), 1);
    EXPECT_EQ(bernoulli_step(env, 1, t, rng), 0);
  }
}

TEST(Bernoulli, EmpiricalMean) {
  BernoulliEnv env{{0.6}, {}, {}, {}};
  Rng rng = make_stream(2, "environment");
  double total = 0;
  for (int t = 0; t < 100000; ++t) total += bernoulli_step(env, 0, t, rng);
  EXPECT_NEAR(total / 100000, 0.6, 0.005);
}

TEST(Bernoulli, OneUniformPerStepWhateverTheArm) {
  // Common random numbers: two runs pulling different arms stay in lockstep.
  BernoulliEnv env{{0.3, 0.3}, {}, {}, {}};
  Rng a = make_stream(3, "environment");
  Rng b = make_stream(3, "environment");
  for (int t = 0; t < 500; ++t) {
    EXPECT_EQ(bernoulli_step(env, 0, t, a), bernoulli_step(env, 1, t, b));
  }
}

TEST(Bernoulli, Changepoint) {
  BernoulliEnv env{{0.2, 0.8}, {}, 100, {0.8, 0.2}};
  env.validate();
  EXPECT_EQ(env.rate(0, 99), 0.2);
  EXPECT_EQ(env.rate(0, 100), 0.8);
  EXPECT_THROW((BernoulliEnv{{1.5}, {}, {}, {}}.validate()), ParameterError);
  EXPECT_THROW((BernoulliEnv{{0.5}, {1.0, 2.0}, {}, {}}.validate()), ParameterError);
}

TEST(Csv, RoundTrip) {
  GeneratorConfig g;
  g.n = 300;
  g.feature_dim = 4;
  g.seed = 11;
  const auto log = generate_synthetic_sessions(g);
  std::stringstream ss;
  write_sessions(log, ss);
  EXPECT_EQ(read_sessions(ss), log);
}

TEST(Csv, HeaderOnlyIsEmptyLog) {
  std::istringstream in("id,f0,f1,historical_price,y\n");
  EXPECT_TRUE(read_sessions(in).empty());
}

TEST(Csv, BadLabelReportsLine) {
  std::istringstream in("id,f0,historical_price,y\na,0.5,10,1\nb,0.1,12,2\n");
  try {
    read_sessions(in);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 4u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Csv, OtherMalformedInput) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_sessions(in);
  };
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("id,price,y\n"), ParseError);
  EXPECT_THROW(parse("id,f0,historical_price,y\na,x,10,1\n"), ParseError);
  EXPECT_THROW(parse("id,f0,historical_price,y\na,1,-3,1\n"), ParseError);
  EXPECT_THROW(parse("id,f0,historical_price,y\na,1,3\n"), ParseError);
  EXPECT_THROW(parse("id,f0,historical_price,y\na,1,3,1\na,2,4,0\n"), ParseError);
}

}  // namespace
}  // namespace tsroute
