#include <gtest/gtest.h>

#include <random>
#include <stdexcept>

#include "tsroute/harness.hpp"
#include "tsroute/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tsroute {
namespace {

class ParallelTest : public ::testing::Test {
 protected:
  void SetUp() override {
#ifdef _OPENMP
    // Oversubscribe on purpose so the parallel paths really interleave.
    omp_set_num_threads(4);
#endif
  }
};

std::vector<Point> random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<Point> pts(n, Point(d));
  for (auto& p : pts) {
    for (auto& x : p) x = g(gen);
  }
  return pts;
}

TEST_F(ParallelTest, AssignNearestMatchesSerial) {
  const auto pts = random_points(5000, 4, 1);
  const auto cents = random_points(7, 4, 2);
  std::vector<std::size_t> a(pts.size()), b(pts.size());
  const double wa = assign_nearest(pts, cents, a);
  const double wb = serial::assign_nearest(pts, cents, b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(wa, wb);
}

TEST_F(ParallelTest, AssignNearestTiesGoToLowestIndex) {
  std::vector<Point> pts{{0.0}};
  std::vector<Point> cents{{-1.0}, {1.0}};
  std::vector<std::size_t> out(1);
  assign_nearest(pts, cents, out);
  EXPECT_EQ(out[0], 0u);
  std::vector<std::size_t> wrong(2);
  EXPECT_THROW(assign_nearest(pts, cents, wrong), std::invalid_argument);
}

TEST_F(ParallelTest, ReplicateKeepsIndexOrder) {
  auto fn = [](std::size_t i) {
    Rng rng = make_stream(i, "work");
    double s = 0.0;
    for (int k = 0; k < 1000; ++k) s += uniform01(rng);
    return s;
  };
  EXPECT_EQ(replicate(64, fn), serial::replicate(64, fn));
  EXPECT_EQ(replicate(Execution::parallel, 5, fn), replicate(Execution::serial, 5, fn));
  EXPECT_TRUE(replicate(0, fn).empty());
}

TEST_F(ParallelTest, ReplicateRethrows) {
  auto fn = [](std::size_t i) -> int {
    if (i == 13) throw std::runtime_error("task 13");
    return static_cast<int>(i);
  };
  EXPECT_THROW(replicate(40, fn), std::runtime_error);
  EXPECT_THROW(serial::replicate(40, fn), std::runtime_error);
}

TEST_F(ParallelTest, PriceTableMatchesSerial) {
  GeneratorConfig g;
  g.n = 1200;
  g.feature_dim = 2;
  g.seed = 3;
  const auto sessions = generate_synthetic_sessions(g);
  const auto grid = PriceGrid::make(5.0, 15.0);
  auto gnb = std::make_shared<GnbArm>(LogisticPriceMap{5.0, 15.0, 10.0, NAN}, grid);
  gnb->fit(sessions);
  MlpConfig cfg;
  cfg.epochs = 50;
  cfg.hidden = {4};
  auto dnn = std::make_shared<DnnArm>(cfg, grid);
  Rng rng = make_stream(3, "training");
  dnn->fit(sessions, rng);
  const std::vector<NamedArm> arms{{"gnb", gnb}, {"dnn", dnn}, {"flat", std::make_shared<FixedPriceArm>(9.0)}};
  const auto a = price_sessions(sessions, arms, Execution::parallel);
  const auto b = price_sessions(sessions, arms, Execution::serial);
  EXPECT_EQ(a.prices, b.prices);
  EXPECT_EQ(a.at(5, 2), 9.0);
}

TEST_F(ParallelTest, ClusteringUnaffectedByThreads) {
  const auto pts = random_points(3000, 3, 4);
  Rng r1 = make_stream(9, "k"), r2 = make_stream(9, "k");
  const auto a = cluster_features(pts, 6, r1);
#ifdef _OPENMP
  omp_set_num_threads(1);
#endif
  const auto b = cluster_features(pts, 6, r2);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_EQ(a.objective_history, b.objective_history);
}

}  // namespace
}  // namespace tsroute
