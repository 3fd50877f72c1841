#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "stackgame/belief.hpp"

using namespace stackgame;

namespace {

// γ_f(1|0) = 0.2, γ_f(1|1) = 0.8.
FollowerPrescription example_follower() { return {{{0.8, 0.2}, {0.2, 0.8}}}; }

}  // namespace

TEST(Belief, WorkedExample) {
  const GameSpec g = security_game();
  for (int al = 0; al < 2; ++al) {
    const BeliefState post = bayes_update({{0.5, 0.5}}, example_follower(), {al, 1}, g);
    EXPECT_NEAR(post.probs[0], 0.74, 1e-12);
    EXPECT_NEAR(post.probs[1], 0.26, 1e-12);
    const auto brute = oracle::brute_force_posterior({0.5, 0.5}, example_follower(), {al, 1}, g);
    EXPECT_NEAR(post.probs[0], brute[0], 1e-12);
  }
}

TEST(Belief, UninformativeObservationIdentityKernel) {
  const GameSpec g(3, 2, 2);
  const FollowerPrescription same{{{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}}};
  const BeliefState pi{{0.2, 0.5, 0.3}};
  const BeliefState post = bayes_update(pi, same, {1, 0}, g);
  for (int x = 0; x < 3; ++x) EXPECT_NEAR(post.probs[x], pi.probs[x], 1e-15);
}

TEST(Belief, ImpossibleObservation) {
  const GameSpec g = security_game();
  const FollowerPrescription never0{{{0.0, 1.0}, {1.0, 0.0}}};
  EXPECT_THROW(bayes_update({{1.0, 0.0}}, never0, {0, 0}, g), ImpossibleObservation);
}

TEST(Belief, PriorPredictiveFallback) {
  const GameSpec g = security_game();
  const FollowerPrescription never0{{{0.0, 1.0}, {1.0, 0.0}}};
  const BeliefState post =
      bayes_update({{1.0, 0.0}}, never0, {0, 0}, g, OffPathRule::kPriorPredictive);
  EXPECT_NEAR(post.probs[0], 0.1, 1e-15);
  EXPECT_NEAR(post.probs[1], 0.9, 1e-15);
}

TEST(Belief, MatchesBruteForceOnRandomGames) {
  std::mt19937_64 rng(2024);
  for (int nx = 1; nx <= 4; ++nx) {
    for (int trial = 0; trial < 50; ++trial) {
      const GameSpec g = oracle::random_game(nx, 2, 3, rng);
      const FollowerPrescription gf = oracle::random_follower(nx, 3, rng);
      const std::vector<double> pi = oracle::random_distribution(nx, rng, 0.2);
      for (int j = 0; j < g.num_joint_actions(); ++j) {
        const JointAction a = g.joint_action(j);
        if (observation_likelihood({pi}, gf, a.follower) == 0.0) continue;
        const BeliefState post = bayes_update({pi}, gf, a, g);
        const auto brute = oracle::brute_force_posterior(pi, gf, a, g);
        ASSERT_TRUE(is_valid(post));
        double sum = 0.0;
        for (int x = 0; x < nx; ++x) {
          EXPECT_NEAR(post.probs[x], brute[x], 1e-12);
          EXPECT_GE(post.probs[x], 0.0);
          sum += post.probs[x];
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
      }
    }
  }
}

TEST(Belief, LikelihoodScalingInvariance) {
  std::mt19937_64 rng(7);
  const GameSpec g = oracle::random_game(3, 2, 2, rng);
  FollowerPrescription gf = oracle::random_follower(3, 2, rng);
  const BeliefState pi{oracle::random_distribution(3, rng)};
  const JointAction a{1, 1};
  const BeliefState base = bayes_update(pi, gf, a, g);
  // Scale γ_f(1|·) by a common factor; rows are no longer distributions but the
  // posterior only sees the likelihood column.
  for (auto& row : gf.per_state) row[1] *= 0.37;
  const BeliefState scaled = bayes_update(pi, gf, a, g);
  for (int x = 0; x < 3; ++x) EXPECT_NEAR(base.probs[x], scaled.probs[x], 1e-12);
}

TEST(Belief, GridExamples) {
  const BeliefGrid g3 = make_grid(2, 3);
  ASSERT_EQ(g3.size(), 3u);
  EXPECT_EQ(g3.point(0).probs, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(g3.point(1).probs, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(g3.point(2).probs, (std::vector<double>{1.0, 0.0}));

  const BeliefGrid g101 = make_grid(2, 101);
  ASSERT_EQ(g101.size(), 101u);
  for (std::size_t i = 1; i < g101.size(); ++i) {
    EXPECT_NEAR(g101.point(i).probs[0] - g101.point(i - 1).probs[0], 0.01, 1e-12);
  }

  const BeliefGrid t3 = make_grid(3, 3);
  ASSERT_EQ(t3.size(), 6u);
  for (const BeliefState& p : t3.points()) {
    double s = 0.0;
    for (double v : p.probs) {
      EXPECT_NEAR(v * 2, std::round(v * 2), 1e-12);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_THROW(make_grid(2, 1), std::invalid_argument);
}

TEST(Belief, GridCoversSimplex) {
  std::mt19937_64 rng(4);
  for (int nx : {2, 3, 4}) {
    const int res = 6;
    const BeliefGrid grid = make_grid(nx, res);
    for (int i = 0; i < 500; ++i) {
      const BeliefState p{oracle::random_distribution(nx, rng, 0.1)};
      const BeliefState& q = grid.point(grid.nearest(p));
      EXPECT_LE(l1_distance(p, q), 2.0 * (nx - 1) / (res - 1) + 1e-12);
    }
  }
}

TEST(Belief, InterpolationBasics) {
  const BeliefGrid grid = make_grid(2, 101);
  ValueTable t = ValueTable::leader(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) t.at(g) = std::sin(static_cast<double>(g));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_DOUBLE_EQ(interpolate(t, grid, grid.point(g)), t.at(g));
  }
  ValueTable mid = ValueTable::leader(grid.size());
  mid.at(51) = 10.0;  // grid point 0.51; point 50 (0.50) stays 0
  EXPECT_NEAR(interpolate(mid, grid, {{0.505, 0.495}}), 5.0, 1e-9);

  ValueTable c = ValueTable::follower(grid.size(), 2);
  for (std::size_t g = 0; g < grid.size(); ++g) c.at(g, 0) = c.at(g, 1) = 2.5;
  EXPECT_NEAR(interpolate(c, grid, {{0.123, 0.877}}, 1), 2.5, 1e-12);
}

TEST(Belief, BarycentricExactOnLinearFunctions) {
  std::mt19937_64 rng(12);
  for (int nx : {3, 4}) {
    const BeliefGrid grid = make_grid(nx, 5);
    const std::vector<double> w = oracle::random_distribution(nx, rng);
    ValueTable t = ValueTable::leader(grid.size());
    auto linear = [&](const std::vector<double>& p) {
      double v = 0.0;
      for (int i = 0; i < nx; ++i) v += (i + 1) * w[i] * p[i];
      return v;
    };
    for (std::size_t g = 0; g < grid.size(); ++g) t.at(g) = linear(grid.point(g).probs);
    for (int i = 0; i < 200; ++i) {
      const BeliefState p{oracle::random_distribution(nx, rng, 0.2)};
      EXPECT_NEAR(interpolate(t, grid, p), linear(p.probs), 1e-12);
      const auto bary = grid.barycentric(p);
      double s = 0.0;
      for (const auto& [g, weight] : bary) {
        EXPECT_GT(weight, 0.0);
        s += weight;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Belief, InterpolationIsMonotone) {
  std::mt19937_64 rng(99);
  for (int nx : {2, 3}) {
    const BeliefGrid grid = make_grid(nx, 7);
    ValueTable t = ValueTable::leader(grid.size());
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t g = 0; g < grid.size(); ++g) t.at(g) = u(rng);
    for (int i = 0; i < 100; ++i) {
      const BeliefState p{oracle::random_distribution(nx, rng)};
      const double before = interpolate(t, grid, p);
      ValueTable raised = t;
      raised.at(i % grid.size()) += 0.5;
      EXPECT_GE(interpolate(raised, grid, p), before);
    }
  }
}

TEST(Belief, ValueTableCsv) {
  const BeliefGrid grid = make_grid(2, 3);
  std::vector<ValueTable> tables{ValueTable::follower(3, 2)};
  tables[0].at(1, 1) = 1.5;
  std::ostringstream out;
  write_value_table_csv(out, grid, tables, 4);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,grid_index,belief_coord_0,belief_coord_1,state_or_blank,value");
  int rows = 0;
  bool found = false;
  while (std::getline(in, line)) {
    ++rows;
    if (line == "4,1,0.5,0.5,1,1.5") found = true;
  }
  EXPECT_EQ(rows, 6);
  EXPECT_TRUE(found);
}
