#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "stackgame/exact_solver.hpp"
#include "stackgame/rl_solver.hpp"

using namespace stackgame;

namespace {

bool is_pure(const FollowerPrescription& g, int action) {
  for (const auto& row : g.per_state) {
    for (std::size_t a = 0; a < row.size(); ++a) {
      if (row[a] != (static_cast<int>(a) == action ? 1.0 : 0.0)) return false;
    }
  }
  return true;
}

RLConfig small_config() {
  RLConfig cfg;
  cfg.belief_resolution = 3;
  cfg.follower_resolution = 3;
  cfg.sweeps = 100;
  cfg.particle_count = 1000;
  return cfg;
}

// Mean and max |Q_rl − Q_exact| over every cell, with V_{t+1} from the exact solution.
std::pair<double, double> q_error(const GameSpec& spec, const ExactSolution& exact, int t,
                                  const RLConfig& cfg) {
  const BeliefGrid grid = make_grid(2, cfg.belief_resolution);
  const FollowerLattice lattice(2, 2, cfg.follower_resolution);
  const ValueTable vf = follower_values_or_zero(exact.table, t + 1, 2);
  const ValueTable vl = leader_values_or_zero(exact.table, t + 1);
  const QTables q = policy_evaluation(t, vf, vl, spec, grid, lattice, cfg);
  double sum = 0.0, worst = 0.0;
  int cells = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t k = 0; k < lattice.size(); ++k) {
      const FollowerPrescription gf = lattice.prescription(k);
      for (int j = 0; j < spec.num_joint_actions(); ++j) {
        const JointAction a = spec.joint_action(j);
        for (int x = 0; x < 2; ++x) {
          const double e = std::abs(q.follower(g, k, x, a) -
                                    q_follower(grid.point(g), x, a, gf, vf, spec, grid,
                                               OffPathRule::kPriorPredictive));
          sum += e, worst = std::max(worst, e), ++cells;
        }
        const double e = std::abs(
            q.leader(g, k, a) -
            q_leader(grid.point(g), a, gf, vl, spec, grid, OffPathRule::kPriorPredictive));
        sum += e, worst = std::max(worst, e), ++cells;
      }
    }
  }
  return {sum / cells, worst};
}

}  // namespace

TEST(RLSolver, SarsaExamples) {
  EXPECT_EQ(sarsa_update_follower(123.0, 2.0, 0.0, 1.0, 0.6), 2.0);
  EXPECT_EQ(sarsa_update_follower(0.0, 2.0, 0.0, 0.5, 0.6), 1.0);
  EXPECT_EQ(sarsa_update_leader(4.0, 2.0, 2.0, 0.5), 4.0);
  EXPECT_EQ(sarsa_update_leader(0.0, 2.0, 0.0, 0.5), 1.0);
}

TEST(RLSolver, SarsaFixedPoint) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3), a(0.01, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double r = u(rng), v = u(rng), alpha = a(rng);
    const double target = r + 0.5 * v;
    EXPECT_NEAR(sarsa_update_follower(target, r, v, alpha, 0.5), target, 1e-12);
    EXPECT_NEAR(sarsa_update_leader(r + v, r, v, alpha), r + v, 1e-12);
  }
  // Exactly representable case: the identity holds bit for bit.
  EXPECT_EQ(sarsa_update_follower(2.5, 1.0, 3.0, 0.3, 0.5), 2.5);
}

TEST(RLSolver, ConfigValidation) {
  RLConfig cfg;
  cfg.alpha = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.sweeps = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.pg_step = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.particle_count = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.alpha_schedule = AlphaSchedule::kHarmonic;
  EXPECT_EQ(cfg.alpha_at(1), 1.0);
  EXPECT_EQ(cfg.alpha_at(10), 0.1);
  EXPECT_EQ(cfg.alpha_at(1000), 0.05);
}

TEST(RLSolver, TerminalQEqualsReward) {
  const GameSpec spec = security_game(1);
  RLConfig cfg = small_config();
  cfg.alpha = 0.5;
  const BeliefGrid grid = make_grid(2, 3);
  const FollowerLattice lattice(2, 2, 3);
  const QTables q = policy_evaluation(1, ValueTable::follower(3, 2), ValueTable::leader(3), spec,
                                      grid, lattice, cfg);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t k = 0; k < lattice.size(); ++k) {
      for (int j = 0; j < 4; ++j) {
        const JointAction a = spec.joint_action(j);
        for (int x = 0; x < 2; ++x) {
          EXPECT_NEAR(q.follower(g, k, x, a), reward(spec, Player::kFollower, x, a), 1e-12);
        }
        EXPECT_NEAR(q.leader(g, k, a), reward(spec, Player::kLeader, 0, a), 1e-12);
      }
    }
  }
}

TEST(RLSolver, SingleStateMatchesExactQ) {
  GameSpec one(1, 2, 2, 3, 0.7);
  one.reward_follower = {1.0, -2.0, 0.5, 3.0};
  one.reward_leader = {0.25, 1.0, -1.0, 2.0};
  const BeliefGrid grid = make_grid(1, 2);
  ValueTable vf = ValueTable::follower(grid.size(), 1);
  ValueTable vl = ValueTable::leader(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) vf.at(g, 0) = 4.0, vl.at(g) = -1.5;
  RLConfig cfg;
  cfg.alpha_schedule = AlphaSchedule::kHarmonic;
  cfg.sweeps = 100;
  cfg.belief_resolution = 2;
  cfg.follower_resolution = 3;
  cfg.particle_count = 100;
  const FollowerLattice lattice(1, 2, 3);
  const QTables q = policy_evaluation(2, vf, vl, one, grid, lattice, cfg);
  for (std::size_t k = 0; k < lattice.size(); ++k) {
    const FollowerPrescription gf = lattice.prescription(k);
    for (int j = 0; j < 4; ++j) {
      const JointAction a = one.joint_action(j);
      EXPECT_NEAR(q.follower(0, k, 0, a), q_follower({{1.0}}, 0, a, gf, vf, one, grid, OffPathRule::kPriorPredictive), 1e-6);
      EXPECT_NEAR(q.leader(0, k, a), q_leader({{1.0}}, a, gf, vl, one, grid, OffPathRule::kPriorPredictive), 1e-6);
    }
  }
}

TEST(RLSolver, SecurityStageQWithinTolerance) {
  const GameSpec spec = security_game(3);
  SolveConfig ecfg;
  ecfg.belief_resolution = 11;
  const ExactSolution exact = backward_recursion(spec, ecfg);
  RLConfig cfg;
  cfg.belief_resolution = 11;
  cfg.follower_resolution = 3;
  cfg.sweeps = 500;
  cfg.particle_count = 10000;
  cfg.seed = 3;
  EXPECT_LE(q_error(spec, exact, spec.horizon - 1, cfg).second, 0.1);
}

TEST(RLSolver, QErrorDecreasesWithSweeps) {
  const GameSpec spec = security_game(2);
  SolveConfig ecfg;
  ecfg.belief_resolution = 3;
  const ExactSolution exact = backward_recursion(spec, ecfg);
  double previous = std::numeric_limits<double>::infinity();
  for (int sweeps : {10, 50, 150, 500}) {
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      RLConfig cfg = small_config();
      cfg.sweeps = sweeps;
      cfg.particle_count = 10000;
      cfg.seed = seed;
      mean += q_error(spec, exact, 1, cfg).first / 10;
    }
    EXPECT_LT(mean, previous) << "sweeps=" << sweeps;
    previous = mean;
  }
  EXPECT_LT(previous, 0.1);
}

TEST(RLSolver, QStaysBounded) {
  const GameSpec spec = security_game(3);
  RLConfig cfg = small_config();
  cfg.alpha = 0.3;
  const RLSolution sol = solve_rl(spec, cfg);
  ASSERT_EQ(sol.stages.size(), 3u);
  for (const auto& s : sol.stages) {
    EXPECT_EQ(s.bound_violations, 0);
    EXPECT_EQ(s.mean_abs_delta.size(), 100u);
  }
}

TEST(RLSolver, GradientBestResponse) {
  const GameSpec spec = security_game(1);
  RLConfig cfg = small_config();
  const BeliefGrid grid = make_grid(2, 3);
  const FollowerLattice lattice(2, 2, 3);
  const QTables q = policy_evaluation(1, ValueTable::follower(3, 2), ValueTable::leader(3), spec,
                                      grid, lattice, cfg);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_TRUE(is_pure(follower_gradient_br(q, g, {{0.9, 0.1}}, lattice, cfg), 0));
    EXPECT_TRUE(is_pure(follower_gradient_br(q, g, {{0.5, 0.5}}, lattice, cfg), 1));
  }
  // Without rounding the ascent alone reaches the vertex on a clear gap.
  cfg.purify = false;
  EXPECT_TRUE(is_pure(follower_gradient_br(q, 0, {{0.9, 0.1}}, lattice, cfg), 0));
}

TEST(RLSolver, ZeroQGradientIsStationary) {
  const GameSpec spec = security_game(1);
  RLConfig cfg = small_config();
  const FollowerLattice lattice(2, 2, 3);
  const QTables zero(3, lattice.size(), spec);
  cfg.purify = false;
  const FollowerPrescription g = follower_gradient_br(zero, 1, {{0.3, 0.7}}, lattice, cfg);
  EXPECT_EQ(linf_distance(g, uniform_follower(2, 2)), 0.0);
  cfg.purify = true;
  EXPECT_TRUE(is_pure(follower_gradient_br(zero, 1, {{0.3, 0.7}}, lattice, cfg), 0));
}

TEST(RLSolver, BestResponseInvariantToConstantShift) {
  const GameSpec spec = security_game(2);
  RLConfig cfg = small_config();
  const BeliefGrid grid = make_grid(2, 3);
  const FollowerLattice lattice(2, 2, 3);
  ValueTable vf = ValueTable::follower(3, 2);
  for (std::size_t g = 0; g < 3; ++g) vf.at(g, 0) = g, vf.at(g, 1) = 2.0 - g;
  const QTables q = policy_evaluation(1, vf, ValueTable::leader(3), spec, grid, lattice, cfg);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (int x = 0; x < 2; ++x) {
      QTables shifted = q;
      for (std::size_t k = 0; k < lattice.size(); ++k) {
        for (int j = 0; j < 4; ++j) shifted.follower(g, k, x, spec.joint_action(j)) += 7.25;
      }
      for (const auto& gl : leader_grid(2, 11)) {
        EXPECT_EQ(linf_distance(follower_gradient_br(q, g, gl, lattice, cfg),
                                follower_gradient_br(shifted, g, gl, lattice, cfg)),
                  0.0);
      }
    }
  }
}

TEST(RLSolver, LeaderGreedyTerminal) {
  const GameSpec spec = security_game(1);
  RLConfig cfg = small_config();
  // Step size 1 on the first sweep makes the deterministic leader targets exact.
  cfg.alpha_schedule = AlphaSchedule::kHarmonic;
  const BeliefGrid grid = make_grid(2, 3);
  const FollowerLattice lattice(2, 2, 3);
  const QTables q = policy_evaluation(1, ValueTable::follower(3, 2), ValueTable::leader(3), spec,
                                      grid, lattice, cfg);
  const auto candidates = leader_grid(2, 31);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<FollowerPrescription> responses;
    for (const auto& c : candidates) responses.push_back(follower_gradient_br(q, g, c, lattice, cfg));
    const LeaderChoice choice = leader_greedy(q, g, grid.point(g), candidates, responses, lattice);
    EXPECT_NEAR(candidates[choice.index].probs[0], 19.0 / 30, 1e-15);
    EXPECT_NEAR(choice.objective, 3 + 19.0 / 30, 1e-6);
  }
}

TEST(RLSolver, LeaderGreedyZeroRewardsAndSingleAction) {
  GameSpec spec = oracle::zero_game(1);
  RLConfig cfg = small_config();
  const FollowerLattice lattice(2, 2, 3);
  const QTables zero(3, lattice.size(), spec);
  const auto candidates = leader_grid(2, 31);
  std::vector<FollowerPrescription> responses(candidates.size(), uniform_follower(2, 2));
  EXPECT_EQ(leader_greedy(zero, 0, {{0.5, 0.5}}, candidates, responses, lattice).index, 0u);

  GameSpec one_action(2, 1, 2, 1, 0.5);
  const QTables q1(3, lattice.size(), one_action);
  const auto single = leader_grid(1, 31);
  ASSERT_EQ(single.size(), 1u);
  std::vector<FollowerPrescription> r1{uniform_follower(2, 2)};
  EXPECT_EQ(leader_greedy(q1, 0, {{0.5, 0.5}}, single, r1, lattice).index, 0u);
}

TEST(RLSolver, TerminalSolveMatchesExact) {
  const GameSpec spec = security_game(1);
  RLConfig cfg;
  cfg.belief_resolution = 11;
  cfg.seed = 5;
  SolveConfig ecfg;
  ecfg.belief_resolution = 11;
  const RLSolution rl = solve_rl(spec, cfg);
  const ExactSolution exact = backward_recursion(spec, ecfg);
  for (std::size_t g = 0; g < 11; ++g) {
    const auto& a = rl.table.at(1, g).prescription;
    const auto& b = exact.table.at(1, g).prescription;
    EXPECT_LE(linf_distance(a.leader.probs, b.leader.probs), 0.05);
    EXPECT_LE(linf_distance(a.follower, b.follower), 0.05);
  }
}

TEST(RLSolver, ZeroGame) {
  RLConfig cfg = small_config();
  const RLSolution sol = solve_rl(oracle::zero_game(2), cfg);
  for (int t = 1; t <= 2; ++t) {
    for (std::size_t g = 0; g < 3; ++g) {
      const StrategyEntry& e = sol.table.at(t, g);
      EXPECT_EQ(e.value_leader, 0.0);
      EXPECT_EQ(e.value_follower, (std::vector<double>{0.0, 0.0}));
      EXPECT_EQ(e.prescription.leader.probs, (std::vector<double>{1.0, 0.0}));
      EXPECT_TRUE(is_pure(e.prescription.follower, 0));
    }
  }
}

TEST(RLSolver, DeterministicAcrossRunsAndThreads) {
  const GameSpec spec = security_game(2);
  RLConfig cfg = small_config();
  cfg.seed = 11;
  auto csv = [&](int threads) {
    RLConfig c = cfg;
    c.threads = threads;
    std::ostringstream out;
    write_strategy_csv(out, solve_rl(spec, c).table, spec);
    return out.str();
  };
  const std::string a = csv(1);
  EXPECT_EQ(a, csv(1));
  EXPECT_EQ(a, csv(3));
}
