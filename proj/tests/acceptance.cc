// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stackgame/cli.hpp"
#include "stackgame/exact_solver.hpp"
#include "stackgame/particle_filter.hpp"
#include "stackgame/rl_solver.hpp"
#include "stackgame/simulation.hpp"

namespace fs = std::filesystem;
using namespace stackgame;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects failed checks of one criterion with a short reason each.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double policy_linf(const StrategyTable& a, const StrategyTable& b, int num_states) {
  double d = 0.0;
  for (int t = 1; t <= a.horizon(); ++t) {
    for (std::size_t g = 0; g < a.grid().size(); ++g) {
      const auto& pa = a.at(t, g).prescription;
      const auto& pb = b.at(t, g).prescription;
      for (std::size_t i = 1; i < pa.leader.probs.size(); ++i) {
        d = std::max(d, std::abs(pa.leader.probs[i] - pb.leader.probs[i]));
      }
      for (int x = 0; x < num_states; ++x) {
        for (std::size_t i = 1; i < pa.follower.per_state[x].size(); ++i) {
          d = std::max(d, std::abs(pa.follower.per_state[x][i] - pb.follower.per_state[x][i]));
        }
      }
    }
  }
  return d;
}

double value_linf(const StrategyTable& a, const StrategyTable& b, int num_states) {
  double d = 0.0;
  for (int t = 1; t <= a.horizon(); ++t) {
    for (std::size_t g = 0; g < a.grid().size(); ++g) {
      const auto& ea = a.at(t, g);
      const auto& eb = b.at(t, g);
      d = std::max(d, std::abs(ea.value_leader - eb.value_leader));
      for (int x = 0; x < num_states; ++x) {
        d = std::max(d, std::abs(ea.value_follower[x] - eb.value_follower[x]));
      }
    }
  }
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliRun {
  int code;
  std::string out;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str()};
}

// Terminal-stage ground truth.
Check ac1() {
  Check c;
  const GameSpec spec = security_game(1);
  const double p_star = 19.0 / 30;
  const double obj_star = 3.0 + p_star;

  const oracle::MatrixGameSolution m = oracle::terminal_matrix_game(spec, 31);
  c.expect(std::abs(m.leader_p - p_star) < 1e-12 && std::abs(m.objective - obj_star) < 1e-12,
           "matrix-game oracle optimum " + fmt(m.leader_p));

  const BeliefGrid grid(2, 11);
  const ValueTable zf = ValueTable::follower(grid.size(), 2);
  const ValueTable zl = ValueTable::leader(grid.size());
  SolveConfig cfg;
  cfg.belief_resolution = 11;
  for (double p : {2.0 / 3 + 1e-6, 2.0 / 3 + 0.05, 1.0}) {
    const BestResponse br =
        follower_best_response(grid.point(5), {{p, 1.0 - p}}, zf, zl, spec, grid, cfg);
    c.expect(br.prescription.per_state[0][0] == 1.0 && br.prescription.per_state[1][0] == 1.0,
             "follower not A1 at p=" + fmt(p));
  }
  for (double p : {2.0 / 3 - 1e-6, 2.0 / 3 - 0.05, 0.0}) {
    const BestResponse br =
        follower_best_response(grid.point(5), {{p, 1.0 - p}}, zf, zl, spec, grid, cfg);
    c.expect(br.prescription.per_state[0][1] == 1.0 && br.prescription.per_state[1][1] == 1.0,
             "follower not A2 at p=" + fmt(p));
  }

  const ExactSolution exact = backward_recursion(spec, cfg);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto& e = exact.table.at(1, g);
    c.expect(std::abs(e.prescription.leader.probs[0] - p_star) < 1e-12 &&
                 std::abs(e.value_leader - obj_star) < 1e-12,
             "exact solver at grid point " + std::to_string(g));
  }

  RLConfig rl;
  rl.sweeps = 500;
  rl.particle_count = 10000;
  rl.belief_resolution = 3;
  rl.follower_resolution = 11;
  int passed = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    rl.seed = seed;
    const RLSolution sol = solve_rl(spec, rl);
    bool ok = true;
    for (std::size_t g = 0; g < sol.table.grid().size(); ++g) {
      const auto& e = sol.table.at(1, g);
      ok = ok && std::abs(e.prescription.leader.probs[0] - p_star) <= 0.05 &&
           std::abs(e.value_leader - obj_star) <= 0.05;
    }
    passed += ok;
  }
  c.expect(passed >= 8, "rl seeds within 0.05: " + std::to_string(passed) + "/10");
  return c;
}

// Oracle equivalence of the two solvers at T = 5.
Check ac2() {
  Check c;
  const GameSpec spec = security_game(5);
  SolveConfig ecfg;
  ecfg.belief_resolution = 101;
  const ExactSolution exact = backward_recursion(spec, ecfg);
  c.expect(exact.all_converged(), "exact solver did not converge");
  RLConfig rl;
  rl.belief_resolution = 101;
  rl.follower_resolution = 3;
  int passed = 0;
  double worst_policy = 0.0, worst_value = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    rl.seed = seed;
    const RLSolution sol = solve_rl(spec, rl);
    const double dp = policy_linf(exact.table, sol.table, spec.num_states);
    const double dv = value_linf(exact.table, sol.table, spec.num_states);
    worst_policy = std::max(worst_policy, dp);
    worst_value = std::max(worst_value, dv);
    passed += dp <= 0.1 && dv <= 0.2;
  }
  std::printf("  ac2: worst policy L-inf %s, worst value L-inf %s\n", fmt(worst_policy).c_str(),
              fmt(worst_value).c_str());
  c.expect(passed >= 8, "seeds within tolerance: " + std::to_string(passed) + "/10");
  return c;
}

// Particle filter against the exact Bayes update.
Check ac3() {
  Check c;
  const GameSpec spec = security_game(5);
  const BeliefState prior{spec.initial_dist};
  const FollowerPrescription gamma{{{0.8, 0.2}, {0.2, 0.8}}};
  const JointAction a{0, 0};
  const BeliefState exact = bayes_update(prior, gamma, a, spec);
  const int sizes[] = {100, 1000, 10000};
  const double bounds[] = {0.12, 0.04, 0.015};
  for (int i = 0; i < 3; ++i) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      Rng rng = make_rng(seed, {static_cast<std::uint64_t>(sizes[i])});
      const pf::ParticleSet ps = pf::step(pf::init(prior, sizes[i], rng), gamma, a, spec, rng);
      total += l1_distance(pf::estimate(ps), exact);
    }
    const double mean = total / 50;
    std::printf("  ac3: K=%d mean L1 %s (bound %s)\n", sizes[i], fmt(mean).c_str(),
                fmt(bounds[i]).c_str());
    c.expect(mean <= bounds[i], "K=" + std::to_string(sizes[i]) + " mean L1 " + fmt(mean));
  }
  return c;
}

// Empirical deviation gaps of the exact equilibrium.
Check ac4() {
  Check c;
  const GameSpec spec = security_game(5);
  SolveConfig cfg;
  cfg.belief_resolution = 101;
  const StrategyTable theta = backward_recursion(spec, cfg).table;
  const std::int64_t episodes = 100000;
  const GapEstimate f =
      deviation_gap_follower(theta, spec, pure_follower_deviations(spec), episodes, 11);
  const GapEstimate l = deviation_gap_leader(theta, spec, leader_grid(2, 31), episodes, 12, cfg);
  std::printf("  ac4: follower gap %s se %s over %zu, leader gap %s se %s over %zu\n",
              fmt(f.gap).c_str(), fmt(f.std_error).c_str(), f.deviations, fmt(l.gap).c_str(),
              fmt(l.std_error).c_str(), l.deviations);
  c.expect(f.deviations == 1024 && l.deviations == 31, "deviation set sizes");
  c.expect(f.gap <= 0.05 + 3 * f.std_error, "follower gap " + fmt(f.gap));
  c.expect(l.gap <= 0.05 + 3 * l.std_error, "leader gap " + fmt(l.gap));
  return c;
}

// Invariant suites.
Check ac5() {
  Check c;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int nx = 1 + trial % 4;
    const GameSpec spec = oracle::random_game(nx, 2, 3, rng);
    const BeliefState pi{oracle::random_distribution(nx, rng, 0.2)};
    const FollowerPrescription gf = oracle::random_follower(nx, 3, rng);
    const JointAction a{trial % 2, trial % 3};
    if (!(observation_likelihood(pi, gf, a.follower) > 0.0)) continue;
    const BeliefState post = bayes_update(pi, gf, a, spec);
    const std::vector<double> ref = oracle::brute_force_posterior(pi.probs, gf, a, spec);
    double sum = 0.0, err = 0.0;
    for (int x = 0; x < nx; ++x) {
      sum += post.probs[x];
      err = std::max(err, std::abs(post.probs[x] - ref[x]));
    }
    c.expect(std::abs(sum - 1.0) <= 1e-12 && err <= 1e-12,
             "bayes update trial " + std::to_string(trial));
  }

  std::normal_distribution<double> normal(0.0, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(2 + trial % 2);
    for (double& x : v) x = normal(rng);
    const std::vector<double> p = simplex_project(v);
    double sum = 0.0, d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      sum += p[i];
      d += (p[i] - v[i]) * (p[i] - v[i]);
      c.expect(p[i] >= 0.0, "projection negative entry");
    }
    c.expect(std::abs(sum - 1.0) <= 1e-12, "projection sum");
    c.expect(std::sqrt(d) <= oracle::grid_projection_distance(v, 0.005) + 1e-12,
             "projection beaten by grid trial " + std::to_string(trial));
  }

  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double r = u(rng), v = u(rng), delta = 0.6, alpha = (trial + 1) / 200.0;
    const double qf = r + delta * v;
    c.expect(std::abs(sarsa_update_follower(qf, r, v, alpha, delta) - qf) <= 1e-12,
             "follower sarsa fixed point");
    c.expect(std::abs(sarsa_update_leader(qf, r, delta * v, alpha) - qf) <= 1e-12,
             "leader sarsa fixed point");
  }

  RLConfig rl;
  rl.belief_resolution = 11;
  rl.follower_resolution = 3;
  rl.sweeps = 100;
  rl.particle_count = 1000;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    rl.seed = seed;
    for (const GameSpec& spec : {security_game(3), oracle::random_game(2, 2, 2, rng, 3, 0.9)}) {
      for (const auto& stage : solve_rl(spec, rl).stages) {
        c.expect(stage.bound_violations == 0, "Q bound violated at t=" + std::to_string(stage.t));
      }
    }
  }

  const fs::path dir = fs::temp_directory_path() / "stackgame_acceptance";
  fs::remove_all(dir);
  const std::string one = (dir / "one").string(), two = (dir / "two").string();
  const std::vector<std::vector<std::string>> commands = {
      {"solve-exact", "--horizon", "3", "--belief-res", "21"},
      {"solve-rl", "--horizon", "3", "--belief-res", "21", "--follower-res", "3", "--sweeps", "100",
       "--particles", "1000", "--seed", "4"},
      {"export-game", "--horizon", "3"},
  };
  for (const auto& cmd : commands) {
    for (const std::string& out : {one, two}) {
      std::vector<std::string> args = cmd;
      args.insert(args.end(), {"--out", out});
      const CliRun r = cli(args);
      c.expect(r.code == 0, cmd[0] + " exit " + std::to_string(r.code));
    }
  }
  const std::string exact_csv = one + "/strategy_exact.csv", rl_csv = one + "/strategy_rl.csv";
  const std::vector<std::string> sim = {"simulate", "--horizon",    "3",  "--strategy", exact_csv,
                                        "--episodes", "2000", "--deviations", "pure", "--seed",
                                        "9"};
  for (const std::string& out : {one, two}) {
    std::vector<std::string> args = sim;
    args.insert(args.end(), {"--out", out});
    c.expect(cli(args).code == 0, "simulate exit");
  }
  for (const auto& entry : fs::directory_iterator(one)) {
    c.expect(slurp(entry.path()) == slurp(fs::path(two) / entry.path().filename()),
             "rerun differs: " + entry.path().filename().string());
  }
  const CliRun c1 = cli({"compare", exact_csv, rl_csv, "--tolerance", "1"});
  const CliRun c2 = cli({"compare", exact_csv, rl_csv, "--tolerance", "1"});
  c.expect(c1.code != 2 && c1.code == c2.code && c1.out == c2.out && !c1.out.empty(),
           "compare rerun differs");
  fs::remove_all(dir);
  return c;
}

// All-zero rewards end to end.
Check ac6() {
  Check c;
  const GameSpec spec = oracle::zero_game(3);
  SolveConfig cfg;
  cfg.belief_resolution = 11;
  RLConfig rl;
  rl.belief_resolution = 11;
  rl.follower_resolution = 3;
  rl.sweeps = 50;
  rl.particle_count = 1000;
  rl.seed = 2;
  const StrategyTable exact = backward_recursion(spec, cfg).table;
  const StrategyTable learned = solve_rl(spec, rl).table;
  for (const StrategyTable* table : {&exact, &learned}) {
    const std::string name = table == &exact ? "exact" : "rl";
    for (int t = 1; t <= spec.horizon; ++t) {
      for (std::size_t g = 0; g < table->grid().size(); ++g) {
        const StrategyEntry& e = table->at(t, g);
        bool ok = e.value_leader == 0.0 && e.prescription.leader.probs[0] == 1.0;
        for (int x = 0; x < spec.num_states; ++x) {
          ok = ok && e.value_follower[x] == 0.0 && e.prescription.follower.per_state[x][0] == 1.0;
        }
        c.expect(ok, name + " entry t=" + std::to_string(t) + " g=" + std::to_string(g));
      }
    }
  }
  const ReturnEstimates r = estimate_returns(forward_strategy(exact, spec), spec, 5000, 3);
  c.expect(r.leader.mean == 0.0 && r.follower.mean == 0.0 && r.leader.failed == 0,
           "nonzero returns");
  const GapEstimate f =
      deviation_gap_follower(exact, spec, pure_follower_deviations(spec), 2000, 4);
  const GapEstimate l = deviation_gap_leader(exact, spec, leader_grid(2, 31), 2000, 5, cfg);
  c.expect(f.gap == 0.0 && f.std_error == 0.0 && f.argmax == 0, "follower gap " + fmt(f.gap));
  c.expect(l.gap == 0.0 && l.std_error == 0.0 && l.argmax == 0, "leader gap " + fmt(l.gap));
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"AC1 terminal-stage ground truth", ac1},
      {"AC2 rl vs exact at T=5", ac2},
      {"AC3 particle filter consistency", ac3},
      {"AC4 empirical deviation gaps", ac4},
      {"AC5 invariant suites", ac5},
      {"AC6 zero-reward game", ac6},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = Clock::now();
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(start);
    std::printf("[%s] %s (%.1fs)\n", c.failures.empty() ? "PASS" : "FAIL", name.c_str(), secs);
    for (std::size_t i = 0; i < std::min<std::size_t>(c.failures.size(), 5); ++i) {
      std::printf("  %s\n", c.failures[i].c_str());
    }
    if (c.failures.size() > 5) std::printf("  ... %zu more\n", c.failures.size() - 5);
    std::fflush(stdout);
    failed += !c.failures.empty();
  }
  return failed == 0 ? 0 : 1;
}
