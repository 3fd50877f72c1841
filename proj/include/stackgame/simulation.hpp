#pragma once

// Forward rollouts of a deployed strategy profile, Monte-Carlo estimates of
// discounted returns, and empirical deviation gaps.

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "stackgame/belief.hpp"
#include "stackgame/exact_solver.hpp"
#include "stackgame/game_model.hpp"
#include "stackgame/rng.hpp"
#include "stackgame/strategy_table.hpp"

namespace stackgame {

struct Trajectory {
  std::uint64_t seed = 0;
  std::vector<int> states;  // x_1..x_T
  std::vector<JointAction> joint_actions;
  std::vector<double> rewards_leader;
  std::vector<double> rewards_follower;
  std::vector<BeliefState> beliefs;  // μ_1..μ_T
  double return_leader = 0.0;        // Σ δ^{t-1} r_t
  double return_follower = 0.0;

  int length() const { return static_cast<int>(states.size()); }
};

// Raised when the tracked belief cannot be updated after stage `stage`.
class RolloutError : public std::runtime_error {
 public:
  RolloutError(int stage, const std::string& what);
  int stage() const { return stage_; }

 private:
  int stage_;
};

// Follower prescription per stage (index t-1), played at every belief. The
// common belief keeps being tracked with the profile's own prescriptions.
struct FollowerDeviation {
  std::vector<FollowerPrescription> per_stage;
};

struct RolloutOptions {
  OffPathRule off_path = OffPathRule::kThrow;
  const FollowerDeviation* follower_override = nullptr;
};

Trajectory rollout(const DeployedProfile& profile, const GameSpec& spec, Rng& rng,
                   const RolloutOptions& options = {});

double discounted_sum(const std::vector<double>& rewards, double discount);

struct ReturnEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t episodes = 0;  // successful episodes
  std::int64_t failed = 0;    // episodes that raised RolloutError (excluded)
};

struct ReturnEstimates {
  ReturnEstimate leader;
  ReturnEstimate follower;
};

// Episode i runs on Rng(mix_seed(seed, i)). With `episode_log` set, one JSON
// object per successful episode is written in episode order.
ReturnEstimates estimate_returns(const DeployedProfile& profile, const GameSpec& spec,
                                 std::int64_t episodes, std::uint64_t seed,
                                 const RolloutOptions& options = {},
                                 std::ostream* episode_log = nullptr, int threads = 1);

void write_episode_json(std::ostream& out, std::int64_t episode, const Trajectory& traj);

struct GapEstimate {
  double gap = 0.0;               // max over deviations of (deviation − equilibrium)
  double std_error = 0.0;         // sqrt(se_eq² + se_dev²) at the maximizing deviation
  double paired_std_error = 0.0;  // std error of the per-episode differences there
  std::size_t argmax = 0;
  std::size_t deviations = 0;
  ReturnEstimate equilibrium;
  ReturnEstimate deviation;
};

// All follower deviations share the episode seeds of the equilibrium run.
// Off-path observations are handled with OffPathRule::kPriorPredictive.
GapEstimate deviation_gap_follower(const StrategyTable& theta, const GameSpec& spec,
                                   const std::vector<FollowerDeviation>& deviations,
                                   std::int64_t episodes, std::uint64_t seed, int threads = 1);

// Each leader deviation is played at every (t, belief) against the follower's
// recomputed best response, see leader_deviation_table.
GapEstimate deviation_gap_leader(const StrategyTable& theta, const GameSpec& spec,
                                 const std::vector<LeaderPrescription>& deviations,
                                 std::int64_t episodes, std::uint64_t seed,
                                 const SolveConfig& response_cfg, int threads = 1);

// theta with the leader prescription replaced by gamma_l everywhere and the
// follower prescription by its best response against theta's V_{t+1}. Value
// columns are copied from theta unchanged.
StrategyTable leader_deviation_table(const StrategyTable& theta, const GameSpec& spec,
                                     const LeaderPrescription& gamma_l, const SolveConfig& cfg);

// Every sequence of per-stage pure follower prescriptions, (|A^f|^|X|)^T in
// total. Throws std::length_error above `limit`.
std::vector<FollowerDeviation> pure_follower_deviations(const GameSpec& spec,
                                                        std::size_t limit = 1 << 16);

}  // namespace stackgame
