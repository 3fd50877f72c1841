#pragma once

// Known-model backward recursion for the Markov-perfect Stackelberg
// equilibrium on a belief grid, plus forward deployment of the resulting
// strategy table. Serves as the ground truth for the model-free solver.

#include <span>
#include <vector>

#include "stackgame/belief.hpp"
#include "stackgame/game_model.hpp"
#include "stackgame/prescription.hpp"
#include "stackgame/strategy_table.hpp"

namespace stackgame {

enum class TieBreak {
  kLowestIndex,      // follower picks the lowest-index maximizer
  kLeaderFavorable,  // among maximizers, the one the leader prefers (strong Stackelberg)
};

struct SolveConfig {
  int belief_resolution = 101;
  int leader_resolution = 31;
  int fp_max_iters = 200;
  double fp_tolerance = 1e-6;
  double fp_damping = 0.5;
  TieBreak tie_break = TieBreak::kLowestIndex;
  // Belief used to score actions the prescription never plays.
  OffPathRule off_path = OffPathRule::kPriorPredictive;
  int threads = 1;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Payoff differences within this (relative) margin count as ties.
inline constexpr double kTieTolerance = 1e-9;
bool beats(double candidate, double incumbent);

// R^f(x,a) + δ Σ_x' τ(x'|x,a) V^f_{t+1}(F(π,γ_f,a), x').
double q_follower(const BeliefState& pi, int x, JointAction a, const FollowerPrescription& gamma_f,
                  const ValueTable& v_next_follower, const GameSpec& spec, const BeliefGrid& grid,
                  OffPathRule off_path = OffPathRule::kThrow);

// Σ_x π(x) R^l(x,a) + δ V^l_{t+1}(F(π,γ_f,a)).
double q_leader(const BeliefState& pi, JointAction a, const FollowerPrescription& gamma_f,
                const ValueTable& v_next_leader, const GameSpec& spec, const BeliefGrid& grid,
                OffPathRule off_path = OffPathRule::kThrow);

// Probability of joint action a at belief π under (γ_l, γ_f).
double joint_action_prob(const BeliefState& pi, const LeaderPrescription& gamma_l,
                         const FollowerPrescription& gamma_f, JointAction a);

struct BestResponse {
  FollowerPrescription prescription;
  bool converged = false;
  int iterations = 0;
};

// Damped best-response iteration for the follower's fixed point: Q depends on
// the follower prescription through the belief update.
BestResponse follower_best_response(const BeliefState& pi, const LeaderPrescription& gamma_l,
                                    const ValueTable& v_next_follower,
                                    const ValueTable& v_next_leader, const GameSpec& spec,
                                    const BeliefGrid& grid, const SolveConfig& cfg);

struct LeaderSolution {
  LeaderPrescription leader;
  FollowerPrescription follower;
  double objective = 0.0;
  bool converged = true;          // the chosen candidate's best response converged
  int nonconverged_candidates = 0;
};

// Exhaustive search over leader_grid(|A^l|, cfg.leader_resolution).
LeaderSolution leader_optimize(const BeliefState& pi, const ValueTable& v_next_follower,
                               const ValueTable& v_next_leader, const GameSpec& spec,
                               const BeliefGrid& grid, const SolveConfig& cfg);

struct StageDiagnostics {
  int t = 0;
  int nonconverged_points = 0;      // grid points whose chosen best response did not converge
  int nonconverged_candidates = 0;  // over all leader candidates at all grid points
};

struct ExactSolution {
  StrategyTable table;
  std::vector<StageDiagnostics> stages;  // ordered t = T..1

  bool all_converged() const;
};

ExactSolution backward_recursion(const GameSpec& spec, const SolveConfig& cfg);

// Strategy profile deployed from a strategy table: tracks the common belief
// μ_t along the public action history and looks prescriptions up at the grid
// point nearest μ_t.
class DeployedProfile {
 public:
  DeployedProfile(StrategyTable table, GameSpec spec);

  const StrategyTable& table() const { return table_; }
  const GameSpec& spec() const { return spec_; }
  int horizon() const { return table_.horizon(); }

  BeliefState initial_belief() const;
  std::size_t grid_index(const BeliefState& mu) const { return table_.grid().nearest(mu); }
  const PrescriptionPair& prescriptions(int t, const BeliefState& mu) const;
  // μ_{t+1} = F(μ_t, θ^f_t[μ_t], a_t).
  BeliefState next_belief(int t, const BeliefState& mu, JointAction a,
                          OffPathRule rule = OffPathRule::kThrow) const;

  // History interface: `history` holds a_1..a_{t-1}.
  BeliefState belief_after(std::span<const JointAction> history) const;
  const LeaderPrescription& leader_strategy(std::span<const JointAction> history) const;
  std::span<const double> follower_strategy(std::span<const JointAction> history, int x) const;

 private:
  StrategyTable table_;
  GameSpec spec_;
};

DeployedProfile forward_strategy(const StrategyTable& table, const GameSpec& spec);

}  // namespace stackgame
