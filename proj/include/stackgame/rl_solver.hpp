#pragma once

// Model-free equilibrium computation. Q-values are estimated with Expected
// Sarsa from sampled transitions, next-stage beliefs come from particle
// filters, the follower best-responds by projected gradient ascent on the
// simplex, and the leader greedily picks the best lattice prescription.
//
// The model is used only through its samplers (sample_next_state and its
// batched form) and reward lookups.

#include <cstdint>
#include <vector>

#include "stackgame/belief.hpp"
#include "stackgame/game_model.hpp"
#include "stackgame/prescription.hpp"
#include "stackgame/strategy_table.hpp"

namespace stackgame {

enum class AlphaSchedule {
  kConstant,  // α every sweep
  kHarmonic,  // max(α, 1/l) on sweep l
};

struct RLConfig {
  double alpha = 0.05;
  AlphaSchedule alpha_schedule = AlphaSchedule::kConstant;
  int sweeps = 500;               // L
  std::int64_t particle_count = 10000;  // K
  int belief_resolution = 101;
  int leader_resolution = 31;
  int follower_resolution = 11;   // per-state lattice for the Q-table prescription axis
  double pg_step = 0.1;
  int pg_iters = 200;
  int fp_outer_iters = 5;
  // Round a non-vertex gradient-ascent result to the lowest-index maximizing
  // vertex (the per-round objective is linear, so a vertex is optimal).
  bool purify = true;
  OffPathRule off_path = OffPathRule::kPriorPredictive;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
  double alpha_at(int sweep) const;  // sweep is 1-based
};

// (1-α) q_old + α (r + δ v_next).
double sarsa_update_follower(double q_old, double reward, double v_next, double alpha,
                             double discount);
// (1-α) q_old + α (r_expected + discounted_next); the caller applies δ.
double sarsa_update_leader(double q_old, double reward_expected, double discounted_next,
                           double alpha);

// Q^f(π̂, x, a, γ_f) and Q^l(π̂, a, γ_f) at every grid point and follower-lattice
// prescription.
class QTables {
 public:
  QTables(std::size_t grid_size, std::size_t lattice_size, const GameSpec& spec);

  double& follower(std::size_t g, std::size_t k, int x, JointAction a) {
    return follower_[follower_index(g, k, x, a)];
  }
  double follower(std::size_t g, std::size_t k, int x, JointAction a) const {
    return follower_[follower_index(g, k, x, a)];
  }
  double& leader(std::size_t g, std::size_t k, JointAction a) {
    return leader_[leader_index(g, k, a)];
  }
  double leader(std::size_t g, std::size_t k, JointAction a) const {
    return leader_[leader_index(g, k, a)];
  }

  std::size_t grid_size() const { return grid_size_; }
  std::size_t lattice_size() const { return lattice_size_; }
  double max_abs() const;

 private:
  std::size_t follower_index(std::size_t g, std::size_t k, int x, JointAction a) const {
    return ((g * lattice_size_ + k) * num_states_ + x) * num_joint_ +
           static_cast<std::size_t>(a.follower * num_leader_ + a.leader);
  }
  std::size_t leader_index(std::size_t g, std::size_t k, JointAction a) const {
    return (g * lattice_size_ + k) * num_joint_ +
           static_cast<std::size_t>(a.follower * num_leader_ + a.leader);
  }

  std::size_t grid_size_;
  std::size_t lattice_size_;
  int num_states_;
  int num_leader_;
  int num_joint_;
  std::vector<double> follower_;
  std::vector<double> leader_;
};

struct PolicyEvaluationReport {
  int t = 0;
  std::vector<double> mean_abs_delta;  // per sweep, averaged over all Q entries
  std::int64_t off_path_filter_steps = 0;
  std::int64_t bound_violations = 0;   // |Q| > max|R| + δ·max|V_{t+1}| after some sweep
};

QTables policy_evaluation(int t, const ValueTable& v_next_follower,
                          const ValueTable& v_next_leader, const GameSpec& spec,
                          const BeliefGrid& grid, const FollowerLattice& lattice,
                          const RLConfig& cfg, PolicyEvaluationReport* report = nullptr);

// Projected gradient ascent for every follower type at grid point g against γ_l.
FollowerPrescription follower_gradient_br(const QTables& q, std::size_t g,
                                          const LeaderPrescription& gamma_l,
                                          const FollowerLattice& lattice, const RLConfig& cfg);

// E_{Λ(γ_l), γ_l}[Q^l(π̂, A, Λ(γ_l))] at grid point g.
double leader_q_objective(const QTables& q, std::size_t g, const BeliefState& pi,
                          const LeaderPrescription& gamma_l, const FollowerPrescription& response,
                          const FollowerLattice& lattice);

struct LeaderChoice {
  std::size_t index = 0;  // into the candidate list
  double objective = 0.0;
};

// Best candidate; ties go to the earliest candidate.
LeaderChoice leader_greedy(const QTables& q, std::size_t g, const BeliefState& pi,
                           const std::vector<LeaderPrescription>& candidates,
                           const std::vector<FollowerPrescription>& responses,
                           const FollowerLattice& lattice);

struct RLSolution {
  StrategyTable table;
  std::vector<PolicyEvaluationReport> stages;  // ordered t = T..1
};

RLSolution solve_rl(const GameSpec& spec, const RLConfig& cfg);

}  // namespace stackgame
