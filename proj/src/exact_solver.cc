#include "stackgame/exact_solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "stackgame/parallel.hpp"

namespace stackgame {

void SolveConfig::validate() const {
  if (belief_resolution < 2) throw std::invalid_argument("belief_resolution must be at least 2");
  if (leader_resolution < 2) throw std::invalid_argument("leader_resolution must be at least 2");
  if (fp_max_iters < 1) throw std::invalid_argument("fp_max_iters must be at least 1");
  if (!(fp_tolerance > 0.0)) throw std::invalid_argument("fp_tolerance must be positive");
  if (!(fp_damping > 0.0 && fp_damping <= 1.0)) {
    throw std::invalid_argument("fp_damping must lie in (0, 1]");
  }
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

bool beats(double candidate, double incumbent) {
  return candidate > incumbent + kTieTolerance * std::max(1.0, std::abs(incumbent));
}

namespace {

// Successor beliefs F(π, γ_f, a) for every joint action, computed once per
// prescription and shared by all Q evaluations.
class SuccessorBeliefs {
 public:
  SuccessorBeliefs(const BeliefState& pi, const FollowerPrescription& gamma_f,
                   const GameSpec& spec, OffPathRule rule) {
    beliefs_.reserve(spec.num_joint_actions());
    for (int j = 0; j < spec.num_joint_actions(); ++j) {
      const JointAction a = spec.joint_action(j);
      if (rule == OffPathRule::kThrow &&
          !(observation_likelihood(pi, gamma_f, a.follower) > 0.0)) {
        // Defer the error until someone asks for this action.
        beliefs_.push_back(std::nullopt);
        continue;
      }
      beliefs_.push_back(bayes_update(pi, gamma_f, a, spec, rule));
    }
  }

  const BeliefState& at(const GameSpec& spec, JointAction a) const {
    const auto& b = beliefs_[spec.joint_index(a)];
    if (!b) {
      throw ImpossibleObservation("follower action " + std::to_string(a.follower) +
                                  " has zero probability under the current belief");
    }
    return *b;
  }

 private:
  std::vector<std::optional<BeliefState>> beliefs_;
};

double q_follower_from(const BeliefState& next, int x, JointAction a, const ValueTable& v_next,
                       const GameSpec& spec, const BeliefGrid& grid) {
  double q = spec.reward_follower[spec.reward_index(x, a)];
  if (spec.discount == 0.0) return q;
  const double* row = spec.transition_row(x, a);
  double cont = 0.0;
  for (int xn = 0; xn < spec.num_states; ++xn) {
    if (row[xn] != 0.0) cont += row[xn] * interpolate(v_next, grid, next, xn);
  }
  return q + spec.discount * cont;
}

double q_leader_from(const BeliefState& pi, const BeliefState& next, JointAction a,
                     const ValueTable& v_next, const GameSpec& spec, const BeliefGrid& grid) {
  double r = 0.0;
  for (int x = 0; x < spec.num_states; ++x) {
    r += pi.probs[x] * spec.reward_leader[spec.reward_index(x, a)];
  }
  if (spec.discount == 0.0) return r;
  return r + spec.discount * interpolate(v_next, grid, next);
}

struct StageContext {
  const BeliefState& pi;
  const ValueTable& v_next_follower;
  const ValueTable& v_next_leader;
  const GameSpec& spec;
  const BeliefGrid& grid;
  const SolveConfig& cfg;
};

// Pure best response of every follower type against (γ_l, current γ_f).
std::vector<int> pure_best_actions(const StageContext& ctx, const LeaderPrescription& gamma_l,
                                   const FollowerPrescription& gamma_f) {
  const GameSpec& spec = ctx.spec;
  const SuccessorBeliefs next(ctx.pi, gamma_f, spec, ctx.cfg.off_path);
  std::vector<int> best(spec.num_states, 0);
  std::vector<double> score(spec.num_follower_actions);
  for (int x = 0; x < spec.num_states; ++x) {
    for (int af = 0; af < spec.num_follower_actions; ++af) {
      double s = 0.0;
      for (int al = 0; al < spec.num_leader_actions; ++al) {
        if (gamma_l.probs[al] == 0.0) continue;
        const JointAction a{al, af};
        s += gamma_l.probs[al] *
             q_follower_from(next.at(spec, a), x, a, ctx.v_next_follower, spec, ctx.grid);
      }
      score[af] = s;
    }
    const double top = *std::max_element(score.begin(), score.end());
    const double slack = kTieTolerance * std::max(1.0, std::abs(top));
    int choice = -1;
    double choice_leader = 0.0;
    for (int af = 0; af < spec.num_follower_actions; ++af) {
      if (score[af] < top - slack) continue;
      if (ctx.cfg.tie_break == TieBreak::kLowestIndex) {
        choice = af;
        break;
      }
      double leader_score = 0.0;
      for (int al = 0; al < spec.num_leader_actions; ++al) {
        if (gamma_l.probs[al] == 0.0) continue;
        const JointAction a{al, af};
        leader_score += gamma_l.probs[al] * q_leader_from(ctx.pi, next.at(spec, a), a,
                                                          ctx.v_next_leader, spec, ctx.grid);
      }
      if (choice < 0 || beats(leader_score, choice_leader)) {
        choice = af;
        choice_leader = leader_score;
      }
    }
    best[x] = choice;
  }
  return best;
}

double leader_objective(const StageContext& ctx, const LeaderPrescription& gamma_l,
                        const FollowerPrescription& gamma_f) {
  const GameSpec& spec = ctx.spec;
  const SuccessorBeliefs next(ctx.pi, gamma_f, spec, ctx.cfg.off_path);
  double v = 0.0;
  for (int j = 0; j < spec.num_joint_actions(); ++j) {
    const JointAction a = spec.joint_action(j);
    const double p = joint_action_prob(ctx.pi, gamma_l, gamma_f, a);
    if (p == 0.0) continue;
    v += p * q_leader_from(ctx.pi, next.at(spec, a), a, ctx.v_next_leader, spec, ctx.grid);
  }
  return v;
}

std::vector<double> follower_values(const StageContext& ctx, const LeaderPrescription& gamma_l,
                                    const FollowerPrescription& gamma_f) {
  const GameSpec& spec = ctx.spec;
  const SuccessorBeliefs next(ctx.pi, gamma_f, spec, ctx.cfg.off_path);
  std::vector<double> v(spec.num_states, 0.0);
  for (int x = 0; x < spec.num_states; ++x) {
    for (int j = 0; j < spec.num_joint_actions(); ++j) {
      const JointAction a = spec.joint_action(j);
      const double p = gamma_l.probs[a.leader] * gamma_f.prob(x, a.follower);
      if (p == 0.0) continue;
      v[x] += p * q_follower_from(next.at(spec, a), x, a, ctx.v_next_follower, spec, ctx.grid);
    }
  }
  return v;
}

BestResponse best_response_impl(const StageContext& ctx, const LeaderPrescription& gamma_l) {
  const GameSpec& spec = ctx.spec;
  const SolveConfig& cfg = ctx.cfg;
  BestResponse out;
  FollowerPrescription gamma = uniform_follower(spec.num_states, spec.num_follower_actions);
  std::vector<int> target;
  for (out.iterations = 1; out.iterations <= cfg.fp_max_iters; ++out.iterations) {
    target = pure_best_actions(ctx, gamma_l, gamma);
    double change = 0.0;
    for (int x = 0; x < spec.num_states; ++x) {
      for (int af = 0; af < spec.num_follower_actions; ++af) {
        double& p = gamma.per_state[x][af];
        const double updated =
            (1.0 - cfg.fp_damping) * p + cfg.fp_damping * (af == target[x] ? 1.0 : 0.0);
        change = std::max(change, std::abs(updated - p));
        p = updated;
      }
    }
    if (change < cfg.fp_tolerance) {
      out.converged = true;
      break;
    }
  }
  out.iterations = std::min(out.iterations, cfg.fp_max_iters);
  // The damped iterates only approach a pure fixed point geometrically; when
  // the limit is itself a fixed point, return it exactly.
  if (out.converged) {
    FollowerPrescription pure = pure_follower(spec.num_follower_actions, target);
    if (pure_best_actions(ctx, gamma_l, pure) == target) gamma = std::move(pure);
  }
  out.prescription = std::move(gamma);
  return out;
}

LeaderSolution leader_optimize_impl(const StageContext& ctx) {
  LeaderSolution best;
  bool have = false;
  for (const LeaderPrescription& gamma_l :
       leader_grid(ctx.spec.num_leader_actions, ctx.cfg.leader_resolution)) {
    BestResponse br = best_response_impl(ctx, gamma_l);
    if (!br.converged) ++best.nonconverged_candidates;
    const double objective = leader_objective(ctx, gamma_l, br.prescription);
    if (!have || beats(objective, best.objective)) {
      have = true;
      best.leader = gamma_l;
      best.follower = std::move(br.prescription);
      best.objective = objective;
      best.converged = br.converged;
    }
  }
  return best;
}

}  // namespace

double joint_action_prob(const BeliefState& pi, const LeaderPrescription& gamma_l,
                         const FollowerPrescription& gamma_f, JointAction a) {
  const double pl = gamma_l.probs[a.leader];
  if (pl == 0.0) return 0.0;
  return pl * observation_likelihood(pi, gamma_f, a.follower);
}

double q_follower(const BeliefState& pi, int x, JointAction a, const FollowerPrescription& gamma_f,
                  const ValueTable& v_next_follower, const GameSpec& spec, const BeliefGrid& grid,
                  OffPathRule off_path) {
  const BeliefState next = bayes_update(pi, gamma_f, a, spec, off_path);
  return q_follower_from(next, x, a, v_next_follower, spec, grid);
}

double q_leader(const BeliefState& pi, JointAction a, const FollowerPrescription& gamma_f,
                const ValueTable& v_next_leader, const GameSpec& spec, const BeliefGrid& grid,
                OffPathRule off_path) {
  const BeliefState next = bayes_update(pi, gamma_f, a, spec, off_path);
  return q_leader_from(pi, next, a, v_next_leader, spec, grid);
}

BestResponse follower_best_response(const BeliefState& pi, const LeaderPrescription& gamma_l,
                                    const ValueTable& v_next_follower,
                                    const ValueTable& v_next_leader, const GameSpec& spec,
                                    const BeliefGrid& grid, const SolveConfig& cfg) {
  return best_response_impl({pi, v_next_follower, v_next_leader, spec, grid, cfg}, gamma_l);
}

LeaderSolution leader_optimize(const BeliefState& pi, const ValueTable& v_next_follower,
                               const ValueTable& v_next_leader, const GameSpec& spec,
                               const BeliefGrid& grid, const SolveConfig& cfg) {
  return leader_optimize_impl({pi, v_next_follower, v_next_leader, spec, grid, cfg});
}

bool ExactSolution::all_converged() const {
  return std::all_of(stages.begin(), stages.end(),
                     [](const StageDiagnostics& s) { return s.nonconverged_points == 0; });
}

ExactSolution backward_recursion(const GameSpec& spec, const SolveConfig& cfg) {
  require_valid(spec);
  cfg.validate();
  BeliefGrid grid = make_grid(spec.num_states, cfg.belief_resolution);
  ExactSolution out{StrategyTable(spec.horizon, grid), {}};
  ValueTable v_next_f = ValueTable::follower(grid.size(), spec.num_states);
  ValueTable v_next_l = ValueTable::leader(grid.size());

  for (int t = spec.horizon; t >= 1; --t) {
    std::vector<char> point_converged(grid.size(), 1);
    std::vector<int> candidate_failures(grid.size(), 0);
    parallel_for(grid.size(), cfg.threads, [&](std::size_t g) {
      const StageContext ctx{grid.point(g), v_next_f, v_next_l, spec, grid, cfg};
      LeaderSolution sol = leader_optimize_impl(ctx);
      StrategyEntry& e = out.table.at(t, g);
      e.value_follower = follower_values(ctx, sol.leader, sol.follower);
      e.value_leader = sol.objective;
      e.prescription = {std::move(sol.leader), std::move(sol.follower)};
      point_converged[g] = sol.converged;
      candidate_failures[g] = sol.nonconverged_candidates;
    });
    StageDiagnostics diag{t, 0, 0};
    for (std::size_t g = 0; g < grid.size(); ++g) {
      diag.nonconverged_points += point_converged[g] ? 0 : 1;
      diag.nonconverged_candidates += candidate_failures[g];
    }
    out.stages.push_back(diag);
    v_next_f = out.table.follower_values(t);
    v_next_l = out.table.leader_values(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward deployment

DeployedProfile::DeployedProfile(StrategyTable table, GameSpec spec)
    : table_(std::move(table)), spec_(std::move(spec)) {
  if (table_.grid().num_states() != spec_.num_states) {
    throw std::invalid_argument("strategy table and game disagree on the state count");
  }
}

BeliefState DeployedProfile::initial_belief() const { return {spec_.initial_dist}; }

const PrescriptionPair& DeployedProfile::prescriptions(int t, const BeliefState& mu) const {
  return table_.at(t, grid_index(mu)).prescription;
}

BeliefState DeployedProfile::next_belief(int t, const BeliefState& mu, JointAction a,
                                         OffPathRule rule) const {
  return bayes_update(mu, prescriptions(t, mu).follower, a, spec_, rule);
}

BeliefState DeployedProfile::belief_after(std::span<const JointAction> history) const {
  if (static_cast<int>(history.size()) >= horizon()) {
    throw std::out_of_range("history longer than the horizon");
  }
  BeliefState mu = initial_belief();
  for (std::size_t i = 0; i < history.size(); ++i) {
    mu = next_belief(static_cast<int>(i) + 1, mu, history[i]);
  }
  return mu;
}

const LeaderPrescription& DeployedProfile::leader_strategy(
    std::span<const JointAction> history) const {
  const int t = static_cast<int>(history.size()) + 1;
  return prescriptions(t, belief_after(history)).leader;
}

std::span<const double> DeployedProfile::follower_strategy(std::span<const JointAction> history,
                                                           int x) const {
  const int t = static_cast<int>(history.size()) + 1;
  return prescriptions(t, belief_after(history)).follower.per_state.at(x);
}

DeployedProfile forward_strategy(const StrategyTable& table, const GameSpec& spec) {
  return DeployedProfile(table, spec);
}

}  // namespace stackgame
