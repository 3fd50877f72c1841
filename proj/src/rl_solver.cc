#include "stackgame/rl_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stackgame/exact_solver.hpp"
#include "stackgame/parallel.hpp"
#include "stackgame/particle_filter.hpp"

namespace stackgame {

void RLConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (sweeps < 1) throw std::invalid_argument("sweeps must be at least 1");
  if (particle_count < 1) throw std::invalid_argument("particle_count must be at least 1");
  if (belief_resolution < 2) throw std::invalid_argument("belief_resolution must be at least 2");
  if (leader_resolution < 2) throw std::invalid_argument("leader_resolution must be at least 2");
  if (follower_resolution < 2) {
    throw std::invalid_argument("follower_resolution must be at least 2");
  }
  if (!(pg_step > 0.0)) throw std::invalid_argument("pg_step must be positive");
  if (pg_iters < 1) throw std::invalid_argument("pg_iters must be at least 1");
  if (fp_outer_iters < 1) throw std::invalid_argument("fp_outer_iters must be at least 1");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

double RLConfig::alpha_at(int sweep) const {
  if (alpha_schedule == AlphaSchedule::kHarmonic) return std::max(alpha, 1.0 / sweep);
  return alpha;
}

double sarsa_update_follower(double q_old, double reward, double v_next, double alpha,
                             double discount) {
  return (1.0 - alpha) * q_old + alpha * (reward + discount * v_next);
}

double sarsa_update_leader(double q_old, double reward_expected, double discounted_next,
                           double alpha) {
  return (1.0 - alpha) * q_old + alpha * (reward_expected + discounted_next);
}

QTables::QTables(std::size_t grid_size, std::size_t lattice_size, const GameSpec& spec)
    : grid_size_(grid_size),
      lattice_size_(lattice_size),
      num_states_(spec.num_states),
      num_leader_(spec.num_leader_actions),
      num_joint_(spec.num_joint_actions()),
      follower_(grid_size * lattice_size * spec.num_states * spec.num_joint_actions(), 0.0),
      leader_(grid_size * lattice_size * spec.num_joint_actions(), 0.0) {}

double QTables::max_abs() const {
  double m = 0.0;
  for (double v : follower_) m = std::max(m, std::abs(v));
  for (double v : leader_) m = std::max(m, std::abs(v));
  return m;
}

namespace {

struct CellStats {
  std::vector<double> delta_sum;  // per sweep
  std::int64_t off_path = 0;
  std::int64_t bound_violations = 0;
};

// Runs the L sweeps of Expected Sarsa for one (grid point, lattice prescription) cell.
void evaluate_cell(int t, std::size_t g, std::size_t k, const ValueTable& v_next_f,
                   const ValueTable& v_next_l, const GameSpec& spec, const BeliefGrid& grid,
                   const FollowerLattice& lattice, const RLConfig& cfg, double bound_f,
                   double bound_l, QTables& q, CellStats& stats) {
  Rng rng = make_rng(cfg.seed, {static_cast<std::uint64_t>(t), g, k});
  const BeliefState& pi = grid.point(g);
  const FollowerPrescription gamma_f = lattice.prescription(k);
  const double delta = spec.discount;

  auto filtered_belief = [&](JointAction a) {
    const pf::ParticleCounts start = pf::init_counts(pi, cfg.particle_count, rng);
    pf::CountsStep s = pf::step_counts(start, gamma_f, a, spec, rng, cfg.off_path);
    if (s.off_path) ++stats.off_path;
    return pf::estimate(s.next);
  };

  for (int sweep = 1; sweep <= cfg.sweeps; ++sweep) {
    const double alpha = cfg.alpha_at(sweep);
    double moved = 0.0;
    bool violated = false;
    for (int j = 0; j < spec.num_joint_actions(); ++j) {
      const JointAction a = spec.joint_action(j);
      for (int x = 0; x < spec.num_states; ++x) {
        const int x_next = sample_next_state(spec, x, a, rng);
        const BeliefState belief_f = filtered_belief(a);
        const double v = interpolate(v_next_f, grid, belief_f, x_next);
        double& cell = q.follower(g, k, x, a);
        const double updated = sarsa_update_follower(
            cell, spec.reward_follower[spec.reward_index(x, a)], v, alpha, delta);
        moved += std::abs(updated - cell);
        cell = updated;
        violated |= std::abs(cell) > bound_f;
      }
      const BeliefState belief_l = filtered_belief(a);
      double r_expected = 0.0;
      for (int x = 0; x < spec.num_states; ++x) {
        r_expected += pi.probs[x] * spec.reward_leader[spec.reward_index(x, a)];
      }
      double& cell = q.leader(g, k, a);
      const double updated =
          sarsa_update_leader(cell, r_expected, delta * interpolate(v_next_l, grid, belief_l), alpha);
      moved += std::abs(updated - cell);
      cell = updated;
      violated |= std::abs(cell) > bound_l;
    }
    stats.delta_sum[sweep - 1] += moved;
    if (violated) ++stats.bound_violations;
  }
}

// Expected follower Q per action for type x, against γ_l, at lattice slice k.
std::vector<double> follower_gradient(const QTables& q, std::size_t g, std::size_t k, int x,
                                      const LeaderPrescription& gamma_l, int num_follower) {
  std::vector<double> grad(num_follower, 0.0);
  for (int af = 0; af < num_follower; ++af) {
    for (std::size_t al = 0; al < gamma_l.probs.size(); ++al) {
      if (gamma_l.probs[al] == 0.0) continue;
      grad[af] += gamma_l.probs[al] * q.follower(g, k, x, {static_cast<int>(al), af});
    }
  }
  return grad;
}

}  // namespace

QTables policy_evaluation(int t, const ValueTable& v_next_follower,
                          const ValueTable& v_next_leader, const GameSpec& spec,
                          const BeliefGrid& grid, const FollowerLattice& lattice,
                          const RLConfig& cfg, PolicyEvaluationReport* report) {
  cfg.validate();
  QTables q(grid.size(), lattice.size(), spec);
  double max_rf = 0.0, max_rl = 0.0;
  for (double r : spec.reward_follower) max_rf = std::max(max_rf, std::abs(r));
  for (double r : spec.reward_leader) max_rl = std::max(max_rl, std::abs(r));
  const double slack = 1e-9;
  const double bound_f = max_rf + spec.discount * v_next_follower.max_abs() + slack;
  const double bound_l = max_rl + spec.discount * v_next_leader.max_abs() + slack;

  std::vector<CellStats> stats(grid.size());
  parallel_for(grid.size(), cfg.threads, [&](std::size_t g) {
    stats[g].delta_sum.assign(cfg.sweeps, 0.0);
    for (std::size_t k = 0; k < lattice.size(); ++k) {
      evaluate_cell(t, g, k, v_next_follower, v_next_leader, spec, grid, lattice, cfg, bound_f,
                    bound_l, q, stats[g]);
    }
  });

  if (report) {
    report->t = t;
    report->mean_abs_delta.assign(cfg.sweeps, 0.0);
    const double entries = static_cast<double>(grid.size() * lattice.size()) *
                           spec.num_joint_actions() * (spec.num_states + 1);
    for (const CellStats& s : stats) {
      for (int l = 0; l < cfg.sweeps; ++l) report->mean_abs_delta[l] += s.delta_sum[l];
      report->off_path_filter_steps += s.off_path;
      report->bound_violations += s.bound_violations;
    }
    for (double& d : report->mean_abs_delta) d /= entries;
  }
  return q;
}

FollowerPrescription follower_gradient_br(const QTables& q, std::size_t g,
                                          const LeaderPrescription& gamma_l,
                                          const FollowerLattice& lattice, const RLConfig& cfg) {
  const int num_states = lattice.prescription(0).num_states();
  const int nf = lattice.per_state().dim();
  FollowerPrescription gamma = uniform_follower(num_states, nf);
  std::size_t k = lattice.nearest(gamma);
  for (int round = 0; round < cfg.fp_outer_iters; ++round) {
    const FollowerPrescription round_start = gamma;
    for (int x = 0; x < num_states; ++x) {
      const std::vector<double> grad = follower_gradient(q, g, k, x, gamma_l, nf);
      std::vector<double>& row = gamma.per_state[x];
      std::vector<double> ascent(nf);
      for (int it = 0; it < cfg.pg_iters; ++it) {
        for (int a = 0; a < nf; ++a) ascent[a] = row[a] + cfg.pg_step * grad[a];
        std::vector<double> projected = simplex_project(ascent);
        if (projected == row) break;
        row = std::move(projected);
      }
    }
    const std::size_t next_k = lattice.nearest(gamma);
    const bool settled = next_k == k && linf_distance(gamma, round_start) == 0.0;
    k = next_k;
    if (settled) break;
  }
  if (cfg.purify) {
    for (int x = 0; x < num_states; ++x) {
      std::vector<double>& row = gamma.per_state[x];
      if (*std::max_element(row.begin(), row.end()) >= 1.0 - 1e-9) continue;
      const std::vector<double> grad = follower_gradient(q, g, k, x, gamma_l, nf);
      const double top = *std::max_element(grad.begin(), grad.end());
      const double slack = kTieTolerance * std::max(1.0, std::abs(top));
      int choice = 0;
      while (grad[choice] < top - slack) ++choice;
      std::fill(row.begin(), row.end(), 0.0);
      row[choice] = 1.0;
    }
  }
  return gamma;
}

double leader_q_objective(const QTables& q, std::size_t g, const BeliefState& pi,
                          const LeaderPrescription& gamma_l, const FollowerPrescription& response,
                          const FollowerLattice& lattice) {
  const std::size_t k = lattice.nearest(response);
  const int nf = lattice.per_state().dim();
  double v = 0.0;
  for (int af = 0; af < nf; ++af) {
    const double pf = observation_likelihood(pi, response, af);
    if (pf == 0.0) continue;
    for (std::size_t al = 0; al < gamma_l.probs.size(); ++al) {
      if (gamma_l.probs[al] == 0.0) continue;
      v += gamma_l.probs[al] * pf * q.leader(g, k, {static_cast<int>(al), af});
    }
  }
  return v;
}

LeaderChoice leader_greedy(const QTables& q, std::size_t g, const BeliefState& pi,
                           const std::vector<LeaderPrescription>& candidates,
                           const std::vector<FollowerPrescription>& responses,
                           const FollowerLattice& lattice) {
  if (candidates.empty() || candidates.size() != responses.size()) {
    throw std::invalid_argument("leader_greedy needs one response per candidate");
  }
  LeaderChoice best{0, leader_q_objective(q, g, pi, candidates[0], responses[0], lattice)};
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    const double v = leader_q_objective(q, g, pi, candidates[c], responses[c], lattice);
    if (beats(v, best.objective)) best = {c, v};
  }
  return best;
}

RLSolution solve_rl(const GameSpec& spec, const RLConfig& cfg) {
  require_valid(spec);
  cfg.validate();
  const BeliefGrid grid = make_grid(spec.num_states, cfg.belief_resolution);
  const FollowerLattice lattice(spec.num_states, spec.num_follower_actions,
                                cfg.follower_resolution);
  const auto candidates = leader_grid(spec.num_leader_actions, cfg.leader_resolution);
  RLSolution out{StrategyTable(spec.horizon, grid), {}};
  ValueTable v_next_f = ValueTable::follower(grid.size(), spec.num_states);
  ValueTable v_next_l = ValueTable::leader(grid.size());

  for (int t = spec.horizon; t >= 1; --t) {
    PolicyEvaluationReport report;
    const QTables q = policy_evaluation(t, v_next_f, v_next_l, spec, grid, lattice, cfg, &report);
    out.stages.push_back(std::move(report));

    parallel_for(grid.size(), cfg.threads, [&](std::size_t g) {
      const BeliefState& pi = grid.point(g);
      std::vector<FollowerPrescription> responses;
      responses.reserve(candidates.size());
      for (const auto& gamma_l : candidates) {
        responses.push_back(follower_gradient_br(q, g, gamma_l, lattice, cfg));
      }
      const LeaderChoice choice = leader_greedy(q, g, pi, candidates, responses, lattice);
      const LeaderPrescription& gamma_l = candidates[choice.index];
      FollowerPrescription& gamma_f = responses[choice.index];
      const std::size_t k = lattice.nearest(gamma_f);

      StrategyEntry& e = out.table.at(t, g);
      e.value_leader = choice.objective;
      e.value_follower.assign(spec.num_states, 0.0);
      for (int x = 0; x < spec.num_states; ++x) {
        for (int j = 0; j < spec.num_joint_actions(); ++j) {
          const JointAction a = spec.joint_action(j);
          const double p = gamma_l.probs[a.leader] * gamma_f.prob(x, a.follower);
          if (p != 0.0) e.value_follower[x] += p * q.follower(g, k, x, a);
        }
      }
      e.prescription = {gamma_l, std::move(gamma_f)};
    });
    v_next_f = out.table.follower_values(t);
    v_next_l = out.table.leader_values(t);
  }
  return out;
}

}  // namespace stackgame
