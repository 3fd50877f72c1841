#include "stackgame/game_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stackgame {
namespace {

constexpr double kProbTolerance = 1e-9;

void check_indices(const GameSpec& spec, int x, JointAction a) {
  if (x < 0 || x >= spec.num_states) throw std::out_of_range("state index out of range");
  if (a.leader < 0 || a.leader >= spec.num_leader_actions) {
    throw std::out_of_range("leader action index out of range");
  }
  if (a.follower < 0 || a.follower >= spec.num_follower_actions) {
    throw std::out_of_range("follower action index out of range");
  }
}

}  // namespace

GameSpec::GameSpec(int nx, int nl, int nf, int horizon_, double discount_)
    : num_states(nx),
      num_leader_actions(nl),
      num_follower_actions(nf),
      horizon(horizon_),
      discount(discount_) {
  if (nx < 1 || nl < 1 || nf < 1) throw std::invalid_argument("game dimensions must be positive");
  const std::size_t cells = static_cast<std::size_t>(nx) * nl * nf;
  reward_leader.assign(cells, 0.0);
  reward_follower.assign(cells, 0.0);
  transition.assign(cells * nx, 0.0);
  for (int x = 0; x < nx; ++x) {
    for (int al = 0; al < nl; ++al) {
      for (int af = 0; af < nf; ++af) transition_at(x, x, {al, af}) = 1.0;
    }
  }
  initial_dist.assign(nx, 1.0 / nx);
}

double GameSpec::max_abs_reward() const {
  double m = 0.0;
  for (double r : reward_leader) m = std::max(m, std::abs(r));
  for (double r : reward_follower) m = std::max(m, std::abs(r));
  return m;
}

std::vector<Violation> validate(const GameSpec& spec) {
  std::vector<Violation> out;
  if (spec.num_states < 1 || spec.num_leader_actions < 1 || spec.num_follower_actions < 1) {
    out.push_back({"dimension", "state and action space sizes must be positive", {}});
    return out;
  }
  if (spec.horizon < 1) out.push_back({"range", "horizon must be positive", {}});
  if (!(spec.discount >= 0.0 && spec.discount <= 1.0)) {
    out.push_back({"range", "discount must lie in [0, 1]", {}});
  }
  const std::size_t cells =
      static_cast<std::size_t>(spec.num_states) * spec.num_leader_actions * spec.num_follower_actions;
  if (spec.reward_leader.size() != cells) {
    out.push_back({"dimension", "reward_leader has wrong size", {}});
  }
  if (spec.reward_follower.size() != cells) {
    out.push_back({"dimension", "reward_follower has wrong size", {}});
  }
  for (std::size_t i = 0; i < std::min(cells, spec.reward_leader.size()); ++i) {
    if (!std::isfinite(spec.reward_leader[i])) {
      out.push_back({"range", "non-finite leader reward", {static_cast<int>(i)}});
    }
  }
  for (std::size_t i = 0; i < std::min(cells, spec.reward_follower.size()); ++i) {
    if (!std::isfinite(spec.reward_follower[i])) {
      out.push_back({"range", "non-finite follower reward", {static_cast<int>(i)}});
    }
  }
  if (spec.initial_dist.size() != static_cast<std::size_t>(spec.num_states)) {
    out.push_back({"dimension", "initial_dist has wrong size", {}});
  } else {
    double sum = 0.0;
    for (int x = 0; x < spec.num_states; ++x) {
      const double p = spec.initial_dist[x];
      if (!(p >= 0.0 && p <= 1.0)) {
        std::ostringstream msg;
        msg << "initial_dist[" << x << "] = " << p << " outside [0, 1]";
        out.push_back({"range", msg.str(), {x}});
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTolerance) {
      std::ostringstream msg;
      msg << "initial_dist sums to " << sum;
      out.push_back({"normalization", msg.str(), {}});
    }
  }
  if (spec.transition.size() != cells * spec.num_states) {
    out.push_back({"dimension", "transition has wrong size", {}});
    return out;
  }
  for (int x = 0; x < spec.num_states; ++x) {
    for (int al = 0; al < spec.num_leader_actions; ++al) {
      for (int af = 0; af < spec.num_follower_actions; ++af) {
        const JointAction a{al, af};
        const double* row = spec.transition_row(x, a);
        double sum = 0.0;
        for (int xn = 0; xn < spec.num_states; ++xn) {
          if (!(row[xn] >= 0.0 && row[xn] <= 1.0)) {
            std::ostringstream msg;
            msg << "transition(" << xn << " | " << x << ", " << al << ", " << af << ") = " << row[xn]
                << " outside [0, 1]";
            out.push_back({"range", msg.str(), {xn, x, al, af}});
          }
          sum += row[xn];
        }
        if (std::abs(sum - 1.0) > kProbTolerance) {
          std::ostringstream msg;
          msg << "transition column (x=" << x << ", a=(" << al << ", " << af << ")) sums to " << sum;
          out.push_back({"normalization", msg.str(), {x, al, af}});
        }
      }
    }
  }
  return out;
}

void require_valid(const GameSpec& spec) {
  const auto violations = validate(spec);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid game:";
  for (const auto& v : violations) msg << "\n  " << v.message;
  throw std::invalid_argument(msg.str());
}

double reward(const GameSpec& spec, Player player, int x, JointAction a) {
  check_indices(spec, x, a);
  const auto& table = player == Player::kLeader ? spec.reward_leader : spec.reward_follower;
  return table[spec.reward_index(x, a)];
}

double transition_prob(const GameSpec& spec, int x_next, int x, JointAction a) {
  check_indices(spec, x, a);
  if (x_next < 0 || x_next >= spec.num_states) {
    throw std::out_of_range("next state index out of range");
  }
  return spec.transition[spec.transition_index(x_next, x, a)];
}

int sample_next_state(const GameSpec& spec, int x, JointAction a, Rng& rng) {
  return sample_categorical({spec.transition_row(x, a), static_cast<std::size_t>(spec.num_states)},
                            rng);
}

std::vector<std::int64_t> sample_next_state_counts(const GameSpec& spec, int x, JointAction a,
                                                   std::int64_t n, Rng& rng) {
  return multinomial_counts(
      n, {spec.transition_row(x, a), static_cast<std::size_t>(spec.num_states)}, rng);
}

GameSpec security_game(int horizon) {
  GameSpec g(2, 2, 2, horizon, 0.6);
  // Defender D1 = 0, D2 = 1; attacker A1 = 0, A2 = 1. The payoff table is the
  // same for both attacker types.
  constexpr double kLeader[2][2] = {{2, 4}, {1, 3}};
  constexpr double kFollower[2][2] = {{1, 0}, {0, 2}};
  for (int x = 0; x < 2; ++x) {
    for (int al = 0; al < 2; ++al) {
      for (int af = 0; af < 2; ++af) {
        const JointAction a{al, af};
        g.reward_at(Player::kLeader, x, a) = kLeader[al][af];
        g.reward_at(Player::kFollower, x, a) = kFollower[al][af];
        for (int xn = 0; xn < 2; ++xn) g.transition_at(xn, x, a) = xn == x ? 0.1 : 0.9;
      }
    }
  }
  g.initial_dist = {0.5, 0.5};
  return g;
}

}  // namespace stackgame
