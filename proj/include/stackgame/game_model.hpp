#pragma once

// Finite-horizon two-player stochastic Stackelberg game in which the follower
// holds a private Markov state. Rewards and the transition kernel are
// time-invariant.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stackgame/rng.hpp"

namespace stackgame {

enum class Player { kLeader, kFollower };

struct JointAction {
  int leader = 0;
  int follower = 0;

  friend bool operator==(const JointAction&, const JointAction&) = default;
};

struct Violation {
  std::string kind;        // "dimension", "range", "normalization"
  std::string message;
  std::vector<int> index;  // offending (state, leader_action, follower_action, ...) tuple
};

class GameSpec {
 public:
  GameSpec() = default;
  // Zero rewards, identity kernel, uniform initial distribution.
  GameSpec(int num_states, int num_leader_actions, int num_follower_actions, int horizon = 1,
           double discount = 1.0);

  int num_states = 0;
  int num_leader_actions = 0;
  int num_follower_actions = 0;
  // Flat row-major tables: rewards [x][a_l][a_f], transition [x][a_l][a_f][x'].
  std::vector<double> reward_leader;
  std::vector<double> reward_follower;
  std::vector<double> transition;
  std::vector<double> initial_dist;
  int horizon = 1;
  double discount = 1.0;

  int num_joint_actions() const { return num_leader_actions * num_follower_actions; }
  std::size_t reward_index(int x, JointAction a) const {
    return (static_cast<std::size_t>(x) * num_leader_actions + a.leader) * num_follower_actions +
           a.follower;
  }
  std::size_t transition_index(int x_next, int x, JointAction a) const {
    return reward_index(x, a) * num_states + x_next;
  }

  double& reward_at(Player p, int x, JointAction a) {
    return (p == Player::kLeader ? reward_leader : reward_follower)[reward_index(x, a)];
  }
  double& transition_at(int x_next, int x, JointAction a) {
    return transition[transition_index(x_next, x, a)];
  }
  // Pointer to τ(·|x,a), contiguous over next states.
  const double* transition_row(int x, JointAction a) const {
    return transition.data() + reward_index(x, a) * num_states;
  }

  // Joint actions enumerated follower-major: (a_l, a_f) with a_f outer.
  JointAction joint_action(int index) const {
    return {index % num_leader_actions, index / num_leader_actions};
  }
  int joint_index(JointAction a) const { return a.follower * num_leader_actions + a.leader; }

  double max_abs_reward() const;
};

std::vector<Violation> validate(const GameSpec& spec);
// Throws std::invalid_argument listing every violation.
void require_valid(const GameSpec& spec);

// Bounds-checked lookups; throw std::out_of_range.
double reward(const GameSpec& spec, Player player, int x, JointAction a);
double transition_prob(const GameSpec& spec, int x_next, int x, JointAction a);

int sample_next_state(const GameSpec& spec, int x, JointAction a, Rng& rng);
// Next-state counts for n independent draws from τ(·|x,a). Same law as n calls
// to sample_next_state, but O(|X|) work.
std::vector<std::int64_t> sample_next_state_counts(const GameSpec& spec, int x, JointAction a,
                                                   std::int64_t n, Rng& rng);

// Repeated security game: defender (leader) D1/D2, attacker (follower) A1/A2,
// two attacker types that switch with probability 0.9 each stage, δ = 0.6.
GameSpec security_game(int horizon = 5);

// JSON document with "format": 1. Throws std::invalid_argument on schema errors.
std::string game_to_json(const GameSpec& spec);
GameSpec game_from_json(const std::string& text);
GameSpec load_game(const std::filesystem::path& path);

}  // namespace stackgame
