#pragma once

// Prescriptions emitted by the common agent: a leader action distribution and
// a follower map from private state to action distribution. Also the uniform
// simplex lattices used for belief grids and prescription search sets.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "stackgame/rng.hpp"

namespace stackgame {

struct LeaderPrescription {
  std::vector<double> probs;
};

struct FollowerPrescription {
  std::vector<std::vector<double>> per_state;

  double prob(int x, int action) const { return per_state[x][action]; }
  int num_states() const { return static_cast<int>(per_state.size()); }
};

struct PrescriptionPair {
  LeaderPrescription leader;
  FollowerPrescription follower;
};

bool is_distribution(std::span<const double> p, double tol = 1e-9);

LeaderPrescription uniform_leader(int num_actions);
LeaderPrescription pure_leader(int num_actions, int action);
FollowerPrescription uniform_follower(int num_states, int num_actions);
// `actions[x]` is the action played in state x.
FollowerPrescription pure_follower(int num_actions, std::span<const int> actions);

// Euclidean projection onto the probability simplex (sort-based, exact).
std::vector<double> simplex_project(std::span<const double> v);

int sample_leader_action(const LeaderPrescription& gamma, Rng& rng);
int sample_follower_action(const FollowerPrescription& gamma, int x, Rng& rng);

double linf_distance(std::span<const double> a, std::span<const double> b);
double linf_distance(const FollowerPrescription& a, const FollowerPrescription& b);

// Uniform lattice {c / (resolution-1) : c ∈ N^dim, Σc = resolution-1} on the
// probability simplex.
class SimplexLattice {
 public:
  enum class Order {
    kAscending,   // lexicographic on counts: (0,..,m) first
    kDescending,  // (m,0,..,0) first, i.e. pure index-0 point first
  };

  SimplexLattice(int dim, int resolution, Order order = Order::kAscending);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  int divisions() const { return resolution_ - 1; }
  std::size_t size() const { return counts_.size(); }

  const std::vector<int>& counts(std::size_t i) const { return counts_[i]; }
  std::vector<double> point(std::size_t i) const;
  // Index of an exact lattice point; throws std::out_of_range otherwise.
  std::size_t index_of(std::span<const int> counts) const;
  // Lattice point closest to p (largest-remainder rounding of p·(resolution-1)).
  std::size_t nearest(std::span<const double> p) const;

 private:
  int dim_;
  int resolution_;
  std::vector<std::vector<int>> counts_;
  std::map<std::vector<int>, std::size_t> index_;
};

// Lattice rounding used by SimplexLattice::nearest.
std::vector<int> round_to_lattice(std::span<const double> p, int divisions);

std::vector<LeaderPrescription> leader_grid(int num_actions, int resolution);
std::vector<FollowerPrescription> follower_grid(int num_states, int num_actions, int resolution);

// The follower prescription lattice as a Cartesian product of per-state
// lattices, with nearest-point lookup. Index = mixed radix with state 0 most
// significant, matching follower_grid().
class FollowerLattice {
 public:
  FollowerLattice(int num_states, int num_actions, int resolution);

  std::size_t size() const { return size_; }
  FollowerPrescription prescription(std::size_t index) const;
  std::size_t nearest(const FollowerPrescription& gamma) const;
  const SimplexLattice& per_state() const { return per_state_; }

 private:
  int num_states_;
  SimplexLattice per_state_;
  std::size_t size_;
};

}  // namespace stackgame
