#pragma once

// Common-agent belief over the follower's private state: exact Bayes update,
// the uniform belief grid, and value tables interpolated on that grid.

#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stackgame/game_model.hpp"
#include "stackgame/prescription.hpp"

namespace stackgame {

struct BeliefState {
  std::vector<double> probs;

  int num_states() const { return static_cast<int>(probs.size()); }
};

bool is_valid(const BeliefState& b, double tol = 1e-9);
double l1_distance(const BeliefState& a, const BeliefState& b);

// The observed follower action had zero probability under the belief and the
// follower prescription.
class ImpossibleObservation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// What to do when an observed action has zero likelihood.
enum class OffPathRule {
  kThrow,            // raise ImpossibleObservation
  kPriorPredictive,  // treat the observation as uninformative: π'(x') = Σ_x π(x) τ(x'|x,a)
};

// π'(x') = Σ_x π(x) γ_f(a_f|x) τ(x'|x,a) / Σ_x π(x) γ_f(a_f|x).
BeliefState bayes_update(const BeliefState& pi, const FollowerPrescription& gamma_f, JointAction a,
                         const GameSpec& spec);
BeliefState bayes_update(const BeliefState& pi, const FollowerPrescription& gamma_f, JointAction a,
                         const GameSpec& spec, OffPathRule rule);
// Σ_x π(x) γ_f(a_f|x): probability of observing follower action a_f.
double observation_likelihood(const BeliefState& pi, const FollowerPrescription& gamma_f,
                              int follower_action);

class BeliefGrid {
 public:
  BeliefGrid(int num_states, int resolution);

  int num_states() const { return lattice_.dim(); }
  int resolution() const { return lattice_.resolution(); }
  std::size_t size() const { return points_.size(); }
  const BeliefState& point(std::size_t i) const { return points_[i]; }
  const std::vector<BeliefState>& points() const { return points_; }

  std::size_t nearest(const BeliefState& pi) const;
  // Vertices and barycentric weights of the lattice simplex containing π
  // (Freudenthal triangulation); weights are positive and sum to 1.
  std::vector<std::pair<std::size_t, double>> barycentric(const BeliefState& pi) const;

 private:
  SimplexLattice lattice_;
  std::vector<BeliefState> points_;
};

// Throws std::invalid_argument for resolution < 2.
BeliefGrid make_grid(int num_states, int resolution);

// Value function on the belief grid. A follower table carries a state axis
// (V^f : grid × X → R); a leader table does not (V^l : grid → R).
class ValueTable {
 public:
  static ValueTable leader(std::size_t grid_size);
  static ValueTable follower(std::size_t grid_size, int num_states);

  bool has_state_axis() const { return num_states_ > 0; }
  int num_states() const { return num_states_; }
  std::size_t grid_size() const { return grid_size_; }

  double& at(std::size_t g) { return values_[g]; }
  double at(std::size_t g) const { return values_[g]; }
  double& at(std::size_t g, int x) { return values_[g * num_states_ + x]; }
  double at(std::size_t g, int x) const { return values_[g * num_states_ + x]; }

  std::span<const double> values() const { return values_; }
  double max_abs() const;

 private:
  ValueTable(std::size_t grid_size, int num_states)
      : grid_size_(grid_size),
        num_states_(num_states),
        values_(grid_size * std::max(num_states, 1), 0.0) {}

  std::size_t grid_size_;
  int num_states_;
  std::vector<double> values_;
};

// Linear (|X| = 2) or barycentric interpolation of a leader table.
double interpolate(const ValueTable& table, const BeliefGrid& grid, const BeliefState& pi);
// Same, for a follower table at private state x.
double interpolate(const ValueTable& table, const BeliefGrid& grid, const BeliefState& pi, int x);

// CSV with columns t, grid_index, belief_coord_0..k, state_or_blank, value.
// tables[i] is the table for stage first_stage + i.
void write_value_table_csv(std::ostream& out, const BeliefGrid& grid,
                           std::span<const ValueTable> tables, int first_stage = 1);

}  // namespace stackgame
