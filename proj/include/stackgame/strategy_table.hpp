#pragma once

#include <istream>
#include <ostream>
#include <vector>

#include "stackgame/belief.hpp"
#include "stackgame/game_model.hpp"
#include "stackgame/prescription.hpp"

namespace stackgame {

struct StrategyEntry {
  PrescriptionPair prescription;
  double value_leader = 0.0;
  std::vector<double> value_follower;  // indexed by private state
};

// Equilibrium generating function on the belief grid: for every stage
// t = 1..T and grid point, the prescription pair plus V^l and V^f.
class StrategyTable {
 public:
  StrategyTable(int horizon, BeliefGrid grid);

  int horizon() const { return horizon_; }
  const BeliefGrid& grid() const { return grid_; }

  StrategyEntry& at(int t, std::size_t g) { return entries_[index(t, g)]; }
  const StrategyEntry& at(int t, std::size_t g) const { return entries_[index(t, g)]; }

  ValueTable leader_values(int t) const;
  ValueTable follower_values(int t) const;

 private:
  std::size_t index(int t, std::size_t g) const;

  int horizon_;
  BeliefGrid grid_;
  std::vector<StrategyEntry> entries_;
};

// Value table for stage t, where t = horizon + 1 yields the zero terminal table.
ValueTable leader_values_or_zero(const StrategyTable& table, int t);
ValueTable follower_values_or_zero(const StrategyTable& table, int t, int num_states);

// One row per (t, grid point). Columns:
//   t, belief_coord_0..|X|-2, leader_prob_action1..|A^l|-1,
//   follower_prob_action{a}_given_x{x} for a >= 1, V_l, V_f_x0..V_f_x{|X|-1}
// For the 2x2x2 case this is exactly
//   t, belief_coord_0, leader_prob_action1, follower_prob_action1_given_x0,
//   follower_prob_action1_given_x1, V_l, V_f_x0, V_f_x1
void write_strategy_csv(std::ostream& out, const StrategyTable& table, const GameSpec& spec);
std::vector<std::string> strategy_csv_header(const GameSpec& spec);
// Inverse of write_strategy_csv. Throws std::invalid_argument on malformed input
// or a shape that does not match `spec`.
StrategyTable read_strategy_csv(std::istream& in, const GameSpec& spec);

}  // namespace stackgame
