#include "stackgame/strategy_table.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "stackgame/text.hpp"

namespace stackgame {

StrategyTable::StrategyTable(int horizon, BeliefGrid grid)
    : horizon_(horizon), grid_(std::move(grid)) {
  if (horizon < 1) throw std::invalid_argument("strategy table horizon must be positive");
  entries_.resize(static_cast<std::size_t>(horizon) * grid_.size());
}

std::size_t StrategyTable::index(int t, std::size_t g) const {
  if (t < 1 || t > horizon_ || g >= grid_.size()) throw std::out_of_range("strategy table index");
  return static_cast<std::size_t>(t - 1) * grid_.size() + g;
}

ValueTable StrategyTable::leader_values(int t) const {
  ValueTable v = ValueTable::leader(grid_.size());
  for (std::size_t g = 0; g < grid_.size(); ++g) v.at(g) = at(t, g).value_leader;
  return v;
}

ValueTable StrategyTable::follower_values(int t) const {
  const int n = grid_.num_states();
  ValueTable v = ValueTable::follower(grid_.size(), n);
  for (std::size_t g = 0; g < grid_.size(); ++g) {
    for (int x = 0; x < n; ++x) v.at(g, x) = at(t, g).value_follower.at(x);
  }
  return v;
}

ValueTable leader_values_or_zero(const StrategyTable& table, int t) {
  if (t > table.horizon()) return ValueTable::leader(table.grid().size());
  return table.leader_values(t);
}

ValueTable follower_values_or_zero(const StrategyTable& table, int t, int num_states) {
  if (t > table.horizon()) return ValueTable::follower(table.grid().size(), num_states);
  return table.follower_values(t);
}

std::vector<std::string> strategy_csv_header(const GameSpec& spec) {
  std::vector<std::string> cols{"t"};
  for (int k = 0; k + 1 < spec.num_states; ++k) cols.push_back("belief_coord_" + std::to_string(k));
  for (int a = 1; a < spec.num_leader_actions; ++a) {
    cols.push_back("leader_prob_action" + std::to_string(a));
  }
  for (int x = 0; x < spec.num_states; ++x) {
    for (int a = 1; a < spec.num_follower_actions; ++a) {
      cols.push_back("follower_prob_action" + std::to_string(a) + "_given_x" + std::to_string(x));
    }
  }
  cols.push_back("V_l");
  for (int x = 0; x < spec.num_states; ++x) cols.push_back("V_f_x" + std::to_string(x));
  return cols;
}

void write_strategy_csv(std::ostream& out, const StrategyTable& table, const GameSpec& spec) {
  const auto header = strategy_csv_header(spec);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (int t = 1; t <= table.horizon(); ++t) {
    for (std::size_t g = 0; g < table.grid().size(); ++g) {
      const StrategyEntry& e = table.at(t, g);
      out << t;
      const auto& pi = table.grid().point(g).probs;
      for (int k = 0; k + 1 < spec.num_states; ++k) out << ',' << format_double(pi[k]);
      for (int a = 1; a < spec.num_leader_actions; ++a) {
        out << ',' << format_double(e.prescription.leader.probs[a]);
      }
      for (int x = 0; x < spec.num_states; ++x) {
        for (int a = 1; a < spec.num_follower_actions; ++a) {
          out << ',' << format_double(e.prescription.follower.prob(x, a));
        }
      }
      out << ',' << format_double(e.value_leader);
      for (int x = 0; x < spec.num_states; ++x) out << ',' << format_double(e.value_follower[x]);
      out << '\n';
    }
  }
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("strategy CSV: not a number: '" + s + "'");
  }
  return v;
}

// Complete a distribution whose entry 0 is implied by the others.
std::vector<double> with_implied_first(std::vector<double> tail) {
  double rest = 0.0;
  for (double v : tail) rest += v;
  tail.insert(tail.begin(), 1.0 - rest);
  return tail;
}

}  // namespace

StrategyTable read_strategy_csv(std::istream& in, const GameSpec& spec) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("strategy CSV is empty");
  const auto expected = strategy_csv_header(spec);
  if (split_csv_line(line) != expected) {
    throw std::invalid_argument("strategy CSV header does not match the game dimensions");
  }
  std::map<int, std::vector<std::vector<double>>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != expected.size()) throw std::invalid_argument("strategy CSV: ragged row");
    std::vector<double> values;
    for (std::size_t i = 1; i < cells.size(); ++i) values.push_back(parse_double(cells[i]));
    rows[static_cast<int>(parse_double(cells[0]))].push_back(std::move(values));
  }
  if (rows.empty()) throw std::invalid_argument("strategy CSV has no rows");
  const int horizon = rows.rbegin()->first;
  if (rows.begin()->first != 1 || static_cast<int>(rows.size()) != horizon) {
    throw std::invalid_argument("strategy CSV stages must be 1..T");
  }
  const std::size_t per_stage = rows.begin()->second.size();
  // Recover the grid resolution from the number of points per stage.
  int resolution = 2;
  while (BeliefGrid(spec.num_states, resolution).size() < per_stage) ++resolution;
  BeliefGrid grid(spec.num_states, resolution);
  if (grid.size() != per_stage) throw std::invalid_argument("strategy CSV: not a belief lattice");

  StrategyTable table(horizon, grid);
  const int nx = spec.num_states, nl = spec.num_leader_actions, nf = spec.num_follower_actions;
  for (const auto& [t, stage_rows] : rows) {
    if (stage_rows.size() != per_stage) {
      throw std::invalid_argument("strategy CSV: stage " + std::to_string(t) + " has wrong row count");
    }
    for (std::size_t g = 0; g < per_stage; ++g) {
      const auto& r = stage_rows[g];
      std::size_t c = 0;
      for (int k = 0; k + 1 < nx; ++k, ++c) {
        if (std::abs(r[c] - grid.point(g).probs[k]) > 1e-9) {
          throw std::invalid_argument("strategy CSV: belief coordinates do not match the grid");
        }
      }
      StrategyEntry& e = table.at(t, g);
      e.prescription.leader.probs =
          with_implied_first({r.begin() + c, r.begin() + c + (nl - 1)});
      c += nl - 1;
      e.prescription.follower.per_state.clear();
      for (int x = 0; x < nx; ++x) {
        e.prescription.follower.per_state.push_back(
            with_implied_first({r.begin() + c, r.begin() + c + (nf - 1)}));
        c += nf - 1;
      }
      e.value_leader = r[c++];
      e.value_follower.assign(r.begin() + c, r.begin() + c + nx);
    }
  }
  return table;
}

}  // namespace stackgame
