#include "stackgame/belief.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stackgame/text.hpp"

namespace stackgame {

bool is_valid(const BeliefState& b, double tol) { return is_distribution(b.probs, tol); }

double l1_distance(const BeliefState& a, const BeliefState& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.probs.size(); ++i) d += std::abs(a.probs[i] - b.probs.at(i));
  return d;
}

double observation_likelihood(const BeliefState& pi, const FollowerPrescription& gamma_f,
                              int follower_action) {
  double z = 0.0;
  for (int x = 0; x < pi.num_states(); ++x) z += pi.probs[x] * gamma_f.prob(x, follower_action);
  return z;
}

BeliefState bayes_update(const BeliefState& pi, const FollowerPrescription& gamma_f, JointAction a,
                         const GameSpec& spec) {
  return bayes_update(pi, gamma_f, a, spec, OffPathRule::kThrow);
}

BeliefState bayes_update(const BeliefState& pi, const FollowerPrescription& gamma_f, JointAction a,
                         const GameSpec& spec, OffPathRule rule) {
  const int n = spec.num_states;
  std::vector<double> posterior(n);
  double z = 0.0;
  for (int x = 0; x < n; ++x) {
    posterior[x] = pi.probs[x] * gamma_f.prob(x, a.follower);
    z += posterior[x];
  }
  if (!(z > 0.0)) {
    if (rule == OffPathRule::kThrow) {
      throw ImpossibleObservation("follower action " + std::to_string(a.follower) +
                                  " has zero probability under the current belief");
    }
    posterior = pi.probs;
    z = std::accumulate(posterior.begin(), posterior.end(), 0.0);
  }
  BeliefState next{std::vector<double>(n, 0.0)};
  for (int x = 0; x < n; ++x) {
    const double w = posterior[x] / z;
    if (w == 0.0) continue;
    const double* row = spec.transition_row(x, a);
    for (int xn = 0; xn < n; ++xn) next.probs[xn] += w * row[xn];
  }
  return next;
}

// ---------------------------------------------------------------------------
// BeliefGrid

BeliefGrid::BeliefGrid(int num_states, int resolution)
    : lattice_(num_states, resolution, SimplexLattice::Order::kAscending) {
  points_.reserve(lattice_.size());
  for (std::size_t i = 0; i < lattice_.size(); ++i) points_.push_back({lattice_.point(i)});
}

BeliefGrid make_grid(int num_states, int resolution) { return BeliefGrid(num_states, resolution); }

std::size_t BeliefGrid::nearest(const BeliefState& pi) const { return lattice_.nearest(pi.probs); }

std::vector<std::pair<std::size_t, double>> BeliefGrid::barycentric(const BeliefState& pi) const {
  const int n = num_states();
  const int m = lattice_.divisions();
  if (n == 1) return {{0, 1.0}};
  // Cumulative coordinates z_i = m·Σ_{j>=i} π_j; z_0 = m.
  std::vector<double> z(n);
  double tail = 0.0;
  for (int i = n - 1; i >= 1; --i) {
    tail += pi.probs[i];
    z[i] = std::clamp(tail * m, 0.0, static_cast<double>(m));
    if (std::abs(z[i] - std::round(z[i])) < 1e-12 * m) z[i] = std::round(z[i]);
  }
  z[0] = m;
  for (int i = n - 2; i >= 1; --i) z[i] = std::max(z[i], z[i + 1]);
  std::vector<int> base(n);
  std::vector<double> frac(n);
  for (int i = 0; i < n; ++i) {
    base[i] = static_cast<int>(std::floor(z[i]));
    frac[i] = z[i] - base[i];
  }
  // Component 0 is integral and must never be incremented, so it sorts last.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin() + 1, order.end(),
                   [&frac](int a, int b) { return frac[a] > frac[b]; });
  std::rotate(order.begin(), order.begin() + 1, order.end());

  std::vector<std::pair<std::size_t, double>> out;
  auto emit = [&](const std::vector<int>& u, double weight) {
    if (weight <= 0.0) return;
    std::vector<int> counts(n);
    for (int i = 0; i < n; ++i) counts[i] = u[i] - (i + 1 < n ? u[i + 1] : 0);
    out.emplace_back(lattice_.index_of(counts), weight);
  };
  std::vector<int> u = base;
  emit(u, 1.0 - frac[order[0]]);
  for (int k = 0; k + 1 < n; ++k) {
    ++u[order[k]];
    const double next = k + 1 < n - 1 ? frac[order[k + 1]] : 0.0;
    emit(u, frac[order[k]] - next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ValueTable

ValueTable ValueTable::leader(std::size_t grid_size) { return ValueTable(grid_size, 0); }

ValueTable ValueTable::follower(std::size_t grid_size, int num_states) {
  if (num_states < 1) throw std::invalid_argument("follower value table needs a state axis");
  return ValueTable(grid_size, num_states);
}

double ValueTable::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

namespace {

constexpr double kSnap = 1e-12;

template <typename Lookup>
double interpolate_impl(const BeliefGrid& grid, const BeliefState& pi, Lookup lookup) {
  if (grid.num_states() == 2) {
    const int m = grid.resolution() - 1;
    const double s = std::clamp(pi.probs[0] * m, 0.0, static_cast<double>(m));
    const int i = std::min(static_cast<int>(std::floor(s)), m - 1);
    const double f = s - i;
    // Exact at grid points despite rounding in π·m.
    if (f < kSnap) return lookup(i);
    if (f > 1.0 - kSnap) return lookup(i + 1);
    return (1.0 - f) * lookup(i) + f * lookup(i + 1);
  }
  double v = 0.0;
  for (const auto& [g, w] : grid.barycentric(pi)) v += w * lookup(g);
  return v;
}

}  // namespace

double interpolate(const ValueTable& table, const BeliefGrid& grid, const BeliefState& pi) {
  return interpolate_impl(grid, pi, [&table](std::size_t g) { return table.at(g); });
}

double interpolate(const ValueTable& table, const BeliefGrid& grid, const BeliefState& pi, int x) {
  return interpolate_impl(grid, pi, [&table, x](std::size_t g) { return table.at(g, x); });
}

void write_value_table_csv(std::ostream& out, const BeliefGrid& grid,
                           std::span<const ValueTable> tables, int first_stage) {
  out << "t,grid_index";
  for (int k = 0; k < grid.num_states(); ++k) out << ",belief_coord_" << k;
  out << ",state_or_blank,value\n";
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const ValueTable& table = tables[i];
    const int t = first_stage + static_cast<int>(i);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      auto prefix = [&] {
        out << t << ',' << g;
        for (double p : grid.point(g).probs) out << ',' << format_double(p);
      };
      if (!table.has_state_axis()) {
        prefix();
        out << ",," << format_double(table.at(g)) << '\n';
        continue;
      }
      for (int x = 0; x < table.num_states(); ++x) {
        prefix();
        out << ',' << x << ',' << format_double(table.at(g, x)) << '\n';
      }
    }
  }
}

}  // namespace stackgame
