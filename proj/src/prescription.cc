#include "stackgame/prescription.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace stackgame {

bool is_distribution(std::span<const double> p, double tol) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= -tol)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

LeaderPrescription uniform_leader(int num_actions) {
  return {std::vector<double>(num_actions, 1.0 / num_actions)};
}

LeaderPrescription pure_leader(int num_actions, int action) {
  LeaderPrescription g{std::vector<double>(num_actions, 0.0)};
  g.probs.at(action) = 1.0;
  return g;
}

FollowerPrescription uniform_follower(int num_states, int num_actions) {
  return {std::vector<std::vector<double>>(num_states,
                                           std::vector<double>(num_actions, 1.0 / num_actions))};
}

FollowerPrescription pure_follower(int num_actions, std::span<const int> actions) {
  FollowerPrescription g;
  for (int a : actions) {
    std::vector<double> row(num_actions, 0.0);
    row.at(a) = 1.0;
    g.per_state.push_back(std::move(row));
  }
  return g;
}

std::vector<double> simplex_project(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return {};
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

int sample_leader_action(const LeaderPrescription& gamma, Rng& rng) {
  return sample_categorical(gamma.probs, rng);
}

int sample_follower_action(const FollowerPrescription& gamma, int x, Rng& rng) {
  return sample_categorical(gamma.per_state.at(x), rng);
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("linf_distance: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double linf_distance(const FollowerPrescription& a, const FollowerPrescription& b) {
  if (a.per_state.size() != b.per_state.size()) {
    throw std::invalid_argument("linf_distance: state count mismatch");
  }
  double d = 0.0;
  for (std::size_t x = 0; x < a.per_state.size(); ++x) {
    d = std::max(d, linf_distance(a.per_state[x], b.per_state[x]));
  }
  return d;
}

// ---------------------------------------------------------------------------
// SimplexLattice

SimplexLattice::SimplexLattice(int dim, int resolution, Order order)
    : dim_(dim), resolution_(resolution) {
  if (dim < 1) throw std::invalid_argument("lattice dimension must be positive");
  if (resolution < 2) throw std::invalid_argument("lattice resolution must be at least 2");
  const int m = resolution - 1;
  std::vector<int> current(dim, 0);
  std::function<void(int, int)> rec = [&](int pos, int remaining) {
    if (pos == dim - 1) {
      current[pos] = remaining;
      counts_.push_back(current);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      current[pos] = c;
      rec(pos + 1, remaining - c);
    }
  };
  rec(0, m);
  if (order == Order::kDescending) std::reverse(counts_.begin(), counts_.end());
  for (std::size_t i = 0; i < counts_.size(); ++i) index_.emplace(counts_[i], i);
}

std::vector<double> SimplexLattice::point(std::size_t i) const {
  const auto& c = counts_.at(i);
  std::vector<double> p(dim_);
  for (int k = 0; k < dim_; ++k) p[k] = static_cast<double>(c[k]) / divisions();
  return p;
}

std::size_t SimplexLattice::index_of(std::span<const int> counts) const {
  auto it = index_.find(std::vector<int>(counts.begin(), counts.end()));
  if (it == index_.end()) throw std::out_of_range("not a lattice point");
  return it->second;
}

std::size_t SimplexLattice::nearest(std::span<const double> p) const {
  return index_of(round_to_lattice(p, divisions()));
}

std::vector<int> round_to_lattice(std::span<const double> p, int divisions) {
  const std::size_t n = p.size();
  double sum = 0.0;
  for (double v : p) sum += std::max(v, 0.0);
  std::vector<int> counts(n, 0);
  std::vector<double> frac(n, 0.0);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double scaled = sum > 0.0 ? std::max(p[i], 0.0) / sum * divisions : 0.0;
    counts[i] = static_cast<int>(std::floor(scaled));
    frac[i] = scaled - counts[i];
    assigned += counts[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&frac](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < divisions; k = (k + 1) % n, ++assigned) ++counts[order[k]];
  return counts;
}

std::vector<LeaderPrescription> leader_grid(int num_actions, int resolution) {
  SimplexLattice lattice(num_actions, resolution, SimplexLattice::Order::kDescending);
  std::vector<LeaderPrescription> out;
  out.reserve(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) out.push_back({lattice.point(i)});
  return out;
}

std::vector<FollowerPrescription> follower_grid(int num_states, int num_actions, int resolution) {
  FollowerLattice lattice(num_states, num_actions, resolution);
  std::vector<FollowerPrescription> out;
  out.reserve(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) out.push_back(lattice.prescription(i));
  return out;
}

// ---------------------------------------------------------------------------
// FollowerLattice

FollowerLattice::FollowerLattice(int num_states, int num_actions, int resolution)
    : num_states_(num_states),
      per_state_(num_actions, resolution, SimplexLattice::Order::kDescending),
      size_(1) {
  if (num_states < 1) throw std::invalid_argument("follower lattice needs at least one state");
  for (int x = 0; x < num_states; ++x) size_ *= per_state_.size();
}

FollowerPrescription FollowerLattice::prescription(std::size_t index) const {
  FollowerPrescription g;
  g.per_state.resize(num_states_);
  for (int x = num_states_ - 1; x >= 0; --x) {
    g.per_state[x] = per_state_.point(index % per_state_.size());
    index /= per_state_.size();
  }
  return g;
}

std::size_t FollowerLattice::nearest(const FollowerPrescription& gamma) const {
  std::size_t index = 0;
  for (int x = 0; x < num_states_; ++x) {
    index = index * per_state_.size() + per_state_.nearest(gamma.per_state.at(x));
  }
  return index;
}

}  // namespace stackgame
