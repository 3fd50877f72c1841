#include "stackgame/particle_filter.hpp"

#include <numeric>
#include <stdexcept>

namespace stackgame::pf {

ParticleSet init(const BeliefState& pi, int count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("particle count must be at least 1");
  ParticleSet ps;
  ps.num_states = pi.num_states();
  ps.particles.resize(count);
  for (int& p : ps.particles) p = sample_categorical(pi.probs, rng);
  ps.weights.assign(count, 1.0 / count);
  return ps;
}

ParticleSet step(ParticleSet ps, const FollowerPrescription& gamma_f, JointAction a,
                 const GameSpec& spec, Rng& rng) {
  const std::size_t k = ps.count();
  std::vector<double> w(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    w[i] = ps.weights[i] * gamma_f.prob(ps.particles[i], a.follower);
    total += w[i];
  }
  if (!(total > 0.0)) {
    throw ImpossibleObservation("every particle has zero likelihood for follower action " +
                                std::to_string(a.follower));
  }
  std::discrete_distribution<std::size_t> resample(w.begin(), w.end());
  ParticleSet next;
  next.num_states = ps.num_states;
  next.particles.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    next.particles[i] = sample_next_state(spec, ps.particles[resample(rng)], a, rng);
  }
  next.weights.assign(k, 1.0 / static_cast<double>(k));
  return next;
}

BeliefState estimate(const ParticleSet& ps) {
  BeliefState b{std::vector<double>(ps.num_states, 0.0)};
  double total = 0.0;
  for (std::size_t i = 0; i < ps.count(); ++i) {
    b.probs[ps.particles[i]] += ps.weights[i];
    total += ps.weights[i];
  }
  for (double& p : b.probs) p /= total;
  return b;
}

std::int64_t ParticleCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

ParticleCounts init_counts(const BeliefState& pi, std::int64_t count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("particle count must be at least 1");
  return {multinomial_counts(count, pi.probs, rng)};
}

CountsStep step_counts(const ParticleCounts& ps, const FollowerPrescription& gamma_f,
                       JointAction a, const GameSpec& spec, Rng& rng, OffPathRule rule) {
  const int n = spec.num_states;
  std::vector<double> w(n);
  double total = 0.0;
  for (int x = 0; x < n; ++x) {
    w[x] = static_cast<double>(ps.counts[x]) * gamma_f.prob(x, a.follower);
    total += w[x];
  }
  CountsStep out;
  if (!(total > 0.0)) {
    if (rule == OffPathRule::kThrow) {
      throw ImpossibleObservation("every particle has zero likelihood for follower action " +
                                  std::to_string(a.follower));
    }
    out.off_path = true;
    for (int x = 0; x < n; ++x) w[x] = static_cast<double>(ps.counts[x]);
  }
  const auto resampled = multinomial_counts(ps.total(), w, rng);
  out.next.counts.assign(n, 0);
  for (int x = 0; x < n; ++x) {
    if (resampled[x] == 0) continue;
    const auto moved = sample_next_state_counts(spec, x, a, resampled[x], rng);
    for (int xn = 0; xn < n; ++xn) out.next.counts[xn] += moved[xn];
  }
  return out;
}

BeliefState estimate(const ParticleCounts& ps) {
  const double total = static_cast<double>(ps.total());
  BeliefState b{std::vector<double>(ps.counts.size(), 0.0)};
  for (std::size_t x = 0; x < ps.counts.size(); ++x) b.probs[x] = ps.counts[x] / total;
  return b;
}

}  // namespace stackgame::pf
