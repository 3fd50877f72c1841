#pragma once

// Bootstrap particle filter over the follower's private state. The observation
// is the joint action; its likelihood is γ_f(a_f | x) at the current particle
// state. Each step weights, resamples (multinomial), then propagates through
// the transition sampler.

#include <cstdint>
#include <vector>

#include "stackgame/belief.hpp"
#include "stackgame/game_model.hpp"
#include "stackgame/prescription.hpp"
#include "stackgame/rng.hpp"

namespace stackgame::pf {

struct ParticleSet {
  int num_states = 0;
  std::vector<int> particles;
  std::vector<double> weights;

  std::size_t count() const { return particles.size(); }
};

// K i.i.d. draws from π with uniform weights. Throws std::invalid_argument for K < 1.
ParticleSet init(const BeliefState& pi, int count, Rng& rng);

// Throws ImpossibleObservation when every particle has zero likelihood.
ParticleSet step(ParticleSet ps, const FollowerPrescription& gamma_f, JointAction a,
                 const GameSpec& spec, Rng& rng);

BeliefState estimate(const ParticleSet& ps);

// Occupancy form of the same filter. Particles of a finite-state filter are
// exchangeable, so the per-state counts are a sufficient statistic: drawing
// counts with multinomial/binomial variates has the same law as tracking K
// individual particles, at O(|X|^2) cost per step instead of O(K).
struct ParticleCounts {
  std::vector<std::int64_t> counts;

  std::int64_t total() const;
};

ParticleCounts init_counts(const BeliefState& pi, std::int64_t count, Rng& rng);

struct CountsStep {
  ParticleCounts next;
  bool off_path = false;  // every particle had zero likelihood
};

// Under OffPathRule::kPriorPredictive an all-zero weight vector resamples from
// the unweighted particles instead of throwing.
CountsStep step_counts(const ParticleCounts& ps, const FollowerPrescription& gamma_f,
                       JointAction a, const GameSpec& spec, Rng& rng,
                       OffPathRule rule = OffPathRule::kThrow);

BeliefState estimate(const ParticleCounts& ps);

}  // namespace stackgame::pf
