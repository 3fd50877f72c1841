#include "stackgame/simulation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "stackgame/parallel.hpp"

namespace stackgame {

RolloutError::RolloutError(int stage, const std::string& what)
    : std::runtime_error("rollout failed after stage " + std::to_string(stage) + ": " + what),
      stage_(stage) {}

double discounted_sum(const std::vector<double>& rewards, double discount) {
  double total = 0.0;
  double weight = 1.0;
  for (double r : rewards) {
    total += weight * r;
    weight *= discount;
  }
  return total;
}

namespace {

constexpr std::int64_t kChunk = 4096;
constexpr std::uint64_t kMaxCachedNodes = 1 << 20;

// Common belief along the public history. Beliefs are a function of the joint
// action history alone, so when the history tree is small they are memoized.
class BeliefTracker {
 public:
  struct Node {
    BeliefState mu;
    std::size_t grid = 0;
    bool ok = false;
    bool computed = false;
  };

  BeliefTracker(const DeployedProfile& profile, OffPathRule rule)
      : profile_(profile), rule_(rule), joint_(profile.spec().num_joint_actions()) {
    root_.mu = profile.initial_belief();
    root_.grid = profile.grid_index(root_.mu);
    root_.ok = root_.computed = true;
    std::uint64_t total = 0;
    std::uint64_t width = 1;
    bool fits = true;
    offsets_.push_back(0);
    for (int t = 1; t <= profile.horizon() && fits; ++t) {
      offsets_.push_back(total);
      total += width;
      fits = total <= kMaxCachedNodes;
      if (width > kMaxCachedNodes) fits = false;
      width *= static_cast<std::uint64_t>(joint_);
    }
    if (fits) cache_.resize(total);
  }

  const Node& root() const { return root_; }

  // Belief at stage t+1 after `parent` (stage t, history code `code`) and joint action j.
  const Node& next(int t, std::uint64_t code, const Node& parent, int j) {
    Node* slot;
    if (!cache_.empty()) {
      slot = &cache_[offsets_[t + 1] + code * joint_ + j];
      if (slot->computed) return *slot;
    } else {
      slot = &scratch_[t % 2];
    }
    slot->computed = true;
    slot->ok = false;
    if (parent.ok) {
      try {
        slot->mu = profile_.next_belief(t, parent.mu, profile_.spec().joint_action(j), rule_);
        slot->grid = profile_.grid_index(slot->mu);
        slot->ok = true;
      } catch (const ImpossibleObservation&) {
      }
    }
    return *slot;
  }

 private:
  const DeployedProfile& profile_;
  OffPathRule rule_;
  int joint_;
  Node root_;
  std::vector<std::uint64_t> offsets_;  // offsets_[t] = first slot of stage t
  std::vector<Node> cache_;
  Node scratch_[2];
};

struct EpisodeReturns {
  double leader = 0.0;
  double follower = 0.0;
};

EpisodeReturns run_episode(const DeployedProfile& profile, const GameSpec& spec, Rng& rng,
                           const FollowerDeviation* override_f, BeliefTracker& tracker,
                           Trajectory* traj) {
  const int horizon = profile.horizon();
  int x = sample_categorical(spec.initial_dist, rng);
  const BeliefTracker::Node* node = &tracker.root();
  std::uint64_t code = 0;
  EpisodeReturns ret;
  double weight = 1.0;
  for (int t = 1; t <= horizon; ++t) {
    const PrescriptionPair& pp = profile.table().at(t, node->grid).prescription;
    const FollowerPrescription& gamma_f = override_f ? override_f->per_stage[t - 1] : pp.follower;
    const JointAction a{sample_leader_action(pp.leader, rng),
                        sample_follower_action(gamma_f, x, rng)};
    const double rl = spec.reward_leader[spec.reward_index(x, a)];
    const double rf = spec.reward_follower[spec.reward_index(x, a)];
    if (traj) {
      traj->states.push_back(x);
      traj->joint_actions.push_back(a);
      traj->rewards_leader.push_back(rl);
      traj->rewards_follower.push_back(rf);
      traj->beliefs.push_back(node->mu);
    }
    ret.leader += weight * rl;
    ret.follower += weight * rf;
    weight *= spec.discount;
    if (t == horizon) break;
    x = sample_next_state(spec, x, a, rng);
    const int j = spec.joint_index(a);
    node = &tracker.next(t, code, *node, j);
    code = code * spec.num_joint_actions() + j;
    if (!node->ok) throw RolloutError(t, "impossible observation in the belief update");
  }
  return ret;
}

// Mean and spread accumulator with an order-fixed merge.
struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / n;
    m2 += d * (v - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const std::int64_t total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * o.n / total;
    n = total;
  }
  double std_error() const {
    if (n < 2) return 0.0;
    return std::sqrt(std::max(m2, 0.0) / (n - 1) / n);
  }
  ReturnEstimate estimate(std::int64_t failed) const { return {mean, std_error(), n, failed}; }
};

std::int64_t chunk_count(std::int64_t episodes) { return (episodes + kChunk - 1) / kChunk; }

void check_profile(const DeployedProfile& profile, const GameSpec& spec) {
  if (profile.spec().num_states != spec.num_states ||
      profile.spec().num_leader_actions != spec.num_leader_actions ||
      profile.spec().num_follower_actions != spec.num_follower_actions) {
    throw std::invalid_argument("profile and game disagree on sizes");
  }
}

GapEstimate pick_max_gap(const Moments& eq, std::int64_t eq_failed, const std::vector<Moments>& dev,
                         const std::vector<std::int64_t>& dev_failed,
                         const std::vector<Moments>& diff) {
  GapEstimate out;
  out.deviations = dev.size();
  out.equilibrium = eq.estimate(eq_failed);
  out.gap = -std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < dev.size(); ++d) {
    const double gap = dev[d].mean - eq.mean;
    if (gap > out.gap) {
      out.gap = gap;
      out.argmax = d;
    }
  }
  const std::size_t d = out.argmax;
  out.deviation = dev[d].estimate(dev_failed[d]);
  out.std_error = std::hypot(out.equilibrium.std_error, out.deviation.std_error);
  out.paired_std_error = diff[d].std_error();
  return out;
}

}  // namespace

Trajectory rollout(const DeployedProfile& profile, const GameSpec& spec, Rng& rng,
                   const RolloutOptions& options) {
  check_profile(profile, spec);
  BeliefTracker tracker(profile, options.off_path);
  Trajectory traj;
  const EpisodeReturns r =
      run_episode(profile, spec, rng, options.follower_override, tracker, &traj);
  traj.return_leader = r.leader;
  traj.return_follower = r.follower;
  return traj;
}

ReturnEstimates estimate_returns(const DeployedProfile& profile, const GameSpec& spec,
                                 std::int64_t episodes, std::uint64_t seed,
                                 const RolloutOptions& options, std::ostream* episode_log,
                                 int threads) {
  if (episodes < 1) throw std::invalid_argument("episodes must be at least 1");
  check_profile(profile, spec);
  struct Chunk {
    Moments leader, follower;
    std::int64_t failed = 0;
    std::string log;
  };
  std::vector<Chunk> chunks(chunk_count(episodes));
  parallel_for(chunks.size(), threads, [&](std::size_t c) {
    BeliefTracker tracker(profile, options.off_path);
    std::ostringstream log;
    const std::int64_t end = std::min<std::int64_t>(episodes, (c + 1) * kChunk);
    for (std::int64_t e = c * kChunk; e < end; ++e) {
      const std::uint64_t episode_seed = mix_seed(seed, e);
      Rng rng(episode_seed);
      Trajectory traj;
      traj.seed = episode_seed;
      try {
        const EpisodeReturns r = run_episode(profile, spec, rng, options.follower_override,
                                             tracker, episode_log ? &traj : nullptr);
        chunks[c].leader.add(r.leader);
        chunks[c].follower.add(r.follower);
        if (episode_log) {
          traj.return_leader = r.leader;
          traj.return_follower = r.follower;
          write_episode_json(log, e, traj);
        }
      } catch (const RolloutError&) {
        ++chunks[c].failed;
      }
    }
    chunks[c].log = log.str();
  });
  Moments leader, follower;
  std::int64_t failed = 0;
  for (const Chunk& c : chunks) {
    leader.merge(c.leader);
    follower.merge(c.follower);
    failed += c.failed;
    if (episode_log) *episode_log << c.log;
  }
  return {leader.estimate(failed), follower.estimate(failed)};
}

void write_episode_json(std::ostream& out, std::int64_t episode, const Trajectory& traj) {
  nlohmann::json j;
  j["episode"] = episode;
  j["seed"] = traj.seed;
  j["states"] = traj.states;
  std::vector<int> leader_actions, follower_actions;
  for (const JointAction& a : traj.joint_actions) {
    leader_actions.push_back(a.leader);
    follower_actions.push_back(a.follower);
  }
  j["leader_actions"] = leader_actions;
  j["follower_actions"] = follower_actions;
  j["rewards_leader"] = traj.rewards_leader;
  j["rewards_follower"] = traj.rewards_follower;
  j["return_leader"] = traj.return_leader;
  j["return_follower"] = traj.return_follower;
  out << j.dump() << '\n';
}

GapEstimate deviation_gap_follower(const StrategyTable& theta, const GameSpec& spec,
                                   const std::vector<FollowerDeviation>& deviations,
                                   std::int64_t episodes, std::uint64_t seed, int threads) {
  if (deviations.empty()) throw std::invalid_argument("empty deviation set");
  if (episodes < 1) throw std::invalid_argument("episodes must be at least 1");
  for (const FollowerDeviation& d : deviations) {
    if (static_cast<int>(d.per_stage.size()) != theta.horizon()) {
      throw std::invalid_argument("follower deviation does not cover the horizon");
    }
  }
  const DeployedProfile profile(theta, spec);
  const std::size_t nd = deviations.size();
  struct Chunk {
    Moments eq;
    std::int64_t eq_failed = 0;
    std::vector<Moments> dev, diff;
    std::vector<std::int64_t> dev_failed;
  };
  std::vector<Chunk> chunks(chunk_count(episodes));
  parallel_for(chunks.size(), threads, [&](std::size_t c) {
    Chunk& out = chunks[c];
    out.dev.resize(nd);
    out.diff.resize(nd);
    out.dev_failed.assign(nd, 0);
    BeliefTracker tracker(profile, OffPathRule::kPriorPredictive);
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min<std::int64_t>(episodes, begin + kChunk);
    std::vector<double> eq_returns(end - begin, std::numeric_limits<double>::quiet_NaN());
    for (std::int64_t e = begin; e < end; ++e) {
      Rng rng(mix_seed(seed, e));
      try {
        eq_returns[e - begin] = run_episode(profile, spec, rng, nullptr, tracker, nullptr).follower;
        out.eq.add(eq_returns[e - begin]);
      } catch (const RolloutError&) {
        ++out.eq_failed;
      }
    }
    for (std::size_t d = 0; d < nd; ++d) {
      for (std::int64_t e = begin; e < end; ++e) {
        Rng rng(mix_seed(seed, e));
        try {
          const double v =
              run_episode(profile, spec, rng, &deviations[d], tracker, nullptr).follower;
          out.dev[d].add(v);
          if (!std::isnan(eq_returns[e - begin])) out.diff[d].add(v - eq_returns[e - begin]);
        } catch (const RolloutError&) {
          ++out.dev_failed[d];
        }
      }
    }
  });
  Moments eq;
  std::int64_t eq_failed = 0;
  std::vector<Moments> dev(nd), diff(nd);
  std::vector<std::int64_t> dev_failed(nd, 0);
  for (const Chunk& c : chunks) {
    eq.merge(c.eq);
    eq_failed += c.eq_failed;
    for (std::size_t d = 0; d < nd; ++d) {
      dev[d].merge(c.dev[d]);
      diff[d].merge(c.diff[d]);
      dev_failed[d] += c.dev_failed[d];
    }
  }
  return pick_max_gap(eq, eq_failed, dev, dev_failed, diff);
}

StrategyTable leader_deviation_table(const StrategyTable& theta, const GameSpec& spec,
                                     const LeaderPrescription& gamma_l, const SolveConfig& cfg) {
  StrategyTable out = theta;
  const BeliefGrid& grid = theta.grid();
  for (int t = 1; t <= theta.horizon(); ++t) {
    const ValueTable vf = follower_values_or_zero(theta, t + 1, spec.num_states);
    const ValueTable vl = leader_values_or_zero(theta, t + 1);
    parallel_for(grid.size(), cfg.threads, [&](std::size_t g) {
      const BestResponse br = follower_best_response(grid.point(g), gamma_l, vf, vl, spec, grid, cfg);
      out.at(t, g).prescription = {gamma_l, br.prescription};
    });
  }
  return out;
}

GapEstimate deviation_gap_leader(const StrategyTable& theta, const GameSpec& spec,
                                 const std::vector<LeaderPrescription>& deviations,
                                 std::int64_t episodes, std::uint64_t seed,
                                 const SolveConfig& response_cfg, int threads) {
  if (deviations.empty()) throw std::invalid_argument("empty deviation set");
  if (episodes < 1) throw std::invalid_argument("episodes must be at least 1");
  response_cfg.validate();
  const DeployedProfile profile(theta, spec);
  std::vector<DeployedProfile> deviated;
  deviated.reserve(deviations.size());
  for (const LeaderPrescription& gamma_l : deviations) {
    deviated.emplace_back(leader_deviation_table(theta, spec, gamma_l, response_cfg), spec);
  }
  const std::size_t nd = deviations.size();
  struct Chunk {
    Moments eq;
    std::int64_t eq_failed = 0;
    std::vector<Moments> dev, diff;
    std::vector<std::int64_t> dev_failed;
  };
  std::vector<Chunk> chunks(chunk_count(episodes));
  parallel_for(chunks.size(), threads, [&](std::size_t c) {
    Chunk& out = chunks[c];
    out.dev.resize(nd);
    out.diff.resize(nd);
    out.dev_failed.assign(nd, 0);
    const std::int64_t begin = c * kChunk;
    const std::int64_t end = std::min<std::int64_t>(episodes, begin + kChunk);
    std::vector<double> eq_returns(end - begin, std::numeric_limits<double>::quiet_NaN());
    BeliefTracker tracker(profile, OffPathRule::kPriorPredictive);
    for (std::int64_t e = begin; e < end; ++e) {
      Rng rng(mix_seed(seed, e));
      try {
        eq_returns[e - begin] = run_episode(profile, spec, rng, nullptr, tracker, nullptr).leader;
        out.eq.add(eq_returns[e - begin]);
      } catch (const RolloutError&) {
        ++out.eq_failed;
      }
    }
    for (std::size_t d = 0; d < nd; ++d) {
      BeliefTracker dev_tracker(deviated[d], OffPathRule::kPriorPredictive);
      for (std::int64_t e = begin; e < end; ++e) {
        Rng rng(mix_seed(seed, e));
        try {
          const double v = run_episode(deviated[d], spec, rng, nullptr, dev_tracker, nullptr).leader;
          out.dev[d].add(v);
          if (!std::isnan(eq_returns[e - begin])) out.diff[d].add(v - eq_returns[e - begin]);
        } catch (const RolloutError&) {
          ++out.dev_failed[d];
        }
      }
    }
  });
  Moments eq;
  std::int64_t eq_failed = 0;
  std::vector<Moments> dev(nd), diff(nd);
  std::vector<std::int64_t> dev_failed(nd, 0);
  for (const Chunk& c : chunks) {
    eq.merge(c.eq);
    eq_failed += c.eq_failed;
    for (std::size_t d = 0; d < nd; ++d) {
      dev[d].merge(c.dev[d]);
      diff[d].merge(c.diff[d]);
      dev_failed[d] += c.dev_failed[d];
    }
  }
  return pick_max_gap(eq, eq_failed, dev, dev_failed, diff);
}

std::vector<FollowerDeviation> pure_follower_deviations(const GameSpec& spec, std::size_t limit) {
  const int nx = spec.num_states;
  const int na = spec.num_follower_actions;
  std::vector<FollowerPrescription> stage_choices;
  std::size_t per_stage = 1;
  for (int x = 0; x < nx; ++x) {
    if (per_stage > limit / na) throw std::length_error("too many pure follower deviations");
    per_stage *= na;
  }
  for (std::size_t c = 0; c < per_stage; ++c) {
    std::vector<int> actions(nx);
    std::size_t rest = c;
    for (int x = nx - 1; x >= 0; --x) {
      actions[x] = static_cast<int>(rest % na);
      rest /= na;
    }
    stage_choices.push_back(pure_follower(na, actions));
  }
  std::size_t total = 1;
  for (int t = 0; t < spec.horizon; ++t) {
    if (total > limit / per_stage) throw std::length_error("too many pure follower deviations");
    total *= per_stage;
  }
  std::vector<FollowerDeviation> out(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    out[i].per_stage.resize(spec.horizon);
    for (int t = spec.horizon - 1; t >= 0; --t) {
      out[i].per_stage[t] = stage_choices[rest % per_stage];
      rest /= per_stage;
    }
  }
  return out;
}

}  // namespace stackgame
