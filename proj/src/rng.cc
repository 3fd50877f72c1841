#include "stackgame/rng.hpp"

#include <algorithm>

namespace stackgame {

Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (stream.size() + 1));
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (std::uint64_t s : stream) push(s);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int sample_categorical(std::span<const double> probs, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    cumulative += probs[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  // Rounding left the cumulative sum just below u.
  return last_positive;
}

std::vector<std::int64_t> multinomial_counts(std::int64_t n, std::span<const double> probs,
                                             Rng& rng) {
  std::vector<std::int64_t> counts(probs.size(), 0);
  double mass = 0.0;
  for (double p : probs) mass += std::max(p, 0.0);
  std::int64_t remaining = n;
  for (std::size_t i = 0; i < probs.size() && remaining > 0; ++i) {
    const double p = std::max(probs[i], 0.0);
    if (p <= 0.0) continue;
    const double q = mass > 0.0 ? std::min(1.0, p / mass) : 1.0;
    std::int64_t c;
    if (q >= 1.0) {
      c = remaining;
    } else {
      c = std::binomial_distribution<std::int64_t>(remaining, q)(rng);
    }
    counts[i] = c;
    remaining -= c;
    mass -= p;
  }
  if (remaining > 0) {
    // Only reachable through rounding in `mass`; assign to the last positive entry.
    for (std::size_t i = probs.size(); i-- > 0;) {
      if (probs[i] > 0.0) {
        counts[i] += remaining;
        break;
      }
    }
  }
  return counts;
}

}  // namespace stackgame
