#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace stackgame {

using Rng = std::mt19937_64;

// Generator for an independent stream identified by (seed, stream...). The
// same arguments always produce the same generator, regardless of the order
// in which streams are created.
Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {});

// Cheap 64-bit mix used to derive per-episode seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// Inverse-CDF draw from a discrete distribution. Consumes exactly one uniform
// variate, so callers sharing a seed stay synchronized across distributions.
int sample_categorical(std::span<const double> probs, Rng& rng);

// Multinomial(n, probs) counts via sequential binomial draws.
std::vector<std::int64_t> multinomial_counts(std::int64_t n, std::span<const double> probs,
                                             Rng& rng);

}  // namespace stackgame
