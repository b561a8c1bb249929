#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hwmor {

/// Independent generator for stream `stream` under a base seed. Streams do not
/// depend on one another, so trials can run in any order.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

/// Uniform integer in [0, bound) by Lemire's multiply-shift rejection; the
/// sequence is identical across standard libraries.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound);

/// `count` distinct indices from [0, n) in draw order (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n, std::size_t count);

}  // namespace hwmor
