#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>

namespace cvshadow {

using Rng = std::mt19937_64;

// Worker count from CVSHADOW_THREADS, defaulting to the hardware concurrency.
int thread_count();

// Runs body(i) for i in [0, n) on thread_count() workers with static contiguous chunks.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// SplitMix64 finalizer; used to derive independent per-record seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Engine for record `index` of a batch seeded with `seed`, plus its identifier.
Rng stream_rng(std::uint64_t seed, std::uint64_t index);
std::string stream_path(std::uint64_t seed, std::uint64_t index);

}  // namespace cvshadow
