#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace fedexprox::rng {

using Engine = std::mt19937_64;

// Independent purposes draw from disjoint substreams of one 64-bit seed.
enum class Domain : std::uint64_t {
  kClient = 1,
  kStartPoint = 2,
  kSampling = 3,
  kInjection = 4,
  kSweepCell = 5,
  kTest = 6,
  kMinimizer = 7,
};

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based split: mixes (seed, domain, a, b) into a fresh seed.
std::uint64_t derive_seed(std::uint64_t seed, Domain domain, std::uint64_t a = 0,
                          std::uint64_t b = 0);

Engine substream(std::uint64_t seed, Domain domain, std::uint64_t a = 0, std::uint64_t b = 0);

Eigen::VectorXd standard_normal(Eigen::Index d, Engine& engine);

// Uniformly distributed direction on the unit sphere in R^d.
Eigen::VectorXd unit_sphere(Eigen::Index d, Engine& engine);

// FNV-1a, used to key substreams on strings.
std::uint64_t hash_string(const char* s, std::size_t len);

}  // namespace fedexprox::rng
