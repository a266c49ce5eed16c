#include "fedexprox/rng.hpp"

namespace fedexprox::rng {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, Domain domain, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(domain));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b * 0xd1342543de82ef95ULL));
  return h;
}

Engine substream(std::uint64_t seed, Domain domain, std::uint64_t a, std::uint64_t b) {
  return Engine(derive_seed(seed, domain, a, b));
}

Eigen::VectorXd standard_normal(Eigen::Index d, Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(engine);
  return v;
}

Eigen::VectorXd unit_sphere(Eigen::Index d, Engine& engine) {
  Eigen::VectorXd v = standard_normal(d, engine);
  double norm = v.norm();
  while (norm == 0.0) {
    v = standard_normal(d, engine);
    norm = v.norm();
  }
  return v / norm;
}

std::uint64_t hash_string(const char* s, std::size_t len) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(s[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace fedexprox::rng
