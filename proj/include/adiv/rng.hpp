#pragma once

#include <cstdint>
#include <random>

namespace adiv {

// Seeded random stream. Sub-streams are derived by hashing (seed, stream, key)
// so that a child stream depends only on its parent's identity and the key,
// never on how many numbers the parent has produced.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Independent child stream identified by `key`.
  Rng split(std::uint64_t key) const;
  // Next child stream in sequence; equivalent to split(k) for k = 0, 1, ...
  Rng fork();

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }  // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();
  double normal(double mean, double stddev);
  double exponential(double rate = 1.0);
  bool bernoulli(double p);
  std::uint64_t below(std::uint64_t n);  // uniform on {0, ..., n-1}

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t forks_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace adiv
