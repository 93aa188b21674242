#ifndef GCMLAB_RNG_HPP
#define GCMLAB_RNG_HPP

#include <cstdint>
#include <random>

namespace gcmlab {

/// Identifies one independent random stream. Work items (condition,
/// replicate, tree, ...) each derive their own Seed instead of sharing a
/// generator, so results do not depend on scheduling.
struct Seed {
  std::uint64_t base = 0;
  std::uint64_t stream = 0;

  /// Seed for a sub-task, e.g. tree j of a forest.
  Seed child(std::uint64_t index) const;

  bool operator==(const Seed&) const = default;
};

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
public:
  explicit Rng(Seed seed);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace gcmlab

#endif // GCMLAB_RNG_HPP
