#include "gcmlab/rng.hpp"

#include <array>

namespace gcmlab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Seed Seed::child(std::uint64_t index) const {
  return {base, splitmix64(stream ^ splitmix64(index + 0x632be59bd9b4e019ULL))};
}

Rng::Rng(Seed seed) {
  const std::uint64_t a = splitmix64(seed.base);
  const std::uint64_t b = splitmix64(seed.stream ^ 0xd1b54a32d192ed03ULL);
  std::array<std::uint32_t, 4> words = {
      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
}

} // namespace gcmlab
