#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "txreid/errors.hpp"

namespace txreid {

// All randomness used where reproducibility is part of the contract (fold
// shuffles, synthetic data) flows through this stream. Bits come from
// mt19937_64, which is fully specified by the standard; the derived draws are
// pinned here so identical seeds give identical streams on every platform:
//   uniform:  (x >> 11) * 2^-53                     in [0, 1)
//   normal:   sqrt(-2 ln(1-u1)) * cos(2*pi*u2)      (Box-Muller, two uniforms
//             per draw, the sine half is discarded)
//   below(n): x % n
// std::uniform_*_distribution / std::normal_distribution are deliberately not
// used; their output is implementation-defined.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw UsageError("RandomStream::below: n must be positive");
    return gen_() % n;
  }

 private:
  std::mt19937_64 gen_;
};

// In-place Fisher-Yates shuffle driven by the stream above.
template <typename T>
void fisher_yates(std::vector<T>& items, RandomStream& rs) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rs.below(i)]);
  }
}

// One-line description of the deterministic RNG contract, echoed in reports.
inline constexpr const char* kPrngContract =
    "mt19937_64; uniform=(x>>11)*2^-53; normal=Box-Muller(cos half); "
    "shuffle=Fisher-Yates with modulo draws";

}  // namespace txreid
