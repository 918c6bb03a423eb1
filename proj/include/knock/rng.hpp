#ifndef KNOCK_RNG_HPP_
#define KNOCK_RNG_HPP_

#include <cstdint>
#include <random>

namespace knock {

// Mixes a master seed and a stream index into an independent child seed.
// Used wherever work is split (replicates, restarts, engine cycles) so the
// result never depends on evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Portable random source. std::mt19937_64 output is fixed by the standard;
// the uniform and normal transforms below are written out so the draws do
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal, Marsaglia polar method.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace knock

#endif  // KNOCK_RNG_HPP_
