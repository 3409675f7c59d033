#pragma once

#include <cstdint>

namespace earlystop {

// Deterministic noise source: a splitmix64 counter generator feeding a
// Box-Muller transform.  Fully specified by its seed, so replications can be
// reproduced and parallelized by deriving one stream per replication
// (stream seed = master seed XOR replication index).
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : state_(seed) {}

  // splitmix64 step: increment by the golden-gamma constant, then mix.
  std::uint64_t next_u64();

  // Uniform draw in the open interval (0, 1).
  double next_uniform();

  // Standard normal draw via Box-Muller (pairs are cached).
  double next_gaussian();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace earlystop
