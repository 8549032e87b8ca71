#pragma once

#include <cstdint>

namespace oved {

// Counter-based pseudo-random stream. Every draw is a pure function of
// (key, counter), so sequences are reproducible bit-for-bit regardless of
// scheduling, and distinct stream ids give decorrelated streams. The mixer
// is SplitMix64 applied to a Weyl sequence.
struct RngSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  // Deterministically derive a child stream (e.g. one per multistart run).
  RngSpec substream(std::uint64_t k) const;
};

class RngStream {
 public:
  explicit RngStream(const RngSpec& spec);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; consumes exactly two uniforms per pair.
  double normal();

  const RngSpec& spec() const { return spec_; }

 private:
  RngSpec spec_;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

namespace detail {
std::uint64_t mix64(std::uint64_t z);
}

}  // namespace oved
