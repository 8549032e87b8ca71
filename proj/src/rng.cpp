#include "oved/rng.hpp"

#include <cmath>

namespace oved {

namespace detail {

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

namespace {
constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ull;
}

RngSpec RngSpec::substream(std::uint64_t k) const {
  return RngSpec{master_seed, detail::mix64(stream_id + kWeyl * (k + 1))};
}

RngStream::RngStream(const RngSpec& spec) : spec_(spec) {
  key_ = detail::mix64(spec.master_seed ^ 0x5851F42D4C957F2Dull);
  key_ = detail::mix64(key_ + spec.stream_id);
}

std::uint64_t RngStream::next_u64() {
  return detail::mix64(key_ + kWeyl * ++counter_);
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // u1 in (0,1] keeps the log finite.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

}  // namespace oved
