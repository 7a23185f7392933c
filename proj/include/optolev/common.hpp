#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>

namespace optolev {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kStandardGravity = 9.80665;   // m/s^2
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Caller passed a value outside an operation's domain.
struct invalid_parameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad configuration input: unknown keys, unparsable values, step-size limits.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A physically meaningful failure, as opposed to a usage mistake.
struct physics_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct singular_geometry : physics_error { using physics_error::physics_error; };
struct degenerate_concentric : physics_error { using physics_error::physics_error; };
struct anti_spring_error : physics_error { using physics_error::physics_error; };
struct loop_singularity : physics_error { using physics_error::physics_error; };
struct divergence_error : physics_error { using physics_error::physics_error; };
struct no_resonance_in_band : physics_error { using physics_error::physics_error; };
struct insufficient_repeats : physics_error { using physics_error::physics_error; };
struct low_confidence_error : physics_error { using physics_error::physics_error; };

// Scalar with a one-sigma uncertainty.
struct Uncertain {
  double value = 0.0;
  double sigma = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
  bool overlaps(const Interval& other) const {
    return lo <= other.hi && other.lo <= hi;
  }
};

// Derives an independent stream seed from a base seed, so that parallel runs
// stay reproducible no matter how work is scheduled.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Runs body(0..count-1) on up to `jobs` threads. Rethrows the first failure.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& body);

}  // namespace optolev
