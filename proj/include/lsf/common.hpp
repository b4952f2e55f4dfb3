#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lsf {

/// Runtime failure anywhere in the pipeline. The message names the
/// operation and the violated precondition.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Absolute yaw difference wrapped to [0, pi].
double yaw_distance(double a, double b);

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

/// FNV-1a over a byte string; used for checkpoint config hashes.
std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace lsf
