#include "lsf/rng.hpp"

#include <cmath>

namespace lsf {

double SeededRng::normal(double mean, double stddev) {
  // Box-Muller on two fresh uniforms; u1 nudged away from 0.
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1 + 1e-300));
  return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace lsf
