#pragma once

#include <functional>
#include <vector>

namespace lsf {

/// Central finite difference of f along coordinate i of x.
double central_difference(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x, std::size_t i, double step);

/// |a - b| / max(|a|, |b|, floor): relative where the gradient is sizable,
/// absolute below the floor so finite-difference noise cannot dominate.
double gradient_rel_error(double analytic, double numeric, double floor = 1e-2);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Compares analytic against central differences on the given coordinates
/// (all coordinates when empty).
GradCheckResult check_gradient(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<double>& x, const std::vector<double>& analytic,
                               const std::vector<std::size_t>& coords, double step);

}  // namespace lsf
