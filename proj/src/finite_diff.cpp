#include "lsf/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "lsf/common.hpp"

namespace lsf {

double central_difference(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x, std::size_t i, double step) {
  require(i < x.size(), "central_difference: coordinate out of range");
  const double saved = x[i];
  x[i] = saved + step;
  const double hi = f(x);
  x[i] = saved - step;
  const double lo = f(x);
  return (hi - lo) / (2.0 * step);
}

double gradient_rel_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult check_gradient(const std::function<double(const std::vector<double>&)>& f,
                               const std::vector<double>& x, const std::vector<double>& analytic,
                               const std::vector<std::size_t>& coords, double step) {
  require(x.size() == analytic.size(), "check_gradient: gradient size mismatch");
  GradCheckResult result;
  const auto run = [&](std::size_t i) {
    const double numeric = central_difference(f, x, i, step);
    result.max_rel_error = std::max(result.max_rel_error, gradient_rel_error(analytic[i], numeric));
    result.checked += 1;
  };
  if (coords.empty()) {
    for (std::size_t i = 0; i < x.size(); ++i) run(i);
  } else {
    for (std::size_t i : coords) run(i);
  }
  return result;
}

}  // namespace lsf
