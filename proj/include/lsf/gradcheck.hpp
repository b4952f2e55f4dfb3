#pragma once

#include <cstdint>
#include <string>

namespace lsf {

/// Worst relative error per loss family over the randomized rounds.
struct GradCheckReport {
  double max_fca = 0.0;
  double max_gera = 0.0;
  double max_det = 0.0;
  double max_overall = 0.0;
  std::size_t checks = 0;

  double worst() const;
  bool passed(double threshold = 1e-5) const { return worst() < threshold; }
  std::string summary() const;
};

/// Central-finite-difference verification of every analytic gradient:
/// feature content alignment, the graph alignment chained through the
/// embedding net down to the features, the surrogate detection loss, and
/// the combined objective over student and embedding parameters. Each
/// round draws a fresh proposal count in [1, 6] with 4x4x8 blocks.
GradCheckReport run_gradcheck_suite(std::uint64_t seed, int rounds = 20, double step = 1e-6);

}  // namespace lsf
