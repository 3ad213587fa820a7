// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Core>

#include "hris/types.hpp"

namespace hris {

/// Per-element RIS state: mode (1 = active, 0 = passive), amplitude and
/// phase in (0, 2pi].
struct RisConfiguration {
  Eigen::VectorXi mode;
  RVec amplitude;
  RVec phase;

  int num_elements() const { return static_cast<int>(mode.size()); }
  int active_count() const { return mode.sum(); }

  // beta_n * exp(j theta_n)
  CVec coefficients() const;

  // Throws ValidationError when an invariant is violated: binary modes,
  // unit amplitude for passive elements, [0, beta_max] for active ones,
  // phases in (0, 2pi].
  void validate(double beta_max = std::numeric_limits<double>::infinity()) const;

  static RisConfiguration all_passive(const RVec& phases);
};

struct ReflectionMatrices {
  Eigen::DiagonalMatrix<cd, Eigen::Dynamic> phi;
  Eigen::DiagonalMatrix<double, Eigen::Dynamic> modes;
};

ReflectionMatrices reflection_matrices(const RisConfiguration& ris,
                                       double beta_max = std::numeric_limits<double>::infinity());

// Maps any finite angle into (0, 2pi].
double wrap_phase(double theta);

// Phases i.i.d. uniform on (0, 2pi].
RVec random_phases(int n, std::uint64_t seed);

}  // namespace hris
