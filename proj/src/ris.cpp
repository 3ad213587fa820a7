// SPDX-License-Identifier: Apache-2.0
#include "hris/ris.hpp"

#include <cmath>
#include <random>
#include <string>

namespace hris {

CVec RisConfiguration::coefficients() const {
  CVec c(num_elements());
  for (int n = 0; n < num_elements(); ++n) c(n) = std::polar(amplitude(n), phase(n));
  return c;
}

void RisConfiguration::validate(double beta_max) const {
  const int n = num_elements();
  if (amplitude.size() != n || phase.size() != n)
    throw ValidationError("RisConfiguration: mode, amplitude and phase sizes differ");
  for (int i = 0; i < n; ++i) {
    const std::string at = " at element " + std::to_string(i);
    if (mode(i) != 0 && mode(i) != 1) throw ValidationError("RisConfiguration: mode not binary" + at);
    if (mode(i) == 0 && amplitude(i) != 1.0)
      throw ValidationError("RisConfiguration: passive amplitude must be 1" + at);
    if (mode(i) == 1 && !(amplitude(i) >= 0.0 && amplitude(i) <= beta_max))
      throw ValidationError("RisConfiguration: active amplitude outside [0, beta_max]" + at);
    if (!(phase(i) > 0.0 && phase(i) <= kTwoPi))
      throw ValidationError("RisConfiguration: phase outside (0, 2pi]" + at);
  }
}

RisConfiguration RisConfiguration::all_passive(const RVec& phases) {
  RisConfiguration r;
  r.mode = Eigen::VectorXi::Zero(phases.size());
  r.amplitude = RVec::Ones(phases.size());
  r.phase = phases;
  return r;
}

ReflectionMatrices reflection_matrices(const RisConfiguration& ris, double beta_max) {
  ris.validate(beta_max);
  ReflectionMatrices out;
  out.phi = ris.coefficients().asDiagonal();
  out.modes = ris.mode.cast<double>().asDiagonal();
  return out;
}

double wrap_phase(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t <= 0.0) t += kTwoPi;
  if (t > kTwoPi) t = kTwoPi;
  return t;
}

RVec random_phases(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RVec p(n);
  // 1 - u lies in (0, 1], so the phase lies in (0, 2pi].
  for (int i = 0; i < n; ++i) p(i) = kTwoPi * (1.0 - u(rng));
  return p;
}

}  // namespace hris
