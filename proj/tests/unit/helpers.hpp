// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "hris/channel.hpp"
#include "hris/config.hpp"
#include "hris/metrics.hpp"
#include "hris/ris.hpp"

namespace hris::test {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline CVec random_cvec(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec v(n);
  for (int i = 0; i < n; ++i) v(i) = cd(nd(rng), nd(rng));
  return v;
}

inline CMat random_cmat(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMat a(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) a(i, j) = cd(nd(rng), nd(rng));
  return a;
}

inline SystemConfig small_config(int m, int nx, int ny, int k, int l) {
  SystemConfig cfg = default_config();
  cfg.num_antennas = m;
  cfg.ris_nx = nx;
  cfg.ris_ny = ny;
  set_num_users(cfg, k);
  cfg.num_targets = l;
  cfg.targets.resize(l);
  for (int i = 0; i < l; ++i) cfg.targets[i] = {(-60.0 + 30.0 * i) * kPi / 180.0, (60.0 - 30.0 * i) * kPi / 180.0};
  return cfg;
}

inline RisConfiguration random_ris(int n, double beta_max, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RisConfiguration r;
  r.mode.resize(n);
  r.amplitude.resize(n);
  r.phase.resize(n);
  for (int i = 0; i < n; ++i) {
    r.mode(i) = u(rng) < 0.5 ? 1 : 0;
    r.amplitude(i) = r.mode(i) ? beta_max * u(rng) : 1.0;
    r.phase(i) = kTwoPi * (1.0 - u(rng));
  }
  return r;
}

inline BeamformingSolution random_bf(const SystemConfig& cfg, double scale, std::mt19937_64& rng) {
  BeamformingSolution bf;
  for (int k = 0; k < cfg.num_users; ++k) bf.beams.push_back(scale * random_cvec(cfg.num_antennas, rng));
  const CMat f = random_cmat(cfg.num_antennas, 2, rng);
  bf.sensing_cov = scale * scale * f * f.adjoint();
  return bf;
}

}  // namespace hris::test
