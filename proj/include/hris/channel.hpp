// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "hris/config.hpp"
#include "hris/types.hpp"

namespace hris {

/// One realisation of every channel in the scenario.
///
/// `bs_ris` maps the BS transmit vector onto the RIS elements, so it has
/// one row per element and one column per antenna (N x M).
struct ChannelSet {
  CMat bs_ris;                       // N x M
  std::vector<CVec> bs_user;         // per user, M
  std::vector<CVec> ris_user;        // per user, N
  std::vector<CVec> target_steering; // per target, N, unit-modulus
  std::uint64_t seed = 0;

  // Throws ValidationError unless every dimension matches cfg.
  void validate(const SystemConfig& cfg) const;
};

// UPA response for direction cosines (ux, uy); element n = nx * Ny + ny.
CVec upa_response(double ux, double uy, const SystemConfig& cfg);

// Kronecker product of the x- and y-axis progressive-phase vectors.
CVec steering_vector(double azimuth, double elevation, const SystemConfig& cfg);

// Half-wavelength ULA along the x axis.
CVec ula_response(double ux, int num_antennas);

// K0 (d/d0)^-alpha. Throws DomainError for d <= 0.
double pathloss_gain(double distance, double alpha, const SystemConfig& cfg);

double distance(const Point3& a, const Point3& b);

// Unit-modulus line-of-sight BS->RIS matrix (N x M).
CMat los_bs_ris(const SystemConfig& cfg);
// Unit-modulus line-of-sight RIS->user vector (N).
CVec los_ris_user(const SystemConfig& cfg, int user);

// Rician BS->RIS and RIS->user links, Rayleigh BS->user links, every link
// scaled by the square root of its pathloss. Pure function of (cfg, seed).
ChannelSet generate_channels(const SystemConfig& cfg, std::uint64_t seed);

}  // namespace hris
