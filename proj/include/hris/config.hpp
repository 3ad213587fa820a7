// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

namespace hris {

using Point3 = std::array<double, 3>;

struct PathlossModel {
  double k0 = 1e-3;  // linear gain at the reference distance
  double d0 = 1.0;   // reference distance (m)
  double alpha_ris_cu = 2.5;
  double alpha_bs_ris = 2.5;
  double alpha_bs_cu = 2.2;
};

// Azimuth/elevation of a sensing target seen from the RIS (rad).
struct TargetAngle {
  double azimuth = 0.0;
  double elevation = 0.0;
};

/// Scenario parameters. All powers are stored in watts and all ratios
/// linear; the JSON loader accepts dBm/dB keys and converts on load.
struct SystemConfig {
  int num_antennas = 8;
  int ris_nx = 8;
  int ris_ny = 8;
  int num_users = 2;
  int num_targets = 2;

  double bs_power = 0.3;             // W
  double ris_power_max = 5.0119e-4;  // W
  double ris_noise_max = 1e-4;       // W, per-target threshold
  double ris_noise_power = 1e-10;    // W, active-element noise
  std::vector<double> user_noise_power;  // W, one per user
  std::vector<double> sinr_min;          // linear, one per user
  double beta_max = 10.0;

  double wavelength = 0.0856549;  // m (3.5 GHz)
  double dx = 0.0428275;
  double dy = 0.0428275;

  Point3 bs_pos{0.0, 0.0, 2.5};
  Point3 ris_pos{20.0, 5.0, 2.5};
  std::vector<Point3> user_pos;
  std::vector<TargetAngle> targets;

  double rician_factor = 0.5;
  PathlossModel pathloss;

  double tol_feas = 1e-5;  // relative slack accepted by the constraint audit

  int num_elements() const { return ris_nx * ris_ny; }

  // Throws ValidationError on any violated invariant.
  void validate() const;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double db_to_linear(double db);
double linear_to_db(double linear);

// The reference scenario: 8 antennas, 8x8 RIS, 2 users, 2 targets.
SystemConfig default_config();

// Resizes per-user vectors and picks default user positions for a new
// user count, keeping the first entries when shrinking.
void set_num_users(SystemConfig& cfg, int num_users);

// Chooses the most square Nx x Ny factorisation of n.
void set_num_elements(SystemConfig& cfg, int n);

SystemConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SystemConfig& cfg);
SystemConfig load_config(const std::string& path);

// Stable 64-bit FNV-1a hash of the canonical JSON form.
std::string config_hash(const SystemConfig& cfg);

}  // namespace hris
