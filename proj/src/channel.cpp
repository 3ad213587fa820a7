// SPDX-License-Identifier: Apache-2.0
#include "hris/channel.hpp"

#include <cmath>
#include <random>

namespace hris {

void ChannelSet::validate(const SystemConfig& cfg) const {
  const int n = cfg.num_elements();
  const int m = cfg.num_antennas;
  auto fail = [](const char* what) { throw ValidationError(std::string("ChannelSet: ") + what); };
  if (bs_ris.rows() != n || bs_ris.cols() != m) fail("bs_ris must be N x M");
  if (static_cast<int>(bs_user.size()) != cfg.num_users ||
      static_cast<int>(ris_user.size()) != cfg.num_users)
    fail("one BS->user and one RIS->user channel per user");
  for (const auto& h : bs_user)
    if (h.size() != m) fail("BS->user channels must have M entries");
  for (const auto& h : ris_user)
    if (h.size() != n) fail("RIS->user channels must have N entries");
  if (static_cast<int>(target_steering.size()) != cfg.num_targets)
    fail("one steering vector per target");
  for (const auto& a : target_steering)
    if (a.size() != n) fail("steering vectors must have N entries");
}

CVec upa_response(double ux, double uy, const SystemConfig& cfg) {
  const int nx = cfg.ris_nx;
  const int ny = cfg.ris_ny;
  const double kx = kTwoPi * cfg.dx * ux / cfg.wavelength;
  const double ky = kTwoPi * cfg.dy * uy / cfg.wavelength;
  CVec a(nx * ny);
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy)
      a(ix * ny + iy) = std::polar(1.0, kx * ix + ky * iy);
  return a;
}

CVec steering_vector(double azimuth, double elevation, const SystemConfig& cfg) {
  return upa_response(std::sin(azimuth) * std::cos(elevation),
                      std::sin(azimuth) * std::sin(elevation), cfg);
}

CVec ula_response(double ux, int num_antennas) {
  CVec a(num_antennas);
  for (int i = 0; i < num_antennas; ++i) a(i) = std::polar(1.0, kPi * i * ux);
  return a;
}

double pathloss_gain(double d, double alpha, const SystemConfig& cfg) {
  if (!(d > 0.0)) throw DomainError("pathloss_gain: distance must be > 0");
  return cfg.pathloss.k0 * std::pow(d / cfg.pathloss.d0, -alpha);
}

double distance(const Point3& a, const Point3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

Point3 unit_direction(const Point3& from, const Point3& to) {
  const double d = distance(from, to);
  if (!(d > 0.0)) throw DomainError("coincident positions have no direction");
  return {(to[0] - from[0]) / d, (to[1] - from[1]) / d, (to[2] - from[2]) / d};
}

cd complex_normal(std::mt19937_64& rng, std::normal_distribution<double>& nd) {
  const double re = nd(rng);
  const double im = nd(rng);
  return cd(re, im) * std::sqrt(0.5);
}

}  // namespace

CMat los_bs_ris(const SystemConfig& cfg) {
  const Point3 dep = unit_direction(cfg.bs_pos, cfg.ris_pos);
  const Point3 arr = unit_direction(cfg.ris_pos, cfg.bs_pos);
  const CVec a_bs = ula_response(dep[0], cfg.num_antennas);
  const CVec a_ris = upa_response(arr[0], arr[1], cfg);
  return a_ris * a_bs.adjoint();
}

CVec los_ris_user(const SystemConfig& cfg, int user) {
  const Point3 dep = unit_direction(cfg.ris_pos, cfg.user_pos.at(user));
  return upa_response(dep[0], dep[1], cfg);
}

ChannelSet generate_channels(const SystemConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int n = cfg.num_elements();
  const int m = cfg.num_antennas;
  const double kappa = cfg.rician_factor;
  const double w_los = std::sqrt(kappa / (1.0 + kappa));
  const double w_nlos = std::sqrt(1.0 / (1.0 + kappa));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);

  ChannelSet ch;
  ch.seed = seed;

  const double pl_bs_ris =
      pathloss_gain(distance(cfg.bs_pos, cfg.ris_pos), cfg.pathloss.alpha_bs_ris, cfg);
  const CMat g_los = los_bs_ris(cfg);
  ch.bs_ris.resize(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      ch.bs_ris(i, j) =
          std::sqrt(pl_bs_ris) * (w_los * g_los(i, j) + w_nlos * complex_normal(rng, nd));

  for (int k = 0; k < cfg.num_users; ++k) {
    const double pl_bu =
        pathloss_gain(distance(cfg.bs_pos, cfg.user_pos[k]), cfg.pathloss.alpha_bs_cu, cfg);
    CVec hbu(m);
    for (int i = 0; i < m; ++i) hbu(i) = std::sqrt(pl_bu) * complex_normal(rng, nd);
    ch.bs_user.push_back(std::move(hbu));

    const double pl_iu =
        pathloss_gain(distance(cfg.ris_pos, cfg.user_pos[k]), cfg.pathloss.alpha_ris_cu, cfg);
    const CVec los = los_ris_user(cfg, k);
    CVec hiu(n);
    for (int i = 0; i < n; ++i)
      hiu(i) = std::sqrt(pl_iu) * (w_los * los(i) + w_nlos * complex_normal(rng, nd));
    ch.ris_user.push_back(std::move(hiu));
  }

  for (const auto& t : cfg.targets)
    ch.target_steering.push_back(steering_vector(t.azimuth, t.elevation, cfg));
  return ch;
}

}  // namespace hris
