// SPDX-License-Identifier: Apache-2.0
#include "hris/config.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>

#include "hris/types.hpp"

namespace hris {

using nlohmann::json;

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("SystemConfig: " + what);
}

bool finite3(const Point3& p) {
  return std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]);
}

Point3 default_user_pos(int k) { return {25.0, 5.0 * (k + 1), 1.5}; }

}  // namespace

void SystemConfig::validate() const {
  require(num_antennas >= 1, "num_antennas must be >= 1");
  require(ris_nx >= 1 && ris_ny >= 1, "RIS grid must be at least 1x1");
  require(num_users >= 1, "num_users must be >= 1");
  require(num_targets >= 1, "num_targets must be >= 1");
  require(bs_power > 0 && ris_power_max > 0 && ris_noise_max > 0 &&
              ris_noise_power > 0,
          "all powers must be > 0");
  require(beta_max > 1.0, "beta_max must be > 1");
  require(wavelength > 0 && dx > 0 && dy > 0, "wavelength and spacings must be > 0");
  require(static_cast<int>(user_noise_power.size()) == num_users,
          "user_noise_power needs one entry per user");
  require(static_cast<int>(sinr_min.size()) == num_users,
          "sinr_min needs one entry per user");
  require(static_cast<int>(user_pos.size()) == num_users,
          "user_pos needs one entry per user");
  require(static_cast<int>(targets.size()) == num_targets,
          "targets needs one entry per target");
  for (double s : user_noise_power) require(s > 0, "user noise powers must be > 0");
  // Gamma = 0 is accepted and means "no SINR requirement" for that user.
  for (double g : sinr_min) require(g >= 0 && std::isfinite(g), "SINR thresholds must be >= 0");
  require(finite3(bs_pos) && finite3(ris_pos), "positions must be finite");
  for (const auto& p : user_pos) require(finite3(p), "positions must be finite");
  for (const auto& t : targets)
    require(std::isfinite(t.azimuth) && std::isfinite(t.elevation), "angles must be finite");
  require(rician_factor >= 0, "rician_factor must be >= 0");
  require(pathloss.k0 > 0 && pathloss.d0 > 0, "pathloss reference must be > 0");
  require(tol_feas > 0, "tol_feas must be > 0");
}

SystemConfig default_config() {
  SystemConfig cfg;
  cfg.num_antennas = 8;
  cfg.ris_nx = 8;
  cfg.ris_ny = 8;
  cfg.num_users = 2;
  cfg.num_targets = 2;
  cfg.bs_power = 0.3;
  cfg.ris_power_max = dbm_to_watts(-3.0);
  cfg.ris_noise_max = dbm_to_watts(-10.0);
  cfg.ris_noise_power = dbm_to_watts(-70.0);
  cfg.user_noise_power.assign(2, dbm_to_watts(-80.0));
  cfg.sinr_min.assign(2, db_to_linear(5.0));
  cfg.beta_max = 10.0;
  cfg.wavelength = 299792458.0 / 3.5e9;
  cfg.dx = cfg.wavelength / 2.0;
  cfg.dy = cfg.wavelength / 2.0;
  cfg.bs_pos = {0.0, 0.0, 2.5};
  cfg.ris_pos = {20.0, 5.0, 2.5};
  cfg.user_pos = {default_user_pos(0), default_user_pos(1)};
  const double deg = kPi / 180.0;
  cfg.targets = {{-60.0 * deg, 60.0 * deg}, {-30.0 * deg, 30.0 * deg}};
  cfg.rician_factor = 0.5;
  cfg.pathloss = PathlossModel{db_to_linear(-30.0), 1.0, 2.5, 2.5, 2.2};
  cfg.tol_feas = 1e-5;
  return cfg;
}

void set_num_users(SystemConfig& cfg, int num_users) {
  if (num_users < 1) throw ValidationError("num_users must be >= 1");
  const double noise = cfg.user_noise_power.empty() ? dbm_to_watts(-80.0)
                                                    : cfg.user_noise_power.front();
  const double gamma = cfg.sinr_min.empty() ? db_to_linear(5.0) : cfg.sinr_min.front();
  cfg.user_noise_power.resize(num_users, noise);
  cfg.sinr_min.resize(num_users, gamma);
  const auto old = cfg.user_pos.size();
  cfg.user_pos.resize(num_users);
  for (auto k = old; k < cfg.user_pos.size(); ++k)
    cfg.user_pos[k] = default_user_pos(static_cast<int>(k));
  cfg.num_users = num_users;
}

void set_num_elements(SystemConfig& cfg, int n) {
  if (n < 1) throw ValidationError("RIS element count must be >= 1");
  int nx = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  while (n % nx != 0) --nx;
  cfg.ris_nx = n / nx;
  cfg.ris_ny = nx;
}

namespace {

Point3 read_point(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError(std::string("config key '") + key + "' must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Reads a power that may be given as "<base>_w" or "<base>_dbm".
bool read_power(const json& j, const std::string& base, double& out) {
  const bool w = j.contains(base + "_w");
  const bool dbm = j.contains(base + "_dbm");
  if (w && dbm) throw ValidationError("config gives both " + base + "_w and " + base + "_dbm");
  if (w) out = j.at(base + "_w").get<double>();
  if (dbm) out = dbm_to_watts(j.at(base + "_dbm").get<double>());
  return w || dbm;
}

// Per-user quantity: scalar (broadcast) or array.
std::vector<double> read_per_user(const json& v, int k, double (*convert)(double)) {
  std::vector<double> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(convert(e.get<double>()));
  } else {
    out.assign(k, convert(v.get<double>()));
  }
  return out;
}

double identity(double x) { return x; }

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "num_antennas", "ris_nx", "ris_ny", "num_users", "num_targets",
      "bs_power_w", "bs_power_dbm", "ris_power_max_w", "ris_power_max_dbm",
      "ris_noise_max_w", "ris_noise_max_dbm", "ris_noise_power_w", "ris_noise_power_dbm",
      "user_noise_power_w", "user_noise_power_dbm", "sinr_min_db", "sinr_min_linear",
      "beta_max", "wavelength_m", "carrier_hz", "dx_m", "dy_m", "bs_pos", "ris_pos",
      "user_pos", "targets_deg", "targets_rad", "rician_factor", "pathloss", "tol_feas"};
  return keys;
}

}  // namespace

SystemConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known_keys().count(key)) throw ValidationError("unknown config key '" + key + "'");
  }

  SystemConfig cfg = default_config();
  cfg.num_antennas = j.value("num_antennas", cfg.num_antennas);
  cfg.ris_nx = j.value("ris_nx", cfg.ris_nx);
  cfg.ris_ny = j.value("ris_ny", cfg.ris_ny);
  set_num_users(cfg, j.value("num_users", cfg.num_users));

  read_power(j, "bs_power", cfg.bs_power);
  read_power(j, "ris_power_max", cfg.ris_power_max);
  read_power(j, "ris_noise_max", cfg.ris_noise_max);
  read_power(j, "ris_noise_power", cfg.ris_noise_power);
  if (j.contains("user_noise_power_w") && j.contains("user_noise_power_dbm"))
    throw ValidationError("config gives both user_noise_power_w and user_noise_power_dbm");
  if (j.contains("user_noise_power_w"))
    cfg.user_noise_power = read_per_user(j["user_noise_power_w"], cfg.num_users, identity);
  if (j.contains("user_noise_power_dbm"))
    cfg.user_noise_power = read_per_user(j["user_noise_power_dbm"], cfg.num_users, dbm_to_watts);
  if (j.contains("sinr_min_db") && j.contains("sinr_min_linear"))
    throw ValidationError("config gives both sinr_min_db and sinr_min_linear");
  if (j.contains("sinr_min_db"))
    cfg.sinr_min = read_per_user(j["sinr_min_db"], cfg.num_users, db_to_linear);
  if (j.contains("sinr_min_linear"))
    cfg.sinr_min = read_per_user(j["sinr_min_linear"], cfg.num_users, identity);

  cfg.beta_max = j.value("beta_max", cfg.beta_max);
  if (j.contains("carrier_hz") && j.contains("wavelength_m"))
    throw ValidationError("config gives both carrier_hz and wavelength_m");
  if (j.contains("carrier_hz")) cfg.wavelength = 299792458.0 / j["carrier_hz"].get<double>();
  cfg.wavelength = j.value("wavelength_m", cfg.wavelength);
  cfg.dx = j.value("dx_m", cfg.wavelength / 2.0);
  cfg.dy = j.value("dy_m", cfg.wavelength / 2.0);

  if (j.contains("bs_pos")) cfg.bs_pos = read_point(j["bs_pos"], "bs_pos");
  if (j.contains("ris_pos")) cfg.ris_pos = read_point(j["ris_pos"], "ris_pos");
  if (j.contains("user_pos")) {
    cfg.user_pos.clear();
    for (const auto& p : j["user_pos"]) cfg.user_pos.push_back(read_point(p, "user_pos"));
  }

  if (j.contains("targets_deg") && j.contains("targets_rad"))
    throw ValidationError("config gives both targets_deg and targets_rad");
  if (j.contains("targets_deg") || j.contains("targets_rad")) {
    const bool deg = j.contains("targets_deg");
    const double scale = deg ? kPi / 180.0 : 1.0;
    cfg.targets.clear();
    for (const auto& t : j[deg ? "targets_deg" : "targets_rad"]) {
      if (!t.is_array() || t.size() != 2)
        throw ValidationError("each target must be [azimuth, elevation]");
      cfg.targets.push_back({t[0].get<double>() * scale, t[1].get<double>() * scale});
    }
  }
  cfg.num_targets = j.value("num_targets", static_cast<int>(cfg.targets.size()));

  cfg.rician_factor = j.value("rician_factor", cfg.rician_factor);
  if (j.contains("pathloss")) {
    const auto& p = j["pathloss"];
    if (p.contains("k0_db")) cfg.pathloss.k0 = db_to_linear(p["k0_db"].get<double>());
    if (p.contains("k0_linear")) cfg.pathloss.k0 = p["k0_linear"].get<double>();
    cfg.pathloss.d0 = p.value("d0_m", cfg.pathloss.d0);
    cfg.pathloss.alpha_ris_cu = p.value("alpha_ris_cu", cfg.pathloss.alpha_ris_cu);
    cfg.pathloss.alpha_bs_ris = p.value("alpha_bs_ris", cfg.pathloss.alpha_bs_ris);
    cfg.pathloss.alpha_bs_cu = p.value("alpha_bs_cu", cfg.pathloss.alpha_bs_cu);
  }
  cfg.tol_feas = j.value("tol_feas", cfg.tol_feas);
  cfg.validate();
  return cfg;
}

json config_to_json(const SystemConfig& cfg) {
  json j;
  j["num_antennas"] = cfg.num_antennas;
  j["ris_nx"] = cfg.ris_nx;
  j["ris_ny"] = cfg.ris_ny;
  j["num_users"] = cfg.num_users;
  j["num_targets"] = cfg.num_targets;
  j["bs_power_w"] = cfg.bs_power;
  j["ris_power_max_w"] = cfg.ris_power_max;
  j["ris_noise_max_w"] = cfg.ris_noise_max;
  j["ris_noise_power_w"] = cfg.ris_noise_power;
  j["user_noise_power_w"] = cfg.user_noise_power;
  j["sinr_min_linear"] = cfg.sinr_min;
  j["beta_max"] = cfg.beta_max;
  j["wavelength_m"] = cfg.wavelength;
  j["dx_m"] = cfg.dx;
  j["dy_m"] = cfg.dy;
  j["bs_pos"] = cfg.bs_pos;
  j["ris_pos"] = cfg.ris_pos;
  j["user_pos"] = cfg.user_pos;
  json targets = json::array();
  for (const auto& t : cfg.targets) targets.push_back({t.azimuth, t.elevation});
  j["targets_rad"] = targets;
  j["rician_factor"] = cfg.rician_factor;
  j["pathloss"] = {{"k0_linear", cfg.pathloss.k0},
                   {"d0_m", cfg.pathloss.d0},
                   {"alpha_ris_cu", cfg.pathloss.alpha_ris_cu},
                   {"alpha_bs_ris", cfg.pathloss.alpha_bs_ris},
                   {"alpha_bs_cu", cfg.pathloss.alpha_bs_cu}};
  j["tol_feas"] = cfg.tol_feas;
  return j;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const SystemConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hris
