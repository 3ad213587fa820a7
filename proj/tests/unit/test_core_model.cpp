// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace hris;

TEST_CASE("unit conversions") {
  CHECK(dbm_to_watts(-3.0) == doctest::Approx(5.0119e-4).epsilon(1e-4));
  CHECK(dbm_to_watts(0.0) == doctest::Approx(1e-3));
  CHECK(db_to_linear(5.0) == doctest::Approx(3.1623).epsilon(1e-4));
  CHECK(watts_to_dbm(dbm_to_watts(-17.5)) == doctest::Approx(-17.5));
  CHECK(linear_to_db(db_to_linear(7.0)) == doctest::Approx(7.0));
}

TEST_CASE("steering vector examples") {
  SystemConfig cfg = default_config();
  const CVec a0 = steering_vector(0.0, 0.0, cfg);
  CHECK(a0.size() == 64);
  CHECK((a0 - CVec::Ones(64)).norm() < 1e-15);

  cfg.ris_nx = 1;
  cfg.ris_ny = 1;
  const CVec a1 = steering_vector(0.7, -0.3, cfg);
  CHECK(a1.size() == 1);
  CHECK(std::abs(a1(0) - cd(1.0, 0.0)) < 1e-15);

  cfg.ris_nx = 2;
  cfg.ris_ny = 1;
  cfg.dx = cfg.wavelength / 2;
  const CVec a2 = steering_vector(kPi / 2, 0.0, cfg);
  CHECK(std::abs(a2(0) - cd(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(a2(1) - cd(-1.0, 0.0)) < 1e-12);
}

TEST_CASE("steering vector is a Kronecker product with unit entries") {
  SystemConfig cfg = default_config();
  cfg.ris_nx = 3;
  cfg.ris_ny = 5;
  const double th = 0.4, ph = -1.1;
  const CVec a = steering_vector(th, ph, cfg);
  CHECK(a.squaredNorm() == doctest::Approx(15.0).epsilon(1e-14));
  const double ux = std::sin(th) * std::cos(ph), uy = std::sin(th) * std::sin(ph);
  for (int ix = 0; ix < 3; ++ix)
    for (int iy = 0; iy < 5; ++iy) {
      const cd ex = std::exp(cd(0, kTwoPi * ix * cfg.dx * ux / cfg.wavelength)) *
                    std::exp(cd(0, kTwoPi * iy * cfg.dy * uy / cfg.wavelength));
      CHECK(std::abs(a(ix * 5 + iy) - ex) < 1e-12);
    }
}

TEST_CASE("pathloss") {
  SystemConfig cfg = default_config();
  CHECK(pathloss_gain(1.0, 2.5, cfg) == doctest::Approx(1e-3));
  CHECK(pathloss_gain(1.0, 7.0, cfg) == doctest::Approx(cfg.pathloss.k0));
  cfg.pathloss.k0 = 1.0;
  CHECK(pathloss_gain(10.0, 2.0, cfg) == doctest::Approx(0.01));
  CHECK_THROWS_AS(pathloss_gain(0.0, 2.0, cfg), DomainError);
  CHECK_THROWS_AS(pathloss_gain(-1.0, 2.0, cfg), DomainError);
  double prev = pathloss_gain(0.5, 2.2, cfg);
  for (double d = 1.0; d < 100.0; d *= 1.7) {
    const double g = pathloss_gain(d, 2.2, cfg);
    CHECK(g < prev);
    prev = g;
  }
}

TEST_CASE("channel generation is deterministic and well-shaped") {
  const SystemConfig cfg = default_config();
  const ChannelSet a = generate_channels(cfg, 42);
  const ChannelSet b = generate_channels(cfg, 42);
  const ChannelSet c = generate_channels(cfg, 43);
  CHECK_NOTHROW(a.validate(cfg));
  CHECK(a.bs_ris == b.bs_ris);
  for (int k = 0; k < cfg.num_users; ++k) {
    CHECK(a.bs_user[k] == b.bs_user[k]);
    CHECK(a.ris_user[k] == b.ris_user[k]);
  }
  CHECK(a.bs_ris != c.bs_ris);
  for (const auto& s : a.target_steering) {
    CHECK(s.squaredNorm() == doctest::Approx(cfg.num_elements()).epsilon(1e-13));
    CHECK((s.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("BS-user channel second moment matches pathloss") {
  SystemConfig cfg = default_config();
  cfg.ris_nx = 2;
  cfg.ris_ny = 2;
  const int trials = 10000;
  double acc = 0.0;
  for (int s = 0; s < trials; ++s) acc += generate_channels(cfg, 1000 + s).bs_user[0].squaredNorm();
  const double expect = cfg.num_antennas *
                        pathloss_gain(distance(cfg.bs_pos, cfg.user_pos[0]), cfg.pathloss.alpha_bs_cu, cfg);
  CHECK(std::abs(acc / trials - expect) / expect < 0.05);
}

TEST_CASE("BS-RIS channel mean is the scaled line-of-sight matrix") {
  SystemConfig cfg = default_config();
  cfg.ris_nx = 2;
  cfg.ris_ny = 2;
  cfg.num_antennas = 3;
  const int trials = 10000;
  CMat acc = CMat::Zero(4, 3);
  for (int s = 0; s < trials; ++s) acc += generate_channels(cfg, 77 + s).bs_ris;
  acc /= trials;
  const double k = cfg.rician_factor;
  const double pl = pathloss_gain(distance(cfg.bs_pos, cfg.ris_pos), cfg.pathloss.alpha_bs_ris, cfg);
  const CMat expect = std::sqrt(k / (1 + k)) * std::sqrt(pl) * los_bs_ris(cfg);
  CHECK((acc - expect).norm() / expect.norm() < 0.05);
}

TEST_CASE("reflection matrices") {
  RisConfiguration r = RisConfiguration::all_passive(RVec::Constant(3, kPi));
  auto m = reflection_matrices(r);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(m.phi.diagonal()(i) - cd(-1.0, 0.0)) < 1e-15);
    CHECK(m.modes.diagonal()(i) == 0.0);
  }

  RisConfiguration s;
  s.mode = Eigen::Vector2i(1, 0);
  s.amplitude = Eigen::Vector2d(2.0, 1.0);
  s.phase = Eigen::Vector2d(kTwoPi, kTwoPi);
  m = reflection_matrices(s);
  CHECK(std::abs(m.phi.diagonal()(0) - cd(2.0, 0.0)) < 1e-14);
  CHECK(std::abs(m.phi.diagonal()(1) - cd(1.0, 0.0)) < 1e-14);
  CHECK(m.modes.diagonal()(0) == 1.0);
  CHECK(m.modes.diagonal()(1) == 0.0);

  s.amplitude(0) = 0.0;
  m = reflection_matrices(s);
  CHECK(std::abs(m.phi.diagonal()(0)) == 0.0);

  s.amplitude(1) = 0.5;
  CHECK_THROWS_AS(reflection_matrices(s), ValidationError);
  s.amplitude(1) = 1.0;
  s.mode(1) = 2;
  CHECK_THROWS_AS(reflection_matrices(s), ValidationError);
  s.mode(1) = 0;
  s.phase(0) = 0.0;
  CHECK_THROWS_AS(reflection_matrices(s), ValidationError);
  s.phase(0) = 1.0;
  s.amplitude(0) = 11.0;
  CHECK_THROWS_AS(reflection_matrices(s, 10.0), ValidationError);
}

TEST_CASE("phase helpers") {
  CHECK(wrap_phase(0.0) == doctest::Approx(kTwoPi));
  CHECK(wrap_phase(-kPi / 2) == doctest::Approx(1.5 * kPi));
  CHECK(wrap_phase(5 * kPi) == doctest::Approx(kPi));
  const RVec p = random_phases(500, 9);
  CHECK(p.minCoeff() > 0.0);
  CHECK(p.maxCoeff() <= kTwoPi);
  CHECK(random_phases(500, 9) == p);
  CHECK(random_phases(500, 10) != p);
}

TEST_CASE("config JSON round trip and validation") {
  const SystemConfig cfg = default_config();
  const auto j = config_to_json(cfg);
  const SystemConfig back = config_from_json(j);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(back.ris_power_max == doctest::Approx(cfg.ris_power_max));

  nlohmann::json k = {{"ris_power_max_dbm", -13.0}, {"sinr_min_db", 10.0}};
  const SystemConfig c2 = config_from_json(k);
  CHECK(c2.ris_power_max == doctest::Approx(dbm_to_watts(-13.0)));
  CHECK(c2.sinr_min[1] == doctest::Approx(10.0));
  CHECK(config_hash(c2) != config_hash(cfg));

  CHECK_THROWS_AS(config_from_json({{"no_such_key", 1}}), ValidationError);
  SystemConfig bad = cfg;
  bad.beta_max = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = cfg;
  bad.bs_power = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  SystemConfig n = cfg;
  set_num_elements(n, 36);
  CHECK(n.ris_nx * n.ris_ny == 36);
  CHECK(n.ris_nx == 6);
}
