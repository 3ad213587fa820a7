// SPDX-License-Identifier: Apache-2.0
#include "hris/serialize.hpp"

#include <string>

#include <Eigen/Core>

namespace hris {

using nlohmann::json;

json cvec_to_json(const CVec& v) {
  json re = json::array(), im = json::array();
  for (int i = 0; i < v.size(); ++i) {
    re.push_back(v(i).real());
    im.push_back(v(i).imag());
  }
  return {{"re", re}, {"im", im}};
}

CVec cvec_from_json(const json& j) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (!re.is_array() || !im.is_array() || re.size() != im.size())
    throw ValidationError("cvec_from_json: re/im arrays must have equal length");
  CVec v(static_cast<Eigen::Index>(re.size()));
  for (std::size_t i = 0; i < re.size(); ++i) v(static_cast<Eigen::Index>(i)) = cd(re[i].get<double>(), im[i].get<double>());
  return v;
}

json cmat_to_json(const CMat& m) {
  json re = json::array(), im = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json rr = json::array(), ri = json::array();
    for (int c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ri.push_back(m(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  return {{"re", re}, {"im", im}};
}

CMat cmat_from_json(const json& j) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (!re.is_array() || !im.is_array() || re.size() != im.size())
    throw ValidationError("cmat_from_json: re/im must have the same number of rows");
  const auto rows = static_cast<Eigen::Index>(re.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(re[0].size()) : 0;
  CMat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(re[r].size()) != cols || static_cast<Eigen::Index>(im[r].size()) != cols)
      throw ValidationError("cmat_from_json: ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = cd(re[r][c].get<double>(), im[r][c].get<double>());
  }
  return m;
}

json ris_to_json(const RisConfiguration& ris) {
  json mode = json::array(), amp = json::array(), phase = json::array();
  for (int i = 0; i < ris.num_elements(); ++i) {
    mode.push_back(ris.mode(i));
    amp.push_back(ris.amplitude(i));
    phase.push_back(ris.phase(i));
  }
  return {{"mode", mode}, {"amplitude", amp}, {"phase", phase}};
}

RisConfiguration ris_from_json(const json& j) {
  const auto mode = j.at("mode").get<std::vector<int>>();
  const auto amp = j.at("amplitude").get<std::vector<double>>();
  const auto phase = j.at("phase").get<std::vector<double>>();
  if (mode.size() != amp.size() || mode.size() != phase.size())
    throw ValidationError("ris_from_json: mode/amplitude/phase lengths differ");
  RisConfiguration r;
  const auto n = static_cast<Eigen::Index>(mode.size());
  r.mode = Eigen::Map<const Eigen::VectorXi>(mode.data(), n);
  r.amplitude = Eigen::Map<const RVec>(amp.data(), n);
  r.phase = Eigen::Map<const RVec>(phase.data(), n);
  return r;
}

json beamforming_to_json(const BeamformingSolution& bf) {
  json beams = json::array();
  for (const auto& w : bf.beams) beams.push_back(cvec_to_json(w));
  return {{"beams", beams}, {"sensing_cov", cmat_to_json(bf.sensing_cov)}};
}

BeamformingSolution beamforming_from_json(const json& j) {
  BeamformingSolution bf;
  for (const auto& w : j.at("beams")) bf.beams.push_back(cvec_from_json(w));
  bf.sensing_cov = cmat_from_json(j.at("sensing_cov"));
  return bf;
}

json provenance(const SystemConfig& cfg, std::uint64_t seed) {
  return {{"config_hash", config_hash(cfg)},
          {"seed", seed},
          {"versions",
           {{"hris", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}}}};
}

}  // namespace hris
