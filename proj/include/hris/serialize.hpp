// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include <json.hpp>

#include "hris/config.hpp"
#include "hris/metrics.hpp"
#include "hris/ris.hpp"
#include "hris/types.hpp"

namespace hris {

inline constexpr const char* kVersion = "0.1.0";

// Complex data is stored as {"re": [...], "im": [...]}; matrices row-major
// as nested arrays. Doubles round-trip exactly through the JSON text.
nlohmann::json cvec_to_json(const CVec& v);
CVec cvec_from_json(const nlohmann::json& j);
nlohmann::json cmat_to_json(const CMat& m);
CMat cmat_from_json(const nlohmann::json& j);

nlohmann::json ris_to_json(const RisConfiguration& ris);
RisConfiguration ris_from_json(const nlohmann::json& j);
nlohmann::json beamforming_to_json(const BeamformingSolution& bf);
BeamformingSolution beamforming_from_json(const nlohmann::json& j);

// Config hash, seed and library versions.
nlohmann::json provenance(const SystemConfig& cfg, std::uint64_t seed);

}  // namespace hris
