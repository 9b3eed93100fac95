#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "cbi/mechanisms.hpp"

namespace cbi::cli {

using nlohmann::json;

// Unknown keys, missing required keys and wrong types raise InvalidArgument.
TailFunction tail_from_json(const json& j);
json tail_to_json(const TailFunction& t);

BranchingMechanism psi_from_json(const json& j);
json psi_to_json(const BranchingMechanism& psi);

ImmigrationMechanism phi_from_json(const json& j);
json phi_to_json(const ImmigrationMechanism& phi);

Scenario scenario_from_json(const json& j);
json scenario_to_json(const Scenario& sc);

Scenario load_scenario(const std::string& path);

// FNV-1a of the canonical serialization
std::uint64_t scenario_fingerprint(const Scenario& sc);
std::string hex(std::uint64_t v);

}  // namespace cbi::cli
