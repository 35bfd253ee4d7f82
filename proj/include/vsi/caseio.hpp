#pragma once

#include <string>

#include "vsi/netmodel.hpp"

namespace vsi {

// MATPOWER-style case file, subset: baseMVA plus the bus, gen, and branch
// tables. Bus/gen powers are read in MVA units and converted to p.u.
NetworkCase load_matpower_case(const std::string& path);

// Native JSON schema: { "base_mva": x, "buses": [...], "branches": [...] }.
NetworkCase load_json_case(const std::string& path);
void save_json_case(const NetworkCase& net, const std::string& path);

// Dispatches on extension: ".m" -> MATPOWER, ".json" -> native.
NetworkCase load_case(const std::string& path);

}  // namespace vsi
