#pragma once

#include <istream>
#include <string>

#include "nekh/harness.hpp"

namespace nekh {

// INI scenario with sections [system], [perturbation], [run].
ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig load_scenario(const std::string& path);

}  // namespace nekh
