#pragma once

#include <string>
#include <vector>

#include "vreg/sim.hpp"

namespace vreg {

/// Parse a scenario config file into a ScenarioConfig.
///
/// Format: flat `key = value` pairs under `[section]` headers, `#` starts a
/// comment. Sections: [feeder], [sim], [control], [background], [smoothing],
/// and one [dc <bus>] per data center. Key names carry their units
/// (duration_s, deadband_pu, ...). Relative trace paths resolve against the
/// config file's directory.
///
/// Overrides are `key=value` or `section.key=value` strings applied on top
/// of the file ([dc <bus>] addresses as `dc<bus>.key`). A bare key must be
/// unambiguous. Throws ConfigError enumerating every problem found.
ScenarioConfig load_scenario(const std::string& path,
                             const std::vector<std::string>& overrides = {});

/// Same from in-memory text; `base_dir` anchors relative trace paths.
ScenarioConfig parse_scenario(const std::string& text, const std::string& origin,
                              const std::string& base_dir = ".",
                              const std::vector<std::string>& overrides = {});

}  // namespace vreg
