#pragma once

#include <string_view>

#include "honeynet/harness.hpp"
#include "honeynet/scenario.hpp"
#include "honeynet/topology.hpp"
#include "honeynet/traceback.hpp"

namespace honeynet {

// Bundled reference data (copied from data/ at build time).
std::string_view reference_topology_text();
std::string_view reference_scenario_text();
std::string_view reference_registry_text();
std::string_view reference_firewall_rules_text();

Topology reference_topology();
ScenarioScript reference_scenario();
DomainRegistry reference_registry();
// Default options with the reference firewall rules installed.
HoneynetOptions reference_options();

}  // namespace honeynet
