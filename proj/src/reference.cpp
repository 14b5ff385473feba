#include "honeynet/reference.hpp"

namespace honeynet {

Topology reference_topology() { return Topology::parse(reference_topology_text()); }

ScenarioScript reference_scenario() { return ScenarioScript::parse(reference_scenario_text()); }

DomainRegistry reference_registry() { return DomainRegistry::parse(reference_registry_text()); }

HoneynetOptions reference_options() {
    HoneynetOptions options;
    options.firewall_rules = parse_rules(reference_firewall_rules_text());
    return options;
}

}  // namespace honeynet
