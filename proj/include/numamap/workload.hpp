#pragma once

#include "numamap/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace numamap {

struct VmTypePreset {
    std::string_view name;
    int vcpus = 0;
    Bytes memory = 0;
};

// Fixed table: small, medium, large, huge. Throws ValidationError for other names.
const VmTypePreset& preset(std::string_view name);

struct VmSpec {
    VmId id = 0;
    // Preset name or "custom".
    std::string type = "custom";
    int vcpus = 1;
    Bytes memory = kGiB;
    AnimalClass cls = AnimalClass::Sheep;
    // Remote-memory sensitivity.
    bool sensitive = false;
    // Expected relative performance; solo at ideal locality is 1.0.
    double expected_perf = 1.0;
    // Servers the VM may run on. Empty means unrestricted.
    std::vector<ServerId> allowed_servers;

    void validate() const;
    friend bool operator==(const VmSpec&, const VmSpec&) = default;
};

enum class EventKind { Arrive, Depart };

struct ScenarioEvent {
    int time = 0;
    EventKind kind = EventKind::Arrive;
    VmId vm_id = 0;
    // Set for arrivals.
    std::optional<VmSpec> vm;
    friend bool operator==(const ScenarioEvent&, const ScenarioEvent&) = default;
};

using Scenario = std::vector<ScenarioEvent>;

// Accepts the JSON scenario document; an empty or blank document is an empty scenario.
// Events are stably sorted by time. Throws ValidationError.
Scenario parse_scenario(std::string_view text);
Scenario parse_scenario_file(const std::string& path);

nlohmann::json scenario_to_json(const Scenario& s);
std::string serialize_scenario(const Scenario& s);

// Sum of vCPUs live at the same time, maximized over the scenario.
int peak_live_vcpus(const Scenario& s);

} // namespace numamap
