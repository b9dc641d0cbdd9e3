#pragma once

#include "numamap/sim.hpp"

#include <string>
#include <vector>

namespace numamap {

// Columns: vm_id, vm_type, class, algorithm, mean_p, stddev_p, variability_ratio, rel_vs_vanilla.
// Missing values are empty cells.
std::string stats_csv(const std::vector<VmStats>& rows);
std::string stats_table(const std::vector<VmStats>& rows, const std::vector<GroupFactor>& groups = {});
nlohmann::json stats_json(const std::vector<VmStats>& rows, const std::vector<GroupFactor>& groups = {});

// Grid grouped server -> socket -> NUMA node. A cell is the occupying VM id, "." when
// idle, or "xN" for a core shared by N vCPUs.
std::string render_snapshot(const nlohmann::json& layout, const std::vector<std::vector<VmId>>& occupants);
// Throws ValidationError when the epoch is not in the trace.
std::string render_snapshot(const RunTrace& trace, int epoch);
nlohmann::json snapshot_json(const RunTrace& trace, int epoch);

} // namespace numamap
