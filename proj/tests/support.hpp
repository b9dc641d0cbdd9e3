#pragma once

#include "numamap/mapper.hpp"
#include "numamap/sim.hpp"

#include <string>

namespace numamap::testing {

inline std::string data_path(const std::string& rel) { return std::string(NUMAMAP_DATA_DIR) + "/" + rel; }

inline Topology reference_topology() { return load_topology_file(data_path("reference-numascale.topo")); }

inline Scenario paper_mix() { return parse_scenario_file(data_path("scenarios/paper-mix.scenario")); }

// servers x sockets x nodes x cores, memory per node; torus row of servers.
inline Topology small_topology(int servers, int sockets, int nodes, int cores, double memory_gb = 8.0) {
    TopologySpec spec;
    for (int s = 0; s < servers; ++s) {
        ServerSpec sv;
        if (servers > 1) sv.torus_coord = TorusCoord{s, 0};
        for (int k = 0; k < sockets; ++k) {
            SocketSpec sk;
            for (int n = 0; n < nodes; ++n) sk.numa_nodes.push_back({cores, memory_gb, 0.0});
            sv.sockets.push_back(sk);
        }
        spec.servers.push_back(sv);
    }
    return Topology::build(spec);
}

inline VmSpec make_vm(VmId id, int vcpus, double memory_gb, AnimalClass cls, bool sensitive = false) {
    VmSpec vm;
    vm.id = id;
    vm.vcpus = vcpus;
    vm.memory = static_cast<Bytes>(memory_gb * static_cast<double>(kGiB));
    vm.cls = cls;
    vm.sensitive = sensitive;
    return vm;
}

inline VmSpec make_preset(VmId id, const std::string& name, AnimalClass cls, bool sensitive = false) {
    const auto& p = preset(name);
    VmSpec vm;
    vm.id = id;
    vm.type = name;
    vm.vcpus = p.vcpus;
    vm.memory = p.memory;
    vm.cls = cls;
    vm.sensitive = sensitive;
    return vm;
}

// Places vCPUs on the listed cores with all memory on `memory_node`.
inline void place(MappingState& m, const VmSpec& vm, std::vector<CoreId> cores, NumaId memory_node) {
    m.add(vm, VmPlacement{std::move(cores), {{memory_node, vm.memory}}});
}

inline std::vector<CoreId> core_range(CoreId first, int count) {
    std::vector<CoreId> out;
    for (int i = 0; i < count; ++i) out.push_back(first + static_cast<CoreId>(i));
    return out;
}

} // namespace numamap::testing
