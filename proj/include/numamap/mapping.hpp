#pragma once

#include "numamap/topology.hpp"
#include "numamap/workload.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace numamap {

struct MemoryShare {
    NumaId numa = 0;
    Bytes bytes = 0;
    friend bool operator==(const MemoryShare&, const MemoryShare&) = default;
};

struct VmPlacement {
    // cores[i] hosts vCPU i.
    std::vector<CoreId> cores;
    std::vector<MemoryShare> memory;
    friend bool operator==(const VmPlacement&, const VmPlacement&) = default;
};

// Global assignment of vCPUs to cores and VM memory to NUMA nodes.
// Value type; copies are independent snapshots.
class MappingState {
public:
    MappingState() = default;
    explicit MappingState(const Topology& t);

    struct Entry {
        VmSpec spec;
        VmPlacement placement;
    };

    bool contains(VmId id) const { return vms_.contains(id); }
    const VmSpec& spec(VmId id) const { return vms_.at(id).spec; }
    const VmPlacement& placement(VmId id) const { return vms_.at(id).placement; }
    const std::map<VmId, Entry>& vms() const { return vms_; }
    std::vector<VmId> vm_ids() const;
    std::size_t vm_count() const { return vms_.size(); }

    // Adds a VM. Throws RuntimeError if the id is live, the vCPU count or
    // memory total do not match the VmSpec, or memory exceeds a node's usable capacity.
    void add(const VmSpec& spec, VmPlacement placement);
    void remove(VmId id);
    void move_vcpu(VmId id, std::size_t vcpu, CoreId core);
    void set_cores(VmId id, std::vector<CoreId> cores);

    // vCPUs hosted on a core (a VM may appear more than once when overbooked).
    std::span<const VmId> occupants(CoreId core) const { return occupants_[core]; }
    int load(CoreId core) const { return static_cast<int>(occupants_[core].size()); }
    Bytes memory_used(NumaId n) const { return mem_used_[n]; }
    std::size_t core_count() const { return occupants_.size(); }
    std::size_t numa_count() const { return mem_used_.size(); }

    int max_load() const;
    int live_vcpus() const;

    std::uint64_t epoch = 0;

    // FNV-1a over vCPU and memory assignments, in id order.
    std::uint64_t hash() const;

    friend bool operator==(const MappingState& a, const MappingState& b) {
        return a.occupants_ == b.occupants_ && a.mem_used_ == b.mem_used_ &&
               a.placements_equal(b);
    }

private:
    bool placements_equal(const MappingState& other) const;
    void detach(VmId id, const VmPlacement& p);

    std::map<VmId, Entry> vms_;
    std::vector<std::vector<VmId>> occupants_;
    std::vector<Bytes> mem_used_;
    std::vector<Bytes> mem_usable_;
};

} // namespace numamap
