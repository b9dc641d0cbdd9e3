#include "numamap/mapping.hpp"

#include <algorithm>
#include <string>

namespace numamap {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffU;
        h *= kFnvPrime;
    }
}

} // namespace

MappingState::MappingState(const Topology& t)
    : occupants_(t.core_count()), mem_used_(t.numa_count(), 0), mem_usable_(t.numa_count(), 0) {
    for (const auto& n : t.numa_nodes()) mem_usable_[n.id] = n.usable_memory();
}

std::vector<VmId> MappingState::vm_ids() const {
    std::vector<VmId> ids;
    ids.reserve(vms_.size());
    for (const auto& [id, _] : vms_) ids.push_back(id);
    return ids;
}

void MappingState::add(const VmSpec& spec, VmPlacement placement) {
    if (vms_.contains(spec.id))
        throw RuntimeError("vm " + std::to_string(spec.id) + " is already mapped");
    if (placement.cores.size() != static_cast<std::size_t>(spec.vcpus))
        throw RuntimeError("vm " + std::to_string(spec.id) + ": vCPU assignment count mismatch");
    Bytes total = 0;
    for (const auto& share : placement.memory) {
        if (share.numa >= mem_used_.size()) throw RuntimeError("memory on unknown NUMA node");
        if (mem_used_[share.numa] + share.bytes > mem_usable_[share.numa])
            throw RuntimeError("vm " + std::to_string(spec.id) + ": NUMA node " +
                               std::to_string(share.numa) + " memory over capacity");
        total += share.bytes;
    }
    if (total != spec.memory)
        throw RuntimeError("vm " + std::to_string(spec.id) + ": memory allocation mismatch");
    for (auto c : placement.cores)
        if (c >= occupants_.size()) throw RuntimeError("vCPU on unknown core");

    for (auto c : placement.cores) occupants_[c].push_back(spec.id);
    for (const auto& share : placement.memory) mem_used_[share.numa] += share.bytes;
    vms_.emplace(spec.id, Entry{spec, std::move(placement)});
}

void MappingState::detach(VmId id, const VmPlacement& p) {
    for (auto c : p.cores) {
        auto& occ = occupants_[c];
        occ.erase(std::find(occ.begin(), occ.end(), id));
    }
    for (const auto& share : p.memory) mem_used_[share.numa] -= share.bytes;
}

void MappingState::remove(VmId id) {
    auto it = vms_.find(id);
    if (it == vms_.end()) throw RuntimeError("vm " + std::to_string(id) + " is not mapped");
    detach(id, it->second.placement);
    vms_.erase(it);
}

void MappingState::move_vcpu(VmId id, std::size_t vcpu, CoreId core) {
    auto& p = vms_.at(id).placement;
    if (core >= occupants_.size()) throw RuntimeError("vCPU moved to unknown core");
    auto& from = occupants_[p.cores.at(vcpu)];
    from.erase(std::find(from.begin(), from.end(), id));
    occupants_[core].push_back(id);
    p.cores[vcpu] = core;
}

void MappingState::set_cores(VmId id, std::vector<CoreId> cores) {
    auto& p = vms_.at(id).placement;
    if (cores.size() != p.cores.size()) throw RuntimeError("vCPU assignment count mismatch");
    for (std::size_t i = 0; i < cores.size(); ++i)
        if (cores[i] != p.cores[i]) move_vcpu(id, i, cores[i]);
}

int MappingState::max_load() const {
    int best = 0;
    for (const auto& occ : occupants_) best = std::max(best, static_cast<int>(occ.size()));
    return best;
}

int MappingState::live_vcpus() const {
    int n = 0;
    for (const auto& [_, e] : vms_) n += static_cast<int>(e.placement.cores.size());
    return n;
}

std::uint64_t MappingState::hash() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& [id, e] : vms_) {
        fnv_mix(h, id);
        for (auto c : e.placement.cores) fnv_mix(h, c);
        for (const auto& s : e.placement.memory) {
            fnv_mix(h, s.numa);
            fnv_mix(h, s.bytes);
        }
    }
    return h;
}

bool MappingState::placements_equal(const MappingState& other) const {
    if (vms_.size() != other.vms_.size()) return false;
    for (auto a = vms_.begin(), b = other.vms_.begin(); a != vms_.end(); ++a, ++b)
        if (a->first != b->first || !(a->second.placement == b->second.placement)) return false;
    return true;
}

} // namespace numamap
