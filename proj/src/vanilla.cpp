#include "numamap/mapper.hpp"

#include <algorithm>
#include <numeric>

namespace numamap {

MappingState vanilla_arrival(const VmSpec& vm, const MappingState& m, const Topology& t, Rng& rng,
                             const VanillaParams& vp) {
    const auto n = static_cast<CoreId>(t.core_count());
    std::uniform_int_distribution<CoreId> pick(0, n - 1);
    const CoreId start = pick(rng);

    std::vector<CoreId> order(n);
    for (CoreId i = 0; i < n; ++i) order[i] = (start + i) % n;
    auto allowed = [&](CoreId c) {
        if (vm.allowed_servers.empty()) return true;
        const auto s = t.locate(c).server;
        return std::find(vm.allowed_servers.begin(), vm.allowed_servers.end(), s) != vm.allowed_servers.end();
    };

    std::vector<CoreId> cores;
    std::vector<int> extra(n, 0);
    for (auto c : order) {
        if (static_cast<int>(cores.size()) == vm.vcpus) break;
        if (allowed(c) && m.load(c) == 0) {
            cores.push_back(c);
            extra[c] = 1;
        }
    }
    // no free core left: stack onto the least loaded ones in scan order
    for (int level = 1; level < vp.max_overbook && static_cast<int>(cores.size()) < vm.vcpus; ++level) {
        for (auto c : order) {
            if (static_cast<int>(cores.size()) == vm.vcpus) break;
            if (allowed(c) && m.load(c) + extra[c] == level) {
                cores.push_back(c);
                ++extra[c];
            }
        }
    }
    if (static_cast<int>(cores.size()) < vm.vcpus)
        throw CapacityError("no capacity for vm " + std::to_string(vm.id));

    std::vector<int> per_node(t.numa_count(), 0);
    for (auto c : cores) ++per_node[t.numa_of(c)];
    auto memory = allocate_memory(vm, per_node, m, t);
    if (!memory) throw CapacityError("no memory for vm " + std::to_string(vm.id));

    MappingState out = m;
    out.add(vm, VmPlacement{std::move(cores), std::move(*memory)});
    return out;
}

MappingState vanilla_step(const MappingState& m, const Topology& t, Rng& rng, const VanillaParams& vp) {
    MappingState out = m;
    std::bernoulli_distribution migrate(vp.migrate_prob);
    std::vector<double> weights(t.core_count());
    for (const auto& id : m.vm_ids()) {
        const auto& spec = out.spec(id);
        for (std::size_t v = 0; v < static_cast<std::size_t>(spec.vcpus); ++v) {
            if (!migrate(rng)) continue;
            const CoreId current = out.placement(id).cores[v];
            bool any = false;
            for (CoreId c = 0; c < weights.size(); ++c) {
                const int load = out.load(c) - (c == current ? 1 : 0);
                const bool ok = load < vp.max_overbook &&
                                (spec.allowed_servers.empty() ||
                                 std::find(spec.allowed_servers.begin(), spec.allowed_servers.end(),
                                           t.locate(c).server) != spec.allowed_servers.end());
                weights[c] = ok ? 1.0 / (1.0 + load) : 0.0;
                any = any || ok;
            }
            if (!any) continue;
            std::discrete_distribution<CoreId> dest(weights.begin(), weights.end());
            const CoreId to = dest(rng);
            if (to != current) out.move_vcpu(id, v, to);
        }
    }
    return out;
}

} // namespace numamap
