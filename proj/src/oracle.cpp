// Brute-force placement oracle. Deliberately shares nothing with the mapper's
// search: it enumerates per-node vCPU counts directly and places memory itself.
#include "numamap/perfmodel.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>

namespace numamap {

namespace {

struct OracleSearch {
    const std::vector<VmSpec>& vms;
    const Topology& t;
    const PerfParams& params;
    std::size_t max_candidates;

    std::vector<int> free_cores;
    std::vector<Bytes> free_mem;
    std::vector<std::vector<int>> counts; // counts[vm][numa]
    std::size_t candidates = 0;
    double best_total = -1;
    MappingState best;

    bool node_allowed(const VmSpec& vm, NumaId n) const {
        if (vm.allowed_servers.empty()) return true;
        const auto s = t.server_of_numa(n);
        return std::find(vm.allowed_servers.begin(), vm.allowed_servers.end(), s) != vm.allowed_servers.end();
    }

    // Local-first: each hosting node takes its vCPU share; the rest spills to the
    // nearest nodes with room. Returns false when memory does not fit.
    bool place_memory(const VmSpec& vm, const std::vector<int>& cnt, std::vector<Bytes>& mem,
                      std::vector<MemoryShare>& out) const {
        std::vector<Bytes> take(t.numa_count(), 0);
        Bytes left = vm.memory;
        for (NumaId n = 0; n < cnt.size(); ++n) {
            if (cnt[n] == 0) continue;
            const Bytes want = vm.memory / static_cast<Bytes>(vm.vcpus) * static_cast<Bytes>(cnt[n]);
            const Bytes got = std::min(want, mem[n]);
            take[n] += got;
            mem[n] -= got;
            left -= got;
        }
        std::vector<NumaId> order(t.numa_count());
        std::iota(order.begin(), order.end(), 0);
        auto nearest = [&](NumaId n) {
            int best = std::numeric_limits<int>::max();
            for (NumaId h = 0; h < cnt.size(); ++h)
                if (cnt[h] > 0) best = std::min(best, t.distances()(h, n));
            return best;
        };
        std::stable_sort(order.begin(), order.end(),
                         [&](NumaId a, NumaId b) { return nearest(a) < nearest(b); });
        for (auto n : order) {
            if (left == 0) break;
            const Bytes got = std::min(left, mem[n]);
            take[n] += got;
            mem[n] -= got;
            left -= got;
        }
        if (left > 0) return false;
        for (NumaId n = 0; n < take.size(); ++n)
            if (take[n] > 0) out.push_back({n, take[n]});
        return true;
    }

    void evaluate() {
        if (++candidates > max_candidates)
            throw RuntimeError("oracle instance too large (more than " + std::to_string(max_candidates) +
                               " candidate mappings)");
        MappingState m(t);
        std::vector<Bytes> mem = free_mem;
        std::vector<int> next_free(t.numa_count(), 0);
        for (std::size_t i = 0; i < vms.size(); ++i) {
            VmPlacement p;
            for (NumaId n = 0; n < t.numa_count(); ++n)
                for (int k = 0; k < counts[i][n]; ++k) p.cores.push_back(t.numa(n).cores[next_free[n]++]);
            if (!place_memory(vms[i], counts[i], mem, p.memory)) return;
            m.add(vms[i], std::move(p));
        }
        double total = 0;
        for (const auto& vm : vms) total += estimate_perf_exact(vm.id, m, t, params).p;
        if (total > best_total + 1e-12) {
            best_total = total;
            best = std::move(m);
        }
    }

    void spread(std::size_t vm_index, NumaId node, int remaining) {
        if (remaining == 0) {
            assign(vm_index + 1);
            return;
        }
        if (node == t.numa_count()) return;
        const auto& vm = vms[vm_index];
        const int cap = node_allowed(vm, node) ? std::min(remaining, free_cores[node]) : 0;
        for (int k = cap; k >= 0; --k) {
            counts[vm_index][node] = k;
            free_cores[node] -= k;
            spread(vm_index, node + 1, remaining - k);
            free_cores[node] += k;
            counts[vm_index][node] = 0;
        }
    }

    void assign(std::size_t vm_index) {
        if (vm_index == vms.size()) {
            evaluate();
            return;
        }
        spread(vm_index, 0, vms[vm_index].vcpus);
    }
};

} // namespace

OracleResult oracle_best_mapping(const std::vector<VmSpec>& vms, const Topology& t, const PerfParams& params,
                                 std::size_t max_candidates) {
    OracleSearch search{vms, t, params, max_candidates, {}, {}, {}, 0, -1, MappingState(t)};
    for (const auto& n : t.numa_nodes()) {
        search.free_cores.push_back(static_cast<int>(n.cores.size()));
        search.free_mem.push_back(n.usable_memory());
    }
    search.counts.assign(vms.size(), std::vector<int>(t.numa_count(), 0));
    search.assign(0);
    if (vms.empty()) return {MappingState(t), 0.0, search.candidates};
    if (search.best_total < 0) throw CapacityError("oracle: no feasible mapping");
    return {std::move(search.best), search.best_total, search.candidates};
}

} // namespace numamap
