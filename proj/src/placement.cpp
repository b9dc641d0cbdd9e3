#include "numamap/mapper.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace numamap {

bool operator<(const PlacementScore& a, const PlacementScore& b) {
    if (a.servers != b.servers) return a.servers < b.servers;
    if (a.nodes != b.nodes) return a.nodes < b.nodes;
    if (a.violations != b.violations) return a.violations < b.violations;
    return a.distance < b.distance - 1e-9;
}

int count_violations(AnimalClass cls, VmId self, std::span<const CoreId> cores, const MappingState& m,
                     const Topology& t, const ClassMatrix& cm) {
    std::set<LlcId> groups;
    for (auto c : cores) groups.insert(t.llc_of(c));
    std::set<VmId> bad;
    for (auto g : groups)
        for (auto c : t.llc_cores(g))
            for (auto occ : m.occupants(c))
                if (occ != self && !cm.compatible(cls, m.spec(occ).cls)) bad.insert(occ);
    return static_cast<int>(bad.size());
}

namespace {

bool server_allowed(const VmSpec& vm, ServerId s) {
    return vm.allowed_servers.empty() ||
           std::find(vm.allowed_servers.begin(), vm.allowed_servers.end(), s) != vm.allowed_servers.end();
}

// Minimal number of bins (largest first) whose capacities reach `need`.
int min_bins(std::vector<int> caps, int need) {
    std::sort(caps.rbegin(), caps.rend());
    int sum = 0;
    int k = 0;
    for (int c : caps) {
        if (sum >= need) break;
        sum += c;
        ++k;
    }
    return sum >= need ? k : -1;
}

double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    double r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

// Calls fn for each k-subset of [0, n) in lexicographic order.
void for_each_combination(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& fn) {
    if (k > n) return;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        fn(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

double counts_distance(const std::vector<std::pair<NumaId, int>>& counts, const std::vector<MemoryShare>& mem,
                       const Topology& t) {
    double total_mem = 0;
    for (const auto& s : mem) total_mem += static_cast<double>(s.bytes);
    int vcpus = 0;
    double sum = 0;
    for (const auto& [n, c] : counts) {
        vcpus += c;
        for (const auto& s : mem) sum += c * static_cast<double>(s.bytes) * t.distances()(n, s.numa);
    }
    if (vcpus == 0 || total_mem == 0) return t.local_distance();
    return sum / (vcpus * total_mem);
}

struct Search {
    const VmSpec& vm;
    const MappingState& m;
    const Topology& t;
    const ClassMatrix& cm;
    const PlacementOptions& opts;

    std::vector<std::vector<CoreId>> free_cores;
    std::vector<bool> usable;
    std::vector<std::set<VmId>> node_violators;

    void init() {
        const auto n = t.numa_count();
        free_cores.assign(n, {});
        usable.assign(n, false);
        node_violators.assign(n, {});
        for (const auto& node : t.numa_nodes()) {
            for (auto c : node.cores)
                if (m.load(c) == 0) free_cores[node.id].push_back(c);
            const bool blocked = !opts.blocked_nodes.empty() && opts.blocked_nodes[node.id];
            usable[node.id] = !blocked && server_allowed(vm, node.server) && !free_cores[node.id].empty();
            const auto g = t.llc_of_numa(node.id);
            for (auto c : t.llc_cores(g))
                for (auto occ : m.occupants(c))
                    if (occ != vm.id && !cm.compatible(vm.cls, m.spec(occ).cls)) node_violators[node.id].insert(occ);
        }
    }

    int free_of(NumaId n) const { return static_cast<int>(free_cores[n].size()); }

    int violations_of(const std::vector<NumaId>& nodes) const {
        std::set<VmId> all;
        for (auto n : nodes) all.insert(node_violators[n].begin(), node_violators[n].end());
        return static_cast<int>(all.size());
    }

    int servers_of(const std::vector<NumaId>& nodes) const {
        std::set<ServerId> s;
        for (auto n : nodes) s.insert(t.server_of_numa(n));
        return static_cast<int>(s.size());
    }

    std::optional<PlacementCandidate> evaluate_split(const std::vector<NumaId>& nodes, const std::vector<int>& split,
                                                     int servers, int violations) const {
        std::vector<int> per_node(t.numa_count(), 0);
        std::vector<std::pair<NumaId, int>> counts;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            per_node[nodes[i]] = split[i];
            counts.emplace_back(nodes[i], split[i]);
        }
        std::vector<MemoryShare> mem;
        if (opts.fixed_memory) {
            mem = *opts.fixed_memory;
        } else {
            auto alloc = allocate_memory(vm, per_node, m, t);
            if (!alloc) return std::nullopt;
            mem = std::move(*alloc);
        }
        PlacementCandidate c;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            for (int k = 0; k < split[i]; ++k) c.placement.cores.push_back(free_cores[nodes[i]][k]);
        c.placement.memory = std::move(mem);
        c.score = {servers, static_cast<int>(nodes.size()), violations, counts_distance(counts, c.placement.memory, t)};
        return c;
    }

    // Best vCPU split over a fixed node set, every node hosting at least one vCPU.
    std::optional<PlacementCandidate> best_split(const std::vector<NumaId>& nodes, int servers, int violations) const {
        const int v = vm.vcpus;
        const std::size_t k = nodes.size();
        std::vector<int> caps;
        for (auto n : nodes) caps.push_back(std::min(free_of(n), v));

        // count compositions (capped) to decide between exhaustive and greedy
        std::vector<double> ways(v + 1, 0.0);
        ways[0] = 1;
        for (std::size_t i = 0; i < k; ++i) {
            std::vector<double> next(v + 1, 0.0);
            for (int s = 0; s <= v; ++s)
                if (ways[s] > 0)
                    for (int c = 1; c <= caps[i] && s + c <= v; ++c) next[s + c] += ways[s];
            ways = std::move(next);
        }
        if (ways[v] == 0) return std::nullopt;

        std::optional<PlacementCandidate> best;
        auto consider = [&](const std::vector<int>& split) {
            auto c = evaluate_split(nodes, split, servers, violations);
            if (c && (!best || c->score < best->score)) best = std::move(c);
        };

        if (ways[v] <= 4000) {
            std::vector<int> split(k, 0);
            std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
                if (i == k) {
                    if (left == 0) consider(split);
                    return;
                }
                const int rest_max = [&] {
                    int s = 0;
                    for (std::size_t j = i + 1; j < k; ++j) s += caps[j];
                    return s;
                }();
                const int lo = std::max(1, left - rest_max);
                const int hi = std::min(caps[i], left - static_cast<int>(k - i - 1));
                for (int c = hi; c >= lo; --c) {
                    split[i] = c;
                    rec(i + 1, left - c);
                }
            };
            rec(0, v);
            return best;
        }

        // greedy: one vCPU each, then the rest to the node most central to the current split
        std::vector<int> split(k, 1);
        for (int left = v - static_cast<int>(k); left > 0; --left) {
            std::size_t pick = k;
            double pick_cost = std::numeric_limits<double>::max();
            for (std::size_t i = 0; i < k; ++i) {
                if (split[i] >= caps[i]) continue;
                double cost = 0;
                for (std::size_t j = 0; j < k; ++j) cost += split[j] * t.distances()(nodes[i], nodes[j]);
                if (cost < pick_cost - 1e-9) {
                    pick_cost = cost;
                    pick = i;
                }
            }
            if (pick == k) return std::nullopt;
            ++split[pick];
        }
        consider(split);
        return best;
    }

    std::optional<PlacementCandidate> best_in_nodes(const std::vector<NumaId>& nodes) const {
        std::vector<int> caps;
        for (auto n : nodes) caps.push_back(free_of(n));
        const int k_min = min_bins(caps, vm.vcpus);
        if (k_min < 0) return std::nullopt;
        const auto k_max = std::min<std::size_t>(nodes.size(), static_cast<std::size_t>(vm.vcpus));
        for (auto k = static_cast<std::size_t>(k_min); k <= k_max; ++k) {
            std::optional<PlacementCandidate> best;
            auto consider = [&](const std::vector<NumaId>& subset) {
                int cap = 0;
                for (auto n : subset) cap += free_of(n);
                if (cap < vm.vcpus) return;
                const int servers = servers_of(subset);
                const int viol = violations_of(subset);
                if (best && (servers > best->score.servers ||
                             (servers == best->score.servers && viol > best->score.violations)))
                    return;
                auto c = best_split(subset, servers, viol);
                if (c && (!best || c->score < best->score)) best = std::move(c);
            };
            if (binomial(nodes.size(), k) <= static_cast<double>(opts.subset_budget)) {
                for_each_combination(nodes.size(), k, [&](const std::vector<std::size_t>& idx) {
                    std::vector<NumaId> subset;
                    for (auto i : idx) subset.push_back(nodes[i]);
                    consider(subset);
                });
            } else {
                for (auto seed : nodes) {
                    std::vector<NumaId> subset{seed};
                    while (subset.size() < k) {
                        std::optional<NumaId> pick;
                        auto key = [&](NumaId n) {
                            auto trial = subset;
                            trial.push_back(n);
                            return std::tuple(violations_of(trial), t.distances()(seed, n), -free_of(n), n);
                        };
                        for (auto n : nodes) {
                            if (std::find(subset.begin(), subset.end(), n) != subset.end()) continue;
                            if (!pick || key(n) < key(*pick)) pick = n;
                        }
                        subset.push_back(*pick);
                    }
                    std::sort(subset.begin(), subset.end());
                    consider(subset);
                }
            }
            if (best) return best;
        }
        return std::nullopt;
    }

    std::optional<PlacementCandidate> run() const {
        std::vector<ServerId> servers;
        int total_free = 0;
        for (const auto& s : t.servers()) {
            int f = 0;
            for (auto sk : s.sockets)
                for (auto n : t.socket(sk).numa_nodes)
                    if (usable[n]) f += free_of(n);
            if (f > 0) servers.push_back(s.id);
            total_free += f;
        }
        if (total_free < vm.vcpus) return std::nullopt;

        auto nodes_of = [&](const std::vector<ServerId>& set) {
            std::vector<NumaId> nodes;
            for (auto s : set)
                for (auto sk : t.server(s).sockets)
                    for (auto n : t.socket(sk).numa_nodes)
                        if (usable[n]) nodes.push_back(n);
            std::sort(nodes.begin(), nodes.end());
            return nodes;
        };
        auto free_in = [&](const std::vector<ServerId>& set) {
            int f = 0;
            for (auto n : nodes_of(set)) f += free_of(n);
            return f;
        };

        for (std::size_t s = 1; s <= servers.size(); ++s) {
            std::optional<PlacementCandidate> best;
            auto consider = [&](const std::vector<ServerId>& set) {
                if (free_in(set) < vm.vcpus) return;
                auto c = best_in_nodes(nodes_of(set));
                if (c && (!best || c->score < best->score)) best = std::move(c);
            };
            if (binomial(servers.size(), s) <= 2000.0) {
                for_each_combination(servers.size(), s, [&](const std::vector<std::size_t>& idx) {
                    std::vector<ServerId> set;
                    for (auto i : idx) set.push_back(servers[i]);
                    consider(set);
                });
            } else {
                for (auto seed : servers) {
                    std::vector<ServerId> set{seed};
                    const auto seed_node = t.server(seed).sockets.empty() ? 0 : t.socket(t.server(seed).sockets[0]).numa_nodes[0];
                    std::vector<ServerId> rest;
                    for (auto sv : servers)
                        if (sv != seed) rest.push_back(sv);
                    std::stable_sort(rest.begin(), rest.end(), [&](ServerId a, ServerId b) {
                        const auto na = t.socket(t.server(a).sockets[0]).numa_nodes[0];
                        const auto nb = t.socket(t.server(b).sockets[0]).numa_nodes[0];
                        return t.distances()(seed_node, na) < t.distances()(seed_node, nb);
                    });
                    for (std::size_t i = 0; set.size() < s && i < rest.size(); ++i) set.push_back(rest[i]);
                    std::sort(set.begin(), set.end());
                    consider(set);
                }
            }
            if (best) return best;
        }
        return std::nullopt;
    }
};

} // namespace

std::pair<int, int> ideal_span(const VmSpec& vm, const Topology& t) {
    std::vector<int> server_caps;
    std::vector<int> node_caps;
    for (const auto& s : t.servers()) {
        if (!server_allowed(vm, s.id)) continue;
        int cap = 0;
        for (auto sk : s.sockets)
            for (auto n : t.socket(sk).numa_nodes) {
                const int c = static_cast<int>(t.numa(n).cores.size());
                cap += c;
                node_caps.push_back(c);
            }
        server_caps.push_back(cap);
    }
    return {min_bins(server_caps, vm.vcpus), min_bins(node_caps, vm.vcpus)};
}

std::optional<std::vector<MemoryShare>> allocate_memory(const VmSpec& vm, const std::vector<int>& vcpus_per_node,
                                                        const MappingState& m, const Topology& t) {
    const auto n_nodes = t.numa_count();
    int vcpus = 0;
    for (int c : vcpus_per_node) vcpus += c;
    if (vcpus == 0) return std::nullopt;

    std::vector<Bytes> free_mem(n_nodes);
    std::vector<Bytes> reserve(n_nodes, 0);
    for (const auto& node : t.numa_nodes()) {
        const Bytes used = m.memory_used(node.id);
        free_mem[node.id] = node.usable_memory() > used ? node.usable_memory() - used : 0;
        int idle = 0;
        for (auto c : node.cores)
            if (m.load(c) == 0) ++idle;
        idle = std::max(0, idle - vcpus_per_node[node.id]);
        const Bytes per_core = node.usable_memory() / node.cores.size();
        reserve[node.id] = std::min(free_mem[node.id], per_core * static_cast<Bytes>(idle));
    }

    std::vector<Bytes> take(n_nodes, 0);
    Bytes left = vm.memory;
    auto room = [&](NumaId n, bool keep_reserve) {
        const Bytes cap = keep_reserve ? free_mem[n] - reserve[n] : free_mem[n];
        return cap > take[n] ? cap - take[n] : Bytes{0};
    };
    auto grab = [&](NumaId n, Bytes want, bool keep_reserve) {
        const Bytes got = std::min({want, left, room(n, keep_reserve)});
        take[n] += got;
        left -= got;
    };

    // local shares, remainder to the node hosting the most vCPUs
    NumaId main_node = 0;
    for (NumaId n = 0; n < n_nodes; ++n)
        if (vcpus_per_node[n] > vcpus_per_node[main_node]) main_node = n;
    const Bytes unit = vm.memory / static_cast<Bytes>(vcpus);
    const Bytes remainder = vm.memory - unit * static_cast<Bytes>(vcpus);
    for (NumaId n = 0; n < n_nodes; ++n) {
        if (vcpus_per_node[n] == 0) continue;
        Bytes want = unit * static_cast<Bytes>(vcpus_per_node[n]);
        if (n == main_node) want += remainder;
        grab(n, want, true);
    }

    // spill, nearest to the vCPUs first; hosting nodes keep memory for their idle cores
    std::vector<double> pull(n_nodes, 0);
    for (NumaId n = 0; n < n_nodes; ++n)
        for (NumaId h = 0; h < n_nodes; ++h) pull[n] += vcpus_per_node[h] * t.distances()(h, n);
    std::vector<NumaId> order(n_nodes);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](NumaId a, NumaId b) { return pull[a] < pull[b]; });
    for (auto n : order) grab(n, left, vcpus_per_node[n] > 0);
    for (auto n : order) grab(n, left, false);
    if (left > 0) return std::nullopt;

    std::vector<MemoryShare> out;
    for (NumaId n = 0; n < n_nodes; ++n)
        if (take[n] > 0) out.push_back({n, take[n]});
    return out;
}

std::optional<PlacementCandidate> find_placement(const VmSpec& vm, const MappingState& m, const Topology& t,
                                                 const ClassMatrix& cm, const PlacementOptions& opts) {
    Search s{vm, m, t, cm, opts, {}, {}, {}};
    s.init();
    return s.run();
}

} // namespace numamap
