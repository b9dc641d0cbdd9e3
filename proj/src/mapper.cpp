#include "numamap/mapper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace numamap {

ClassMatrix ClassMatrix::defaults() {
    using enum AnimalClass;
    ClassMatrix cm;
    cm.set(Sheep, Sheep, true);
    cm.set(Sheep, Rabbit, true);
    cm.set(Sheep, Devil, true);
    cm.set(Rabbit, Sheep, true);
    cm.set(Rabbit, Rabbit, false);
    cm.set(Rabbit, Devil, false);
    cm.set(Devil, Sheep, true);
    cm.set(Devil, Rabbit, false);
    cm.set(Devil, Devil, true);
    return cm;
}

std::string_view to_string(SeparationLevel level) {
    switch (level) {
    case SeparationLevel::Socket: return "socket";
    case SeparationLevel::NumaNode: return "numa_node";
    case SeparationLevel::Server: return "server_node";
    }
    return "?";
}

std::string_view to_string(ActionReason r) {
    switch (r) {
    case ActionReason::Arrival: return "arrival";
    case ActionReason::Reshuffle: return "reshuffle";
    case ActionReason::Remap: return "remap";
    }
    return "?";
}

BenefitMatrix BenefitMatrix::defaults() {
    using enum AnimalClass;
    using enum SeparationLevel;
    BenefitMatrix bm;
    bm.set(Sheep, Socket, 1);
    bm.set(Sheep, NumaNode, 1);
    bm.set(Sheep, Server, 1);
    bm.set(Rabbit, Socket, 4);
    bm.set(Rabbit, NumaNode, 5);
    bm.set(Rabbit, Server, 6);
    bm.set(Devil, Socket, 7);
    bm.set(Devil, NumaNode, 8);
    bm.set(Devil, Server, 9);
    return bm;
}

void BenefitMatrix::set(AnimalClass c, SeparationLevel l, double v) {
    score_[index_of(c)][static_cast<std::size_t>(l)] = std::clamp(v, kMin, kMax);
}

BenefitMatrix update_benefit_matrix(BenefitMatrix bm, AnimalClass cls, SeparationLevel level, double p_before,
                                    double p_after, double learning_rate) {
    if (!(p_before > 0)) return bm;
    const double observed = 10.0 * (p_after - p_before) / p_before;
    const double current = bm.get(cls, level);
    bm.set(cls, level, current + learning_rate * (observed - current));
    return bm;
}

void AlgoConfig::validate() const {
    if (!(threshold > 0 && threshold < 1)) throw ValidationError("threshold T must lie in (0, 1)");
    if (duration < 1) throw ValidationError("duration must be >= 1");
    if (max_reshuffles_per_epoch < 0) throw ValidationError("max_reshuffles_per_epoch must be >= 0");
    if (move_cost < 0) throw ValidationError("move_cost must be >= 0");
    if (!(learning_rate > 0 && learning_rate <= 1)) throw ValidationError("learning_rate must lie in (0, 1]");
}

double measured_perf(const CounterSample& s, AnimalClass cls, Metric metric, const PerfParams& params) {
    if (metric == Metric::Ipc) return s.ipc / params.ipc_base[index_of(cls)];
    const double base = params.mpi_base[index_of(cls)];
    if (base == 0) return 1.0;
    return base / std::max(s.mpi, kMpiEpsilon * base);
}

double relative_deviation(double expected, double measured) { return (expected - measured) / expected; }

AffectedList detect_affected(const std::vector<VmSpec>& vms, const std::map<VmId, double>& measured,
                             const AlgoConfig& cfg) {
    AffectedList out;
    for (const auto& vm : vms) {
        auto it = measured.find(vm.id);
        if (it == measured.end()) {
            out.warnings.push_back("vm " + std::to_string(vm.id) + ": no sample this epoch, skipped");
            continue;
        }
        const double dev = relative_deviation(vm.expected_perf, it->second);
        if (dev >= cfg.threshold) out.entries.push_back({vm.id, dev});
    }
    std::stable_sort(out.entries.begin(), out.entries.end(), [](const auto& a, const auto& b) {
        if (a.deviation != b.deviation) return a.deviation > b.deviation;
        return a.vm < b.vm;
    });
    return out;
}

std::set<VmId> build_neighbor_list(const VmSpec& vm, const std::vector<VmSpec>& live, const ClassMatrix& cm) {
    std::set<VmId> out;
    for (const auto& other : live) {
        if (other.id == vm.id || !cm.compatible(vm.cls, other.cls)) continue;
        if (!vm.allowed_servers.empty() && !other.allowed_servers.empty()) {
            const bool overlap = std::any_of(vm.allowed_servers.begin(), vm.allowed_servers.end(), [&](ServerId s) {
                return std::find(other.allowed_servers.begin(), other.allowed_servers.end(), s) !=
                       other.allowed_servers.end();
            });
            if (!overlap) continue;
        }
        out.insert(other.id);
    }
    return out;
}

MappingState place_arrival(const VmSpec& vm, const MappingState& m, const Topology& t, const ClassMatrix& cm) {
    auto c = find_placement(vm, m, t, cm);
    if (!c) throw CapacityError("no capacity for vm " + std::to_string(vm.id));
    MappingState out = m;
    out.add(vm, std::move(c->placement));
    return out;
}

bool is_good_slot(const VmSpec& vm, const PlacementCandidate& c, const Topology& t) {
    const auto [servers, nodes] = ideal_span(vm, t);
    return c.score.violations == 0 && c.score.servers <= servers && c.score.nodes <= nodes;
}

namespace {

struct Target {
    std::vector<NumaId> nodes;
    std::vector<VmId> displaced;
    int cost = 0;
};

std::vector<bool> block_all_but(const Topology& t, const std::vector<NumaId>& keep) {
    std::vector<bool> blocked(t.numa_count(), true);
    for (auto n : keep) blocked[n] = false;
    return blocked;
}

std::optional<std::vector<VmId>> plan_displacement(const VmSpec& vm, const std::vector<NumaId>& nodes,
                                                   const MappingState& m, const Topology& t, const ClassMatrix& cm) {
    std::set<VmId> displaced;
    for (auto n : nodes)
        for (auto c : t.llc_cores(t.llc_of_numa(n)))
            for (auto occ : m.occupants(c))
                if (!cm.compatible(vm.cls, m.spec(occ).cls)) displaced.insert(occ);

    auto available = [&] {
        int avail = 0;
        for (auto n : nodes)
            for (auto c : t.numa(n).cores) {
                const auto occ = m.occupants(c);
                if (std::all_of(occ.begin(), occ.end(), [&](VmId v) { return displaced.contains(v); })) ++avail;
            }
        return avail;
    };

    if (available() < vm.vcpus) {
        std::vector<VmId> movable;
        for (auto n : nodes)
            for (auto c : t.numa(n).cores)
                for (auto occ : m.occupants(c))
                    if (!displaced.contains(occ) &&
                        std::find(movable.begin(), movable.end(), occ) == movable.end())
                        movable.push_back(occ);
        std::stable_sort(movable.begin(), movable.end(), [&](VmId a, VmId b) {
            if (m.spec(a).vcpus != m.spec(b).vcpus) return m.spec(a).vcpus < m.spec(b).vcpus;
            return a < b;
        });
        for (auto v : movable) {
            if (available() >= vm.vcpus) break;
            displaced.insert(v);
        }
        if (available() < vm.vcpus) return std::nullopt;
    }
    return std::vector<VmId>(displaced.begin(), displaced.end());
}

struct TargetOutcome {
    MappingState state;
    std::vector<Action> moves;
    int violations = 0;
};

std::optional<TargetOutcome> try_target(const VmSpec& vm, const Target& target, const MappingState& m,
                                        const Topology& t, const ClassMatrix& cm, bool strict) {
    TargetOutcome out{m, {}, 0};
    auto order = target.displaced;
    std::stable_sort(order.begin(), order.end(), [&](VmId a, VmId b) { return m.spec(a).vcpus > m.spec(b).vcpus; });

    std::vector<bool> blocked(t.numa_count(), false);
    for (auto n : target.nodes) blocked[n] = true;

    for (auto d : order) {
        const auto spec = out.state.spec(d);
        const auto old = out.state.placement(d);
        out.state.remove(d);
        PlacementOptions opts;
        opts.blocked_nodes = blocked;
        opts.fixed_memory = old.memory;
        auto c = find_placement(spec, out.state, t, cm, opts);
        if (!c || (strict && c->score.violations > 0)) return std::nullopt;
        out.violations += c->score.violations;
        out.moves.push_back({d, old.cores, c->placement.cores, ActionReason::Reshuffle, std::nullopt, false});
        out.state.add(spec, std::move(c->placement));
    }

    PlacementOptions opts;
    opts.blocked_nodes = block_all_but(t, target.nodes);
    auto c = find_placement(vm, out.state, t, cm, opts);
    if (!c) return std::nullopt;
    if (strict && !is_good_slot(vm, *c, t)) return std::nullopt;
    out.violations += c->score.violations;
    out.moves.push_back({vm.id, {}, c->placement.cores, ActionReason::Arrival, std::nullopt, !strict});
    out.state.add(vm, std::move(c->placement));
    return out;
}

std::vector<Target> enumerate_targets(const VmSpec& vm, const MappingState& m, const Topology& t,
                                      const ClassMatrix& cm, int max_moves) {
    const auto [ideal_servers, ideal_nodes] = ideal_span(vm, t);
    std::vector<Target> targets;
    if (ideal_servers < 0) return targets;

    std::vector<ServerId> servers;
    for (const auto& s : t.servers())
        if (vm.allowed_servers.empty() ||
            std::find(vm.allowed_servers.begin(), vm.allowed_servers.end(), s.id) != vm.allowed_servers.end())
            servers.push_back(s.id);

    constexpr std::size_t kBudget = 50000;
    std::size_t visited = 0;

    auto visit_nodes = [&](const std::vector<NumaId>& pool) {
        const auto k = static_cast<std::size_t>(ideal_nodes);
        if (k > pool.size()) return;
        std::vector<std::size_t> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        while (visited < kBudget) {
            ++visited;
            std::vector<NumaId> nodes;
            int cores = 0;
            for (auto i : idx) {
                nodes.push_back(pool[i]);
                cores += static_cast<int>(t.numa(pool[i]).cores.size());
            }
            if (cores >= vm.vcpus) {
                if (auto d = plan_displacement(vm, nodes, m, t, cm);
                    d && !d->empty() && static_cast<int>(d->size()) <= max_moves) {
                    int cost = 0;
                    for (auto v : *d) cost += m.spec(v).vcpus;
                    targets.push_back({nodes, *d, cost});
                }
            }
            std::size_t i = k;
            while (i > 0 && idx[i - 1] == pool.size() - k + i - 1) --i;
            if (i == 0) return;
            ++idx[i - 1];
            for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
    };

    const auto s = static_cast<std::size_t>(ideal_servers);
    std::vector<std::size_t> sidx(s);
    std::iota(sidx.begin(), sidx.end(), 0);
    while (s <= servers.size() && visited < kBudget) {
        std::vector<NumaId> pool;
        for (auto i : sidx)
            for (auto sk : t.server(servers[i]).sockets)
                for (auto n : t.socket(sk).numa_nodes) pool.push_back(n);
        visit_nodes(pool);
        std::size_t i = s;
        while (i > 0 && sidx[i - 1] == servers.size() - s + i - 1) --i;
        if (i == 0) break;
        ++sidx[i - 1];
        for (std::size_t j = i; j < s; ++j) sidx[j] = sidx[j - 1] + 1;
    }

    std::stable_sort(targets.begin(), targets.end(), [](const Target& a, const Target& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        if (a.displaced.size() != b.displaced.size()) return a.displaced.size() < b.displaced.size();
        return a.nodes < b.nodes;
    });
    return targets;
}

} // namespace

ReshuffleResult reshuffle_for_arrival(const VmSpec& vm, const MappingState& m, const Topology& t,
                                      const ClassMatrix& cm, int max_moves) {
    auto direct = find_placement(vm, m, t, cm);
    if (direct && is_good_slot(vm, *direct, t)) {
        ReshuffleResult r{{}, m, false};
        r.moves.push_back({vm.id, {}, direct->placement.cores, ActionReason::Arrival, std::nullopt, false});
        r.state.add(vm, std::move(direct->placement));
        return r;
    }

    const auto targets = max_moves > 0 ? enumerate_targets(vm, m, t, cm, max_moves) : std::vector<Target>{};
    constexpr std::size_t kMaxTries = 64;
    for (std::size_t i = 0; i < targets.size() && i < kMaxTries; ++i) {
        if (auto o = try_target(vm, targets[i], m, t, cm, true))
            return {std::move(o->moves), std::move(o->state), false};
    }

    // No violation-free slot: settle for the fewest total violations.
    const int baseline = direct ? direct->score.violations : std::numeric_limits<int>::max();
    std::optional<TargetOutcome> best;
    for (std::size_t i = 0; i < targets.size() && i < kMaxTries; ++i) {
        auto o = try_target(vm, targets[i], m, t, cm, false);
        if (o && o->violations < baseline && (!best || o->violations < best->violations)) best = std::move(o);
    }
    if (best) return {std::move(best->moves), std::move(best->state), true};
    if (!direct) throw CapacityError("no capacity for vm " + std::to_string(vm.id));

    ReshuffleResult r{{}, m, true};
    r.moves.push_back({vm.id, {}, direct->placement.cores, ActionReason::Arrival, std::nullopt, true});
    r.state.add(vm, std::move(direct->placement));
    return r;
}

ReshuffleResult handle_arrival(const VmSpec& vm, const MappingState& m, const Topology& t, const ClassMatrix& cm,
                               const AlgoConfig& cfg) {
    return reshuffle_for_arrival(vm, m, t, cm, cfg.max_reshuffles_per_epoch);
}

namespace {

int damage_rank(AnimalClass c) {
    switch (c) {
    case AnimalClass::Devil: return 2;
    case AnimalClass::Rabbit: return 1;
    case AnimalClass::Sheep: return 0;
    }
    return 0;
}

std::set<VmId> co_located(VmId vm, const MappingState& m, const Topology& t) {
    std::set<LlcId> groups;
    for (auto c : m.placement(vm).cores) groups.insert(t.llc_of(c));
    std::set<VmId> out;
    for (auto g : groups)
        for (auto c : t.llc_cores(g))
            for (auto occ : m.occupants(c))
                if (occ != vm) out.insert(occ);
    return out;
}

// NUMA nodes in the same unit (at `level`) as any core of `vm`.
std::vector<bool> units_of(VmId vm, SeparationLevel level, const MappingState& m, const Topology& t) {
    std::vector<bool> blocked(t.numa_count(), false);
    for (auto c : m.placement(vm).cores) {
        const auto loc = t.locate(c);
        for (const auto& n : t.numa_nodes()) {
            const bool same = level == SeparationLevel::NumaNode ? n.id == loc.numa
                              : level == SeparationLevel::Socket ? n.socket == loc.socket
                                                                 : n.server == loc.server;
            if (same) blocked[n.id] = true;
        }
    }
    return blocked;
}

// Keeps vCPUs already sitting on a destination core; returns the per-vCPU assignment.
std::vector<CoreId> align_cores(const std::vector<CoreId>& old_cores, const std::vector<CoreId>& dest) {
    std::vector<CoreId> out(old_cores.size(), 0);
    std::vector<bool> used(dest.size(), false);
    std::vector<bool> done(old_cores.size(), false);
    for (std::size_t i = 0; i < old_cores.size(); ++i) {
        auto it = std::find(dest.begin(), dest.end(), old_cores[i]);
        if (it != dest.end() && !used[it - dest.begin()]) {
            used[it - dest.begin()] = true;
            out[i] = old_cores[i];
            done[i] = true;
        }
    }
    std::size_t next = 0;
    for (std::size_t i = 0; i < old_cores.size(); ++i) {
        if (done[i]) continue;
        while (used[next]) ++next;
        out[i] = dest[next];
        used[next] = true;
    }
    return out;
}

int moved_count(const std::vector<CoreId>& a, const std::vector<CoreId>& b) {
    int n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i] ? 1 : 0;
    return n;
}

struct Candidate {
    SeparationLevel level;
    double score;
    int moved;
    std::vector<CoreId> cores;
    std::vector<std::pair<VmId, std::vector<CoreId>>> partners;
};

// Relocate onto free cores outside the blocked nodes, memory fixed.
std::optional<Candidate> free_move(VmId vm, SeparationLevel level, const std::vector<bool>& blocked,
                                   const MappingState& m, const Topology& t, const ClassMatrix& cm) {
    const auto spec = m.spec(vm);
    const auto old = m.placement(vm);
    MappingState without = m;
    without.remove(vm);

    auto attempt = [&](const std::vector<bool>& nodes_blocked) -> std::optional<PlacementCandidate> {
        PlacementOptions opts;
        opts.blocked_nodes = nodes_blocked;
        opts.fixed_memory = old.memory;
        auto c = find_placement(spec, without, t, cm, opts);
        if (!c || c->score.violations > 0) return std::nullopt;
        return c;
    };

    // prefer destinations without other cache-hungry residents
    auto clean = blocked;
    if (spec.cls != AnimalClass::Sheep) {
        for (const auto& n : t.numa_nodes()) {
            for (auto c : t.llc_cores(t.llc_of_numa(n.id)))
                for (auto occ : without.occupants(c))
                    if (without.spec(occ).cls != AnimalClass::Sheep) clean[n.id] = true;
        }
    }
    auto c = attempt(clean);
    if (!c) c = attempt(blocked);
    if (!c) return std::nullopt;

    auto cores = align_cores(old.cores, c->placement.cores);
    return Candidate{level, 0, moved_count(old.cores, cores), std::move(cores), {}};
}

// Exchange the VM's vCPUs with Sheep vCPUs on unblocked nodes; partners take the vacated cores.
std::optional<Candidate> swap_move(VmId vm, SeparationLevel level, const std::vector<bool>& blocked,
                                   const MappingState& m, const Topology& t, const ClassMatrix& cm) {
    const auto& spec = m.spec(vm);
    const auto old = m.placement(vm);
    std::set<NumaId> own_nodes;
    for (auto c : old.cores) own_nodes.insert(t.numa_of(c));

    std::vector<NumaId> nodes;
    for (const auto& n : t.numa_nodes()) {
        if (blocked[n.id] || own_nodes.contains(n.id)) continue;
        if (!spec.allowed_servers.empty() &&
            std::find(spec.allowed_servers.begin(), spec.allowed_servers.end(), n.server) == spec.allowed_servers.end())
            continue;
        nodes.push_back(n.id);
    }
    std::stable_sort(nodes.begin(), nodes.end(), [&](NumaId a, NumaId b) {
        double da = 0;
        double db = 0;
        for (const auto& s : old.memory) {
            da += static_cast<double>(s.bytes) * t.distances()(a, s.numa);
            db += static_cast<double>(s.bytes) * t.distances()(b, s.numa);
        }
        return da < db;
    });

    // partners must tolerate everything left behind in the vacated groups
    MappingState without = m;
    without.remove(vm);
    auto partner_ok = [&](VmId p) {
        const auto& ps = m.spec(p);
        if (ps.cls != AnimalClass::Sheep || !ps.allowed_servers.empty()) return false;
        return count_violations(ps.cls, p, old.cores, without, t, cm) == 0;
    };

    std::vector<CoreId> dest;
    std::vector<std::pair<VmId, std::size_t>> displaced; // (partner, vcpu index)
    for (auto n : nodes) {
        if (static_cast<int>(dest.size()) == spec.vcpus) break;
        bool admissible = true;
        for (auto c : t.llc_cores(t.llc_of_numa(n)))
            for (auto occ : without.occupants(c))
                if (!cm.compatible(spec.cls, m.spec(occ).cls)) admissible = false;
        if (!admissible) continue;
        for (auto c : t.numa(n).cores)
            if (m.load(c) == 0 && static_cast<int>(dest.size()) < spec.vcpus) dest.push_back(c);
        for (auto c : t.numa(n).cores) {
            if (static_cast<int>(dest.size()) == spec.vcpus) break;
            if (m.load(c) != 1) continue;
            const auto p = m.occupants(c)[0];
            if (!partner_ok(p)) continue;
            const auto& pc = m.placement(p).cores;
            const auto idx = static_cast<std::size_t>(std::find(pc.begin(), pc.end(), c) - pc.begin());
            dest.push_back(c);
            displaced.emplace_back(p, idx);
        }
    }
    if (static_cast<int>(dest.size()) < spec.vcpus || displaced.empty()) return std::nullopt;

    // partner vCPUs go to vacated cores in order
    MappingState trial = m;
    std::map<VmId, std::vector<CoreId>> partner_cores;
    for (std::size_t i = 0; i < displaced.size(); ++i) {
        const auto [p, idx] = displaced[i];
        if (!partner_cores.contains(p)) partner_cores[p] = m.placement(p).cores;
        partner_cores[p][idx] = old.cores[i];
    }
    auto cores = align_cores(old.cores, dest);
    // vacate first so every intermediate core stays at load <= 1
    trial.remove(vm);
    for (const auto& [p, pc] : partner_cores) trial.set_cores(p, pc);
    auto moved_spec = spec;
    trial.add(moved_spec, VmPlacement{cores, old.memory});
    if (count_violations(spec.cls, vm, cores, trial, t, cm) > 0) return std::nullopt;
    for (const auto& [p, pc] : partner_cores)
        if (count_violations(m.spec(p).cls, p, pc, trial, t, cm) > 0) return std::nullopt;

    Candidate out{level, 0, moved_count(old.cores, cores) + static_cast<int>(displaced.size()), std::move(cores), {}};
    for (auto& [p, pc] : partner_cores) out.partners.emplace_back(p, std::move(pc));
    return out;
}

} // namespace

std::optional<VmId> worst_interferer(VmId vm, const MappingState& m, const Topology& t) {
    std::optional<VmId> worst;
    for (auto o : co_located(vm, m, t))
        if (!worst || damage_rank(m.spec(o).cls) > damage_rank(m.spec(*worst).cls)) worst = o;
    return worst;
}

RemapResult compute_remap(const AffectedList& affected, const MappingState& m, const Topology& t,
                          const ClassMatrix& cm, const BenefitMatrix& bm, const AlgoConfig& cfg) {
    RemapResult out{{}, {}, m};
    for (const auto& entry : affected.entries) {
        const auto vm = entry.vm;
        if (!out.state.contains(vm)) continue;
        const auto interferer = worst_interferer(vm, out.state, t);
        if (!interferer) {
            out.notes.push_back("vm " + std::to_string(vm) + ": affected without a co-located interferer, left in place");
            continue;
        }
        const auto cls = out.state.spec(vm).cls;

        std::optional<Candidate> best;
        for (auto level : kAllLevels) {
            const auto blocked = units_of(*interferer, level, out.state, t);
            auto c = free_move(vm, level, blocked, out.state, t, cm);
            if (!c) c = swap_move(vm, level, blocked, out.state, t, cm);
            if (!c || c->moved == 0) continue;
            c->score = bm.get(cls, level) - cfg.move_cost * c->moved;
            if (!best || c->score > best->score + 1e-12) best = std::move(c);
        }
        if (!best || best->score <= 0) {
            out.notes.push_back("vm " + std::to_string(vm) + ": no admissible remap");
            continue;
        }

        auto spec = out.state.spec(vm);
        auto memory = out.state.placement(vm).memory;
        out.state.remove(vm);
        for (const auto& [p, pc] : best->partners) out.state.set_cores(p, pc);
        out.state.add(spec, VmPlacement{best->cores, std::move(memory)});
        out.decisions.push_back({vm, best->level, best->score, best->cores, best->partners});
    }
    return out;
}

StepResult step(MapperState& state, const std::map<VmId, CounterSample>& samples, const Topology& t,
                const ClassMatrix& cm, const AlgoConfig& cfg, const PerfParams& params) {
    StepResult result;
    auto& m = state.mapping;

    std::map<VmId, double> measured;
    for (const auto& [id, s] : samples)
        if (m.contains(id)) measured[id] = measured_perf(s, m.spec(id).cls, cfg.metric, params);

    for (const auto& pu : state.pending) {
        auto it = measured.find(pu.vm);
        if (it == measured.end()) continue;
        state.benefit = update_benefit_matrix(state.benefit, pu.cls, pu.level, pu.p_before, it->second,
                                              cfg.learning_rate);
    }
    state.pending.clear();

    std::vector<VmSpec> live;
    for (const auto& [id, e] : m.vms()) live.push_back(e.spec);
    result.affected = detect_affected(live, measured, cfg);
    if (result.affected.empty()) return result;

    auto remap = compute_remap(result.affected, m, t, cm, state.benefit, cfg);
    // `from` must reflect earlier decisions of the same step
    MappingState cur = m;
    for (const auto& d : remap.decisions) {
        for (const auto& [p, pc] : d.partner_moves) {
            result.actions.push_back({p, cur.placement(p).cores, pc, ActionReason::Remap, d.level, false});
            cur.set_cores(p, pc);
        }
        result.actions.push_back({d.vm, cur.placement(d.vm).cores, d.new_cores, ActionReason::Remap, d.level, false});
        cur.set_cores(d.vm, d.new_cores);
        state.pending.push_back({d.vm, m.spec(d.vm).cls, d.level, measured.at(d.vm)});
    }
    result.notes = std::move(remap.notes);
    m = std::move(remap.state);
    return result;
}

} // namespace numamap
