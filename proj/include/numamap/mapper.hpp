#pragma once

#include "numamap/mapping.hpp"
#include "numamap/perfmodel.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace numamap {

// compatible[a][b]: class a may share a last-level cache with class b.
class ClassMatrix {
public:
    static ClassMatrix defaults();

    bool compatible(AnimalClass a, AnimalClass b) const {
        return table_[index_of(a)][index_of(b)] && table_[index_of(b)][index_of(a)];
    }
    void set(AnimalClass a, AnimalClass b, bool ok) { table_[index_of(a)][index_of(b)] = ok; }

private:
    std::array<std::array<bool, 3>, 3> table_{};
};

enum class SeparationLevel : std::uint8_t { Socket = 0, NumaNode = 1, Server = 2 };

inline constexpr std::array<SeparationLevel, 3> kAllLevels{
    SeparationLevel::Socket, SeparationLevel::NumaNode, SeparationLevel::Server};

std::string_view to_string(SeparationLevel level);

// Learned 1..10 scores of how much a class gains from isolation at each level.
class BenefitMatrix {
public:
    static constexpr double kMin = 1.0;
    static constexpr double kMax = 10.0;

    static BenefitMatrix defaults();

    double get(AnimalClass c, SeparationLevel l) const {
        return score_[index_of(c)][static_cast<std::size_t>(l)];
    }
    void set(AnimalClass c, SeparationLevel l, double v);

    friend bool operator==(const BenefitMatrix&, const BenefitMatrix&) = default;

private:
    std::array<std::array<double, 3>, 3> score_{};
};

// EMA toward 10 x relative improvement, clamped to [1, 10].
BenefitMatrix update_benefit_matrix(BenefitMatrix bm, AnimalClass cls, SeparationLevel level,
                                    double p_before, double p_after, double learning_rate);

enum class Metric { Ipc, Mpi };

struct AlgoConfig {
    double threshold = 0.10;
    int duration = 1;
    Metric metric = Metric::Ipc;
    int max_reshuffles_per_epoch = 2;
    // Score cost per moved vCPU; one benefit point per four vCPUs.
    double move_cost = 0.25;
    double learning_rate = 0.3;

    void validate() const;
};

// Relative performance seen through the configured counter, normalized so solo = 1.
double measured_perf(const CounterSample& s, AnimalClass cls, Metric metric, const PerfParams& params);

struct AffectedEntry {
    VmId vm = 0;
    double deviation = 0;
};

struct AffectedList {
    std::vector<AffectedEntry> entries;
    std::vector<std::string> warnings;
    bool empty() const { return entries.empty(); }
};

double relative_deviation(double expected, double measured);

// VMs with (expected - measured) / expected >= threshold, sorted by descending deviation.
AffectedList detect_affected(const std::vector<VmSpec>& vms, const std::map<VmId, double>& measured,
                             const AlgoConfig& cfg);

// Live VMs compatible with the VM's class whose affinity does not exclude its candidate servers.
std::set<VmId> build_neighbor_list(const VmSpec& vm, const std::vector<VmSpec>& live, const ClassMatrix& cm);

// ---- placement search ----

struct PlacementScore {
    int servers = 0;
    int nodes = 0;
    int violations = 0;
    double distance = 0;

    // Lexicographic; distances within 1e-9 tie.
    friend bool operator<(const PlacementScore& a, const PlacementScore& b);
};

struct PlacementCandidate {
    VmPlacement placement;
    PlacementScore score;
};

struct PlacementOptions {
    // Nodes the search may not use (indexed by NUMA id; empty = none).
    std::vector<bool> blocked_nodes;
    // When set, vCPUs move but memory stays where it is.
    std::optional<std::vector<MemoryShare>> fixed_memory;
    std::size_t subset_budget = 20000;
};

// Number of distinct VMs sharing any LLC group touched by `cores` whose class is incompatible with cls.
int count_violations(AnimalClass cls, VmId self, std::span<const CoreId> cores, const MappingState& m,
                     const Topology& t, const ClassMatrix& cm);

// Smallest possible (servers, nodes) for the VM on an empty machine.
std::pair<int, int> ideal_span(const VmSpec& vm, const Topology& t);

// Lexicographically best placement on free cores: servers spanned, NUMA nodes spanned,
// class violations, memory-weighted mean distance. Ties go to the lowest ids.
std::optional<PlacementCandidate> find_placement(const VmSpec& vm, const MappingState& m, const Topology& t,
                                                 const ClassMatrix& cm, const PlacementOptions& opts = {});

// Local-first allocation for vCPUs spread as per-node counts; nullopt if memory does not fit.
// Memory that would strand the free cores of a node is kept back for later, smaller VMs.
std::optional<std::vector<MemoryShare>> allocate_memory(const VmSpec& vm, const std::vector<int>& vcpus_per_node,
                                                        const MappingState& m, const Topology& t);

// ---- Algorithm stages ----

enum class ActionReason { Arrival, Reshuffle, Remap };
std::string_view to_string(ActionReason r);

struct Action {
    VmId vm = 0;
    std::vector<CoreId> from;
    std::vector<CoreId> to;
    ActionReason reason = ActionReason::Arrival;
    std::optional<SeparationLevel> level;
    bool best_effort = false;
};

// Places the VM without reshuffling. Throws CapacityError when no placement exists.
MappingState place_arrival(const VmSpec& vm, const MappingState& m, const Topology& t, const ClassMatrix& cm);

// True if the placement has no violations and is sliced no more than on an empty machine.
bool is_good_slot(const VmSpec& vm, const PlacementCandidate& c, const Topology& t);

struct ReshuffleResult {
    std::vector<Action> moves;
    MappingState state;
    // No violation-free slot could be opened within the bound.
    bool best_effort = false;
};

// Moves running VMs (vCPUs only, fewest moved vCPUs) to open a good slot, then maps the VM.
// Falls back to the placement with the fewest total violations, flagged best_effort.
ReshuffleResult reshuffle_for_arrival(const VmSpec& vm, const MappingState& m, const Topology& t,
                                      const ClassMatrix& cm, int max_moves);

// Full arrival handling: good slot, else reshuffle. The arrival itself is the last action.
ReshuffleResult handle_arrival(const VmSpec& vm, const MappingState& m, const Topology& t, const ClassMatrix& cm,
                               const AlgoConfig& cfg);

struct RemapDecision {
    VmId vm = 0;
    SeparationLevel level = SeparationLevel::NumaNode;
    double score = 0;
    std::vector<CoreId> new_cores;
    // Swap partners displaced into the VM's old cores.
    std::vector<std::pair<VmId, std::vector<CoreId>>> partner_moves;
};

struct RemapResult {
    std::vector<RemapDecision> decisions;
    std::vector<std::string> notes;
    MappingState state;
};

// Co-located VM with the most damaging class (Devil > Rabbit > Sheep), lowest id on ties.
std::optional<VmId> worst_interferer(VmId vm, const MappingState& m, const Topology& t);

// Per affected VM in order: best separation candidate by benefit - move_cost * moved vCPUs;
// moves only when that score is positive. Later VMs see earlier moves.
RemapResult compute_remap(const AffectedList& affected, const MappingState& m, const Topology& t,
                          const ClassMatrix& cm, const BenefitMatrix& bm, const AlgoConfig& cfg);

struct PendingBenefitUpdate {
    VmId vm = 0;
    AnimalClass cls = AnimalClass::Sheep;
    SeparationLevel level = SeparationLevel::NumaNode;
    double p_before = 0;
};

struct MapperState {
    MappingState mapping;
    BenefitMatrix benefit = BenefitMatrix::defaults();
    std::vector<PendingBenefitUpdate> pending;
};

struct StepResult {
    AffectedList affected;
    std::vector<Action> actions;
    std::vector<std::string> notes;
};

// One decision interval: settle pending benefit updates, detect, sort, remap, record.
StepResult step(MapperState& state, const std::map<VmId, CounterSample>& samples, const Topology& t,
                const ClassMatrix& cm, const AlgoConfig& cfg, const PerfParams& params);

// ---- vanilla baseline ----

struct VanillaParams {
    double migrate_prob = 0.2;
    int max_overbook = 2;
};

// First-fit from a random starting core; overbooks only when no core is free.
// Memory is first-touch on the arrival nodes.
MappingState vanilla_arrival(const VmSpec& vm, const MappingState& m, const Topology& t, Rng& rng,
                             const VanillaParams& vp);

// Each vCPU migrates with probability migrate_prob to a random core, weighted toward
// less-loaded cores and never beyond max_overbook. Memory never moves.
MappingState vanilla_step(const MappingState& m, const Topology& t, Rng& rng, const VanillaParams& vp);

} // namespace numamap
