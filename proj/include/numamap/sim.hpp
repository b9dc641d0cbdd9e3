#pragma once

#include "numamap/mapper.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace numamap {

enum class Algorithm { Vanilla, SmIpc, SmMpi };

// "vanilla", "sm_ipc", "sm_mpi".
std::string_view to_string(Algorithm a);
// Accepts both "sm-ipc" and "sm_ipc" spellings. Throws ValidationError.
Algorithm parse_algorithm(std::string_view name);

struct RunConfig {
    Topology topology;
    Scenario scenario;
    PerfParams params = PerfParams::defaults();
    Algorithm algorithm = Algorithm::SmIpc;
    std::uint64_t seed = 1;
    int epochs = 100;
    int repeats = 1;
    // Leading epochs left out of the per-run means.
    int warmup = 3;
    AlgoConfig algo;
    VanillaParams vanilla;
    ClassMatrix classes = ClassMatrix::defaults();

    void validate() const;
};

// Hash of everything that shapes a run except the seed and repeat count.
std::uint64_t config_hash(const RunConfig& cfg);
// As config_hash, also ignoring the algorithm: runs with equal values are comparable.
std::uint64_t comparison_hash(const RunConfig& cfg);

struct VmSampleRecord {
    PerfEstimate estimate;
    CounterSample sample;
};

struct EpochRecord {
    int epoch = 0;
    std::uint64_t mapping_hash = 0;
    // occupants[core], as in MappingState.
    std::vector<std::vector<VmId>> occupants;
    std::vector<Bytes> memory_used;
    std::map<VmId, VmSampleRecord> vms;
    std::vector<Action> actions;
    std::vector<std::string> log;
    std::optional<BenefitMatrix> benefit;
};

struct RunTrace {
    Algorithm algorithm = Algorithm::SmIpc;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::uint64_t comparison_hash = 0;
    int epochs = 0;
    int warmup = 0;
    nlohmann::json layout;
    // Every VM that arrived, in arrival order.
    std::vector<VmSpec> vms;
    std::vector<VmId> rejected;
    std::vector<EpochRecord> records;
    // Mean p per VM over post-warmup epochs (all epochs if it only lived during warm-up).
    std::map<VmId, double> mean_p;
};

// One run with the given seed. Deterministic.
RunTrace run_once(const RunConfig& cfg, std::uint64_t seed);
inline RunTrace run(const RunConfig& cfg) { return run_once(cfg, cfg.seed); }
// cfg.repeats runs with seeds seed, seed + 1, ..., executed in parallel.
std::vector<RunTrace> run_repeats(const RunConfig& cfg);

// Newline-delimited JSON: a header, one record per epoch, and a summary.
std::string serialize_trace(const RunTrace& trace);
// Parses one or more concatenated traces. Throws ValidationError.
std::vector<RunTrace> parse_traces(std::string_view text);
// FNV-1a over the serialized trace.
std::uint64_t trace_hash(const RunTrace& trace);

struct VmStats {
    VmId vm = 0;
    std::string type;
    AnimalClass cls = AnimalClass::Sheep;
    Algorithm algorithm = Algorithm::SmIpc;
    std::size_t runs = 0;
    double mean_p = 0;
    // Present with two or more runs.
    std::optional<double> stddev_p;
    std::optional<double> variability_ratio;
    std::optional<double> rel_vs_vanilla;
};

struct RunStats {
    Algorithm algorithm = Algorithm::SmIpc;
    std::uint64_t config_hash = 0;
    std::uint64_t comparison_hash = 0;
    std::size_t runs = 0;
    std::vector<VmStats> vms;
    // Over runs of the per-run mean across VMs.
    double mean_p = 0;
    std::optional<double> stddev_p;
    std::optional<double> variability_ratio;
};

// Means and sample standard deviations over repeats. Throws ValidationError when
// the traces do not share a config, or when there are none.
RunStats aggregate(const std::vector<RunTrace>& traces);

struct GroupFactor {
    // "type" or "class"
    std::string kind;
    std::string group;
    Algorithm algorithm = Algorithm::SmIpc;
    // Group mean p relative to the vanilla group mean p.
    double factor = 1.0;
    std::optional<double> variability_ratio;
};

struct Comparison {
    // One per (vm, algorithm), in algorithm order then VM id.
    std::vector<VmStats> rows;
    std::vector<GroupFactor> groups;
};

// Relative performance against the first vanilla entry (when present).
// Throws ValidationError for fewer than two entries or incomparable configs.
Comparison compare(const std::vector<RunStats>& stats);

} // namespace numamap
