#pragma once

#include "numamap/mapping.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <random>
#include <string>

namespace numamap {

using Rng = std::mt19937_64;

// Noise regime of a run: churning (vanilla) or stable (shared-memory mapper).
enum class NoiseRegime { Churn, Stable };

struct PerfParams {
    // contention[aggressor][victim]: factor applied to the victim per distinct co-located aggressor.
    std::array<std::array<double, 3>, 3> contention{};
    // locality_weight[class][sensitive]: slowdown at normalized distance 1.
    std::array<std::array<double, 2>, 3> locality_weight{};
    double locality_exponent = 1.0;
    // Distance at which the locality slowdown saturates.
    int max_distance = 200;
    std::array<double, 3> ipc_base{};
    std::array<double, 3> mpi_base{};
    // Extra misses per unit of lost contention factor.
    double miss_coupling = 0.5;
    // Per-epoch log-normal noise.
    double noise_sigma_churn = 0.30;
    double noise_sigma_stable = 0.02;
    // Per-run slowdown exp(-s|Z|), drawn once per VM and run: scheduler decisions
    // that persist for a whole run. Never speeds a VM up.
    double run_sigma_churn = 1.0;
    double run_sigma_stable = 0.0;

    double penalty(AnimalClass aggressor, AnimalClass victim) const {
        return contention[index_of(aggressor)][index_of(victim)];
    }
    double weight(AnimalClass c, bool sensitive) const {
        return locality_weight[index_of(c)][sensitive ? 1 : 0];
    }
    double noise_sigma(NoiseRegime r) const {
        return r == NoiseRegime::Churn ? noise_sigma_churn : noise_sigma_stable;
    }
    double run_sigma(NoiseRegime r) const {
        return r == NoiseRegime::Churn ? run_sigma_churn : run_sigma_stable;
    }

    static PerfParams defaults();
    // Throws ValidationError.
    void validate() const;
};

PerfParams parse_perf_params(std::string_view text);
PerfParams load_perf_params_file(const std::string& path);
nlohmann::json perf_params_to_json(const PerfParams& p);

struct PerfBreakdown {
    double contention = 1.0;
    double locality = 1.0;
    double overbooking = 1.0;
    double noise = 1.0;
};

struct PerfEstimate {
    VmId vm = 0;
    double p = 1.0;
    PerfBreakdown breakdown;
};

struct CounterSample {
    VmId vm = 0;
    double ipc = 0;
    double mpi = 0;
};

inline constexpr double kMpiEpsilon = 1e-6;

// Throws RuntimeError when the VM is not mapped.
double contention_factor(VmId vm, const MappingState& m, const Topology& t, const PerfParams& params);
double locality_factor(VmId vm, const MappingState& m, const Topology& t, const PerfParams& params);
double overbooking_factor(VmId vm, const MappingState& m);

// vCPU-to-memory mean distance, weighting each vCPU equally and each node by its share of memory.
double mean_memory_distance(const VmPlacement& p, const Topology& t);

// p = contention * locality * overbooking * run_effect * exp(N(0, sigma^2)).
PerfEstimate estimate_perf(VmId vm, const MappingState& m, const Topology& t, const PerfParams& params,
                           double sigma, Rng& rng, double run_effect = 1.0);
PerfEstimate estimate_perf_exact(VmId vm, const MappingState& m, const Topology& t, const PerfParams& params);

CounterSample sample_counters(const PerfEstimate& est, AnimalClass cls, const PerfParams& params);

struct OracleResult {
    MappingState mapping;
    double total_p = 0;
    std::size_t candidates = 0;
};

// Exhaustive search over non-overbooked mappings, treating cores of one NUMA node as
// interchangeable and placing memory local-first. Throws RuntimeError when the
// enumeration would exceed max_candidates.
OracleResult oracle_best_mapping(const std::vector<VmSpec>& vms, const Topology& t,
                                 const PerfParams& params, std::size_t max_candidates = 1'000'000);

} // namespace numamap
