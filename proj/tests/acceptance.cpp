// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace numamap;
using namespace numamap::testing;
using enum AnimalClass;

namespace {

// Tolerances and budgets.
constexpr double kSweepTarget = 0.83;
constexpr double kSweepTolerance = 0.001;
constexpr double kVanillaRatioMin = 0.2;
constexpr double kSmRatioMax = 0.05;
constexpr double kOrderingShare = 0.95;
constexpr double kMetricGap = 0.10;
constexpr double kOracleGap = 0.05;
constexpr int kOracleInstances = 200;
constexpr int kTriggerTriples = 10'000;
constexpr int kBenefitUpdates = 30;
constexpr double kBenefitEta = 0.3;
constexpr double kBenefitTolerance = 0.5;
constexpr int kRepeats = 10;
constexpr int kEpochs = 100;

struct Outcome {
    bool pass = false;
    std::string detail;
};

RunConfig paper_config(Algorithm algo) {
    RunConfig cfg{.topology = reference_topology(), .scenario = paper_mix()};
    cfg.algorithm = algo;
    cfg.epochs = kEpochs;
    return cfg;
}

RunConfig quiet(RunConfig cfg) {
    cfg.params.noise_sigma_churn = 0;
    cfg.params.noise_sigma_stable = 0;
    cfg.params.run_sigma_churn = 0;
    cfg.params.run_sigma_stable = 0;
    return cfg;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Outcome no_overbooking() {
    int bad = 0;
    int epochs = 0;
    for (auto algo : {Algorithm::SmIpc, Algorithm::SmMpi}) {
        const auto trace = run(paper_config(algo));
        for (const auto& r : trace.records) {
            ++epochs;
            for (const auto& occ : r.occupants)
                if (occ.size() > 1) {
                    ++bad;
                    break;
                }
        }
        if (trace.vms.size() != 20 || !trace.rejected.empty()) return {false, "20-VM mix not fully admitted"};
    }
    return {bad == 0, fmt("%.0f of %.0f epochs overbooked", bad, epochs)};
}

Outcome class_compliance() {
    const auto cls = ClassMatrix::defaults();
    int violations = 0;
    for (auto algo : {Algorithm::SmIpc, Algorithm::SmMpi}) {
        const auto trace = run(quiet(paper_config(algo)));
        std::map<VmId, AnimalClass> classes;
        for (const auto& vm : trace.vms) classes[vm.id] = vm.cls;
        const auto& t = reference_topology();
        const auto& last = trace.records.back();
        for (LlcId g = 0; g < t.llc_count(); ++g) {
            std::set<VmId> members;
            for (auto c : t.llc_cores(g)) members.insert(last.occupants[c].begin(), last.occupants[c].end());
            for (auto a : members)
                for (auto b : members)
                    if (a < b && !cls.compatible(classes.at(a), classes.at(b))) ++violations;
        }
    }
    return {violations == 0, fmt("%.0f incompatible LLC pairs on the final epoch", violations)};
}

Outcome distance_sweep() {
    const auto t = reference_topology();
    const auto params = PerfParams::defaults();
    auto vm = make_preset(1, "small", Rabbit, true);
    if (params.weight(Rabbit, true) != 0.17) return {false, "sensitive weight is not 0.17"};
    std::vector<double> ps;
    std::string seen;
    for (int d : {10, 16, 22, 160, 200}) {
        NumaId target = 0;
        while (target < t.numa_count() && t.distance(0, target) != d) ++target;
        if (target == t.numa_count()) return {false, "no node at distance " + std::to_string(d)};
        MappingState m(t);
        place(m, vm, core_range(0, 4), target);
        ps.push_back(estimate_perf_exact(1, m, t, params).p);
        seen += fmt(" %.4f", ps.back());
    }
    bool monotone = true;
    for (std::size_t i = 1; i < ps.size(); ++i) monotone &= ps[i] <= ps[i - 1];
    const bool at_200 = std::abs(ps.back() - kSweepTarget) <= kSweepTolerance;
    return {monotone && at_200, "p over 10/16/22/160/200:" + seen};
}

struct PaperStats {
    RunStats vanilla;
    RunStats ipc;
    RunStats mpi;
};

PaperStats paper_stats() {
    PaperStats s;
    auto cfg = paper_config(Algorithm::Vanilla);
    cfg.repeats = kRepeats;
    s.vanilla = aggregate(run_repeats(cfg));
    cfg.algorithm = Algorithm::SmIpc;
    s.ipc = aggregate(run_repeats(cfg));
    cfg.algorithm = Algorithm::SmMpi;
    s.mpi = aggregate(run_repeats(cfg));
    return s;
}

Outcome variability(const PaperStats& s) {
    double vanilla_min = 1e9;
    double sm_max = 0;
    for (const auto& v : s.vanilla.vms) vanilla_min = std::min(vanilla_min, v.variability_ratio.value_or(0));
    for (const auto* st : {&s.ipc, &s.mpi})
        for (const auto& v : st->vms) sm_max = std::max(sm_max, v.variability_ratio.value_or(1e9));
    const bool ok = s.vanilla.vms.size() == 20 && s.ipc.vms.size() == 20 && s.mpi.vms.size() == 20 &&
                    vanilla_min > kVanillaRatioMin && sm_max < kSmRatioMax;
    return {ok, fmt("min vanilla ratio %.3f (> %.2f), max SM ratio %.4f", vanilla_min, kVanillaRatioMin, sm_max) +
                    fmt(" (< %.2f)", kSmRatioMax)};
}

Outcome ordering(const PaperStats& s) {
    const auto c = compare({s.vanilla, s.ipc, s.mpi});
    std::map<VmId, double> ipc;
    std::map<VmId, double> mpi;
    int ipc_ok = 0;
    int mpi_ok = 0;
    int total = 0;
    for (const auto& r : c.rows) {
        if (r.algorithm == Algorithm::SmIpc) {
            ipc[r.vm] = r.mean_p;
            ipc_ok += r.rel_vs_vanilla.value_or(0) >= 1.0 ? 1 : 0;
            ++total;
        }
        if (r.algorithm == Algorithm::SmMpi) {
            mpi[r.vm] = r.mean_p;
            mpi_ok += r.rel_vs_vanilla.value_or(0) >= 1.0 ? 1 : 0;
        }
    }
    double worst_gap = 0;
    for (const auto& [id, p] : ipc) worst_gap = std::max(worst_gap, std::abs(p - mpi.at(id)) / p);
    const bool ok = total > 0 && ipc_ok >= kOrderingShare * total && mpi_ok >= kOrderingShare * total &&
                    worst_gap <= kMetricGap;
    return {ok, fmt("sm-ipc >= vanilla for %.0f/20, sm-mpi >= vanilla for %.0f/20, ", ipc_ok, mpi_ok) +
                    fmt("max ipc/mpi gap %.2f%%", worst_gap * 100)};
}

Outcome oracle_equivalence() {
    const auto params = PerfParams::defaults();
    const auto cm = ClassMatrix::defaults();
    AlgoConfig cfg;
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> dim(1, 2);
    std::uniform_int_distribution<int> cls(0, 2);
    std::uniform_int_distribution<int> coin(0, 1);
    double worst = 1.0;
    int failures = 0;
    for (int i = 0; i < kOracleInstances; ++i) {
        const int servers = dim(rng);
        const int nodes = dim(rng);
        const int cores = dim(rng);
        const auto t = small_topology(servers, 1, nodes, cores, 2.0 * cores);
        int left = static_cast<int>(t.core_count());
        std::uniform_int_distribution<int> count(1, 3);
        const int n = count(rng);
        std::vector<VmSpec> vms;
        for (int k = 0; k < n && left > 0; ++k) {
            std::uniform_int_distribution<int> size(1, std::min(left, 2));
            const int v = size(rng);
            left -= v;
            vms.push_back(make_vm(static_cast<VmId>(k + 1), v, v, static_cast<AnimalClass>(cls(rng)), coin(rng) == 1));
        }

        MapperState s{MappingState(t), BenefitMatrix::defaults(), {}};
        for (const auto& vm : vms) s.mapping = handle_arrival(vm, s.mapping, t, cm, cfg).state;
        for (int e = 0; e < 3 * static_cast<int>(vms.size()) + 1; ++e) {
            std::map<VmId, CounterSample> samples;
            for (const auto& vm : vms)
                samples[vm.id] = sample_counters(estimate_perf_exact(vm.id, s.mapping, t, params), vm.cls, params);
            if (step(s, samples, t, cm, cfg, params).actions.empty()) break;
        }
        double total = 0;
        for (const auto& vm : vms) total += estimate_perf_exact(vm.id, s.mapping, t, params).p;
        const double best = oracle_best_mapping(vms, t, params).total_p;
        const double ratio = total / best;
        worst = std::min(worst, ratio);
        if (ratio < 1.0 - kOracleGap) ++failures;
    }
    return {failures == 0, fmt("%.0f of %.0f instances within 5%%, worst ratio %.4f", kOracleInstances - failures,
                               kOracleInstances, worst)};
}

Outcome trigger() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> expected(0.05, 2.0);
    std::uniform_real_distribution<double> measured(0.0, 2.2);
    std::uniform_real_distribution<double> threshold(0.001, 0.999);
    int mismatches = 0;
    for (int i = 0; i < kTriggerTriples; ++i) {
        AlgoConfig cfg;
        cfg.threshold = threshold(rng);
        auto vm = make_vm(1, 1, 1, Sheep);
        vm.expected_perf = expected(rng);
        const double p = measured(rng);
        const bool want = (vm.expected_perf - p) / vm.expected_perf >= cfg.threshold;
        const bool got = !detect_affected({vm}, {{1, p}}, cfg).empty();
        mismatches += want != got ? 1 : 0;
    }
    return {mismatches == 0, fmt("%.0f mismatches over %.0f triples", mismatches, kTriggerTriples)};
}

Outcome benefit_learning() {
    // true improvements spanning below, inside and above the 1..10 range
    const std::array<double, 9> improvement{0.0, 0.05, 0.12, 0.3, 0.45, 0.6, 0.8, 1.0, 2.0};
    double worst = 0;
    std::size_t k = 0;
    for (auto c : kAllClasses)
        for (auto l : kAllLevels) {
            const double r = improvement[k++ % improvement.size()];
            auto bm = BenefitMatrix::defaults();
            for (int i = 0; i < kBenefitUpdates; ++i) bm = update_benefit_matrix(bm, c, l, 0.5, 0.5 * (1 + r), kBenefitEta);
            const double target = std::clamp(10 * r, 1.0, 10.0);
            worst = std::max(worst, std::abs(bm.get(c, l) - target));
        }
    return {worst <= kBenefitTolerance, fmt("max distance to target %.5f after 30 updates", worst)};
}

Outcome huge_slicing() {
    const auto t = reference_topology();
    const auto m = place_arrival(make_preset(1, "huge", Sheep), MappingState(t), t, ClassMatrix::defaults());
    std::set<ServerId> servers;
    for (auto c : m.placement(1).cores) servers.insert(t.locate(c).server);
    return {servers.size() == 2, fmt("huge VM spans %.0f servers", static_cast<double>(servers.size()))};
}

Outcome determinism() {
    int mismatches = 0;
    for (auto algo : {Algorithm::Vanilla, Algorithm::SmIpc, Algorithm::SmMpi}) {
        const auto cfg = paper_config(algo);
        const auto a = run_once(cfg, 7);
        const auto b = run_once(cfg, 7);
        const auto replay = parse_traces(serialize_trace(a));
        if (trace_hash(a) != trace_hash(b)) ++mismatches;
        if (replay.size() != 1 || trace_hash(replay[0]) != trace_hash(a)) ++mismatches;
    }
    return {mismatches == 0, fmt("%.0f hash mismatches over 3 algorithms", mismatches)};
}

} // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const char* name, double budget_s, const std::function<Outcome()>& fn) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > budget_s) {
            o.pass = false;
            o.detail += fmt(" [over the %.0f s budget]", budget_s);
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %2d %-20s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
        std::fflush(stdout);
    };

    PaperStats stats;
    report(1, "no-overbooking", 10, no_overbooking);
    report(2, "class-compliance", 10, class_compliance);
    report(3, "distance-sweep", 1, distance_sweep);
    report(4, "variability", 120, [&] {
        stats = paper_stats();
        return variability(stats);
    });
    report(5, "algorithm-ordering", 120, [&] {
        if (stats.vanilla.vms.empty()) stats = paper_stats();
        return ordering(stats);
    });
    report(6, "oracle-equivalence", 60, oracle_equivalence);
    report(7, "trigger", 60, trigger);
    report(8, "benefit-learning", 60, benefit_learning);
    report(9, "huge-slicing", 60, huge_slicing);
    report(10, "determinism", 60, determinism);
    return failed == 0 ? 0 : 1;
}
