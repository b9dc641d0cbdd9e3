#include "numamap/sim.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>
#include <sstream>

namespace numamap {

using nlohmann::json;

std::string_view to_string(Algorithm a) {
    switch (a) {
    case Algorithm::Vanilla: return "vanilla";
    case Algorithm::SmIpc: return "sm_ipc";
    case Algorithm::SmMpi: return "sm_mpi";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view name) {
    std::string s(name);
    std::replace(s.begin(), s.end(), '-', '_');
    if (s == "vanilla") return Algorithm::Vanilla;
    if (s == "sm_ipc") return Algorithm::SmIpc;
    if (s == "sm_mpi") return Algorithm::SmMpi;
    throw ValidationError("unknown algorithm '" + std::string(name) + "'");
}

void RunConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (repeats < 1) throw ValidationError("repeats must be >= 1");
    if (warmup < 0) throw ValidationError("warmup must be >= 0");
    if (vanilla.max_overbook < 1) throw ValidationError("max_overbook must be >= 1");
    if (!(vanilla.migrate_prob >= 0 && vanilla.migrate_prob <= 1))
        throw ValidationError("migrate_prob must lie in [0, 1]");
    params.validate();
    algo.validate();
}

namespace {

json topology_fingerprint(const Topology& t) {
    json doc = topology_layout_json(t);
    auto rows = json::array();
    for (NumaId a = 0; a < t.numa_count(); ++a) {
        auto row = json::array();
        for (NumaId b = 0; b < t.numa_count(); ++b) row.push_back(t.distance(a, b));
        rows.push_back(std::move(row));
    }
    doc["distances"] = std::move(rows);
    auto mem = json::array();
    auto llc = json::array();
    for (const auto& n : t.numa_nodes()) {
        mem.push_back(n.usable_memory());
        llc.push_back(t.llc_of_numa(n.id));
    }
    doc["usable_memory"] = std::move(mem);
    doc["llc"] = std::move(llc);
    return doc;
}

json config_doc(const RunConfig& cfg) {
    json doc;
    doc["topology"] = topology_fingerprint(cfg.topology);
    doc["scenario"] = scenario_to_json(cfg.scenario);
    doc["params"] = perf_params_to_json(cfg.params);
    doc["epochs"] = cfg.epochs;
    doc["warmup"] = cfg.warmup;
    doc["algo"] = {{"threshold", cfg.algo.threshold},
                   {"duration", cfg.algo.duration},
                   {"max_reshuffles", cfg.algo.max_reshuffles_per_epoch},
                   {"move_cost", cfg.algo.move_cost},
                   {"learning_rate", cfg.algo.learning_rate}};
    doc["vanilla"] = {{"migrate_prob", cfg.vanilla.migrate_prob}, {"max_overbook", cfg.vanilla.max_overbook}};
    auto classes = json::array();
    for (auto a : kAllClasses)
        for (auto b : kAllClasses) classes.push_back(cfg.classes.compatible(a, b));
    doc["classes"] = std::move(classes);
    return doc;
}

json vm_to_json(const VmSpec& vm) {
    json j{{"id", vm.id},
           {"type", vm.type},
           {"vcpus", vm.vcpus},
           {"memory", vm.memory},
           {"class", std::string(to_string(vm.cls))},
           {"sensitive", vm.sensitive},
           {"expected_perf", vm.expected_perf}};
    if (!vm.allowed_servers.empty()) j["affinity"] = vm.allowed_servers;
    return j;
}

VmSpec vm_from_json(const json& j) {
    VmSpec vm;
    vm.id = j.at("id").get<VmId>();
    vm.type = j.at("type").get<std::string>();
    vm.vcpus = j.at("vcpus").get<int>();
    vm.memory = j.at("memory").get<Bytes>();
    vm.cls = parse_animal_class(j.at("class").get<std::string>());
    vm.sensitive = j.at("sensitive").get<bool>();
    vm.expected_perf = j.at("expected_perf").get<double>();
    if (j.contains("affinity")) vm.allowed_servers = j.at("affinity").get<std::vector<ServerId>>();
    return vm;
}

json action_to_json(const Action& a) {
    json j{{"vm", a.vm}, {"from", a.from}, {"to", a.to}, {"reason", std::string(to_string(a.reason))}};
    if (a.level) j["level"] = std::string(to_string(*a.level));
    if (a.best_effort) j["best_effort"] = true;
    return j;
}

ActionReason parse_reason(const std::string& s) {
    for (auto r : {ActionReason::Arrival, ActionReason::Reshuffle, ActionReason::Remap})
        if (to_string(r) == s) return r;
    throw ValidationError("unknown action reason '" + s + "'");
}

SeparationLevel parse_level(const std::string& s) {
    for (auto l : kAllLevels)
        if (to_string(l) == s) return l;
    throw ValidationError("unknown separation level '" + s + "'");
}

Action action_from_json(const json& j) {
    Action a;
    a.vm = j.at("vm").get<VmId>();
    a.from = j.at("from").get<std::vector<CoreId>>();
    a.to = j.at("to").get<std::vector<CoreId>>();
    a.reason = parse_reason(j.at("reason").get<std::string>());
    if (j.contains("level")) a.level = parse_level(j.at("level").get<std::string>());
    a.best_effort = j.value("best_effort", false);
    return a;
}

json benefit_to_json(const BenefitMatrix& bm) {
    json j;
    for (auto c : kAllClasses)
        for (auto l : kAllLevels) j[std::string(to_string(c))][std::string(to_string(l))] = bm.get(c, l);
    return j;
}

BenefitMatrix benefit_from_json(const json& j) {
    BenefitMatrix bm;
    for (auto c : kAllClasses)
        for (auto l : kAllLevels)
            bm.set(c, l, j.at(std::string(to_string(c))).at(std::string(to_string(l))).get<double>());
    return bm;
}

Rng derived_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

constexpr std::uint64_t kSchedStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
// Per-VM run effects use streams above this, so they do not depend on arrival order.
constexpr std::uint64_t kVmStreamBase = 1ULL << 32;

} // namespace

std::uint64_t config_hash(const RunConfig& cfg) {
    auto doc = config_doc(cfg);
    doc["algorithm"] = std::string(to_string(cfg.algorithm));
    return fnv1a(doc.dump());
}

std::uint64_t comparison_hash(const RunConfig& cfg) { return fnv1a(config_doc(cfg).dump()); }

RunTrace run_once(const RunConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const auto& t = cfg.topology;
    const bool vanilla = cfg.algorithm == Algorithm::Vanilla;
    const auto regime = vanilla ? NoiseRegime::Churn : NoiseRegime::Stable;
    const double sigma = cfg.params.noise_sigma(regime);
    const double run_sigma = cfg.params.run_sigma(regime);

    AlgoConfig algo = cfg.algo;
    algo.metric = cfg.algorithm == Algorithm::SmMpi ? Metric::Mpi : Metric::Ipc;

    RunTrace trace;
    trace.algorithm = cfg.algorithm;
    trace.seed = seed;
    trace.config_hash = config_hash(cfg);
    trace.comparison_hash = comparison_hash(cfg);
    trace.epochs = cfg.epochs;
    trace.warmup = cfg.warmup;
    trace.layout = topology_layout_json(t);

    Rng sched = derived_rng(seed, kSchedStream);
    Rng noise = derived_rng(seed, kNoiseStream);
    MapperState ms{MappingState(t), BenefitMatrix::defaults(), {}};
    auto& m = ms.mapping;
    std::map<VmId, double> run_effect;
    std::map<VmId, CounterSample> last;
    std::set<VmId> rejected;
    std::map<VmId, std::pair<double, int>> post_sum;
    std::map<VmId, std::pair<double, int>> all_sum;

    std::size_t next_event = 0;
    for (int e = 0; e < cfg.epochs; ++e) {
        EpochRecord rec;
        rec.epoch = e;
        m.epoch = static_cast<std::uint64_t>(e);

        for (; next_event < cfg.scenario.size() && cfg.scenario[next_event].time <= e; ++next_event) {
            const auto& ev = cfg.scenario[next_event];
            const auto id = std::to_string(ev.vm_id);
            if (ev.kind == EventKind::Depart) {
                if (m.contains(ev.vm_id)) {
                    m.remove(ev.vm_id);
                    last.erase(ev.vm_id);
                    rec.log.push_back("vm " + id + " departed");
                } else if (rejected.contains(ev.vm_id)) {
                    rec.log.push_back("vm " + id + ": departure ignored, arrival was rejected");
                }
                continue;
            }
            const auto& vm = *ev.vm;
            try {
                if (vanilla) {
                    m = vanilla_arrival(vm, m, t, sched, cfg.vanilla);
                    rec.actions.push_back({vm.id, {}, m.placement(vm.id).cores, ActionReason::Arrival, {}, false});
                } else {
                    auto r = handle_arrival(vm, m, t, cfg.classes, algo);
                    rec.actions.insert(rec.actions.end(), r.moves.begin(), r.moves.end());
                    if (r.best_effort) rec.log.push_back("vm " + id + ": no violation-free slot, best-effort placement");
                    m = std::move(r.state);
                }
                trace.vms.push_back(vm);
                double effect = 1.0;
                if (run_sigma > 0) {
                    Rng vm_rng = derived_rng(seed, kVmStreamBase + vm.id);
                    effect = std::exp(-run_sigma * std::abs(std::normal_distribution<double>(0.0, 1.0)(vm_rng)));
                }
                run_effect[vm.id] = effect;
            } catch (const CapacityError& err) {
                rejected.insert(vm.id);
                trace.rejected.push_back(vm.id);
                rec.log.push_back("vm " + id + " rejected: " + err.what());
            }
        }

        if (vanilla) {
            m = vanilla_step(m, t, sched, cfg.vanilla);
        } else if (e > 0 && e % algo.duration == 0) {
            auto result = step(ms, last, t, cfg.classes, algo, cfg.params);
            rec.actions.insert(rec.actions.end(), result.actions.begin(), result.actions.end());
            rec.log.insert(rec.log.end(), result.affected.warnings.begin(), result.affected.warnings.end());
            rec.log.insert(rec.log.end(), result.notes.begin(), result.notes.end());
        }

        last.clear();
        for (const auto& [id, entry] : m.vms()) {
            auto est = estimate_perf(id, m, t, cfg.params, sigma, noise, run_effect.at(id));
            auto sample = sample_counters(est, entry.spec.cls, cfg.params);
            last[id] = sample;
            rec.vms[id] = {est, sample};
            auto& all = all_sum[id];
            all.first += est.p;
            ++all.second;
            if (e >= cfg.warmup) {
                auto& post = post_sum[id];
                post.first += est.p;
                ++post.second;
            }
        }

        rec.mapping_hash = m.hash();
        rec.occupants.resize(t.core_count());
        for (CoreId c = 0; c < t.core_count(); ++c) {
            const auto occ = m.occupants(c);
            rec.occupants[c].assign(occ.begin(), occ.end());
        }
        rec.memory_used.resize(t.numa_count());
        for (NumaId n = 0; n < t.numa_count(); ++n) rec.memory_used[n] = m.memory_used(n);
        if (!vanilla) rec.benefit = ms.benefit;
        trace.records.push_back(std::move(rec));
    }

    for (const auto& [id, sum] : all_sum) {
        auto it = post_sum.find(id);
        const auto& use = it != post_sum.end() ? it->second : sum;
        trace.mean_p[id] = use.first / use.second;
    }
    return trace;
}

std::vector<RunTrace> run_repeats(const RunConfig& cfg) {
    cfg.validate();
    std::vector<std::future<RunTrace>> jobs;
    for (int r = 0; r < cfg.repeats; ++r)
        jobs.push_back(std::async(std::launch::async, [&cfg, r] { return run_once(cfg, cfg.seed + static_cast<std::uint64_t>(r)); }));
    std::vector<RunTrace> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

std::string serialize_trace(const RunTrace& trace) {
    std::ostringstream out;
    json header{{"record", "header"},
                {"algorithm", std::string(to_string(trace.algorithm))},
                {"seed", trace.seed},
                {"config_hash", trace.config_hash},
                {"comparison_hash", trace.comparison_hash},
                {"epochs", trace.epochs},
                {"warmup", trace.warmup},
                {"layout", trace.layout}};
    auto vms = json::array();
    for (const auto& vm : trace.vms) vms.push_back(vm_to_json(vm));
    header["vms"] = std::move(vms);
    out << header.dump() << '\n';

    for (const auto& rec : trace.records) {
        json j{{"record", "epoch"},
               {"epoch", rec.epoch},
               {"mapping_hash", rec.mapping_hash},
               {"occupants", rec.occupants},
               {"memory_used", rec.memory_used}};
        auto samples = json::array();
        for (const auto& [id, s] : rec.vms) {
            const auto& b = s.estimate.breakdown;
            samples.push_back({{"id", id},
                               {"p", s.estimate.p},
                               {"contention", b.contention},
                               {"locality", b.locality},
                               {"overbooking", b.overbooking},
                               {"noise", b.noise},
                               {"ipc", s.sample.ipc},
                               {"mpi", s.sample.mpi}});
        }
        j["vms"] = std::move(samples);
        auto actions = json::array();
        for (const auto& a : rec.actions) actions.push_back(action_to_json(a));
        j["actions"] = std::move(actions);
        j["log"] = rec.log;
        if (rec.benefit) j["benefit"] = benefit_to_json(*rec.benefit);
        out << j.dump() << '\n';
    }

    auto means = json::array();
    for (const auto& [id, p] : trace.mean_p) means.push_back({{"id", id}, {"mean_p", p}});
    out << json{{"record", "summary"}, {"mean_p", std::move(means)}, {"rejected", trace.rejected}}.dump() << '\n';
    return out.str();
}

std::vector<RunTrace> parse_traces(std::string_view text) {
    std::vector<RunTrace> out;
    bool open = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    try {
        while (pos < text.size()) {
            auto end = text.find('\n', pos);
            if (end == std::string_view::npos) end = text.size();
            const auto line = text.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
            const auto j = json::parse(line);
            const auto kind = j.at("record").get<std::string>();
            if (kind == "header") {
                if (open) throw ValidationError("trace without summary before line " + std::to_string(line_no));
                RunTrace t;
                t.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
                t.seed = j.at("seed").get<std::uint64_t>();
                t.config_hash = j.at("config_hash").get<std::uint64_t>();
                t.comparison_hash = j.at("comparison_hash").get<std::uint64_t>();
                t.epochs = j.at("epochs").get<int>();
                t.warmup = j.at("warmup").get<int>();
                t.layout = j.at("layout");
                for (const auto& v : j.at("vms")) t.vms.push_back(vm_from_json(v));
                out.push_back(std::move(t));
                open = true;
                continue;
            }
            if (!open) throw ValidationError("record before header at line " + std::to_string(line_no));
            auto& t = out.back();
            if (kind == "epoch") {
                EpochRecord rec;
                rec.epoch = j.at("epoch").get<int>();
                rec.mapping_hash = j.at("mapping_hash").get<std::uint64_t>();
                rec.occupants = j.at("occupants").get<std::vector<std::vector<VmId>>>();
                rec.memory_used = j.at("memory_used").get<std::vector<Bytes>>();
                for (const auto& s : j.at("vms")) {
                    VmSampleRecord r;
                    r.estimate.vm = r.sample.vm = s.at("id").get<VmId>();
                    r.estimate.p = s.at("p").get<double>();
                    r.estimate.breakdown = {s.at("contention").get<double>(), s.at("locality").get<double>(),
                                            s.at("overbooking").get<double>(), s.at("noise").get<double>()};
                    r.sample.ipc = s.at("ipc").get<double>();
                    r.sample.mpi = s.at("mpi").get<double>();
                    rec.vms[r.estimate.vm] = r;
                }
                for (const auto& a : j.at("actions")) rec.actions.push_back(action_from_json(a));
                rec.log = j.at("log").get<std::vector<std::string>>();
                if (j.contains("benefit")) rec.benefit = benefit_from_json(j.at("benefit"));
                t.records.push_back(std::move(rec));
            } else if (kind == "summary") {
                for (const auto& e : j.at("mean_p")) t.mean_p[e.at("id").get<VmId>()] = e.at("mean_p").get<double>();
                t.rejected = j.at("rejected").get<std::vector<VmId>>();
                open = false;
            } else {
                throw ValidationError("unknown record '" + kind + "' at line " + std::to_string(line_no));
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
    if (open) throw ValidationError("trace ends without a summary record");
    return out;
}

std::uint64_t trace_hash(const RunTrace& trace) { return fnv1a(serialize_trace(trace)); }

namespace {

struct MeanStd {
    double mean = 0;
    std::optional<double> stddev;
    std::optional<double> ratio;
};

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd out;
    if (v.empty()) return out;
    double sum = 0;
    for (double x : v) sum += x;
    out.mean = sum / static_cast<double>(v.size());
    if (v.size() >= 2) {
        double sq = 0;
        for (double x : v) sq += (x - out.mean) * (x - out.mean);
        out.stddev = std::sqrt(sq / static_cast<double>(v.size() - 1));
        out.ratio = out.mean > 0 ? *out.stddev / out.mean : 0.0;
    }
    return out;
}

} // namespace

RunStats aggregate(const std::vector<RunTrace>& traces) {
    if (traces.empty()) throw ValidationError("no traces to aggregate");
    RunStats stats;
    stats.algorithm = traces.front().algorithm;
    stats.config_hash = traces.front().config_hash;
    stats.comparison_hash = traces.front().comparison_hash;
    stats.runs = traces.size();
    for (const auto& t : traces)
        if (t.config_hash != stats.config_hash) throw ValidationError("traces do not share a config");

    std::map<VmId, VmSpec> specs;
    std::map<VmId, std::vector<double>> values;
    std::vector<double> run_means;
    for (const auto& t : traces) {
        for (const auto& vm : t.vms) specs.emplace(vm.id, vm);
        double sum = 0;
        for (const auto& [id, p] : t.mean_p) {
            values[id].push_back(p);
            sum += p;
        }
        if (!t.mean_p.empty()) run_means.push_back(sum / static_cast<double>(t.mean_p.size()));
    }
    for (const auto& [id, v] : values) {
        const auto ms = mean_std(v);
        VmStats s;
        s.vm = id;
        s.type = specs.at(id).type;
        s.cls = specs.at(id).cls;
        s.algorithm = stats.algorithm;
        s.runs = v.size();
        s.mean_p = ms.mean;
        s.stddev_p = ms.stddev;
        s.variability_ratio = ms.ratio;
        stats.vms.push_back(std::move(s));
    }
    const auto overall = mean_std(run_means);
    stats.mean_p = overall.mean;
    stats.stddev_p = overall.stddev;
    stats.variability_ratio = overall.ratio;
    return stats;
}

Comparison compare(const std::vector<RunStats>& stats) {
    if (stats.size() < 2) throw ValidationError("compare needs at least two algorithms");
    for (const auto& s : stats)
        if (s.comparison_hash != stats.front().comparison_hash)
            throw ValidationError("runs differ in more than the algorithm");

    const RunStats* baseline = nullptr;
    for (const auto& s : stats)
        if (s.algorithm == Algorithm::Vanilla) {
            baseline = &s;
            break;
        }
    std::map<VmId, double> base_p;
    if (baseline)
        for (const auto& v : baseline->vms) base_p[v.vm] = v.mean_p;

    Comparison out;
    for (const auto& s : stats) {
        std::map<std::pair<std::string, std::string>, std::pair<double, double>> sums;
        std::map<std::pair<std::string, std::string>, std::vector<double>> ratios;
        for (auto v : s.vms) {
            auto it = base_p.find(v.vm);
            if (it != base_p.end() && it->second > 0) {
                v.rel_vs_vanilla = v.mean_p / it->second;
                for (const auto& key : {std::pair{std::string("type"), v.type},
                                        std::pair{std::string("class"), std::string(to_string(v.cls))}}) {
                    sums[key].first += v.mean_p;
                    sums[key].second += it->second;
                    if (v.variability_ratio) ratios[key].push_back(*v.variability_ratio);
                }
            }
            out.rows.push_back(std::move(v));
        }
        for (const auto& [key, sum] : sums) {
            GroupFactor g{key.first, key.second, s.algorithm, sum.first / sum.second, std::nullopt};
            if (auto it = ratios.find(key); it != ratios.end() && !it->second.empty())
                g.variability_ratio = mean_std(it->second).mean;
            out.groups.push_back(std::move(g));
        }
    }
    return out;
}

} // namespace numamap
