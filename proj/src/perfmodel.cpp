#include "numamap/perfmodel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace numamap {

namespace {

std::string pair_key(AnimalClass aggressor, AnimalClass victim) {
    return std::string(to_string(aggressor)) + "->" + std::string(to_string(victim));
}

std::string weight_key(AnimalClass c, bool sensitive) {
    return std::string(to_string(c)) + (sensitive ? "/sensitive" : "/insensitive");
}

void require_mapped(VmId vm, const MappingState& m) {
    if (!m.contains(vm)) throw RuntimeError("vm " + std::to_string(vm) + " is not mapped");
}

} // namespace

PerfParams PerfParams::defaults() {
    using enum AnimalClass;
    PerfParams p;
    auto set = [&p](AnimalClass a, AnimalClass v, double f) { p.contention[index_of(a)][index_of(v)] = f; };
    set(Sheep, Sheep, 0.995);
    set(Sheep, Rabbit, 0.97);
    set(Sheep, Devil, 0.97);
    set(Rabbit, Sheep, 0.995);
    set(Rabbit, Rabbit, 0.80);
    set(Rabbit, Devil, 0.95);
    set(Devil, Sheep, 0.995);
    set(Devil, Rabbit, 0.55);
    set(Devil, Devil, 0.75);

    p.locality_weight[index_of(Sheep)] = {0.02, 0.12};
    p.locality_weight[index_of(Rabbit)] = {0.04, 0.17};
    p.locality_weight[index_of(Devil)] = {0.03, 0.10};

    p.ipc_base = {1.2, 1.6, 0.6};
    p.mpi_base = {0.002, 0.004, 0.03};
    return p;
}

void PerfParams::validate() const {
    for (const auto& row : contention)
        for (double f : row)
            if (!(f > 0 && f <= 1)) throw ValidationError("contention factors must lie in (0, 1]");
    for (const auto& row : locality_weight)
        for (double w : row)
            if (!(w >= 0 && w < 1)) throw ValidationError("locality weights must lie in [0, 1)");
    for (double v : ipc_base)
        if (!(v > 0)) throw ValidationError("ipc_base must be > 0");
    for (double v : mpi_base)
        if (!(v >= 0)) throw ValidationError("mpi_base must be >= 0");
    if (!(locality_exponent > 0)) throw ValidationError("locality_exponent must be > 0");
    if (max_distance <= 0) throw ValidationError("max_distance must be > 0");
    if (miss_coupling < 0) throw ValidationError("miss_coupling must be >= 0");
    if (noise_sigma_churn < 0 || noise_sigma_stable < 0 || run_sigma_churn < 0 || run_sigma_stable < 0)
        throw ValidationError("noise sigmas must be >= 0");
}

PerfParams parse_perf_params(std::string_view text) {
    PerfParams p = PerfParams::defaults();
    try {
        const auto doc = nlohmann::json::parse(text);
        if (!doc.is_object()) throw ValidationError("perf params must be an object");
        if (doc.contains("contention")) {
            const auto& c = doc.at("contention");
            for (auto a : kAllClasses)
                for (auto v : kAllClasses)
                    if (c.contains(pair_key(a, v)))
                        p.contention[index_of(a)][index_of(v)] = c.at(pair_key(a, v)).get<double>();
            for (const auto& [key, _] : c.items()) {
                bool known = false;
                for (auto a : kAllClasses)
                    for (auto v : kAllClasses) known = known || key == pair_key(a, v);
                if (!known) throw ValidationError("unknown contention key '" + key + "'");
            }
        }
        if (doc.contains("locality_weight")) {
            const auto& w = doc.at("locality_weight");
            for (auto c : kAllClasses)
                for (bool s : {false, true})
                    if (w.contains(weight_key(c, s)))
                        p.locality_weight[index_of(c)][s ? 1 : 0] = w.at(weight_key(c, s)).get<double>();
        }
        auto per_class = [&doc](const char* key, std::array<double, 3>& out) {
            if (!doc.contains(key)) return;
            for (auto c : kAllClasses) {
                const auto name = std::string(to_string(c));
                if (doc.at(key).contains(name)) out[index_of(c)] = doc.at(key).at(name).get<double>();
            }
        };
        per_class("ipc_base", p.ipc_base);
        per_class("mpi_base", p.mpi_base);
        p.locality_exponent = doc.value("locality_exponent", p.locality_exponent);
        p.max_distance = doc.value("max_distance", p.max_distance);
        p.miss_coupling = doc.value("miss_coupling", p.miss_coupling);
        auto regime_pair = [&doc](const char* key, double& churn, double& stable) {
            if (!doc.contains(key)) return;
            const auto& v = doc.at(key);
            if (v.is_number()) {
                churn = stable = v.get<double>();
            } else {
                churn = v.value("churn", churn);
                stable = v.value("stable", stable);
            }
        };
        regime_pair("noise_sigma", p.noise_sigma_churn, p.noise_sigma_stable);
        regime_pair("run_sigma", p.run_sigma_churn, p.run_sigma_stable);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("perf params: ") + e.what());
    }
    p.validate();
    return p;
}

PerfParams load_perf_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open perf params '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_perf_params(ss.str());
}

nlohmann::json perf_params_to_json(const PerfParams& p) {
    nlohmann::json doc;
    for (auto a : kAllClasses)
        for (auto v : kAllClasses) doc["contention"][pair_key(a, v)] = p.penalty(a, v);
    for (auto c : kAllClasses)
        for (bool s : {false, true}) doc["locality_weight"][weight_key(c, s)] = p.weight(c, s);
    for (auto c : kAllClasses) {
        doc["ipc_base"][std::string(to_string(c))] = p.ipc_base[index_of(c)];
        doc["mpi_base"][std::string(to_string(c))] = p.mpi_base[index_of(c)];
    }
    doc["locality_exponent"] = p.locality_exponent;
    doc["max_distance"] = p.max_distance;
    doc["miss_coupling"] = p.miss_coupling;
    doc["noise_sigma"] = {{"churn", p.noise_sigma_churn}, {"stable", p.noise_sigma_stable}};
    doc["run_sigma"] = {{"churn", p.run_sigma_churn}, {"stable", p.run_sigma_stable}};
    return doc;
}

double contention_factor(VmId vm, const MappingState& m, const Topology& t, const PerfParams& params) {
    require_mapped(vm, m);
    const auto victim = m.spec(vm).cls;
    std::set<LlcId> groups;
    for (auto c : m.placement(vm).cores) groups.insert(t.llc_of(c));
    std::set<VmId> others;
    for (auto g : groups)
        for (auto c : t.llc_cores(g))
            for (auto occ : m.occupants(c))
                if (occ != vm) others.insert(occ);
    double f = 1.0;
    for (auto o : others) f *= params.penalty(m.spec(o).cls, victim);
    return f;
}

double mean_memory_distance(const VmPlacement& p, const Topology& t) {
    Bytes total = 0;
    for (const auto& s : p.memory) total += s.bytes;
    if (p.cores.empty() || total == 0) return t.local_distance();
    double sum = 0;
    for (auto c : p.cores) {
        const auto home = t.numa_of(c);
        for (const auto& s : p.memory)
            sum += static_cast<double>(s.bytes) * t.distances()(home, s.numa);
    }
    return sum / (static_cast<double>(total) * static_cast<double>(p.cores.size()));
}

double locality_factor(VmId vm, const MappingState& m, const Topology& t, const PerfParams& params) {
    require_mapped(vm, m);
    const auto& spec = m.spec(vm);
    const double local = t.local_distance();
    const double span = params.max_distance - local;
    double norm = span > 0 ? (mean_memory_distance(m.placement(vm), t) - local) / span : 0.0;
    norm = std::clamp(norm, 0.0, 1.0);
    return 1.0 - params.weight(spec.cls, spec.sensitive) * std::pow(norm, params.locality_exponent);
}

double overbooking_factor(VmId vm, const MappingState& m) {
    require_mapped(vm, m);
    const auto& cores = m.placement(vm).cores;
    double sum = 0;
    for (auto c : cores) sum += 1.0 / m.load(c);
    return sum / static_cast<double>(cores.size());
}

PerfEstimate estimate_perf(VmId vm, const MappingState& m, const Topology& t, const PerfParams& params,
                           double sigma, Rng& rng, double run_effect) {
    PerfEstimate est;
    est.vm = vm;
    est.breakdown.contention = contention_factor(vm, m, t, params);
    est.breakdown.locality = locality_factor(vm, m, t, params);
    est.breakdown.overbooking = overbooking_factor(vm, m);
    double noise = run_effect;
    if (sigma > 0) {
        std::normal_distribution<double> normal(0.0, sigma);
        noise *= std::exp(normal(rng));
    }
    est.breakdown.noise = noise;
    est.p = est.breakdown.contention * est.breakdown.locality * est.breakdown.overbooking * noise;
    return est;
}

PerfEstimate estimate_perf_exact(VmId vm, const MappingState& m, const Topology& t, const PerfParams& params) {
    Rng unused(0);
    return estimate_perf(vm, m, t, params, 0.0, unused);
}

CounterSample sample_counters(const PerfEstimate& est, AnimalClass cls, const PerfParams& params) {
    CounterSample s;
    s.vm = est.vm;
    s.ipc = params.ipc_base[index_of(cls)] * est.p;
    const double extra = params.miss_coupling * (1.0 - est.breakdown.contention);
    s.mpi = params.mpi_base[index_of(cls)] / std::max(est.p, kMpiEpsilon) * (1.0 + extra);
    return s;
}

} // namespace numamap
