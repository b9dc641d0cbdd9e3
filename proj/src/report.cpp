#include "numamap/report.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace numamap {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 6) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << v;
    return out.str();
}

std::string fixed(const std::optional<double>& v, int digits = 6) { return v ? fixed(*v, digits) : ""; }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

const EpochRecord& record_at(const RunTrace& trace, int epoch) {
    for (const auto& r : trace.records)
        if (r.epoch == epoch) return r;
    throw ValidationError("epoch " + std::to_string(epoch) + " is not in the trace (0.." +
                          std::to_string(static_cast<int>(trace.records.size()) - 1) + ")");
}

} // namespace

std::string stats_csv(const std::vector<VmStats>& rows) {
    std::ostringstream out;
    out << "vm_id,vm_type,class,algorithm,mean_p,stddev_p,variability_ratio,rel_vs_vanilla\n";
    for (const auto& r : rows)
        out << r.vm << ',' << r.type << ',' << to_string(r.cls) << ',' << to_string(r.algorithm) << ','
            << fixed(r.mean_p) << ',' << fixed(r.stddev_p) << ',' << fixed(r.variability_ratio) << ','
            << fixed(r.rel_vs_vanilla) << '\n';
    return out.str();
}

std::string stats_table(const std::vector<VmStats>& rows, const std::vector<GroupFactor>& groups) {
    std::ostringstream out;
    out << std::left << std::setw(6) << "vm" << std::setw(8) << "type" << std::setw(8) << "class" << std::setw(9)
        << "algo" << std::right << std::setw(9) << "mean_p" << std::setw(9) << "stddev" << std::setw(9) << "ratio"
        << std::setw(10) << "vs_van" << '\n';
    for (const auto& r : rows) {
        auto cell = [](const std::optional<double>& v, int digits) { return v ? fixed(*v, digits) : "-"; };
        out << std::left << std::setw(6) << r.vm << std::setw(8) << r.type << std::setw(8) << to_string(r.cls)
            << std::setw(9) << to_string(r.algorithm) << std::right << std::setw(9) << fixed(r.mean_p, 4)
            << std::setw(9) << cell(r.stddev_p, 4) << std::setw(9) << cell(r.variability_ratio, 4) << std::setw(10)
            << cell(r.rel_vs_vanilla, 3) << '\n';
    }
    if (!groups.empty()) {
        out << '\n'
            << std::left << std::setw(7) << "by" << std::setw(8) << "group" << std::setw(9) << "algo" << std::right
            << std::setw(10) << "vs_van" << std::setw(9) << "ratio" << '\n';
        for (const auto& g : groups)
            out << std::left << std::setw(7) << g.kind << std::setw(8) << g.group << std::setw(9)
                << to_string(g.algorithm) << std::right << std::setw(10) << fixed(g.factor, 3) << std::setw(9)
                << (g.variability_ratio ? fixed(*g.variability_ratio, 4) : "-") << '\n';
    }
    return out.str();
}

json stats_json(const std::vector<VmStats>& rows, const std::vector<GroupFactor>& groups) {
    auto vms = json::array();
    for (const auto& r : rows)
        vms.push_back({{"vm_id", r.vm},
                       {"vm_type", r.type},
                       {"class", std::string(to_string(r.cls))},
                       {"algorithm", std::string(to_string(r.algorithm))},
                       {"runs", r.runs},
                       {"mean_p", r.mean_p},
                       {"stddev_p", optional_json(r.stddev_p)},
                       {"variability_ratio", optional_json(r.variability_ratio)},
                       {"rel_vs_vanilla", optional_json(r.rel_vs_vanilla)}});
    json out{{"vms", std::move(vms)}};
    if (!groups.empty()) {
        auto gs = json::array();
        for (const auto& g : groups)
            gs.push_back({{"by", g.kind},
                          {"group", g.group},
                          {"algorithm", std::string(to_string(g.algorithm))},
                          {"rel_vs_vanilla", g.factor},
                          {"variability_ratio", optional_json(g.variability_ratio)}});
        out["groups"] = std::move(gs);
    }
    return out;
}

std::string render_snapshot(const json& layout, const std::vector<std::vector<VmId>>& occupants) {
    auto cell = [&](CoreId c) -> std::string {
        if (c >= occupants.size()) throw ValidationError("core " + std::to_string(c) + " missing from snapshot");
        const auto& occ = occupants[c];
        if (occ.empty()) return ".";
        if (occ.size() == 1) return std::to_string(occ.front());
        return "x" + std::to_string(occ.size());
    };
    std::size_t width = 1;
    for (const auto& s : layout.at("servers"))
        for (const auto& k : s.at("sockets"))
            for (const auto& n : k.at("numa_nodes"))
                for (const auto& c : n.at("cores")) width = std::max(width, cell(c.get<CoreId>()).size());

    std::ostringstream out;
    for (const auto& s : layout.at("servers")) {
        out << "server " << s.at("id").get<int>();
        if (s.contains("torus_coord"))
            out << " (" << s.at("torus_coord")[0].get<int>() << ',' << s.at("torus_coord")[1].get<int>() << ')';
        out << '\n';
        for (const auto& k : s.at("sockets")) {
            out << "  socket " << k.at("id").get<int>() << '\n';
            for (const auto& n : k.at("numa_nodes")) {
                out << "    numa " << std::setw(2) << n.at("id").get<int>() << " |";
                for (const auto& c : n.at("cores")) out << ' ' << std::setw(static_cast<int>(width)) << cell(c.get<CoreId>());
                out << " |\n";
            }
        }
    }
    return out.str();
}

std::string render_snapshot(const RunTrace& trace, int epoch) {
    return render_snapshot(trace.layout, record_at(trace, epoch).occupants);
}

json snapshot_json(const RunTrace& trace, int epoch) {
    const auto& rec = record_at(trace, epoch);
    json servers = json::array();
    for (const auto& s : trace.layout.at("servers")) {
        json js{{"id", s.at("id")}};
        auto sockets = json::array();
        for (const auto& k : s.at("sockets")) {
            auto nodes = json::array();
            for (const auto& n : k.at("numa_nodes")) {
                auto cores = json::array();
                for (const auto& c : n.at("cores"))
                    cores.push_back({{"core", c}, {"vms", rec.occupants.at(c.get<CoreId>())}});
                nodes.push_back({{"id", n.at("id")}, {"cores", std::move(cores)}});
            }
            sockets.push_back({{"id", k.at("id")}, {"numa_nodes", std::move(nodes)}});
        }
        js["sockets"] = std::move(sockets);
        servers.push_back(std::move(js));
    }
    return {{"epoch", epoch}, {"mapping_hash", rec.mapping_hash}, {"servers", std::move(servers)}};
}

} // namespace numamap
