#include "numamap/workload.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace numamap {

namespace {

constexpr std::array<VmTypePreset, 4> kPresets{{
    {"small", 4, 16 * kGiB},
    {"medium", 8, 32 * kGiB},
    {"large", 16, 64 * kGiB},
    {"huge", 72, 288 * kGiB},
}};

Bytes gb_to_bytes(double gb) {
    return static_cast<Bytes>(std::llround(gb * static_cast<double>(kGiB)));
}

VmSpec parse_vm(const nlohmann::json& rec, VmId id) {
    VmSpec vm;
    vm.id = id;
    if (!rec.contains("type"))
        throw ValidationError("arrive event for vm " + std::to_string(id) + " has no type");
    const auto& type = rec.at("type");
    if (type.is_string()) {
        const auto& p = preset(type.get<std::string>());
        vm.type = std::string(p.name);
        vm.vcpus = p.vcpus;
        vm.memory = p.memory;
    } else if (type.is_object() && type.contains("custom")) {
        const auto& c = type.at("custom");
        vm.type = "custom";
        vm.vcpus = c.at("vcpus").get<int>();
        vm.memory = gb_to_bytes(c.at("memory_gb").get<double>());
    } else {
        throw ValidationError("vm " + std::to_string(id) + ": type must be a preset name or {custom: {...}}");
    }
    vm.cls = parse_animal_class(rec.value("class", std::string("Sheep")));
    vm.sensitive = rec.value("sensitive", false);
    vm.expected_perf = rec.value("expected_perf", 1.0);
    if (rec.contains("affinity"))
        vm.allowed_servers = rec.at("affinity").get<std::vector<ServerId>>();
    vm.validate();
    return vm;
}

} // namespace

std::string_view to_string(AnimalClass c) {
    switch (c) {
    case AnimalClass::Sheep: return "Sheep";
    case AnimalClass::Rabbit: return "Rabbit";
    case AnimalClass::Devil: return "Devil";
    }
    return "?";
}

AnimalClass parse_animal_class(std::string_view name) {
    for (auto c : kAllClasses)
        if (to_string(c) == name) return c;
    throw ValidationError("unknown animal class '" + std::string(name) + "'");
}

const VmTypePreset& preset(std::string_view name) {
    for (const auto& p : kPresets)
        if (p.name == name) return p;
    throw ValidationError("unknown VM preset '" + std::string(name) + "'");
}

void VmSpec::validate() const {
    if (vcpus < 1) throw ValidationError("vm " + std::to_string(id) + ": vcpus must be >= 1");
    if (memory == 0) throw ValidationError("vm " + std::to_string(id) + ": memory must be > 0");
    if (!(expected_perf > 0))
        throw ValidationError("vm " + std::to_string(id) + ": expected_perf must be > 0");
}

Scenario parse_scenario(std::string_view text) {
    if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); }))
        return {};

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("scenario: ") + e.what());
    }
    const nlohmann::json* records = &doc;
    if (doc.is_object()) {
        if (!doc.contains("events")) return {};
        records = &doc.at("events");
    }
    if (!records->is_array()) throw ValidationError("scenario: events must be a list");

    Scenario events;
    try {
        for (const auto& rec : *records) {
            ScenarioEvent ev;
            ev.time = rec.at("time").get<int>();
            if (ev.time < 0) throw ValidationError("scenario: negative time");
            ev.vm_id = rec.at("id").get<VmId>();
            const auto action = rec.at("action").get<std::string>();
            if (action == "arrive") {
                ev.kind = EventKind::Arrive;
                ev.vm = parse_vm(rec, ev.vm_id);
            } else if (action == "depart") {
                ev.kind = EventKind::Depart;
            } else {
                throw ValidationError("scenario: unknown action '" + action + "'");
            }
            events.push_back(std::move(ev));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("scenario: ") + e.what());
    }

    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });

    std::set<VmId> live;
    std::set<VmId> seen;
    for (const auto& ev : events) {
        if (ev.kind == EventKind::Arrive) {
            if (seen.contains(ev.vm_id))
                throw ValidationError("scenario: vm " + std::to_string(ev.vm_id) + " arrives twice");
            seen.insert(ev.vm_id);
            live.insert(ev.vm_id);
        } else {
            if (!live.contains(ev.vm_id))
                throw ValidationError("scenario: depart of unknown vm " + std::to_string(ev.vm_id));
            live.erase(ev.vm_id);
        }
    }
    return events;
}

Scenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

nlohmann::json scenario_to_json(const Scenario& s) {
    auto events = nlohmann::json::array();
    for (const auto& ev : s) {
        nlohmann::json rec;
        rec["time"] = ev.time;
        rec["id"] = ev.vm_id;
        if (ev.kind == EventKind::Depart) {
            rec["action"] = "depart";
        } else {
            const auto& vm = *ev.vm;
            rec["action"] = "arrive";
            if (vm.type == "custom") {
                rec["type"] = {{"custom",
                                {{"vcpus", vm.vcpus},
                                 {"memory_gb", static_cast<double>(vm.memory) / static_cast<double>(kGiB)}}}};
            } else {
                rec["type"] = vm.type;
            }
            rec["class"] = std::string(to_string(vm.cls));
            rec["sensitive"] = vm.sensitive;
            rec["expected_perf"] = vm.expected_perf;
            if (!vm.allowed_servers.empty()) rec["affinity"] = vm.allowed_servers;
        }
        events.push_back(std::move(rec));
    }
    return {{"events", std::move(events)}};
}

std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2); }

int peak_live_vcpus(const Scenario& s) {
    std::map<VmId, int> live;
    int current = 0;
    int peak = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        const int t = s[i].time;
        for (; i < s.size() && s[i].time == t; ++i) {
            const auto& ev = s[i];
            if (ev.kind == EventKind::Arrive) {
                live[ev.vm_id] = ev.vm->vcpus;
                current += ev.vm->vcpus;
            } else if (auto it = live.find(ev.vm_id); it != live.end()) {
                current -= it->second;
                live.erase(it);
            }
        }
        peak = std::max(peak, current);
    }
    return peak;
}

} // namespace numamap
