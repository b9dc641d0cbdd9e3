#include "support.hpp"

#include <doctest.h>

using namespace numamap;
using namespace numamap::testing;

TEST_CASE("presets") {
    CHECK(preset("small").vcpus == 4);
    CHECK(preset("small").memory == 16 * kGiB);
    CHECK(preset("medium").vcpus == 8);
    CHECK(preset("medium").memory == 32 * kGiB);
    CHECK(preset("large").vcpus == 16);
    CHECK(preset("large").memory == 64 * kGiB);
    CHECK(preset("huge").vcpus == 72);
    CHECK(preset("huge").memory == 288 * kGiB);
    CHECK_THROWS_AS(preset("tiny"), ValidationError);
}

TEST_CASE("animal class names") {
    for (auto c : kAllClasses) CHECK(parse_animal_class(to_string(c)) == c);
    CHECK_THROWS_AS(parse_animal_class("devil"), ValidationError);
    CHECK_THROWS_AS(parse_animal_class("Turtle"), ValidationError);
}

TEST_CASE("vm spec validation") {
    auto vm = make_vm(1, 2, 1, AnimalClass::Sheep);
    CHECK_NOTHROW(vm.validate());
    vm.vcpus = 0;
    CHECK_THROWS_AS(vm.validate(), ValidationError);
    vm = make_vm(1, 2, 1, AnimalClass::Sheep);
    vm.memory = 0;
    CHECK_THROWS_AS(vm.validate(), ValidationError);
    vm = make_vm(1, 2, 1, AnimalClass::Sheep);
    vm.expected_perf = 0;
    CHECK_THROWS_AS(vm.validate(), ValidationError);
}

TEST_CASE("the 20-VM mix totals 256 vCPUs") {
    const auto s = paper_mix();
    CHECK(s.size() == 20);
    int small = 0, medium = 0, large = 0, huge = 0;
    for (const auto& ev : s) {
        CHECK(ev.kind == EventKind::Arrive);
        CHECK(ev.time == 0);
        small += ev.vm->type == "small";
        medium += ev.vm->type == "medium";
        large += ev.vm->type == "large";
        huge += ev.vm->type == "huge";
    }
    CHECK(small == 12);
    CHECK(medium == 4);
    CHECK(large == 2);
    CHECK(huge == 2);
    CHECK(peak_live_vcpus(s) == 12 * 4 + 4 * 8 + 2 * 16 + 2 * 72);
    CHECK(peak_live_vcpus(s) <= 288);
}

TEST_CASE("empty documents") {
    CHECK(parse_scenario("").empty());
    CHECK(parse_scenario("  \n").empty());
    CHECK(parse_scenario("[]").empty());
    CHECK(parse_scenario(R"({"events":[]})").empty());
}

TEST_CASE("scenario errors") {
    CHECK_THROWS_AS(parse_scenario(R"([{"time":0,"action":"depart","id":1}])"), ValidationError);
    CHECK_THROWS_AS(parse_scenario(R"([{"time":1,"action":"arrive","id":1,"type":"small","class":"Sheep"},
                                       {"time":0,"action":"depart","id":1}])"),
                    ValidationError);
    CHECK_THROWS_AS(parse_scenario(R"([{"time":-1,"action":"arrive","id":1,"type":"small","class":"Sheep"}])"),
                    ValidationError);
    CHECK_THROWS_AS(parse_scenario(R"([{"time":0,"action":"arrive","id":1,"type":"tiny","class":"Sheep"}])"),
                    ValidationError);
    CHECK_THROWS_AS(parse_scenario(R"([{"time":0,"action":"arrive","id":1,"type":"small","class":"Sheep"},
                                       {"time":0,"action":"arrive","id":1,"type":"small","class":"Sheep"}])"),
                    ValidationError);
    CHECK_THROWS_AS(parse_scenario(R"([{"time":0,"action":"leave","id":1}])"), ValidationError);
    CHECK_THROWS_AS(parse_scenario("{not json"), ValidationError);
}

TEST_CASE("events are ordered by time, stable within a time") {
    const auto s = parse_scenario(R"([
        {"time":5,"action":"arrive","id":3,"type":"small","class":"Sheep"},
        {"time":0,"action":"arrive","id":1,"type":"small","class":"Devil"},
        {"time":0,"action":"arrive","id":2,"type":{"custom":{"vcpus":3,"memory_gb":6}},"class":"Rabbit","sensitive":true,
         "expected_perf":0.9,"affinity":[1]},
        {"time":7,"action":"depart","id":1}])");
    REQUIRE(s.size() == 4);
    CHECK(s[0].vm_id == 1);
    CHECK(s[1].vm_id == 2);
    CHECK(s[2].vm_id == 3);
    CHECK(s[3].kind == EventKind::Depart);
    const auto& custom = *s[1].vm;
    CHECK(custom.type == "custom");
    CHECK(custom.vcpus == 3);
    CHECK(custom.memory == 6 * kGiB);
    CHECK(custom.sensitive);
    CHECK(custom.expected_perf == doctest::Approx(0.9));
    CHECK(custom.allowed_servers == std::vector<ServerId>{1});
    CHECK(s[0].vm->expected_perf == 1.0);
}

TEST_CASE("serialize then parse round-trips") {
    for (const auto* name : {"paper-mix", "colocation-pairs", "distance-sweep", "solo-sheep", "solo-rabbit", "solo-devil"}) {
        const auto s = parse_scenario_file(data_path(std::string("scenarios/") + name + ".scenario"));
        CHECK(parse_scenario(serialize_scenario(s)) == s);
    }
    const auto custom = parse_scenario(R"([{"time":2,"action":"arrive","id":9,"type":{"custom":{"vcpus":3,"memory_gb":1.5}},
        "class":"Devil","affinity":[0,2]},{"time":4,"action":"depart","id":9}])");
    CHECK(parse_scenario(serialize_scenario(custom)) == custom);
}

TEST_CASE("peak live vCPUs accounts for departures") {
    const auto s = parse_scenario(R"([
        {"time":0,"action":"arrive","id":1,"type":"large","class":"Sheep"},
        {"time":1,"action":"depart","id":1},
        {"time":1,"action":"arrive","id":2,"type":"medium","class":"Sheep"},
        {"time":2,"action":"arrive","id":3,"type":"small","class":"Sheep"}])");
    CHECK(peak_live_vcpus(s) == 16);
}
