#include "support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <numeric>
#include <random>
#include <set>

using namespace numamap;
using namespace numamap::testing;

TEST_CASE("reference layout has 288 cores on 36 NUMA nodes") {
    const auto t = reference_topology();
    CHECK(t.core_count() == 288);
    CHECK(t.numa_count() == 36);
    CHECK(t.socket_count() == 18);
    CHECK(t.server_count() == 6);
    CHECK(t.total_memory() == 36 * 32 * kGiB);
    CHECK(t.llc_count() == 36);
}

TEST_CASE("single node without distances is local only") {
    const auto t = load_topology(R"({"servers":[{"sockets":[{"numa_nodes":[{"cores":4,"memory_gb":8}]}]}]})");
    CHECK(t.numa_count() == 1);
    CHECK(t.distances().size() == 1);
    CHECK(t.distance(0, 0) == 10);
}

TEST_CASE("asymmetric explicit matrix is rejected") {
    const char* doc = R"({"servers":[{"sockets":[{"numa_nodes":[{"cores":2,"memory_gb":4},{"cores":2,"memory_gb":4}]}]}],
                          "distances":{"explicit":[[10,16],[22,10]]}})";
    CHECK_THROWS_AS(load_topology(doc), ValidationError);
}

TEST_CASE("malformed documents are rejected") {
    CHECK_THROWS_AS(load_topology("{"), ValidationError);
    CHECK_THROWS_AS(load_topology(R"({"servers":[]})"), ValidationError);
    CHECK_THROWS_AS(load_topology(R"({"servers":[{"sockets":[{"numa_nodes":[]}]}]})"), ValidationError);
    CHECK_THROWS_AS(load_topology(R"({"servers":[{"sockets":[{"numa_nodes":[{"cores":2,"memory_gb":4}]}]}],
                                      "llc_scope":"l2"})"),
                    ValidationError);
    // sub-local off-diagonal entry
    CHECK_THROWS_AS(load_topology(R"({"servers":[{"sockets":[{"numa_nodes":[{"cores":2,"memory_gb":4},{"cores":2,"memory_gb":4}]}]}],
                                      "distances":{"explicit":[[10,5],[5,10]]}})"),
                    ValidationError);
    // duplicate torus coordinates
    CHECK_THROWS_AS(load_topology(R"({"servers":[
        {"torus_coord":[0,0],"sockets":[{"numa_nodes":[{"cores":2,"memory_gb":4}]}]},
        {"torus_coord":[0,0],"sockets":[{"numa_nodes":[{"cores":2,"memory_gb":4}]}]}]})"),
                    ValidationError);
    // missing torus coordinate with several servers
    CHECK_THROWS_AS(load_topology(R"({"servers":[
        {"torus_coord":[0,0],"sockets":[{"numa_nodes":[{"cores":2,"memory_gb":4}]}]},
        {"sockets":[{"numa_nodes":[{"cores":2,"memory_gb":4}]}]}]})"),
                    ValidationError);
}

TEST_CASE("explicit matrix wins over torus values") {
    const char* doc = R"({"servers":[{"sockets":[{"numa_nodes":[{"cores":2,"memory_gb":4},{"cores":2,"memory_gb":4}]}]}],
                          "distances":{"explicit":[[10,30],[30,10]],"torus":{"neighbor_same_socket":16}}})";
    CHECK(load_topology(doc).distance(0, 1) == 30);
}

TEST_CASE("torus distances on the reference layout") {
    const auto t = reference_topology();
    // nodes 0,1 share socket 0; node 2 is socket 1 of server 0
    CHECK(t.distance(0, 0) == 10);
    CHECK(t.distance(0, 1) == 16);
    CHECK(t.distance(0, 2) == 22);
    // server 0 at (0,0), server 1 at (1,0): adjacent; server 4 at (1,1): two hops
    CHECK(t.distance(0, 6) == 160);
    CHECK(t.distance(0, 18) == 160);
    CHECK(t.distance(0, 24) == 200);
    CHECK(t.distance(24, 0) == 200);

    std::set<int> values;
    for (NumaId a = 0; a < t.numa_count(); ++a)
        for (NumaId b = 0; b < t.numa_count(); ++b) values.insert(t.distance(a, b));
    CHECK(values == std::set<int>{10, 16, 22, 160, 200});
    CHECK_THROWS(t.distance(0, 36));
}

TEST_CASE("torus hops wrap around") {
    CHECK(torus_hops({0, 0}, {2, 0}, 3, 2) == 1);
    CHECK(torus_hops({0, 0}, {1, 1}, 3, 2) == 2);
    CHECK(torus_hops({0, 0}, {2, 2}, 4, 4) == 4);
    CHECK(torus_hops({1, 1}, {1, 1}, 3, 2) == 0);
}

TEST_CASE("locate follows the dense id layout") {
    const auto t = reference_topology();
    CHECK(t.locate(0) == CoreLocation{0, 0, 0});
    // 8 cores per node, 2 nodes per socket, 3 sockets per server
    const CoreId core = 47;
    const NumaId numa = core / 8;
    CHECK(t.locate(core) == CoreLocation{numa, numa / 2, numa / 2 / 3});
    CHECK(t.locate(47).numa == 5);
    CHECK(t.locate(47).server == 0);
    CHECK(t.locate(48).server == 1);
    CHECK_THROWS(t.locate(288));
}

TEST_CASE("llc scope can be the socket") {
    const auto t = load_topology(R"({"llc_scope":"socket","servers":[{"sockets":[
        {"numa_nodes":[{"cores":2,"memory_gb":4},{"cores":2,"memory_gb":4}]}]}]})");
    CHECK(t.llc_count() == 1);
    CHECK(t.llc_of(0) == t.llc_of(3));
    CHECK(t.llc_cores(0).size() == 4);
}

TEST_CASE("hardware threads can collapse into cores") {
    const auto t = load_topology(R"({"threads_per_core":2,"schedule_threads":false,
        "servers":[{"sockets":[{"numa_nodes":[{"cores":8,"memory_gb":4}]}]}]})");
    CHECK(t.core_count() == 4);
}

TEST_CASE("free capacity") {
    const auto t = reference_topology();
    MappingState m(t);
    auto cap = free_capacity(t, m);
    for (const auto& n : t.numa_nodes()) {
        CHECK(cap[n.id].free_cores == 8);
        CHECK(cap[n.id].free_memory == n.memory_capacity - n.memory_reserved);
    }

    place(m, make_preset(1, "small", AnimalClass::Sheep), core_range(0, 4), 0);
    cap = free_capacity(t, m);
    CHECK(cap[0].free_cores == 4);
    CHECK(cap[0].free_memory == 16 * kGiB);
    CHECK(cap[1].free_cores == 8);

    MappingState full(t);
    for (VmId i = 0; i < 36; ++i)
        place(full, make_vm(100 + i, 8, 8, AnimalClass::Sheep), core_range(i * 8, 8), i);
    for (const auto& c : free_capacity(t, full)) CHECK(c.free_cores == 0);
}

TEST_CASE("reserved memory is not free") {
    const auto t = load_topology(R"({"servers":[{"sockets":[{"numa_nodes":[{"cores":2,"memory_gb":4,"reserved_gb":1}]}]}]})");
    MappingState m(t);
    CHECK(free_capacity(t, m)[0].free_memory == 3 * kGiB);
    CHECK_THROWS_AS(place(m, make_vm(1, 1, 3.5, AnimalClass::Sheep), {0}, 0), RuntimeError);
}

namespace {

Topology random_topology(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(1, 3);
    const int w = pick(rng);
    const int h = pick(rng);
    TopologySpec spec;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            ServerSpec sv;
            sv.torus_coord = TorusCoord{x, y};
            const int sockets = pick(rng);
            for (int k = 0; k < sockets; ++k) {
                SocketSpec sk;
                const int nodes = pick(rng);
                for (int n = 0; n < nodes; ++n) sk.numa_nodes.push_back({pick(rng), 4.0, 0.0});
                sv.sockets.push_back(sk);
            }
            spec.servers.push_back(sv);
        }
    return Topology::build(spec);
}

} // namespace

TEST_CASE("property: distances symmetric, minimal on the diagonal, hop values only") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const auto t = random_topology(rng);
        for (const auto& a : t.numa_nodes())
            for (const auto& b : t.numa_nodes()) {
                const int d = t.distance(a.id, b.id);
                CHECK(d == t.distance(b.id, a.id));
                CHECK(d >= t.distance(a.id, a.id));
                if (a.server != b.server) CHECK((d == 160 || d == 200));
            }
    }
}

TEST_CASE("property: locate groups cores back into their nodes") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        const auto t = random_topology(rng);
        std::vector<std::vector<CoreId>> grouped(t.numa_count());
        for (CoreId c = 0; c < t.core_count(); ++c) {
            const auto loc = t.locate(c);
            grouped[loc.numa].push_back(c);
            CHECK(t.numa(loc.numa).socket == loc.socket);
            CHECK(t.socket(loc.socket).server == loc.server);
        }
        for (const auto& n : t.numa_nodes()) CHECK(grouped[n.id] == n.cores);
    }
}

TEST_CASE("property: assigned plus free cores equals total") {
    std::mt19937_64 rng(13);
    const auto t = small_topology(2, 2, 2, 4, 64);
    for (int i = 0; i < 100; ++i) {
        MappingState m(t);
        std::vector<CoreId> cores(t.core_count());
        std::iota(cores.begin(), cores.end(), 0);
        std::shuffle(cores.begin(), cores.end(), rng);
        std::size_t next = 0;
        VmId id = 1;
        std::uniform_int_distribution<int> size(1, 5);
        while (true) {
            const int v = size(rng);
            if (next + static_cast<std::size_t>(v) > cores.size()) break;
            std::vector<CoreId> mine(cores.begin() + static_cast<long>(next), cores.begin() + static_cast<long>(next) + v);
            next += static_cast<std::size_t>(v);
            place(m, make_vm(id++, v, 1, AnimalClass::Sheep), mine, t.numa_of(mine.front()));
        }
        int assigned = 0;
        int free_cores = 0;
        for (CoreId c = 0; c < t.core_count(); ++c) assigned += m.load(c) > 0 ? 1 : 0;
        for (const auto& c : free_capacity(t, m)) free_cores += c.free_cores;
        CHECK(assigned + free_cores == static_cast<int>(t.core_count()));
        CHECK(assigned == m.live_vcpus());
    }
}
