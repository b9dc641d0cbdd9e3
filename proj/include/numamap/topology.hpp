#pragma once

#include "numamap/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace numamap {

struct TorusCoord {
    int x = 0;
    int y = 0;
    friend bool operator==(const TorusCoord&, const TorusCoord&) = default;
};

struct NumaNode {
    NumaId id = 0;
    SocketId socket = 0;
    ServerId server = 0;
    std::vector<CoreId> cores;
    Bytes memory_capacity = 0;
    // Held back from placement, e.g. for the host.
    Bytes memory_reserved = 0;

    Bytes usable_memory() const { return memory_capacity - memory_reserved; }
};

struct Socket {
    SocketId id = 0;
    ServerId server = 0;
    std::vector<NumaId> numa_nodes;
};

struct Server {
    ServerId id = 0;
    std::optional<TorusCoord> torus_coord;
    std::vector<SocketId> sockets;
};

// Square, symmetric matrix of dimensionless NUMA distances.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n, int fill = 0);

    std::size_t size() const { return n_; }
    int operator()(NumaId a, NumaId b) const { return d_[a * n_ + b]; }
    int& at(NumaId a, NumaId b) { return d_[a * n_ + b]; }
    int max() const;

    // Throws ValidationError on asymmetry or an off-diagonal entry below the diagonal value.
    void validate() const;

    friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<int> d_;
};

struct TorusDistances {
    int local = 10;
    int neighbor_same_socket = 16;
    int neighbor_cross_socket = 22;
    int one_hop = 160;
    int two_hop = 200;
};

// Which cores share a last-level cache.
enum class LlcScope { NumaNode, Socket };

struct CoreLocation {
    NumaId numa = 0;
    SocketId socket = 0;
    ServerId server = 0;
    friend bool operator==(const CoreLocation&, const CoreLocation&) = default;
};

// Builder input. Ids are assigned densely in declaration order.
struct NumaSpec {
    int cores = 0;
    double memory_gb = 0;
    double reserved_gb = 0;
};
struct SocketSpec {
    std::vector<NumaSpec> numa_nodes;
};
struct ServerSpec {
    std::optional<TorusCoord> torus_coord;
    std::vector<SocketSpec> sockets;
};
struct TopologySpec {
    std::vector<ServerSpec> servers;
    LlcScope llc_scope = LlcScope::NumaNode;
    int threads_per_core = 1;
    // When false, hardware threads of one core collapse into one schedulable core.
    bool schedule_threads = true;
    std::optional<TorusDistances> torus;
    std::optional<std::vector<std::vector<int>>> explicit_distances;
};

class Topology {
public:
    // Validates and materializes a layout. Throws ValidationError.
    static Topology build(const TopologySpec& spec);

    std::span<const Server> servers() const { return servers_; }
    std::span<const Socket> sockets() const { return sockets_; }
    std::span<const NumaNode> numa_nodes() const { return numa_; }

    std::size_t core_count() const { return core_loc_.size(); }
    std::size_t numa_count() const { return numa_.size(); }
    std::size_t socket_count() const { return sockets_.size(); }
    std::size_t server_count() const { return servers_.size(); }

    const NumaNode& numa(NumaId id) const { return numa_.at(id); }
    const Socket& socket(SocketId id) const { return sockets_.at(id); }
    const Server& server(ServerId id) const { return servers_.at(id); }

    CoreLocation locate(CoreId core) const;
    NumaId numa_of(CoreId core) const { return core_loc_[core].numa; }
    ServerId server_of_numa(NumaId n) const { return numa_[n].server; }

    int distance(NumaId a, NumaId b) const;
    const DistanceMatrix& distances() const { return distance_; }
    int local_distance() const { return distance_(0, 0); }

    LlcScope llc_scope() const { return llc_scope_; }
    LlcId llc_of(CoreId core) const { return core_llc_[core]; }
    LlcId llc_of_numa(NumaId n) const { return numa_llc_[n]; }
    std::size_t llc_count() const { return llc_cores_.size(); }
    std::span<const CoreId> llc_cores(LlcId g) const { return llc_cores_.at(g); }

    Bytes total_memory() const;

private:
    std::vector<Server> servers_;
    std::vector<Socket> sockets_;
    std::vector<NumaNode> numa_;
    std::vector<CoreLocation> core_loc_;
    DistanceMatrix distance_;
    LlcScope llc_scope_ = LlcScope::NumaNode;
    std::vector<LlcId> core_llc_;
    std::vector<LlcId> numa_llc_;
    std::vector<std::vector<CoreId>> llc_cores_;
};

// Hop-count distances on a 2-D torus of servers; intra-server pairs use socket adjacency.
// Requires every server to carry a coordinate and the coordinates to fill a full grid.
DistanceMatrix torus_distances(const std::vector<Server>& servers,
                               const std::vector<NumaNode>& numa_nodes,
                               const TorusDistances& values);

// Minimal hop count between two grid points on a width x height torus.
int torus_hops(TorusCoord a, TorusCoord b, int width, int height);

TopologySpec parse_topology_spec(const nlohmann::json& doc);
Topology load_topology(std::string_view text);
Topology load_topology_file(const std::string& path);

nlohmann::json topology_layout_json(const Topology& t);

class MappingState;

struct NodeCapacity {
    int free_cores = 0;
    Bytes free_memory = 0;
};

// Free cores are cores with no vCPU; free memory excludes static reservations.
std::vector<NodeCapacity> free_capacity(const Topology& t, const MappingState& m);

} // namespace numamap
