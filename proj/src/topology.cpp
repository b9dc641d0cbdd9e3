#include "numamap/topology.hpp"

#include "numamap/mapping.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace numamap {

DistanceMatrix::DistanceMatrix(std::size_t n, int fill) : n_(n), d_(n * n, fill) {}

int DistanceMatrix::max() const {
    return d_.empty() ? 0 : *std::max_element(d_.begin(), d_.end());
}

void DistanceMatrix::validate() const {
    for (NumaId i = 0; i < n_; ++i) {
        for (NumaId j = 0; j < n_; ++j) {
            if ((*this)(i, j) != (*this)(j, i))
                throw ValidationError("distance matrix is asymmetric at (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ")");
            if ((*this)(i, j) < (*this)(i, i))
                throw ValidationError("distance (" + std::to_string(i) + ", " + std::to_string(j) +
                                      ") is below the local distance");
        }
    }
}

int torus_hops(TorusCoord a, TorusCoord b, int width, int height) {
    const int dx = std::abs(a.x - b.x);
    const int dy = std::abs(a.y - b.y);
    return std::min(dx, width - dx) + std::min(dy, height - dy);
}

DistanceMatrix torus_distances(const std::vector<Server>& servers,
                               const std::vector<NumaNode>& numa_nodes,
                               const TorusDistances& values) {
    int width = 0;
    int height = 0;
    std::set<std::pair<int, int>> seen;
    for (const auto& s : servers) {
        if (!s.torus_coord) {
            if (servers.size() == 1) continue;
            throw ValidationError("server " + std::to_string(s.id) + " has no torus coordinate");
        }
        const auto c = *s.torus_coord;
        if (c.x < 0 || c.y < 0) throw ValidationError("negative torus coordinate");
        if (!seen.emplace(c.x, c.y).second)
            throw ValidationError("duplicate torus coordinate (" + std::to_string(c.x) + ", " +
                                  std::to_string(c.y) + ")");
        width = std::max(width, c.x + 1);
        height = std::max(height, c.y + 1);
    }
    if (servers.size() > 1 && static_cast<std::size_t>(width * height) != servers.size())
        throw ValidationError("torus coordinates do not form a full grid");

    DistanceMatrix d(numa_nodes.size());
    for (const auto& a : numa_nodes) {
        for (const auto& b : numa_nodes) {
            int v = values.local;
            if (a.id == b.id) {
                v = values.local;
            } else if (a.server == b.server) {
                v = a.socket == b.socket ? values.neighbor_same_socket : values.neighbor_cross_socket;
            } else {
                const int hops = torus_hops(*servers[a.server].torus_coord,
                                            *servers[b.server].torus_coord, width, height);
                v = hops <= 1 ? values.one_hop : values.two_hop;
            }
            d.at(a.id, b.id) = v;
        }
    }
    return d;
}

Topology Topology::build(const TopologySpec& spec) {
    if (spec.servers.empty()) throw ValidationError("topology has no servers");
    if (spec.threads_per_core < 1) throw ValidationError("threads_per_core must be >= 1");

    Topology t;
    t.llc_scope_ = spec.llc_scope;
    CoreId next_core = 0;
    for (const auto& sv : spec.servers) {
        Server server;
        server.id = static_cast<ServerId>(t.servers_.size());
        server.torus_coord = sv.torus_coord;
        if (sv.sockets.empty())
            throw ValidationError("server " + std::to_string(server.id) + " has no sockets");
        for (const auto& sk : sv.sockets) {
            Socket socket;
            socket.id = static_cast<SocketId>(t.sockets_.size());
            socket.server = server.id;
            if (sk.numa_nodes.empty())
                throw ValidationError("socket " + std::to_string(socket.id) + " has no NUMA nodes");
            for (const auto& ns : sk.numa_nodes) {
                NumaNode node;
                node.id = static_cast<NumaId>(t.numa_.size());
                node.socket = socket.id;
                node.server = server.id;
                int cores = ns.cores;
                if (!spec.schedule_threads) cores /= spec.threads_per_core;
                if (cores < 1)
                    throw ValidationError("NUMA node " + std::to_string(node.id) + " has no cores");
                if (ns.memory_gb <= 0 || ns.reserved_gb < 0 || ns.reserved_gb > ns.memory_gb)
                    throw ValidationError("NUMA node " + std::to_string(node.id) + " has invalid memory");
                node.memory_capacity = static_cast<Bytes>(std::llround(ns.memory_gb * static_cast<double>(kGiB)));
                node.memory_reserved = static_cast<Bytes>(std::llround(ns.reserved_gb * static_cast<double>(kGiB)));
                for (int c = 0; c < cores; ++c) {
                    node.cores.push_back(next_core++);
                    t.core_loc_.push_back({node.id, socket.id, server.id});
                }
                socket.numa_nodes.push_back(node.id);
                t.numa_.push_back(std::move(node));
            }
            server.sockets.push_back(socket.id);
            t.sockets_.push_back(std::move(socket));
        }
        t.servers_.push_back(std::move(server));
    }

    if (spec.explicit_distances) {
        const auto& rows = *spec.explicit_distances;
        if (rows.size() != t.numa_.size())
            throw ValidationError("explicit distance matrix has " + std::to_string(rows.size()) +
                                  " rows, expected " + std::to_string(t.numa_.size()));
        DistanceMatrix d(rows.size());
        for (NumaId i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.size()) throw ValidationError("explicit distance matrix is not square");
            for (NumaId j = 0; j < rows.size(); ++j) d.at(i, j) = rows[i][j];
        }
        const int local = d(0, 0);
        for (NumaId i = 0; i < rows.size(); ++i)
            if (d(i, i) != local) throw ValidationError("diagonal distances differ");
        t.distance_ = std::move(d);
    } else {
        t.distance_ = torus_distances(t.servers_, t.numa_, spec.torus.value_or(TorusDistances{}));
    }
    t.distance_.validate();

    // LLC groups
    t.core_llc_.resize(t.core_loc_.size());
    t.numa_llc_.resize(t.numa_.size());
    if (t.llc_scope_ == LlcScope::NumaNode) {
        for (const auto& n : t.numa_) {
            t.numa_llc_[n.id] = n.id;
            t.llc_cores_.push_back(n.cores);
        }
    } else {
        for (const auto& s : t.sockets_) {
            std::vector<CoreId> cores;
            for (auto n : s.numa_nodes) {
                t.numa_llc_[n] = s.id;
                cores.insert(cores.end(), t.numa_[n].cores.begin(), t.numa_[n].cores.end());
            }
            t.llc_cores_.push_back(std::move(cores));
        }
    }
    for (LlcId g = 0; g < t.llc_cores_.size(); ++g)
        for (auto c : t.llc_cores_[g]) t.core_llc_[c] = g;
    return t;
}

CoreLocation Topology::locate(CoreId core) const {
    if (core >= core_loc_.size())
        throw ValidationError("unknown core " + std::to_string(core));
    return core_loc_[core];
}

int Topology::distance(NumaId a, NumaId b) const {
    if (a >= numa_.size() || b >= numa_.size())
        throw ValidationError("unknown NUMA node in distance query");
    return distance_(a, b);
}

Bytes Topology::total_memory() const {
    Bytes total = 0;
    for (const auto& n : numa_) total += n.memory_capacity;
    return total;
}

TopologySpec parse_topology_spec(const nlohmann::json& doc) {
    TopologySpec spec;
    try {
        if (!doc.is_object()) throw ValidationError("topology document must be an object");
        const auto scope = doc.value("llc_scope", std::string("numa_node"));
        if (scope == "numa_node") spec.llc_scope = LlcScope::NumaNode;
        else if (scope == "socket") spec.llc_scope = LlcScope::Socket;
        else throw ValidationError("llc_scope must be numa_node or socket");
        spec.threads_per_core = doc.value("threads_per_core", 1);
        spec.schedule_threads = doc.value("schedule_threads", true);

        for (const auto& sv : doc.at("servers")) {
            ServerSpec server;
            if (sv.contains("torus_coord")) {
                const auto xy = sv.at("torus_coord").get<std::vector<int>>();
                if (xy.size() != 2) throw ValidationError("torus_coord must have two entries");
                server.torus_coord = TorusCoord{xy[0], xy[1]};
            }
            for (const auto& sk : sv.at("sockets")) {
                SocketSpec socket;
                for (const auto& nn : sk.at("numa_nodes")) {
                    NumaSpec node;
                    node.cores = nn.at("cores").get<int>();
                    node.memory_gb = nn.at("memory_gb").get<double>();
                    node.reserved_gb = nn.value("reserved_gb", 0.0);
                    socket.numa_nodes.push_back(node);
                }
                server.sockets.push_back(std::move(socket));
            }
            spec.servers.push_back(std::move(server));
        }

        if (doc.contains("distances")) {
            const auto& d = doc.at("distances");
            if (d.contains("explicit"))
                spec.explicit_distances = d.at("explicit").get<std::vector<std::vector<int>>>();
            if (d.contains("torus")) {
                const auto& tj = d.at("torus");
                TorusDistances td;
                td.local = tj.value("local", td.local);
                td.neighbor_same_socket = tj.value("neighbor_same_socket", td.neighbor_same_socket);
                td.neighbor_cross_socket = tj.value("neighbor_cross_socket", td.neighbor_cross_socket);
                td.one_hop = tj.value("one_hop", td.one_hop);
                td.two_hop = tj.value("two_hop", td.two_hop);
                spec.torus = td;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("topology: ") + e.what());
    }
    return spec;
}

Topology load_topology(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("topology: ") + e.what());
    }
    return Topology::build(parse_topology_spec(doc));
}

Topology load_topology_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open topology '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_topology(ss.str());
}

nlohmann::json topology_layout_json(const Topology& t) {
    auto servers = nlohmann::json::array();
    for (const auto& s : t.servers()) {
        nlohmann::json js;
        js["id"] = s.id;
        if (s.torus_coord) js["torus_coord"] = {s.torus_coord->x, s.torus_coord->y};
        auto sockets = nlohmann::json::array();
        for (auto sid : s.sockets) {
            auto nodes = nlohmann::json::array();
            for (auto nid : t.socket(sid).numa_nodes)
                nodes.push_back({{"id", nid}, {"cores", t.numa(nid).cores}});
            sockets.push_back({{"id", sid}, {"numa_nodes", std::move(nodes)}});
        }
        js["sockets"] = std::move(sockets);
        servers.push_back(std::move(js));
    }
    return {{"servers", std::move(servers)}};
}

std::vector<NodeCapacity> free_capacity(const Topology& t, const MappingState& m) {
    std::vector<NodeCapacity> out(t.numa_count());
    for (const auto& n : t.numa_nodes()) {
        auto& cap = out[n.id];
        for (auto c : n.cores)
            if (m.load(c) == 0) ++cap.free_cores;
        const Bytes used = m.memory_used(n.id);
        cap.free_memory = n.usable_memory() > used ? n.usable_memory() - used : 0;
    }
    return out;
}

} // namespace numamap
