#include "seqcause/causal_graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace seqcause {

namespace {

bool edge_less(const CausalEdge& e, std::pair<EventType, EventType> key) {
    return std::pair{e.src, e.dst} < key;
}

}  // namespace

void CausalGraph::add_edge(EventType src, EventType dst, double strength) {
    if (src == dst) {
        throw std::invalid_argument("self-loop on node " + std::to_string(src));
    }
    if (src >= node_count_ || dst >= node_count_) {
        throw std::invalid_argument("edge endpoint out of range");
    }
    if (!(strength >= 0.0 && strength <= 1.0)) {
        throw std::invalid_argument("edge strength must lie in [0, 1]");
    }
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{src, dst}, edge_less);
    if (it != edges_.end() && it->src == src && it->dst == dst) {
        it->strength = strength;
    } else {
        edges_.insert(it, CausalEdge{src, dst, strength});
    }
}

bool CausalGraph::remove_edge(EventType src, EventType dst) {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{src, dst}, edge_less);
    if (it != edges_.end() && it->src == src && it->dst == dst) {
        edges_.erase(it);
        return true;
    }
    return false;
}

bool CausalGraph::has_edge(EventType src, EventType dst) const {
    return strength(src, dst).has_value();
}

std::optional<double> CausalGraph::strength(EventType src, EventType dst) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{src, dst}, edge_less);
    if (it != edges_.end() && it->src == src && it->dst == dst) {
        return it->strength;
    }
    return std::nullopt;
}

std::vector<EventType> CausalGraph::parents(EventType node) const {
    std::vector<EventType> out;
    for (const auto& e : edges_) {
        if (e.dst == node) {
            out.push_back(e.src);
        }
    }
    return out;
}

std::vector<EventType> CausalGraph::children(EventType node) const {
    std::vector<EventType> out;
    for (const auto& e : edges_) {
        if (e.src == node) {
            out.push_back(e.dst);
        }
    }
    return out;
}

bool CausalGraph::is_acyclic() const {
    std::vector<std::size_t> indegree(node_count_, 0);
    for (const auto& e : edges_) {
        ++indegree[e.dst];
    }
    std::vector<EventType> frontier;
    for (EventType v = 0; v < node_count_; ++v) {
        if (indegree[v] == 0) {
            frontier.push_back(v);
        }
    }
    std::size_t visited = 0;
    while (!frontier.empty()) {
        const auto v = frontier.back();
        frontier.pop_back();
        ++visited;
        for (const auto& e : edges_) {
            if (e.src == v && --indegree[e.dst] == 0) {
                frontier.push_back(e.dst);
            }
        }
    }
    return visited == node_count_;
}

nlohmann::json graph_to_json(const CausalGraph& graph, const EventCatalog& catalog) {
    auto nodes = nlohmann::json::array();
    for (EventType v = 0; v < graph.node_count(); ++v) {
        nodes.push_back({{"id", v}, {"label", v < catalog.size() ? catalog.label(v) : std::to_string(v)}});
    }
    auto edges = nlohmann::json::array();
    for (const auto& e : graph.edges()) {
        edges.push_back({{"src", e.src}, {"dst", e.dst}, {"strength", e.strength}});
    }
    return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

CausalGraph graph_from_json(const nlohmann::json& j) {
    CausalGraph graph(j.at("nodes").size());
    for (const auto& e : j.at("edges")) {
        graph.add_edge(e.at("src").get<EventType>(), e.at("dst").get<EventType>(), e.value("strength", 1.0));
    }
    return graph;
}

}  // namespace seqcause
