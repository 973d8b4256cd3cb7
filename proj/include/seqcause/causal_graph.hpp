#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <json.hpp>

#include "seqcause/event_model.hpp"

namespace seqcause {

struct CausalEdge {
    EventType src = 0;  // cause
    EventType dst = 0;  // effect
    double strength = 0.0;  // |partial correlation|, in [0, 1]

    bool operator==(const CausalEdge&) const = default;
};

/// Directed graph over catalog indices 0..node_count-1. Edges are kept sorted
/// by (src, dst); at most one edge per ordered pair, no self-loops.
class CausalGraph {
public:
    CausalGraph() = default;
    explicit CausalGraph(std::size_t node_count) : node_count_(node_count) {}

    std::size_t node_count() const noexcept { return node_count_; }
    const std::vector<CausalEdge>& edges() const noexcept { return edges_; }

    /// Inserts or replaces the edge src->dst. Throws std::invalid_argument on
    /// self-loops, out-of-range nodes or strengths outside [0, 1].
    void add_edge(EventType src, EventType dst, double strength = 1.0);
    bool remove_edge(EventType src, EventType dst);
    bool has_edge(EventType src, EventType dst) const;
    std::optional<double> strength(EventType src, EventType dst) const;

    std::vector<EventType> parents(EventType node) const;
    std::vector<EventType> children(EventType node) const;

    bool is_acyclic() const;

    bool operator==(const CausalGraph&) const = default;

private:
    std::size_t node_count_ = 0;
    std::vector<CausalEdge> edges_;
};

/// {nodes:[{id,label}], edges:[{src,dst,strength}]}
nlohmann::json graph_to_json(const CausalGraph& graph, const EventCatalog& catalog);
CausalGraph graph_from_json(const nlohmann::json& j);

}  // namespace seqcause
