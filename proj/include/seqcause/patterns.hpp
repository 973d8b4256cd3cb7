#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqcause/causal_graph.hpp"
#include "seqcause/event_model.hpp"

namespace seqcause {

struct SequentialPattern {
    std::vector<EventType> events;
    double support = 0.0;  // count / number of sequences
    std::size_t count = 0;

    bool operator==(const SequentialPattern&) const = default;
};

/// Order-preserving, not necessarily contiguous containment.
bool contains_subsequence(std::span<const EventType> sequence, std::span<const EventType> pattern);

/// PrefixSpan over projected databases. Returns every pattern of length
/// 1..max_len whose support is >= min_support, sorted by count desc, length
/// desc, then lexicographically by event index.
std::vector<SequentialPattern> mine_patterns(std::span<const std::vector<EventType>> sequences,
                                             double min_support, std::size_t max_len);

/// Sort order used by mine_patterns.
bool pattern_order(const SequentialPattern& a, const SequentialPattern& b);

struct IdentifiedSequence {
    std::string id;
    std::vector<EventType> events;
};

std::vector<std::string> match_sequences(std::span<const EventType> pattern,
                                         std::span<const IdentifiedSequence> sequences);

/// Node subset of a causal graph plus the edges it induces.
struct Subgraph {
    std::vector<EventType> nodes;  // sorted
    std::vector<CausalEdge> edges;

    bool has_node(EventType v) const;
    bool operator==(const Subgraph&) const = default;
};

Subgraph induced_subgraph(const CausalGraph& graph, std::vector<EventType> nodes);

/// The target plus all its ancestors. Throws CatalogError for a target
/// outside the graph.
Subgraph ancestors_subgraph(const CausalGraph& graph, EventType target);

/// True when every pattern event is a subgraph node and every event with a
/// cause inside the subgraph is preceded in the pattern by one of them.
bool explained_by(std::span<const EventType> pattern, const Subgraph& sub);

nlohmann::json pattern_to_json(const SequentialPattern& p, const EventCatalog& catalog);

}  // namespace seqcause
