#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqcause/causal_graph.hpp"
#include "seqcause/discovery.hpp"
#include "seqcause/event_model.hpp"
#include "seqcause/layout.hpp"
#include "seqcause/patterns.hpp"
#include "seqcause/service/config.hpp"

namespace seqcause::service {

struct PipelineOutput {
    nlohmann::json payload;  // the analysis export; no ids or timing
    Diagnostics diagnostics;
};

/// preprocess -> detect_states -> mine_patterns per group -> glyph stats
/// and graph columns. Throws EmptyDatasetError when preprocessing leaves no
/// sessions.
PipelineOutput run_pipeline(const Dataset& raw, const AnalysisConfig& cfg);

/// Query-side view rebuilt from an analysis payload.
struct AnalysisView {
    nlohmann::json payload;
    EventCatalog catalog;
    std::vector<CausalGraph> graphs;
    std::vector<std::vector<SequentialPattern>> patterns;     // per graph
    std::vector<std::vector<IdentifiedSequence>> sessions;    // per graph

    static AnalysisView from_payload(nlohmann::json payload);

    /// Graph summaries (no patterns), optionally sorted by session count
    /// descending with ties by index.
    nlohmann::json graph_list(bool sort_by_count) const;

    /// Indices of the graphs containing src->dst.
    std::vector<std::size_t> graphs_with_edge(EventType src, EventType dst) const;

    /// Pattern indices of graph g explained by the selected subgraph. With
    /// a target the subgraph is the target's ancestors (intersected with
    /// `nodes` when both are given). With neither, every pattern.
    std::vector<std::size_t> filter_patterns(std::size_t g, const std::optional<std::vector<EventType>>& nodes,
                                             std::optional<EventType> target) const;

    FlowLayout flow(std::size_t g, std::size_t p, const FlowConfig& cfg = {}) const;

    /// Session ids of graph g that contain pattern p.
    std::vector<std::string> matching_sessions(std::size_t g, std::size_t p) const;
};

}  // namespace seqcause::service
