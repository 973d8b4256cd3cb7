#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqcause/causal_graph.hpp"
#include "seqcause/discovery.hpp"
#include "seqcause/event_model.hpp"

namespace seqcause {

/// L2-normalised event-type frequency vector (all zeros for an empty input).
using SequenceEmbedding = std::vector<double>;

SequenceEmbedding embed_sequence(std::span<const Event> events, const EventCatalog& catalog);

struct ClusterResult {
    std::vector<std::size_t> labels;  // one per embedding, < k
    std::size_t k = 1;
    std::size_t noise_points = 0;  // points DBSCAN left unclustered
};

/// DBSCAN (Euclidean) with noise points attached to the nearest cluster
/// centroid. Falls back to a single cluster when DBSCAN finds none.
ClusterResult initial_clusters(std::span<const SequenceEmbedding> embeddings, double eps, std::size_t min_pts);

/// Stepwise generative model attached to a causal graph.
///
/// For every session step (the prefix grows by one event) each node X either
/// increments or not. P(X increments | parent presence pattern) is estimated
/// from tallies with add-one smoothing; patterns index bit b = parents[b]
/// present in the current prefix.
struct GraphModel {
    struct NodeTable {
        std::vector<EventType> parents;
        std::vector<double> increments;  // per pattern
        std::vector<double> trials;      // per pattern
        std::vector<double> probability; // (increments + 1) / (trials + 2)
    };

    CausalGraph graph;
    std::vector<NodeTable> nodes;

    /// Probability for `node` given a presence mask over all catalog types.
    double probability(EventType node, const std::vector<bool>& present) const;
};

/// Nodes with more parents than this cannot be tabulated densely.
inline constexpr std::size_t kMaxModelParents = 20;

GraphModel fit_generative(const CausalGraph& graph, std::span<const Session> sessions);

/// Sum over steps of log prod_X P(X | parents). 0 for an empty session.
double session_loglik(const GraphModel& model, const Session& session);

/// argmax of session_loglik; ties go to the lowest index. Throws
/// std::invalid_argument when `models` is empty.
std::size_t assign(const Session& session, std::span<const GraphModel> models);

struct StateConfig {
    DiscoveryOptions discovery;
    double eps = 0.2;
    std::size_t min_pts = 5;
    std::size_t max_iter = 20;
    std::size_t min_group_size = 5;  // groups below this many sessions are dissolved
};

struct GroupAssignment {
    std::vector<std::size_t> session_group;  // aligned with Dataset::sessions
    std::vector<std::size_t> group_sizes;
};

struct CausalStateSet {
    std::vector<CausalGraph> graphs;
    GroupAssignment assignment;
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t initial_k = 0;
    std::vector<std::string> warnings;

    std::size_t k() const noexcept { return graphs.size(); }
};

/// Formulating/Grouping loop. Sessions start in the DBSCAN group of their
/// parent sequence; K never grows.
CausalStateSet detect_states(const Dataset& ds, const StateConfig& cfg, Diagnostics* diag = nullptr);

/// One Grouping pass over `ds.sessions` with models fitted from the state
/// set's graphs and current assignment.
std::vector<std::size_t> regroup(const Dataset& ds, const CausalStateSet& states);

/// Majority detected group per sequence (ties to the lowest group index),
/// aligned with ds.sequences. Sequences without sessions get group 0.
std::vector<std::size_t> sequence_groups(const Dataset& ds, const GroupAssignment& assignment, std::size_t k);

nlohmann::json state_set_to_json(const CausalStateSet& states, const Dataset& ds);

}  // namespace seqcause
