#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "seqcause/causal_graph.hpp"
#include "seqcause/event_model.hpp"
#include "seqcause/patterns.hpp"

namespace seqcause {

/// Kahn's algorithm with the zero-indegree frontier taken in ascending index
/// order. Throws CycleError naming an edge on a cycle.
std::vector<EventType> topo_order(const CausalGraph& graph);

/// Longest-path depth from any root, indexed by node.
std::vector<std::size_t> causal_order_columns(const CausalGraph& graph);

struct GlyphStats {
    double frequency = 0.0;
    std::array<double, 4> quarter_dist{};
    int type_color = 0;
};

/// Position i of a length-n sequence falls into quarter floor(4 i / n).
GlyphStats glyph_stats(std::span<const std::vector<EventType>> sequences, EventType type, int color = 0);

struct FlowConfig {
    double k_chain = 0.5;
    double k_angle = 0.5;
    double min_angle_deg = 30.0;
    double damping = 1.0;
    double max_step = 1.0;
    double tol = 1e-3;
    std::size_t max_iter = 300;
    double row_height = 1.0;
};

/// Local motifs over layout node indices. Only unshielded triples are
/// listed: the outer pair of a chain, fork or v must not be adjacent.
struct Structures {
    struct Chain {
        std::size_t a, mid, c;
    };
    struct Fork {
        std::size_t parent, a, b;  // a, b: children
    };
    struct Vee {
        std::size_t child, a, b;  // a, b: parents
    };
    std::vector<Chain> chains;
    std::vector<Fork> forks;
    std::vector<Vee> vees;
};

/// Horizontal positions plus the fixed rows they hang from.
struct LayoutState {
    std::vector<double> x;
    std::vector<double> y;
};

/// A force adds to `force` and to `stiffness`, an upper bound on the
/// absolute row sums of its Hessian. The update divides by the summed
/// stiffness so that crowded nodes do not oscillate.
struct Force {
    std::function<void(const LayoutState&, std::vector<double>& force, std::vector<double>& stiffness)> apply;
    /// Optional hard constraint, run after the Euler update. `weight` is
    /// the per-node step divisor; corrections are split in inverse
    /// proportion to it. Returns true when it moved a node.
    std::function<bool(LayoutState&, const std::vector<double>& weight)> project;
};

/// Largest allowed |x(mid) - midpoint(x(a), x(c))| as a fraction of |x(c) - x(a)|.
inline constexpr double kChainSlack = 0.25;

/// Swaps each fork/v pair so that `a` is the left edge at `state` (ties
/// keep the lower index left). Fork and v forces keep that order.
void orient_pairs(Structures& s, const LayoutState& state);

std::vector<Force> chain_forces(const Structures& s, const FlowConfig& cfg);
std::vector<Force> fork_forces(const Structures& s, const FlowConfig& cfg);
std::vector<Force> vee_forces(const Structures& s, const FlowConfig& cfg);
std::vector<Force> default_forces(const Structures& s, const FlowConfig& cfg);

/// One damped Euler step followed by repeated passes over the projections
/// until none moves a node (at most 64 passes). Returns the largest
/// absolute displacement.
double force_step(LayoutState& state, std::span<const Force> forces, const FlowConfig& cfg);
/// Orients a copy of `s` at the current state before stepping.
double force_step(LayoutState& state, const Structures& s, const FlowConfig& cfg);

struct FlowNode {
    EventType event = 0;
    std::vector<std::size_t> positions;  // indices into the pattern
    std::size_t rank = 0;
    double x = 0.0;
    std::size_t bar_length = 0;
};

struct Flow {
    std::size_t src = 0;  // node index of the cause
    std::size_t dst = 0;  // node index of the effect
    std::size_t slot = 0; // position on dst's bar, causes ordered by rank
};

struct FlowLayout {
    std::vector<FlowNode> nodes;  // in order of first pattern occurrence
    std::vector<Flow> flows;
    Structures structures;
    std::size_t iterations = 0;
    bool converged = false;
    double max_displacement = 0.0;
};

/// Structures of the graph induced on `events` (node i = events[i]).
Structures find_structures(std::span<const EventType> events, const CausalGraph& graph);

/// Throws CatalogError listing pattern events that are not graph nodes.
FlowLayout flow_layout(std::span<const EventType> pattern, const CausalGraph& graph, const FlowConfig& cfg = {});

nlohmann::json flow_layout_to_json(const FlowLayout& layout, const EventCatalog& catalog);

}  // namespace seqcause
