#include "seqcause/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>

#include "seqcause/error.hpp"

namespace seqcause {

namespace {

// Walk backwards through remaining parents until a node repeats.
CycleError cycle_in(const CausalGraph& graph, const std::vector<std::size_t>& indegree) {
    const auto n = graph.node_count();
    EventType v = 0;
    while (v < n && indegree[v] == 0) {
        ++v;
    }
    std::vector<bool> seen(n, false);
    while (true) {
        seen[v] = true;
        EventType u = 0;
        for (auto p : graph.parents(v)) {
            if (indegree[p] > 0) {
                u = p;
                break;
            }
        }
        if (seen[u]) {
            return CycleError(u, v);
        }
        v = u;
    }
}

}  // namespace

std::vector<EventType> topo_order(const CausalGraph& graph) {
    const auto n = graph.node_count();
    std::vector<std::size_t> indegree(n, 0);
    std::vector<std::vector<EventType>> children(n);
    for (const auto& e : graph.edges()) {
        ++indegree[e.dst];
        children[e.src].push_back(e.dst);
    }
    std::priority_queue<EventType, std::vector<EventType>, std::greater<>> frontier;
    for (EventType v = 0; v < n; ++v) {
        if (indegree[v] == 0) {
            frontier.push(v);
        }
    }
    std::vector<EventType> order;
    order.reserve(n);
    while (!frontier.empty()) {
        const auto v = frontier.top();
        frontier.pop();
        order.push_back(v);
        for (auto c : children[v]) {
            if (--indegree[c] == 0) {
                frontier.push(c);
            }
        }
    }
    if (order.size() != n) {
        throw cycle_in(graph, indegree);
    }
    return order;
}

std::vector<std::size_t> causal_order_columns(const CausalGraph& graph) {
    std::vector<std::size_t> column(graph.node_count(), 0);
    for (auto v : topo_order(graph)) {
        for (auto p : graph.parents(v)) {
            column[v] = std::max(column[v], column[p] + 1);
        }
    }
    return column;
}

GlyphStats glyph_stats(std::span<const std::vector<EventType>> sequences, EventType type, int color) {
    GlyphStats stats;
    stats.type_color = color;
    std::size_t total = 0;
    std::size_t hits = 0;
    std::array<std::size_t, 4> bins{};
    for (const auto& seq : sequences) {
        const auto len = seq.size();
        total += len;
        for (std::size_t i = 0; i < len; ++i) {
            if (seq[i] == type) {
                ++hits;
                ++bins[std::min<std::size_t>(4 * i / len, 3)];
            }
        }
    }
    if (hits == 0) {
        return stats;
    }
    stats.frequency = static_cast<double>(hits) / static_cast<double>(total);
    for (std::size_t q = 0; q < 4; ++q) {
        stats.quarter_dist[q] = static_cast<double>(bins[q]) / static_cast<double>(hits);
    }
    return stats;
}

namespace {

double min_angle_rad(const FlowConfig& cfg) {
    return cfg.min_angle_deg * std::numbers::pi / 180.0;
}

// Angle of the edge hub-v from the vertical, positive to the right.
double edge_angle(const LayoutState& s, std::size_t hub, std::size_t v) {
    return std::atan2(s.x[v] - s.x[hub], std::abs(s.y[v] - s.y[hub]));
}

// Spreads the edges hub-a and hub-b, a kept left of b. Two springs:
//   centring   pulls mid(x_a, x_b) over x_hub with k * offset
//   angle gap  pushes the pair apart while theta_b - theta_a < alpha
// The angle deficit is converted to the horizontal distance that would
// close it, so both springs act in x units. The hub takes the reaction of
// every push.
void spread_pair(const LayoutState& s, std::size_t hub, std::size_t a, std::size_t b, double alpha, double k,
                 std::vector<double>& f, std::vector<double>& stiff) {
    const double off = 0.5 * (s.x[a] + s.x[b]) - s.x[hub];
    f[a] -= 0.5 * k * off;
    f[b] -= 0.5 * k * off;
    f[hub] += k * off;

    const double dya = std::abs(s.y[a] - s.y[hub]);
    const double dyb = std::abs(s.y[b] - s.y[hub]);
    const double d = alpha - (edge_angle(s, hub, b) - edge_angle(s, hub, a));
    stiff[a] += 2.0 * k;
    stiff[b] += 2.0 * k;
    stiff[hub] += 4.0 * k;
    if (d <= 0.0) {
        return;
    }
    // Near the vertical one radian spans dy horizontally; each side closes
    // half the deficit.
    const double push_l = 0.5 * k * d * dya;
    const double push_r = 0.5 * k * d * dyb;
    f[a] -= push_l;
    f[b] += push_r;
    f[hub] += push_l - push_r;
}

}  // namespace

std::vector<Force> chain_forces(const Structures& s, const FlowConfig& cfg) {
    std::vector<Force> out;
    for (const auto ch : s.chains) {
        const double k = cfg.k_chain;
        out.push_back({[ch, k](const LayoutState& st, std::vector<double>& f, std::vector<double>& stiff) {
            const double off = st.x[ch.mid] - 0.5 * (st.x[ch.a] + st.x[ch.c]);
            f[ch.mid] -= k * off;
            f[ch.a] += 0.5 * k * off;
            f[ch.c] += 0.5 * k * off;
            stiff[ch.mid] += 2.0 * k;
            stiff[ch.a] += k;
            stiff[ch.c] += k;
        }, [ch](LayoutState& st, const std::vector<double>& w) {
            // Excess over the slope band, e = |off| - slack * |x_c - x_a|,
            // removed by one weighted step along its gradient.
            const double off = st.x[ch.mid] - 0.5 * (st.x[ch.a] + st.x[ch.c]);
            const double span = st.x[ch.c] - st.x[ch.a];
            const double e = std::abs(off) - kChainSlack * std::abs(span);
            if (e <= 0.0) {
                return false;
            }
            const double so = off < 0.0 ? -1.0 : 1.0;
            const double ss = span < 0.0 ? -1.0 : 1.0;
            const double ga = -0.5 * so + kChainSlack * ss;
            const double gm = so;
            const double gc = -0.5 * so - kChainSlack * ss;
            const double norm = ga * ga / w[ch.a] + gm * gm / w[ch.mid] + gc * gc / w[ch.c];
            st.x[ch.a] -= e * ga / w[ch.a] / norm;
            st.x[ch.mid] -= e * gm / w[ch.mid] / norm;
            st.x[ch.c] -= e * gc / w[ch.c] / norm;
            return true;
        }});
    }
    return out;
}

std::vector<Force> fork_forces(const Structures& s, const FlowConfig& cfg) {
    std::vector<Force> out;
    const double alpha = min_angle_rad(cfg);
    for (const auto fk : s.forks) {
        const double k = cfg.k_angle;
        out.push_back({[fk, k, alpha](const LayoutState& st, std::vector<double>& f, std::vector<double>& stiff) {
            spread_pair(st, fk.parent, fk.a, fk.b, alpha, k, f, stiff);
        }, nullptr});
    }
    return out;
}

std::vector<Force> vee_forces(const Structures& s, const FlowConfig& cfg) {
    std::vector<Force> out;
    const double alpha = min_angle_rad(cfg);
    for (const auto v : s.vees) {
        const double k = cfg.k_angle;
        out.push_back({[v, k, alpha](const LayoutState& st, std::vector<double>& f, std::vector<double>& stiff) {
            spread_pair(st, v.child, v.a, v.b, alpha, k, f, stiff);
        }, nullptr});
    }
    return out;
}

std::vector<Force> default_forces(const Structures& s, const FlowConfig& cfg) {
    auto forces = chain_forces(s, cfg);
    for (auto& f : fork_forces(s, cfg)) {
        forces.push_back(std::move(f));
    }
    for (auto& f : vee_forces(s, cfg)) {
        forces.push_back(std::move(f));
    }
    return forces;
}

double force_step(LayoutState& state, std::span<const Force> forces, const FlowConfig& cfg) {
    const auto n = state.x.size();
    std::vector<double> f(n, 0.0);
    std::vector<double> stiff(n, 0.0);
    for (const auto& force : forces) {
        force.apply(state, f, stiff);
    }
    const auto before = state.x;
    for (std::size_t i = 0; i < n; ++i) {
        stiff[i] = std::max(1.0, stiff[i]);
        const double dx = cfg.damping * f[i] / stiff[i];
        state.x[i] += std::clamp(dx, -cfg.max_step, cfg.max_step);
    }
    for (int pass = 0; pass < 64; ++pass) {
        bool moved = false;
        for (const auto& force : forces) {
            if (force.project && force.project(state, stiff)) {
                moved = true;
            }
        }
        if (!moved) {
            break;
        }
    }
    double max_dx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_dx = std::max(max_dx, std::abs(state.x[i] - before[i]));
    }
    return max_dx;
}

void orient_pairs(Structures& s, const LayoutState& state) {
    auto order = [&](std::size_t hub, std::size_t& a, std::size_t& b) {
        const double ta = edge_angle(state, hub, a), tb = edge_angle(state, hub, b);
        if (tb < ta || (tb == ta && b < a)) {
            std::swap(a, b);
        }
    };
    for (auto& fk : s.forks) {
        order(fk.parent, fk.a, fk.b);
    }
    for (auto& v : s.vees) {
        order(v.child, v.a, v.b);
    }
}

double force_step(LayoutState& state, const Structures& s, const FlowConfig& cfg) {
    auto oriented = s;
    orient_pairs(oriented, state);
    const auto forces = default_forces(oriented, cfg);
    return force_step(state, forces, cfg);
}

Structures find_structures(std::span<const EventType> events, const CausalGraph& graph) {
    const auto n = events.size();
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    std::vector<std::vector<std::size_t>> parents(n), children(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && graph.has_edge(events[i], events[j])) {
                adj[i][j] = adj[j][i] = true;
                children[i].push_back(j);
                parents[j].push_back(i);
            }
        }
    }
    Structures s;
    for (std::size_t v = 0; v < n; ++v) {
        if (parents[v].size() == 1 && children[v].size() == 1 && !adj[parents[v][0]][children[v][0]]) {
            s.chains.push_back({parents[v][0], v, children[v][0]});
        }
        for (std::size_t i = 0; i < children[v].size(); ++i) {
            for (std::size_t j = i + 1; j < children[v].size(); ++j) {
                if (!adj[children[v][i]][children[v][j]]) {
                    s.forks.push_back({v, children[v][i], children[v][j]});
                }
            }
        }
        for (std::size_t i = 0; i < parents[v].size(); ++i) {
            for (std::size_t j = i + 1; j < parents[v].size(); ++j) {
                if (!adj[parents[v][i]][parents[v][j]]) {
                    s.vees.push_back({v, parents[v][i], parents[v][j]});
                }
            }
        }
    }
    return s;
}

FlowLayout flow_layout(std::span<const EventType> pattern, const CausalGraph& graph, const FlowConfig& cfg) {
    std::vector<EventType> missing;
    for (auto e : pattern) {
        if (e >= graph.node_count() && std::find(missing.begin(), missing.end(), e) == missing.end()) {
            missing.push_back(e);
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (auto e : missing) {
            list += (list.empty() ? "" : ", ") + std::to_string(e);
        }
        throw CatalogError("pattern events not in graph: " + list);
    }

    FlowLayout layout;
    std::vector<EventType> events;
    for (std::size_t pos = 0; pos < pattern.size(); ++pos) {
        auto it = std::find(events.begin(), events.end(), pattern[pos]);
        if (it == events.end()) {
            events.push_back(pattern[pos]);
            layout.nodes.push_back(FlowNode{pattern[pos], {pos}, 0, static_cast<double>(pos), 0});
        } else {
            layout.nodes[static_cast<std::size_t>(it - events.begin())].positions.push_back(pos);
        }
    }
    const auto n = events.size();
    auto node_of = [&](EventType e) -> std::ptrdiff_t {
        auto it = std::find(events.begin(), events.end(), e);
        return it == events.end() ? -1 : it - events.begin();
    };

    std::size_t rank = 0;
    for (auto v : topo_order(graph)) {
        if (auto i = node_of(v); i >= 0) {
            layout.nodes[static_cast<std::size_t>(i)].rank = rank++;
        }
    }

    for (std::size_t d = 0; d < n; ++d) {
        std::vector<std::size_t> causes;
        for (std::size_t s = 0; s < n; ++s) {
            if (s != d && graph.has_edge(events[s], events[d])) {
                causes.push_back(s);
            }
        }
        std::sort(causes.begin(), causes.end(),
                  [&](std::size_t a, std::size_t b) { return layout.nodes[a].rank < layout.nodes[b].rank; });
        layout.nodes[d].bar_length = causes.size();
        for (std::size_t slot = 0; slot < causes.size(); ++slot) {
            layout.flows.push_back(Flow{causes[slot], d, slot});
        }
    }

    layout.structures = find_structures(events, graph);
    LayoutState state;
    for (const auto& node : layout.nodes) {
        state.x.push_back(node.x);
        state.y.push_back(static_cast<double>(node.rank) * cfg.row_height);
    }
    orient_pairs(layout.structures, state);
    const auto forces = default_forces(layout.structures, cfg);
    if (forces.empty()) {
        layout.converged = true;
    }
    while (!layout.converged && layout.iterations < cfg.max_iter) {
        layout.max_displacement = force_step(state, forces, cfg);
        ++layout.iterations;
        layout.converged = layout.max_displacement < cfg.tol;
    }
    for (std::size_t i = 0; i < n; ++i) {
        layout.nodes[i].x = state.x[i];
    }
    return layout;
}

nlohmann::json flow_layout_to_json(const FlowLayout& layout, const EventCatalog& catalog) {
    auto nodes = nlohmann::json::array();
    for (const auto& node : layout.nodes) {
        nodes.push_back({{"event", node.event},
                         {"label", catalog.label(node.event)},
                         {"positions", node.positions},
                         {"rank", node.rank},
                         {"x", node.x},
                         {"bar_length", node.bar_length}});
    }
    auto flows = nlohmann::json::array();
    for (const auto& f : layout.flows) {
        flows.push_back({{"src", f.src}, {"dst", f.dst}, {"slot", f.slot}});
    }
    return {{"nodes", std::move(nodes)},
            {"flows", std::move(flows)},
            {"iterations", layout.iterations},
            {"converged", layout.converged}};
}

}  // namespace seqcause
