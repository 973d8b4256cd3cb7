#include <doctest.h>

#include <cmath>
#include <numbers>

#include "seqcause/error.hpp"
#include "seqcause/layout.hpp"

using namespace seqcause;

namespace {

CausalGraph graph_of(std::size_t n, std::vector<std::pair<EventType, EventType>> edges) {
    CausalGraph g(n);
    for (auto [s, d] : edges) {
        g.add_edge(s, d);
    }
    return g;
}

const FlowNode& node_for(const FlowLayout& l, EventType e) {
    for (const auto& n : l.nodes) {
        if (n.event == e) {
            return n;
        }
    }
    throw std::runtime_error("missing node");
}

// Angle between two edges leaving (or entering) a hub, in degrees.
double spread_deg(const FlowLayout& l, EventType hub, EventType a, EventType b) {
    const auto& h = node_for(l, hub);
    auto theta = [&](const FlowNode& v) {
        const double dy = std::abs(static_cast<double>(v.rank) - static_cast<double>(h.rank));
        return std::atan2(v.x - h.x, dy);
    };
    return std::abs(theta(node_for(l, a)) - theta(node_for(l, b))) * 180.0 / std::numbers::pi;
}

}  // namespace

TEST_CASE("topo_order") {
    CHECK(topo_order(graph_of(3, {{2, 0}, {0, 1}})) == std::vector<EventType>{2, 0, 1});
    CHECK(topo_order(graph_of(3, {})) == std::vector<EventType>{0, 1, 2});
    CHECK(topo_order(graph_of(4, {{3, 1}, {2, 1}})) == std::vector<EventType>{0, 2, 3, 1});
    CHECK_THROWS_AS(topo_order(graph_of(3, {{0, 1}, {1, 2}, {2, 0}})), CycleError);
}

TEST_CASE("causal_order_columns") {
    // A -> B, A -> C, C -> B
    CHECK(causal_order_columns(graph_of(3, {{0, 1}, {0, 2}, {2, 1}})) == std::vector<std::size_t>{0, 2, 1});
    CHECK(causal_order_columns(graph_of(2, {})) == std::vector<std::size_t>{0, 0});
}

TEST_CASE("glyph_stats") {
    const std::vector<std::vector<EventType>> seqs = {{0, 1, 1, 1}, {1, 1, 1, 0}};
    const auto s = glyph_stats(seqs, 0, 3);
    CHECK(s.frequency == doctest::Approx(0.25));
    CHECK(s.quarter_dist == std::array<double, 4>{0.5, 0.0, 0.0, 0.5});
    CHECK(s.type_color == 3);

    const auto absent = glyph_stats(seqs, 7);
    CHECK(absent.frequency == 0.0);
    CHECK(absent.quarter_dist == std::array<double, 4>{});

    // Length 3: positions fall in quarters 0, 1, 2.
    const std::vector<std::vector<EventType>> three = {{5, 5, 5}};
    CHECK(glyph_stats(three, 5).quarter_dist == std::array<double, 4>{1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0});
}

TEST_CASE("flow_layout") {
    SUBCASE("single event") {
        const std::vector<EventType> p = {0};
        const auto l = flow_layout(p, graph_of(1, {}));
        REQUIRE(l.nodes.size() == 1);
        CHECK(l.converged);
        CHECK(l.flows.empty());
        CHECK(l.nodes[0].bar_length == 0);
    }
    SUBCASE("chain keeps a monotone slope") {
        const std::vector<EventType> p = {0, 1, 2};
        const auto l = flow_layout(p, graph_of(3, {{0, 1}, {1, 2}}));
        CHECK(l.converged);
        const double x0 = node_for(l, 0).x, x1 = node_for(l, 1).x, x2 = node_for(l, 2).x;
        CHECK(x0 < x1);
        CHECK(x1 < x2);
        const double off = x1 - 0.5 * (x0 + x2);
        CHECK(std::abs(off) <= kChainSlack * (x2 - x0) + 1e-6);
        CHECK(node_for(l, 0).rank == 0);
        CHECK(node_for(l, 2).rank == 2);
    }
    SUBCASE("fork children end up on opposite sides of the parent") {
        // Pattern [T, B, A] with A -> T and A -> B.
        const std::vector<EventType> p = {1, 2, 0};
        const auto l = flow_layout(p, graph_of(3, {{0, 1}, {0, 2}}));
        CHECK(l.converged);
        REQUIRE(l.structures.forks.size() == 1);
        const double xa = node_for(l, 0).x;
        CHECK((node_for(l, 1).x - xa) * (node_for(l, 2).x - xa) < 0);
        CHECK(spread_deg(l, 0, 1, 2) >= 30.0 - 0.5);
        CHECK(node_for(l, 0).rank == 0);
    }
    SUBCASE("bars and flow slots") {
        // v-structure 0 -> 2 <- 1
        const std::vector<EventType> p = {1, 0, 2};
        const auto l = flow_layout(p, graph_of(3, {{0, 2}, {1, 2}}));
        CHECK(node_for(l, 2).bar_length == 2);
        CHECK(node_for(l, 0).bar_length == 0);
        REQUIRE(l.flows.size() == 2);
        // Causes take bar slots in rank order: 0 ranks before 1.
        CHECK(l.nodes[l.flows[0].src].event == 0);
        CHECK(l.flows[0].slot == 0);
        CHECK(l.nodes[l.flows[1].src].event == 1);
        CHECK(l.flows[1].slot == 1);
    }
    SUBCASE("repeated events share one node") {
        const std::vector<EventType> p = {0, 1, 0};
        const auto l = flow_layout(p, graph_of(2, {{0, 1}}));
        REQUIRE(l.nodes.size() == 2);
        CHECK(l.nodes[0].positions == std::vector<std::size_t>{0, 2});
    }
    SUBCASE("events outside the graph") {
        const std::vector<EventType> p = {0, 4};
        CHECK_THROWS_AS(flow_layout(p, graph_of(2, {})), CatalogError);
    }
    SUBCASE("deterministic") {
        const std::vector<EventType> p = {3, 0, 1, 2, 4};
        const auto g = graph_of(5, {{0, 2}, {1, 2}, {2, 3}, {2, 4}});
        const EventCatalog cat({"a", "b", "c", "d", "e"});
        CHECK(flow_layout_to_json(flow_layout(p, g), cat).dump() == flow_layout_to_json(flow_layout(p, g), cat).dump());
    }
}

TEST_CASE("force_step") {
    FlowConfig cfg;
    SUBCASE("no structures leave positions unchanged") {
        LayoutState st{{0.0, 3.0}, {0.0, 1.0}};
        CHECK(force_step(st, Structures{}, cfg) == 0.0);
        CHECK(st.x == std::vector<double>{0.0, 3.0});
    }
    SUBCASE("a bent chain pulls its middle back") {
        Structures s;
        s.chains.push_back({0, 1, 2});
        LayoutState st{{0.0, 20.0, 20.0}, {0.0, 1.0, 2.0}};
        const double before = st.x[1];
        CHECK(force_step(st, s, cfg) > 0.0);
        CHECK(st.x[1] < before);
    }
    SUBCASE("coincident fork children separate") {
        Structures s;
        s.forks.push_back({0, 1, 2});
        LayoutState st{{0.0, 0.0, 0.0}, {0.0, 1.0, 1.0}};
        force_step(st, s, cfg);
        CHECK(st.x[1] < st.x[2]);
    }
    SUBCASE("steps are clamped") {
        Structures s;
        s.chains.push_back({0, 1, 2});
        LayoutState st{{0.0, 1000.0, 1.0}, {0.0, 1.0, 2.0}};
        cfg.max_step = 0.5;
        const auto chain = chain_forces(s, cfg);
        std::vector<Force> free_only;
        for (const auto& f : chain) {
            free_only.push_back(Force{f.apply, nullptr});
        }
        CHECK(force_step(st, free_only, cfg) == doctest::Approx(0.5));
    }
}

TEST_CASE("find_structures lists only unshielded triples") {
    const std::vector<EventType> ev = {0, 1, 2};
    const auto chain = find_structures(ev, graph_of(3, {{0, 1}, {1, 2}}));
    CHECK(chain.chains.size() == 1);
    CHECK(chain.forks.empty());
    const auto shielded = find_structures(ev, graph_of(3, {{0, 1}, {1, 2}, {0, 2}}));
    CHECK(shielded.chains.empty());
    CHECK(shielded.forks.empty());
    CHECK(shielded.vees.empty());
}
