#include "seqcause/service/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include "seqcause/error.hpp"
#include "seqcause/event_io.hpp"
#include "seqcause/state_grouping.hpp"

namespace seqcause::service {

namespace {

std::string session_id(const Session& s) {
    return s.parent_id + "#" + std::to_string(s.index);
}

}  // namespace

PipelineOutput run_pipeline(const Dataset& raw, const AnalysisConfig& cfg) {
    cfg.validate();
    PipelineOutput out;
    const Dataset ds = preprocess(raw, cfg.preprocess());
    if (ds.sessions.empty()) {
        throw EmptyDatasetError();
    }
    const auto states = detect_states(ds, cfg.states(), &out.diagnostics);
    const auto k = states.k();

    std::vector<std::vector<std::vector<EventType>>> group_types(k);
    auto sessions = nlohmann::json::array();
    for (std::size_t s = 0; s < ds.sessions.size(); ++s) {
        const auto g = states.assignment.session_group[s];
        auto types = types_of(ds.sessions[s].events);
        sessions.push_back({{"id", session_id(ds.sessions[s])},
                            {"sequence_id", ds.sessions[s].parent_id},
                            {"group", g},
                            {"events", types}});
        group_types[g].push_back(std::move(types));
    }

    auto graphs = nlohmann::json::array();
    for (std::size_t g = 0; g < k; ++g) {
        const auto& graph = states.graphs[g];
        auto patterns = mine_patterns(group_types[g], cfg.min_support, cfg.max_pattern_len);
        if (patterns.size() > cfg.max_patterns) {
            patterns.resize(cfg.max_patterns);
        }
        auto pattern_json = nlohmann::json::array();
        for (std::size_t p = 0; p < patterns.size(); ++p) {
            auto pj = pattern_to_json(patterns[p], ds.catalog);
            pj["index"] = p;
            pattern_json.push_back(std::move(pj));
        }
        auto glyphs = nlohmann::json::array();
        for (EventType t = 0; t < ds.catalog.size(); ++t) {
            const auto gs = glyph_stats(group_types[g], t, ds.catalog.color(t));
            glyphs.push_back({{"type", t},
                              {"frequency", gs.frequency},
                              {"quarter_dist", gs.quarter_dist},
                              {"type_color", gs.type_color}});
        }
        graphs.push_back({{"index", g},
                          {"count", states.assignment.group_sizes[g]},
                          {"graph", graph_to_json(graph, ds.catalog)},
                          {"columns", causal_order_columns(graph)},
                          {"glyphs", std::move(glyphs)},
                          {"patterns", std::move(pattern_json)}});
    }

    const auto seq_groups = sequence_groups(ds, states.assignment, k);
    auto sequences = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        sequences.push_back({{"sequence_id", ds.sequences[i].id}, {"group", seq_groups[i]}});
    }

    nlohmann::json diag_counts = nlohmann::json::object();
    for (const auto& e : out.diagnostics.entries()) {
        const auto kind = e.at("kind").get<std::string>();
        diag_counts[kind] = diag_counts.value(kind, 0) + 1;
    }

    out.payload = {{"config", cfg.to_json()},
                   {"config_hash", cfg.hash()},
                   {"catalog", catalog_to_json(ds.catalog)},
                   {"summary",
                    {{"sequences", ds.sequences.size()},
                     {"sessions", ds.sessions.size()},
                     {"events", ds.event_count()},
                     {"k", k},
                     {"initial_k", states.initial_k},
                     {"iterations", states.iterations},
                     {"converged", states.converged},
                     {"warnings", states.warnings},
                     {"diagnostics", std::move(diag_counts)}}},
                   {"graphs", std::move(graphs)},
                   {"sessions", std::move(sessions)},
                   {"sequence_groups", std::move(sequences)}};
    return out;
}

AnalysisView AnalysisView::from_payload(nlohmann::json payload) {
    AnalysisView v;
    v.catalog = catalog_from_json(payload.at("catalog"));
    for (const auto& g : payload.at("graphs")) {
        v.graphs.push_back(graph_from_json(g.at("graph")));
        std::vector<SequentialPattern> patterns;
        for (const auto& p : g.at("patterns")) {
            patterns.push_back({p.at("event_ids").get<std::vector<EventType>>(), p.at("support").get<double>(),
                                p.at("count").get<std::size_t>()});
        }
        v.patterns.push_back(std::move(patterns));
    }
    v.sessions.resize(v.graphs.size());
    for (const auto& s : payload.at("sessions")) {
        const auto g = s.at("group").get<std::size_t>();
        if (g < v.sessions.size()) {
            v.sessions[g].push_back({s.at("id").get<std::string>(), s.at("events").get<std::vector<EventType>>()});
        }
    }
    v.payload = std::move(payload);
    return v;
}

nlohmann::json AnalysisView::graph_list(bool sort_by_count) const {
    const auto& graphs_json = payload.at("graphs");
    std::vector<std::size_t> order(graphs_json.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (sort_by_count) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return graphs_json[a].at("count").get<std::size_t>() > graphs_json[b].at("count").get<std::size_t>();
        });
    }
    auto out = nlohmann::json::array();
    for (auto g : order) {
        auto entry = graphs_json[g];
        entry["pattern_count"] = entry.at("patterns").size();
        entry.erase("patterns");
        out.push_back(std::move(entry));
    }
    return out;
}

std::vector<std::size_t> AnalysisView::graphs_with_edge(EventType src, EventType dst) const {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < graphs.size(); ++g) {
        if (src < graphs[g].node_count() && dst < graphs[g].node_count() && graphs[g].has_edge(src, dst)) {
            out.push_back(g);
        }
    }
    return out;
}

std::vector<std::size_t> AnalysisView::filter_patterns(std::size_t g,
                                                       const std::optional<std::vector<EventType>>& nodes,
                                                       std::optional<EventType> target) const {
    const auto& graph = graphs.at(g);
    const auto& pats = patterns.at(g);
    std::vector<std::size_t> out;
    if (!nodes && !target) {
        out.resize(pats.size());
        std::iota(out.begin(), out.end(), std::size_t{0});
        return out;
    }
    Subgraph sub;
    if (target) {
        sub = ancestors_subgraph(graph, *target);
        if (nodes) {
            std::vector<EventType> keep;
            for (auto v : sub.nodes) {
                if (std::find(nodes->begin(), nodes->end(), v) != nodes->end()) {
                    keep.push_back(v);
                }
            }
            sub = induced_subgraph(graph, std::move(keep));
        }
    } else {
        sub = induced_subgraph(graph, *nodes);
    }
    for (std::size_t p = 0; p < pats.size(); ++p) {
        if (explained_by(pats[p].events, sub)) {
            out.push_back(p);
        }
    }
    return out;
}

FlowLayout AnalysisView::flow(std::size_t g, std::size_t p, const FlowConfig& cfg) const {
    return flow_layout(patterns.at(g).at(p).events, graphs.at(g), cfg);
}

std::vector<std::string> AnalysisView::matching_sessions(std::size_t g, std::size_t p) const {
    return match_sequences(patterns.at(g).at(p).events, sessions.at(g));
}

}  // namespace seqcause::service
