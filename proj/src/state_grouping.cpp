#include "seqcause/state_grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "seqcause/error.hpp"

namespace seqcause {

SequenceEmbedding embed_sequence(std::span<const Event> events, const EventCatalog& catalog) {
    SequenceEmbedding v(catalog.size(), 0.0);
    for (const auto& ev : events) {
        if (ev.type >= catalog.size()) {
            throw CatalogError("event type index " + std::to_string(ev.type) + " not in catalog");
        }
        v[ev.type] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) {
        norm += x * x;
    }
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) {
            x /= norm;
        }
    }
    return v;
}

namespace {

double squared_distance(const SequenceEmbedding& a, const SequenceEmbedding& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

}  // namespace

ClusterResult initial_clusters(std::span<const SequenceEmbedding> embeddings, double eps, std::size_t min_pts) {
    if (!(eps > 0.0)) {
        throw ConfigError("eps must be positive");
    }
    if (min_pts < 1) {
        throw ConfigError("min_pts must be at least 1");
    }
    const auto n = embeddings.size();
    const double eps2 = eps * eps;
    constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
    constexpr std::size_t kNoise = kUnvisited - 1;

    std::vector<std::vector<std::size_t>> neighbours(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (squared_distance(embeddings[a], embeddings[b]) <= eps2) {
                neighbours[a].push_back(b);
            }
        }
    }

    std::vector<std::size_t> label(n, kUnvisited);
    std::size_t k = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (label[p] != kUnvisited) {
            continue;
        }
        if (neighbours[p].size() < min_pts) {
            label[p] = kNoise;
            continue;
        }
        const std::size_t cluster = k++;
        label[p] = cluster;
        std::vector<std::size_t> queue(neighbours[p].begin(), neighbours[p].end());
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const auto q = queue[qi];
            if (label[q] == kNoise) {
                label[q] = cluster;  // border point
            }
            if (label[q] != kUnvisited) {
                continue;
            }
            label[q] = cluster;
            if (neighbours[q].size() >= min_pts) {
                queue.insert(queue.end(), neighbours[q].begin(), neighbours[q].end());
            }
        }
    }

    ClusterResult res;
    if (k == 0) {
        res.labels.assign(n, 0);
        res.k = 1;
        res.noise_points = n;
        return res;
    }
    const std::size_t dims = n > 0 ? embeddings[0].size() : 0;
    std::vector<SequenceEmbedding> centroids(k, SequenceEmbedding(dims, 0.0));
    std::vector<std::size_t> members(k, 0);
    for (std::size_t p = 0; p < n; ++p) {
        if (label[p] < k) {
            ++members[label[p]];
            for (std::size_t d = 0; d < dims; ++d) {
                centroids[label[p]][d] += embeddings[p][d];
            }
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (double& x : centroids[c]) {
            x /= static_cast<double>(members[c]);
        }
    }
    res.k = k;
    res.labels.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        if (label[p] < k) {
            res.labels[p] = label[p];
            continue;
        }
        ++res.noise_points;
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const double d = squared_distance(embeddings[p], centroids[c]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        res.labels[p] = best;
    }
    return res;
}

double GraphModel::probability(EventType node, const std::vector<bool>& present) const {
    const auto& table = nodes[node];
    std::size_t pattern = 0;
    for (std::size_t b = 0; b < table.parents.size(); ++b) {
        if (present[table.parents[b]]) {
            pattern |= std::size_t{1} << b;
        }
    }
    return table.probability[pattern];
}

GraphModel fit_generative(const CausalGraph& graph, std::span<const Session> sessions) {
    GraphModel model;
    model.graph = graph;
    const auto m = graph.node_count();
    model.nodes.resize(m);
    for (EventType v = 0; v < m; ++v) {
        auto& table = model.nodes[v];
        table.parents = graph.parents(v);
        if (table.parents.size() > kMaxModelParents) {
            throw NumericError("node " + std::to_string(v) + " has too many parents to tabulate");
        }
        const std::size_t patterns = std::size_t{1} << table.parents.size();
        table.increments.assign(patterns, 0.0);
        table.trials.assign(patterns, 0.0);
    }
    std::vector<bool> present(m);
    for (const auto& session : sessions) {
        std::fill(present.begin(), present.end(), false);
        for (const auto& ev : session.events) {
            for (EventType v = 0; v < m; ++v) {
                auto& table = model.nodes[v];
                std::size_t pattern = 0;
                for (std::size_t b = 0; b < table.parents.size(); ++b) {
                    if (present[table.parents[b]]) {
                        pattern |= std::size_t{1} << b;
                    }
                }
                table.trials[pattern] += 1.0;
                if (ev.type == v) {
                    table.increments[pattern] += 1.0;
                }
            }
            if (ev.type < m) {
                present[ev.type] = true;
            }
        }
    }
    for (auto& table : model.nodes) {
        table.probability.resize(table.trials.size());
        for (std::size_t p = 0; p < table.trials.size(); ++p) {
            table.probability[p] = (table.increments[p] + 1.0) / (table.trials[p] + 2.0);
        }
    }
    return model;
}

double session_loglik(const GraphModel& model, const Session& session) {
    const auto m = model.nodes.size();
    std::vector<bool> present(m, false);
    double total = 0.0;
    for (const auto& ev : session.events) {
        for (EventType v = 0; v < m; ++v) {
            const double p = model.probability(v, present);
            total += std::log(ev.type == v ? p : 1.0 - p);
        }
        if (ev.type < m) {
            present[ev.type] = true;
        }
    }
    return total;
}

std::size_t assign(const Session& session, std::span<const GraphModel> models) {
    if (models.empty()) {
        throw std::invalid_argument("assign needs at least one model");
    }
    std::size_t best = 0;
    double best_ll = session_loglik(models[0], session);
    for (std::size_t g = 1; g < models.size(); ++g) {
        const double ll = session_loglik(models[g], session);
        if (ll > best_ll) {
            best_ll = ll;
            best = g;
        }
    }
    return best;
}

namespace {

std::vector<std::size_t> sizes_of(const std::vector<std::size_t>& groups, std::size_t k) {
    std::vector<std::size_t> sizes(k, 0);
    for (auto g : groups) {
        ++sizes[g];
    }
    return sizes;
}

struct Formulated {
    std::vector<CausalGraph> graphs;
    std::vector<GraphModel> models;
};

Formulated formulate(const Dataset& ds, const std::vector<std::size_t>& groups, std::size_t k,
                     const DiscoveryOptions& opts, Diagnostics* diag) {
    Formulated out;
    for (std::size_t g = 0; g < k; ++g) {
        std::vector<Session> members;
        for (std::size_t s = 0; s < ds.sessions.size(); ++s) {
            if (groups[s] == g) {
                members.push_back(ds.sessions[s]);
            }
        }
        CausalGraph graph(ds.catalog.size());
        try {
            graph = discover(members, ds.catalog, opts, diag);
        } catch (const InsufficientDataError& e) {
            if (diag != nullptr) {
                diag->add("insufficient_group", {{"group", g}, {"rows", e.have()}, {"required", e.required()}});
            }
        }
        out.models.push_back(fit_generative(graph, members));
        out.graphs.push_back(std::move(graph));
    }
    return out;
}

}  // namespace

CausalStateSet detect_states(const Dataset& ds, const StateConfig& cfg, Diagnostics* diag) {
    if (ds.sessions.empty()) {
        throw EmptyDatasetError();
    }
    std::vector<SequenceEmbedding> embeddings;
    embeddings.reserve(ds.sequences.size());
    for (const auto& seq : ds.sequences) {
        embeddings.push_back(embed_sequence(seq.events, ds.catalog));
    }
    const auto clusters = initial_clusters(embeddings, cfg.eps, cfg.min_pts);

    std::unordered_map<std::string, std::size_t> seq_group;
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        seq_group.emplace(ds.sequences[i].id, clusters.labels[i]);
    }
    std::vector<std::size_t> groups(ds.sessions.size(), 0);
    for (std::size_t s = 0; s < ds.sessions.size(); ++s) {
        if (auto it = seq_group.find(ds.sessions[s].parent_id); it != seq_group.end()) {
            groups[s] = it->second;
        }
    }

    // Drop initial clusters that own no session (their sequences may have
    // lost every session during preprocessing).
    std::size_t k = clusters.k;
    {
        const auto sizes = sizes_of(groups, k);
        std::vector<std::size_t> remap(k);
        std::size_t next = 0;
        for (std::size_t g = 0; g < k; ++g) {
            remap[g] = sizes[g] > 0 ? next++ : 0;
        }
        for (auto& g : groups) {
            g = remap[g];
        }
        k = next;
    }

    CausalStateSet states;
    states.initial_k = k;
    auto current = formulate(ds, groups, k, cfg.discovery, diag);

    std::size_t iter = 0;
    while (iter < cfg.max_iter) {
        ++iter;
        std::vector<std::size_t> next(ds.sessions.size());
        for (std::size_t s = 0; s < ds.sessions.size(); ++s) {
            next[s] = assign(ds.sessions[s], current.models);
        }

        bool dissolved = false;
        auto sizes = sizes_of(next, k);
        std::vector<std::size_t> survivors;
        for (std::size_t g = 0; g < k; ++g) {
            if (sizes[g] > 0 && sizes[g] >= cfg.min_group_size) {
                survivors.push_back(g);
            }
        }
        if (survivors.size() < k) {
            dissolved = true;
            if (survivors.empty()) {
                states.warnings.push_back("all groups fell below the minimum size; using a single group");
                if (diag != nullptr) {
                    diag->add("single_group_fallback", {{"iteration", iter}});
                }
                std::fill(next.begin(), next.end(), 0);
                k = 1;
            } else {
                std::vector<GraphModel> kept;
                std::vector<std::size_t> remap(k, k);
                for (std::size_t idx = 0; idx < survivors.size(); ++idx) {
                    remap[survivors[idx]] = idx;
                    kept.push_back(current.models[survivors[idx]]);
                }
                for (std::size_t s = 0; s < next.size(); ++s) {
                    next[s] = remap[next[s]] < k ? remap[next[s]] : assign(ds.sessions[s], kept);
                }
                if (diag != nullptr) {
                    diag->add("groups_dissolved", {{"iteration", iter}, {"from", k}, {"to", survivors.size()}});
                }
                k = survivors.size();
            }
        }

        if (!dissolved && next == groups) {
            states.converged = true;
            break;
        }
        groups = std::move(next);
        current = formulate(ds, groups, k, cfg.discovery, diag);
    }

    states.graphs = std::move(current.graphs);
    states.assignment.session_group = std::move(groups);
    states.assignment.group_sizes = sizes_of(states.assignment.session_group, k);
    states.iterations = iter;
    return states;
}

std::vector<std::size_t> regroup(const Dataset& ds, const CausalStateSet& states) {
    std::vector<GraphModel> models;
    for (std::size_t g = 0; g < states.k(); ++g) {
        std::vector<Session> members;
        for (std::size_t s = 0; s < ds.sessions.size(); ++s) {
            if (states.assignment.session_group[s] == g) {
                members.push_back(ds.sessions[s]);
            }
        }
        models.push_back(fit_generative(states.graphs[g], members));
    }
    std::vector<std::size_t> out(ds.sessions.size());
    for (std::size_t s = 0; s < ds.sessions.size(); ++s) {
        out[s] = assign(ds.sessions[s], models);
    }
    return out;
}

std::vector<std::size_t> sequence_groups(const Dataset& ds, const GroupAssignment& assignment, std::size_t k) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        index.emplace(ds.sequences[i].id, i);
    }
    std::vector<std::vector<std::size_t>> votes(ds.sequences.size(), std::vector<std::size_t>(std::max<std::size_t>(k, 1), 0));
    for (std::size_t s = 0; s < ds.sessions.size(); ++s) {
        if (auto it = index.find(ds.sessions[s].parent_id); it != index.end()) {
            ++votes[it->second][assignment.session_group[s]];
        }
    }
    std::vector<std::size_t> out(ds.sequences.size(), 0);
    for (std::size_t i = 0; i < votes.size(); ++i) {
        out[i] = static_cast<std::size_t>(std::max_element(votes[i].begin(), votes[i].end()) - votes[i].begin());
    }
    return out;
}

nlohmann::json state_set_to_json(const CausalStateSet& states, const Dataset& ds) {
    const auto seq_groups = sequence_groups(ds, states.assignment, states.k());
    std::vector<std::size_t> seq_counts(states.k(), 0);
    for (auto g : seq_groups) {
        ++seq_counts[g];
    }
    auto graphs = nlohmann::json::array();
    for (std::size_t g = 0; g < states.k(); ++g) {
        auto j = graph_to_json(states.graphs[g], ds.catalog);
        j["index"] = g;
        j["session_count"] = states.assignment.group_sizes[g];
        j["sequence_count"] = seq_counts[g];
        graphs.push_back(std::move(j));
    }
    auto sessions = nlohmann::json::array();
    for (std::size_t s = 0; s < ds.sessions.size(); ++s) {
        sessions.push_back({{"sequence_id", ds.sessions[s].parent_id},
                            {"session", ds.sessions[s].index},
                            {"group", states.assignment.session_group[s]}});
    }
    auto sequences = nlohmann::json::object();
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        sequences[ds.sequences[i].id] = seq_groups[i];
    }
    return {{"graphs", std::move(graphs)},
            {"assignment", {{"sessions", std::move(sessions)}, {"sequences", std::move(sequences)}}},
            {"iterations", states.iterations},
            {"converged", states.converged},
            {"initial_k", states.initial_k},
            {"warnings", states.warnings}};
}

}  // namespace seqcause
