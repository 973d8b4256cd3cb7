#include "seqcause/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "seqcause/error.hpp"

namespace seqcause {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next() {
    return engine_();
}

double Rng::uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t bound) {
    if (bound <= 1) {
        return 0;
    }
    // Rejection sampling keeps the result unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r = next();
    while (r >= limit) {
        r = next();
    }
    return static_cast<std::size_t>(r % bound);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

CausalGraph random_dag(std::size_t n_nodes, double edge_prob, std::uint64_t seed) {
    if (n_nodes < 1) {
        throw ConfigError("random_dag needs at least one node");
    }
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
        throw ConfigError("edge_prob must lie in [0, 1]");
    }
    Rng rng(seed);
    std::vector<EventType> perm(n_nodes);
    std::iota(perm.begin(), perm.end(), EventType{0});
    for (std::size_t i = n_nodes - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.below(i + 1)]);
    }
    CausalGraph g(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        for (std::size_t j = i + 1; j < n_nodes; ++j) {
            if (rng.uniform() < edge_prob) {
                g.add_edge(perm[i], perm[j], 1.0);
            }
        }
    }
    return g;
}

GroundTruth make_truth(std::vector<CausalGraph> dags, NoisyOrParams params) {
    GroundTruth truth;
    for (const auto& d : dags) {
        truth.params.emplace_back(d.node_count(), params);
    }
    truth.dags = std::move(dags);
    return truth;
}

EventCatalog synthetic_catalog(std::size_t n_nodes) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n_nodes; ++i) {
        labels.push_back("e" + std::to_string(i));
    }
    return EventCatalog(std::move(labels));
}

SyntheticSample sample_sequences(const GroundTruth& truth, std::size_t n_per_state, std::size_t length,
                                 std::uint64_t seed) {
    if (length < 1) {
        throw ConfigError("length must be at least 1");
    }
    if (truth.dags.empty()) {
        throw ConfigError("ground truth has no states");
    }
    const auto m = truth.node_count();
    for (std::size_t s = 0; s < truth.dags.size(); ++s) {
        if (truth.dags[s].node_count() != m || truth.params[s].size() != m) {
            throw ConfigError("every state needs the same node count and one parameter pair per node");
        }
        if (!truth.dags[s].is_acyclic()) {
            throw ConfigError("state " + std::to_string(s) + " is not acyclic");
        }
    }

    SyntheticSample out;
    out.truth = truth;
    out.truth.mixture.assign(truth.dags.size(), 0);
    out.truth.sequence_ids.clear();
    out.truth.labels.clear();
    out.dataset.catalog = synthetic_catalog(m);
    out.dataset.provenance.source = "synthetic:" + std::to_string(seed);

    std::vector<std::vector<EventType>> parents;
    std::vector<bool> occurred(m);
    std::size_t index = 0;
    for (std::size_t s = 0; s < truth.dags.size(); ++s) {
        parents.clear();
        for (EventType v = 0; v < m; ++v) {
            parents.push_back(truth.dags[s].parents(v));
        }
        const auto& params = truth.params[s];
        for (std::size_t k = 0; k < n_per_state; ++k, ++index) {
            Rng rng(mix_seed(seed, index));
            std::fill(occurred.begin(), occurred.end(), false);
            EventSequence seq;
            char id[32];
            std::snprintf(id, sizeof id, "seq%05zu", index);
            seq.id = id;
            std::vector<EventType> fired;
            for (std::size_t step = 0; step < length; ++step) {
                fired.clear();
                for (EventType v = 0; v < m; ++v) {
                    double stay_off = 1.0 - params[v].p_base;
                    for (auto p : parents[v]) {
                        if (occurred[p]) {
                            stay_off *= 1.0 - params[v].p_act;
                        }
                    }
                    if (rng.uniform() < 1.0 - stay_off) {
                        fired.push_back(v);
                    }
                }
                for (auto v : fired) {
                    const auto ts = static_cast<std::int64_t>(seq.events.size()) * 1000;
                    seq.events.push_back(Event{v, ts, {}});
                    occurred[v] = true;
                }
            }
            if (seq.events.empty()) {
                continue;
            }
            out.truth.sequence_ids.push_back(seq.id);
            out.truth.labels.push_back(s);
            ++out.truth.mixture[s];
            out.dataset.sequences.push_back(std::move(seq));
        }
    }
    return out;
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("partitions differ in length");
    }
    const auto n = a.size();
    if (n < 2) {
        return 1.0;
    }
    std::map<std::pair<std::size_t, std::size_t>, double> cells;
    std::map<std::size_t, double> rows, cols;
    for (std::size_t i = 0; i < n; ++i) {
        cells[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, c] : cells) {
        index += pairs(c);
    }
    for (const auto& [key, c] : rows) {
        sum_rows += pairs(c);
    }
    for (const auto& [key, c] : cols) {
        sum_cols += pairs(c);
    }
    const double expected = sum_rows * sum_cols / pairs(static_cast<double>(n));
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) {
        return 1.0;
    }
    return (index - expected) / (max_index - expected);
}

EdgeScore edge_score(const CausalGraph& truth, const CausalGraph& detected) {
    const auto& te = truth.edges();
    const auto& de = detected.edges();
    if (te.empty() && de.empty()) {
        return {1.0, 1.0, 1.0};
    }
    std::size_t hits = 0;
    for (const auto& e : de) {
        if (truth.has_edge(e.src, e.dst)) {
            ++hits;
        }
    }
    EdgeScore s;
    s.precision = de.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(de.size());
    s.recall = te.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(te.size());
    if (s.precision + s.recall > 0.0) {
        s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    }
    return s;
}

std::vector<long> hungarian_max(const std::vector<std::vector<double>>& weight) {
    const std::size_t rows = weight.size();
    const std::size_t cols = rows == 0 ? 0 : weight[0].size();
    const std::size_t n = std::max(rows, cols);
    if (n == 0) {
        return {};
    }
    // Square cost matrix, 1-based potentials (classic O(n^3) formulation).
    auto cost = [&](std::size_t i, std::size_t j) {
        return (i < rows && j < cols) ? -weight[i][j] : 0.0;
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<long> match(rows, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] >= 1 && p[j] - 1 < rows && j - 1 < cols) {
            match[p[j] - 1] = static_cast<long>(j - 1);
        }
    }
    return match;
}

CausalGraph remap_graph(const CausalGraph& graph, const EventCatalog& from, const EventCatalog& to) {
    CausalGraph out(to.size());
    for (const auto& e : graph.edges()) {
        const auto src = to.find(from.label(e.src));
        const auto dst = to.find(from.label(e.dst));
        if (src && dst) {
            out.add_edge(*src, *dst, e.strength);
        }
    }
    return out;
}

RecoveryMetrics score_recovery(const GroundTruth& truth, std::span<const CausalGraph> detected,
                               const EventCatalog& detected_catalog,
                               std::span<const std::pair<std::string, std::size_t>> sequence_groups) {
    if (detected.empty()) {
        throw std::invalid_argument("no detected graphs to score");
    }
    const auto catalog = synthetic_catalog(truth.node_count());
    std::vector<CausalGraph> graphs;
    for (const auto& g : detected) {
        graphs.push_back(remap_graph(g, detected_catalog, catalog));
    }
    RecoveryMetrics m;
    const auto kt = truth.dags.size();
    std::vector<std::vector<EdgeScore>> scores(kt);
    std::vector<std::vector<double>> f1(kt);
    for (std::size_t t = 0; t < kt; ++t) {
        for (const auto& g : graphs) {
            scores[t].push_back(edge_score(truth.dags[t], g));
            f1[t].push_back(scores[t].back().f1);
        }
    }
    m.matching = hungarian_max(f1);
    m.per_state.resize(kt);
    const auto denom = static_cast<double>(std::max(kt, detected.size()));
    for (std::size_t t = 0; t < kt; ++t) {
        if (m.matching[t] < 0) {
            continue;
        }
        const auto& s = scores[t][static_cast<std::size_t>(m.matching[t])];
        m.per_state[t] = s;
        m.edge_precision += s.precision / denom;
        m.edge_recall += s.recall / denom;
        m.edge_f1 += s.f1 / denom;
    }

    std::map<std::string, std::size_t> truth_label;
    for (std::size_t i = 0; i < truth.sequence_ids.size(); ++i) {
        truth_label.emplace(truth.sequence_ids[i], truth.labels[i]);
    }
    std::vector<std::size_t> a, b;
    for (const auto& [id, group] : sequence_groups) {
        if (auto it = truth_label.find(id); it != truth_label.end()) {
            a.push_back(it->second);
            b.push_back(group);
        }
    }
    m.ari = adjusted_rand_index(a, b);
    return m;
}

RecoveryMetrics score_recovery(const GroundTruth& truth, const CausalStateSet& detected, const Dataset& ds) {
    const auto groups = sequence_groups(ds, detected.assignment, detected.k());
    std::vector<std::pair<std::string, std::size_t>> pairs;
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        pairs.emplace_back(ds.sequences[i].id, groups[i]);
    }
    return score_recovery(truth, detected.graphs, ds.catalog, pairs);
}

nlohmann::json truth_to_json(const GroundTruth& truth) {
    const auto catalog = synthetic_catalog(truth.node_count());
    auto states = nlohmann::json::array();
    for (std::size_t s = 0; s < truth.dags.size(); ++s) {
        auto params = nlohmann::json::array();
        for (const auto& p : truth.params[s]) {
            params.push_back({{"p_base", p.p_base}, {"p_act", p.p_act}});
        }
        states.push_back({{"dag", graph_to_json(truth.dags[s], catalog)}, {"params", std::move(params)}});
    }
    auto labels = nlohmann::json::array();
    for (std::size_t i = 0; i < truth.sequence_ids.size(); ++i) {
        labels.push_back({{"sequence_id", truth.sequence_ids[i]}, {"state", truth.labels[i]}});
    }
    return {{"node_count", truth.node_count()},
            {"states", std::move(states)},
            {"mixture", truth.mixture},
            {"labels", std::move(labels)}};
}

GroundTruth truth_from_json(const nlohmann::json& j) {
    GroundTruth truth;
    for (const auto& s : j.at("states")) {
        truth.dags.push_back(graph_from_json(s.at("dag")));
        std::vector<NoisyOrParams> params;
        for (const auto& p : s.at("params")) {
            params.push_back({p.at("p_base").get<double>(), p.at("p_act").get<double>()});
        }
        truth.params.push_back(std::move(params));
    }
    truth.mixture = j.value("mixture", std::vector<std::size_t>{});
    for (const auto& l : j.value("labels", nlohmann::json::array())) {
        truth.sequence_ids.push_back(l.at("sequence_id").get<std::string>());
        truth.labels.push_back(l.at("state").get<std::size_t>());
    }
    return truth;
}

nlohmann::json metrics_to_json(const RecoveryMetrics& m) {
    auto per_state = nlohmann::json::array();
    for (const auto& s : m.per_state) {
        per_state.push_back({{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}});
    }
    return {{"edge_precision", m.edge_precision},
            {"edge_recall", m.edge_recall},
            {"edge_f1", m.edge_f1},
            {"ari", m.ari},
            {"matching", m.matching},
            {"per_state", std::move(per_state)}};
}

}  // namespace seqcause
