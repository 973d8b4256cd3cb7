#include "seqcause/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "seqcause/error.hpp"

namespace seqcause {

bool contains_subsequence(std::span<const EventType> sequence, std::span<const EventType> pattern) {
    std::size_t p = 0;
    for (std::size_t i = 0; i < sequence.size() && p < pattern.size(); ++i) {
        if (sequence[i] == pattern[p]) {
            ++p;
        }
    }
    return p == pattern.size();
}

bool pattern_order(const SequentialPattern& a, const SequentialPattern& b) {
    if (a.count != b.count) {
        return a.count > b.count;
    }
    if (a.events.size() != b.events.size()) {
        return a.events.size() > b.events.size();
    }
    return a.events < b.events;
}

namespace {

// (sequence index, first position still available to the suffix)
struct Projection {
    std::size_t seq;
    std::size_t start;
};

class PrefixSpanMiner {
public:
    PrefixSpanMiner(std::span<const std::vector<EventType>> db, std::size_t min_count, std::size_t max_len)
        : db_(db), min_count_(min_count), max_len_(max_len) {}

    std::vector<SequentialPattern> run() {
        std::vector<Projection> all;
        all.reserve(db_.size());
        for (std::size_t s = 0; s < db_.size(); ++s) {
            all.push_back({s, 0});
        }
        grow(all);
        return std::move(found_);
    }

private:
    void grow(const std::vector<Projection>& projected) {
        if (prefix_.size() >= max_len_) {
            return;
        }
        // Count each item once per projected sequence.
        std::map<EventType, std::size_t> support;
        for (const auto& proj : projected) {
            const auto& seq = db_[proj.seq];
            std::vector<EventType> seen;
            for (std::size_t i = proj.start; i < seq.size(); ++i) {
                if (std::find(seen.begin(), seen.end(), seq[i]) == seen.end()) {
                    seen.push_back(seq[i]);
                    ++support[seq[i]];
                }
            }
        }
        for (const auto& [item, count] : support) {
            if (count < min_count_) {
                continue;
            }
            prefix_.push_back(item);
            found_.push_back(SequentialPattern{prefix_, static_cast<double>(count) / static_cast<double>(db_.size()), count});
            std::vector<Projection> next;
            next.reserve(count);
            for (const auto& proj : projected) {
                const auto& seq = db_[proj.seq];
                for (std::size_t i = proj.start; i < seq.size(); ++i) {
                    if (seq[i] == item) {
                        next.push_back({proj.seq, i + 1});
                        break;
                    }
                }
            }
            grow(next);
            prefix_.pop_back();
        }
    }

    std::span<const std::vector<EventType>> db_;
    std::size_t min_count_;
    std::size_t max_len_;
    std::vector<EventType> prefix_;
    std::vector<SequentialPattern> found_;
};

}  // namespace

std::vector<SequentialPattern> mine_patterns(std::span<const std::vector<EventType>> sequences, double min_support,
                                             std::size_t max_len) {
    if (!(min_support > 0.0 && min_support <= 1.0)) {
        throw ConfigError("min_support must lie in (0, 1]");
    }
    if (max_len < 1) {
        throw ConfigError("max_len must be at least 1");
    }
    if (sequences.empty()) {
        return {};
    }
    // Smallest count c with c / n >= min_support, guarding against rounding.
    const auto n = static_cast<double>(sequences.size());
    auto min_count = static_cast<std::size_t>(std::ceil(min_support * n - 1e-9));
    min_count = std::max<std::size_t>(min_count, 1);

    auto patterns = PrefixSpanMiner(sequences, min_count, max_len).run();
    std::sort(patterns.begin(), patterns.end(), pattern_order);
    return patterns;
}

std::vector<std::string> match_sequences(std::span<const EventType> pattern,
                                         std::span<const IdentifiedSequence> sequences) {
    std::vector<std::string> ids;
    for (const auto& seq : sequences) {
        if (contains_subsequence(seq.events, pattern)) {
            ids.push_back(seq.id);
        }
    }
    return ids;
}

bool Subgraph::has_node(EventType v) const {
    return std::binary_search(nodes.begin(), nodes.end(), v);
}

Subgraph induced_subgraph(const CausalGraph& graph, std::vector<EventType> nodes) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    for (auto v : nodes) {
        if (v >= graph.node_count()) {
            throw CatalogError("node " + std::to_string(v) + " is not in the graph");
        }
    }
    Subgraph sub{std::move(nodes), {}};
    for (const auto& e : graph.edges()) {
        if (sub.has_node(e.src) && sub.has_node(e.dst)) {
            sub.edges.push_back(e);
        }
    }
    return sub;
}

Subgraph ancestors_subgraph(const CausalGraph& graph, EventType target) {
    if (target >= graph.node_count()) {
        throw CatalogError("target " + std::to_string(target) + " is not in the graph");
    }
    std::vector<bool> seen(graph.node_count(), false);
    std::vector<EventType> stack{target};
    seen[target] = true;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (auto p : graph.parents(v)) {
            if (!seen[p]) {
                seen[p] = true;
                stack.push_back(p);
            }
        }
    }
    std::vector<EventType> nodes;
    for (EventType v = 0; v < graph.node_count(); ++v) {
        if (seen[v]) {
            nodes.push_back(v);
        }
    }
    return induced_subgraph(graph, std::move(nodes));
}

bool explained_by(std::span<const EventType> pattern, const Subgraph& sub) {
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        const auto v = pattern[i];
        if (!sub.has_node(v)) {
            return false;
        }
        bool has_cause = false;
        bool cause_before = false;
        for (const auto& e : sub.edges) {
            if (e.dst != v) {
                continue;
            }
            has_cause = true;
            if (std::find(pattern.begin(), pattern.begin() + static_cast<std::ptrdiff_t>(i), e.src) !=
                pattern.begin() + static_cast<std::ptrdiff_t>(i)) {
                cause_before = true;
                break;
            }
        }
        if (has_cause && !cause_before) {
            return false;
        }
    }
    return true;
}

nlohmann::json pattern_to_json(const SequentialPattern& p, const EventCatalog& catalog) {
    auto labels = nlohmann::json::array();
    for (auto t : p.events) {
        labels.push_back(catalog.label(t));
    }
    return {{"events", std::move(labels)}, {"event_ids", p.events}, {"support", p.support}, {"count", p.count}};
}

}  // namespace seqcause
