#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seqcause/causal_graph.hpp"
#include "seqcause/event_model.hpp"
#include "seqcause/synthetic.hpp"

namespace testsupport {

using seqcause::CausalGraph;

inline CausalGraph dag(std::size_t n, std::initializer_list<std::pair<int, int>> edges) {
    CausalGraph g(n);
    for (auto [s, d] : edges) {
        g.add_edge(static_cast<seqcause::EventType>(s), static_cast<seqcause::EventType>(d), 1.0);
    }
    return g;
}

// Benchmark DAGs. Each has a v-structure so PC can orient every edge.
inline CausalGraph chain_dag() { return dag(5, {{0, 2}, {1, 2}, {2, 3}, {3, 4}}); }
inline CausalGraph fork_dag() { return dag(5, {{0, 2}, {1, 2}, {2, 3}, {2, 4}}); }
inline CausalGraph collider_dag() { return dag(5, {{0, 2}, {1, 2}, {2, 4}, {3, 4}}); }
inline CausalGraph mixture_dag_a() { return dag(5, {{0, 2}, {1, 2}, {2, 3}, {3, 4}}); }
inline CausalGraph mixture_dag_b() { return dag(5, {{2, 4}, {4, 1}, {3, 1}, {1, 0}}); }

inline constexpr std::size_t kSequenceLength = 20;
inline constexpr std::int64_t kInterval = 60'000;

inline seqcause::PreprocessConfig benchmark_preprocess() {
    seqcause::PreprocessConfig p;
    p.session_interval_ms = kInterval;
    return p;
}

}  // namespace testsupport
