#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "seqcause/causal_graph.hpp"
#include "seqcause/event_model.hpp"
#include "seqcause/state_grouping.hpp"

namespace seqcause {

/// Small deterministic generator; only the raw 64-bit output of mt19937_64
/// is used so samples are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next();
    double uniform();                       // [0, 1)
    std::size_t below(std::size_t bound);   // [0, bound)

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finaliser, used to derive per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Upper-triangular adjacency under a random node permutation.
CausalGraph random_dag(std::size_t n_nodes, double edge_prob, std::uint64_t seed);

struct NoisyOrParams {
    double p_base = 0.05;
    double p_act = 0.9;
};

struct GroundTruth {
    std::vector<CausalGraph> dags;                   // one per state, same node count
    std::vector<std::vector<NoisyOrParams>> params;  // [state][node]
    std::vector<std::size_t> mixture;                // sequences per state
    std::vector<std::string> sequence_ids;
    std::vector<std::size_t> labels;                 // aligned with sequence_ids

    std::size_t node_count() const { return dags.empty() ? 0 : dags.front().node_count(); }
};

/// Truth with identical parameters on every node of every state.
GroundTruth make_truth(std::vector<CausalGraph> dags, NoisyOrParams params = {});

struct SyntheticSample {
    Dataset dataset;   // raw sequences, not yet preprocessed
    GroundTruth truth; // mixture and labels filled in
};

/// Noisy-OR step process. At every step each type fires with probability
/// 1 - (1 - p_base) * prod(1 - p_act) over parents that already occurred;
/// fired events are appended in catalog order, 1 s apart. Sequences in
/// which nothing fires are not emitted.
SyntheticSample sample_sequences(const GroundTruth& truth, std::size_t n_per_state, std::size_t length,
                                 std::uint64_t seed);

/// Event type labels used by the generator: "e0", "e1", ...
EventCatalog synthetic_catalog(std::size_t n_nodes);

/// Adjusted Rand index. Two single-cluster partitions score 1.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct EdgeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Directed-edge agreement of `detected` against `truth`.
EdgeScore edge_score(const CausalGraph& truth, const CausalGraph& detected);

/// Maximum-weight assignment on a rectangular matrix; result[row] is the
/// matched column or -1.
std::vector<long> hungarian_max(const std::vector<std::vector<double>>& weight);

struct RecoveryMetrics {
    double edge_precision = 0.0;
    double edge_recall = 0.0;
    double edge_f1 = 0.0;
    double ari = 0.0;
    std::vector<long> matching;        // truth state -> detected graph or -1
    std::vector<EdgeScore> per_state;  // aligned with truth states
};

/// Re-indexes `graph` from catalog `from` to catalog `to` by label. Nodes
/// whose label is missing from `to` are dropped with their edges.
CausalGraph remap_graph(const CausalGraph& graph, const EventCatalog& from, const EventCatalog& to);

/// Detected graphs are indexed by `detected_catalog` and are mapped onto
/// the generator's labels before comparison. Graphs matched to truth states by edge F1; precision, recall and F1 are
/// averaged over max(truth states, detected graphs), unmatched entries
/// counting 0. ARI is taken over sequences present in `sequence_groups`.
RecoveryMetrics score_recovery(const GroundTruth& truth, std::span<const CausalGraph> detected,
                               const EventCatalog& detected_catalog,
                               std::span<const std::pair<std::string, std::size_t>> sequence_groups);

/// Convenience overload using majority-vote sequence groups of `ds`.
RecoveryMetrics score_recovery(const GroundTruth& truth, const CausalStateSet& detected, const Dataset& ds);

nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j);
nlohmann::json metrics_to_json(const RecoveryMetrics& m);

}  // namespace seqcause
