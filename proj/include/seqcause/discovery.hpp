#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "seqcause/causal_graph.hpp"
#include "seqcause/event_model.hpp"
#include "seqcause/features.hpp"

namespace seqcause {

/// Minimum number of table rows accepted by correlation_matrix().
inline constexpr std::size_t kMinCorrelationRows = 4;

/// Collects skipped CI tests, orientation conflicts and cycle repairs.
/// Written out as JSON lines.
class Diagnostics {
public:
    void add(std::string kind, nlohmann::json detail);
    const std::vector<nlohmann::json>& entries() const noexcept { return entries_; }
    std::size_t count(const std::string& kind) const;
    std::string to_jsonl() const;

private:
    std::vector<nlohmann::json> entries_;
};

struct CorrelationMatrix {
    Eigen::MatrixXd values;
    std::size_t samples = 0;
    std::vector<bool> constant;  // zero-variance columns

    std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

/// Pearson correlations of the table columns. Zero-variance columns get 0
/// off the diagonal. Throws InsufficientDataError below kMinCorrelationRows.
CorrelationMatrix correlation_matrix(const FeatureTable& table);

/// Partial correlation of i and j given `given`, read off the precision
/// matrix of the correlation submatrix over {i, j} and `given`. A singular
/// submatrix is retried once with 1e-8 added to its diagonal; if that fails
/// too a NumericError is thrown.
double partial_correlation(const CorrelationMatrix& corr, std::size_t i, std::size_t j,
                           std::span<const std::size_t> given);

struct CiResult {
    bool independent = false;
    double p_value = 0.0;
    double statistic = 0.0;
    bool skipped = false;  // n - k - 3 <= 0; reported as dependent
};

/// Fisher-z test of rho == 0 with n samples and k conditioning variables.
CiResult ci_test(double rho, std::size_t n, std::size_t k, double alpha);

class SeparationSets {
public:
    void set(std::size_t i, std::size_t j, std::vector<std::size_t> given);
    /// nullptr when the pair was never separated.
    const std::vector<std::size_t>* find(std::size_t i, std::size_t j) const;
    bool contains(std::size_t i, std::size_t j, std::size_t node) const;
    std::size_t size() const noexcept { return sets_.size(); }

private:
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> sets_;
};

struct PcOptions {
    double alpha = 0.05;
    std::size_t max_cond_size = 3;
};

/// Undirected result of the edge-deletion phase.
struct Skeleton {
    std::size_t node_count = 0;
    std::vector<std::vector<bool>> adjacency;
    SeparationSets sepsets;
    /// |rho| of the last test run on each surviving pair, keyed (min, max).
    std::map<std::pair<std::size_t, std::size_t>, double> strength;

    explicit Skeleton(std::size_t n = 0)
        : node_count(n), adjacency(n, std::vector<bool>(n, false)) {}

    bool adjacent(std::size_t i, std::size_t j) const { return adjacency[i][j]; }
    void connect(std::size_t i, std::size_t j, double s = 1.0);
    void disconnect(std::size_t i, std::size_t j);
    std::vector<std::size_t> neighbors(std::size_t i) const;
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;
    double edge_strength(std::size_t i, std::size_t j) const;
};

/// Level-wise PC edge deletion (adjacency frozen per level). Edges are
/// visited in ascending (i, j); conditioning sets are drawn from the
/// neighbours of i, then of j, in lexicographic order.
Skeleton pc_skeleton(const CorrelationMatrix& corr, const PcOptions& opts, Diagnostics* diag = nullptr);
Skeleton pc_skeleton(const FeatureTable& table, const PcOptions& opts, Diagnostics* diag = nullptr);

/// V-structures, then Meek rules R1-R4. Edges left undirected are dropped
/// and any directed cycle is broken at its weakest edge.
CausalGraph orient_edges(const Skeleton& skeleton, Diagnostics* diag = nullptr);

struct DiscoveryOptions {
    PcOptions pc;
    FeatureMode features = FeatureMode::counts;
};

/// build_table -> pc_skeleton -> orient_edges.
CausalGraph discover(std::span<const Session> sessions, const EventCatalog& catalog,
                     const DiscoveryOptions& opts = {}, Diagnostics* diag = nullptr);

}  // namespace seqcause
