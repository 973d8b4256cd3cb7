#include "seqcause/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "seqcause/error.hpp"

namespace seqcause {

void Diagnostics::add(std::string kind, nlohmann::json detail) {
    detail["kind"] = std::move(kind);
    entries_.push_back(std::move(detail));
}

std::size_t Diagnostics::count(const std::string& kind) const {
    return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [&](const nlohmann::json& e) {
        return e.value("kind", "") == kind;
    }));
}

std::string Diagnostics::to_jsonl() const {
    std::string out;
    for (const auto& e : entries_) {
        out += e.dump();
        out += '\n';
    }
    return out;
}

CorrelationMatrix correlation_matrix(const FeatureTable& table) {
    const auto n = table.row_count();
    if (n < kMinCorrelationRows) {
        throw InsufficientDataError(n, kMinCorrelationRows);
    }
    const auto m = table.columns;
    Eigen::MatrixXd data(n, m);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            data(r, c) = static_cast<double>(table.rows[r][c]);
        }
    }
    const Eigen::RowVectorXd mean = data.colwise().mean();
    data.rowwise() -= mean;
    const Eigen::MatrixXd cov = data.transpose() * data;

    CorrelationMatrix corr;
    corr.samples = n;
    corr.values = Eigen::MatrixXd::Identity(m, m);
    corr.constant.assign(m, false);
    for (std::size_t c = 0; c < m; ++c) {
        corr.constant[c] = !(cov(c, c) > 0.0);
    }
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            double r = 0.0;
            if (!corr.constant[a] && !corr.constant[b]) {
                r = std::clamp(cov(a, b) / std::sqrt(cov(a, a) * cov(b, b)), -1.0, 1.0);
            }
            corr.values(a, b) = r;
            corr.values(b, a) = r;
        }
    }
    return corr;
}

double partial_correlation(const CorrelationMatrix& corr, std::size_t i, std::size_t j,
                           std::span<const std::size_t> given) {
    if (i == j) {
        throw std::invalid_argument("partial_correlation needs two distinct variables");
    }
    if (given.empty()) {
        return corr.values(i, j);
    }
    std::vector<std::size_t> idx{i, j};
    for (auto z : given) {
        if (z == i || z == j) {
            throw std::invalid_argument("conditioning set must exclude i and j");
        }
        idx.push_back(z);
    }
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            sub(a, b) = corr.values(idx[a], idx[b]);
        }
    }
    for (int attempt = 0; attempt < 2; ++attempt) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
        lu.setThreshold(1e-12);
        if (lu.isInvertible()) {
            const Eigen::MatrixXd precision = lu.inverse();
            const double denom = precision(0, 0) * precision(1, 1);
            if (denom > 0.0 && std::isfinite(denom)) {
                return std::clamp(-precision(0, 1) / std::sqrt(denom), -1.0, 1.0);
            }
        }
        sub.diagonal().array() += 1e-8;
    }
    throw NumericError("singular correlation submatrix for pair (" + std::to_string(i) + ", " +
                       std::to_string(j) + ")");
}

CiResult ci_test(double rho, std::size_t n, std::size_t k, double alpha) {
    CiResult res;
    if (n <= k + 3) {
        res.skipped = true;
        res.independent = false;
        res.p_value = 0.0;
        return res;
    }
    constexpr double kEdge = 1.0 - 1e-12;
    const double r = std::clamp(rho, -kEdge, kEdge);
    const double z = 0.5 * std::log((1.0 + r) / (1.0 - r));
    res.statistic = std::sqrt(static_cast<double>(n - k - 3)) * std::abs(z);
    const boost::math::normal_distribution<double> standard;
    const double critical = boost::math::quantile(standard, 1.0 - alpha / 2.0);
    res.independent = res.statistic <= critical;
    res.p_value = 2.0 * boost::math::cdf(boost::math::complement(standard, res.statistic));
    return res;
}

void SeparationSets::set(std::size_t i, std::size_t j, std::vector<std::size_t> given) {
    sets_[std::minmax(i, j)] = std::move(given);
}

const std::vector<std::size_t>* SeparationSets::find(std::size_t i, std::size_t j) const {
    auto it = sets_.find(std::minmax(i, j));
    return it == sets_.end() ? nullptr : &it->second;
}

bool SeparationSets::contains(std::size_t i, std::size_t j, std::size_t node) const {
    const auto* z = find(i, j);
    return z != nullptr && std::find(z->begin(), z->end(), node) != z->end();
}

void Skeleton::connect(std::size_t i, std::size_t j, double s) {
    adjacency[i][j] = adjacency[j][i] = true;
    strength[std::minmax(i, j)] = s;
}

void Skeleton::disconnect(std::size_t i, std::size_t j) {
    adjacency[i][j] = adjacency[j][i] = false;
    strength.erase(std::minmax(i, j));
}

std::vector<std::size_t> Skeleton::neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < node_count; ++j) {
        if (adjacency[i][j]) {
            out.push_back(j);
        }
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> Skeleton::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < node_count; ++i) {
        for (std::size_t j = i + 1; j < node_count; ++j) {
            if (adjacency[i][j]) {
                out.emplace_back(i, j);
            }
        }
    }
    return out;
}

double Skeleton::edge_strength(std::size_t i, std::size_t j) const {
    auto it = strength.find(std::minmax(i, j));
    return it == strength.end() ? 0.0 : it->second;
}

namespace {

// Calls fn(subset) for every size-k subset of `pool` in lexicographic order
// until fn returns true. Returns whether fn ever returned true.
template <typename Fn>
bool for_each_subset(const std::vector<std::size_t>& pool, std::size_t k, Fn&& fn) {
    if (k > pool.size()) {
        return false;
    }
    std::vector<std::size_t> pick(k);
    std::iota(pick.begin(), pick.end(), 0);
    std::vector<std::size_t> subset(k);
    while (true) {
        for (std::size_t a = 0; a < k; ++a) {
            subset[a] = pool[pick[a]];
        }
        if (fn(subset)) {
            return true;
        }
        // advance to the next combination
        std::size_t a = k;
        while (a > 0 && pick[a - 1] == pool.size() - k + (a - 1)) {
            --a;
        }
        if (a == 0) {
            return false;
        }
        ++pick[a - 1];
        for (std::size_t b = a; b < k; ++b) {
            pick[b] = pick[b - 1] + 1;
        }
    }
}

}  // namespace

Skeleton pc_skeleton(const CorrelationMatrix& corr, const PcOptions& opts, Diagnostics* diag) {
    if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) {
        throw ConfigError("alpha must lie in (0, 1)");
    }
    const auto m = corr.size();
    Skeleton skel(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const bool const_i = i < corr.constant.size() && corr.constant[i];
            const bool const_j = j < corr.constant.size() && corr.constant[j];
            if (!const_i && !const_j) {
                skel.connect(i, j, std::abs(corr.values(i, j)));
            }
        }
    }

    for (std::size_t level = 0; level <= opts.max_cond_size; ++level) {
        bool any_candidate = false;
        for (std::size_t v = 0; v < m; ++v) {
            if (skel.neighbors(v).size() > level) {
                any_candidate = true;
                break;
            }
        }
        if (!any_candidate) {
            break;
        }
        const auto frozen = skel.adjacency;
        auto frozen_neighbors = [&](std::size_t v, std::size_t exclude) {
            std::vector<std::size_t> out;
            for (std::size_t u = 0; u < m; ++u) {
                if (u != exclude && frozen[v][u]) {
                    out.push_back(u);
                }
            }
            return out;
        };

        for (auto [i, j] : skel.edges()) {
            double last_rho = skel.edge_strength(i, j);
            std::vector<std::size_t> sepset;
            bool separated = false;
            for (std::size_t side : {i, j}) {
                const auto pool = frozen_neighbors(side, side == i ? j : i);
                separated = for_each_subset(pool, level, [&](const std::vector<std::size_t>& given) {
                    double rho = 0.0;
                    try {
                        rho = partial_correlation(corr, i, j, given);
                    } catch (const NumericError& e) {
                        throw NumericError(std::string(e.what()) + " while testing edge " + std::to_string(i) +
                                           "-" + std::to_string(j));
                    }
                    const auto res = ci_test(rho, corr.samples, given.size(), opts.alpha);
                    if (res.skipped) {
                        if (diag != nullptr) {
                            diag->add("skipped_test", {{"i", i}, {"j", j}, {"given", given}, {"samples", corr.samples}});
                        }
                        return false;
                    }
                    last_rho = std::abs(rho);
                    if (res.independent) {
                        sepset = given;
                        return true;
                    }
                    return false;
                });
                if (separated) {
                    break;
                }
            }
            if (separated) {
                skel.disconnect(i, j);
                skel.sepsets.set(i, j, std::move(sepset));
            } else {
                skel.strength[{i, j}] = last_rho;
            }
        }
    }
    return skel;
}

Skeleton pc_skeleton(const FeatureTable& table, const PcOptions& opts, Diagnostics* diag) {
    return pc_skeleton(correlation_matrix(table), opts, diag);
}

namespace {

// Partially directed graph used during orientation.
class Pdag {
public:
    explicit Pdag(const Skeleton& skel) : n_(skel.node_count), adj_(skel.adjacency), dir_(n_, std::vector<bool>(n_, false)) {}

    bool adjacent(std::size_t a, std::size_t b) const { return adj_[a][b]; }
    bool directed(std::size_t a, std::size_t b) const { return dir_[a][b]; }
    bool undirected(std::size_t a, std::size_t b) const { return adj_[a][b] && !dir_[a][b] && !dir_[b][a]; }
    void orient(std::size_t a, std::size_t b) { dir_[a][b] = true; }
    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    std::vector<std::vector<bool>> adj_;
    std::vector<std::vector<bool>> dir_;
};

bool meek_r1(const Pdag& g, std::size_t a, std::size_t b) {
    // c -> a - b, c and b non-adjacent
    for (std::size_t c = 0; c < g.size(); ++c) {
        if (c != b && g.directed(c, a) && !g.adjacent(c, b)) {
            return true;
        }
    }
    return false;
}

bool meek_r2(const Pdag& g, std::size_t a, std::size_t b) {
    // a -> c -> b with a - b
    for (std::size_t c = 0; c < g.size(); ++c) {
        if (g.directed(a, c) && g.directed(c, b)) {
            return true;
        }
    }
    return false;
}

bool meek_r3(const Pdag& g, std::size_t a, std::size_t b) {
    // a - c -> b, a - d -> b, c and d non-adjacent
    std::vector<std::size_t> mids;
    for (std::size_t c = 0; c < g.size(); ++c) {
        if (g.undirected(a, c) && g.directed(c, b)) {
            mids.push_back(c);
        }
    }
    for (std::size_t x = 0; x < mids.size(); ++x) {
        for (std::size_t y = x + 1; y < mids.size(); ++y) {
            if (!g.adjacent(mids[x], mids[y])) {
                return true;
            }
        }
    }
    return false;
}

bool meek_r4(const Pdag& g, std::size_t a, std::size_t b) {
    // a - b, a adj c, c -> d -> b, a adj d, c and b non-adjacent
    for (std::size_t d = 0; d < g.size(); ++d) {
        if (d == a || !g.directed(d, b) || !g.adjacent(a, d)) {
            continue;
        }
        for (std::size_t c = 0; c < g.size(); ++c) {
            if (c != a && c != b && g.directed(c, d) && g.adjacent(a, c) && !g.adjacent(c, b)) {
                return true;
            }
        }
    }
    return false;
}

// Finds one directed cycle as a list of edges, or an empty list.
std::vector<std::pair<std::size_t, std::size_t>> find_cycle(const CausalGraph& g) {
    const auto n = g.node_count();
    std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
    std::vector<std::size_t> parent(n, n);
    std::vector<std::vector<EventType>> children(n);
    for (const auto& e : g.edges()) {
        children[e.src].push_back(e.dst);
    }
    for (std::size_t root = 0; root < n; ++root) {
        if (state[root] != 0) {
            continue;
        }
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        state[root] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next < children[v].size()) {
                const std::size_t w = children[v][next++];
                if (state[w] == 1) {
                    std::vector<std::pair<std::size_t, std::size_t>> cycle{{v, w}};
                    for (std::size_t u = v; u != w; u = parent[u]) {
                        cycle.emplace_back(parent[u], u);
                    }
                    return cycle;
                }
                if (state[w] == 0) {
                    state[w] = 1;
                    parent[w] = v;
                    stack.emplace_back(w, 0);
                }
            } else {
                state[v] = 2;
                stack.pop_back();
            }
        }
    }
    return {};
}

}  // namespace

CausalGraph orient_edges(const Skeleton& skeleton, Diagnostics* diag) {
    const auto n = skeleton.node_count;
    Pdag g(skeleton);

    auto orient_once = [&](std::size_t from, std::size_t to, const nlohmann::json& why) {
        if (g.directed(to, from)) {
            if (diag != nullptr) {
                diag->add("orientation_conflict", {{"kept", {to, from}}, {"rejected", {from, to}}, {"triple", why}});
            }
            return;
        }
        g.orient(from, to);
    };

    // Unshielded colliders, triples visited by (middle, i, j) ascending.
    for (std::size_t k = 0; k < n; ++k) {
        const auto nb = skeleton.neighbors(k);
        for (std::size_t x = 0; x < nb.size(); ++x) {
            for (std::size_t y = x + 1; y < nb.size(); ++y) {
                const auto i = nb[x];
                const auto j = nb[y];
                if (skeleton.adjacent(i, j) || skeleton.sepsets.find(i, j) == nullptr ||
                    skeleton.sepsets.contains(i, j, k)) {
                    continue;
                }
                const nlohmann::json triple = {i, k, j};
                orient_once(i, k, triple);
                orient_once(j, k, triple);
            }
        }
    }

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                if (a == b || !g.undirected(a, b)) {
                    continue;
                }
                if (meek_r1(g, a, b) || meek_r2(g, a, b) || meek_r3(g, a, b) || meek_r4(g, a, b)) {
                    g.orient(a, b);
                    changed = true;
                }
            }
        }
    }

    CausalGraph out(n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (g.directed(a, b) && !g.directed(b, a)) {
                out.add_edge(static_cast<EventType>(a), static_cast<EventType>(b),
                             std::clamp(skeleton.edge_strength(a, b), 0.0, 1.0));
            }
        }
    }

    for (auto cycle = find_cycle(out); !cycle.empty(); cycle = find_cycle(out)) {
        auto weakest = cycle.front();
        double weakest_strength = 2.0;
        for (const auto& [s, d] : cycle) {
            const double st = *out.strength(static_cast<EventType>(s), static_cast<EventType>(d));
            if (st < weakest_strength || (st == weakest_strength && std::pair{s, d} < weakest)) {
                weakest = {s, d};
                weakest_strength = st;
            }
        }
        out.remove_edge(static_cast<EventType>(weakest.first), static_cast<EventType>(weakest.second));
        if (diag != nullptr) {
            diag->add("cycle_repair", {{"removed", {weakest.first, weakest.second}}, {"strength", weakest_strength}});
        }
    }
    return out;
}

CausalGraph discover(std::span<const Session> sessions, const EventCatalog& catalog, const DiscoveryOptions& opts,
                     Diagnostics* diag) {
    const auto table = build_table(sessions, catalog, opts.features);
    if (table.row_count() < kMinCorrelationRows) {
        throw InsufficientDataError(table.row_count(), kMinCorrelationRows);
    }
    const auto skeleton = pc_skeleton(table, opts.pc, diag);
    return orient_edges(skeleton, diag);
}

}  // namespace seqcause
