// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run every criterion
//   acceptance <name>...  run the named ones (see kCriteria)

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "seqcause/discovery.hpp"
#include "seqcause/event_io.hpp"
#include "seqcause/layout.hpp"
#include "seqcause/patterns.hpp"
#include "seqcause/service/http_api.hpp"
#include "seqcause/service/job_runner.hpp"
#include "seqcause/service/pipeline.hpp"
#include "seqcause/service/store.hpp"
#include "seqcause/state_grouping.hpp"
#include "seqcause/synthetic.hpp"
#include "support.hpp"

#include <httplib.h>

namespace fs = std::filesystem;
using namespace seqcause;
using namespace testsupport;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---------------------------------------------------------------- kernel

// Solves A x = b by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const auto n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) {
                piv = r;
            }
        }
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) {
            s -= a[c][k] * x[k];
        }
        x[c] = s / a[c][c];
    }
    return x;
}

// Correlation of the residuals of i and j after regressing both on z.
double residual_partial(const Eigen::MatrixXd& r, std::size_t i, std::size_t j, const std::vector<std::size_t>& z) {
    if (z.empty()) {
        return r(i, j);
    }
    std::vector<std::vector<double>> rzz(z.size(), std::vector<double>(z.size()));
    std::vector<double> rzi(z.size()), rzj(z.size());
    for (std::size_t a = 0; a < z.size(); ++a) {
        for (std::size_t b = 0; b < z.size(); ++b) {
            rzz[a][b] = r(z[a], z[b]);
        }
        rzi[a] = r(z[a], i);
        rzj[a] = r(z[a], j);
    }
    const auto bi = solve(rzz, rzi);
    const auto bj = solve(rzz, rzj);
    double cij = r(i, j), cii = 1.0, cjj = 1.0;
    for (std::size_t a = 0; a < z.size(); ++a) {
        cij -= bi[a] * rzj[a];
        cii -= bi[a] * rzi[a];
        cjj -= bj[a] * rzj[a];
    }
    return cij / std::sqrt(cii * cjj);
}

Outcome partial_correlation_kernel() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(20240601);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    bool empty_exact = true;
    std::size_t checks = 0;
    for (int m = 0; m < 100; ++m) {
        const std::size_t d = 3 + static_cast<std::size_t>(m % 6);
        Eigen::MatrixXd a(d, d + 3);
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
            for (Eigen::Index c = 0; c < a.cols(); ++c) {
                a(r, c) = normal(gen);
            }
        }
        Eigen::MatrixXd s = a * a.transpose();
        CorrelationMatrix corr;
        corr.values.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                corr.values(i, j) = i == j ? 1.0 : s(i, j) / std::sqrt(s(i, i) * s(j, j));
            }
        }
        corr.samples = 1000;
        corr.constant.assign(d, false);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i + 1; j < d; ++j) {
                std::vector<std::size_t> rest;
                for (std::size_t k = 0; k < d; ++k) {
                    if (k != i && k != j) {
                        rest.push_back(k);
                    }
                }
                // Every subset of the remaining variables.
                for (std::size_t mask = 0; mask < (std::size_t{1} << rest.size()); ++mask) {
                    std::vector<std::size_t> z;
                    for (std::size_t b = 0; b < rest.size(); ++b) {
                        if (mask & (std::size_t{1} << b)) {
                            z.push_back(rest[b]);
                        }
                    }
                    const double got = partial_correlation(corr, i, j, z);
                    const double want = residual_partial(corr.values, i, j, z);
                    if (z.empty() && got != corr.values(i, j)) {
                        empty_exact = false;
                    }
                    worst = std::max(worst, std::abs(got - want));
                    ++checks;
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    const bool ok = worst <= 1e-6 && empty_exact && secs < 5.0;
    return {ok, std::to_string(checks) + " pairs/sets, max |err| " + fmt("%.2e", worst) +
                    (empty_exact ? ", Z=empty exact" : ", Z=empty NOT exact") + fmt(", %.2fs (< 5s)", secs)};
}

// ---------------------------------------------------------------- calibration

Outcome ci_calibration() {
    const auto t0 = Clock::now();
    double retained = 0.0;
    for (int d = 0; d < 50; ++d) {
        std::mt19937_64 gen(1000 + d);
        std::normal_distribution<double> normal;
        FeatureTable table;
        table.columns = 4;
        for (int r = 0; r < 2000; ++r) {
            FeatureVector row(4);
            for (auto& v : row) {
                v = std::llround(normal(gen) * 1e6);
            }
            table.rows.push_back(std::move(row));
            table.row_origin.push_back({static_cast<std::size_t>(r), 1});
        }
        table.constant_columns.assign(4, false);
        PcOptions opts;
        opts.alpha = 0.05;
        const auto sk = pc_skeleton(table, opts);
        retained += static_cast<double>(sk.edges().size()) / 6.0;
    }
    const double mean = retained / 50.0;
    const double secs = seconds_since(t0);
    return {mean <= 0.15 && secs < 30.0,
            fmt("mean retained-edge fraction %.4f (<= 0.15)", mean) + fmt(", %.2fs (< 30s)", secs)};
}

// ---------------------------------------------------------------- recovery

Dataset sample_preprocessed(const GroundTruth& truth, std::size_t n, std::uint64_t seed, SyntheticSample* keep = nullptr) {
    auto sample = sample_sequences(truth, n, kSequenceLength, seed);
    auto ds = preprocess(sample.dataset, benchmark_preprocess());
    if (keep) {
        *keep = std::move(sample);
    }
    return ds;
}

Outcome structure_recovery() {
    const auto t0 = Clock::now();
    const std::vector<std::pair<std::string, CausalGraph>> dags = {
        {"chain", chain_dag()}, {"fork", fork_dag()}, {"collider", collider_dag()}};
    double total = 0.0;
    std::string per;
    for (const auto& [name, g] : dags) {
        double sum = 0.0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto truth = make_truth({g});
            const auto ds = sample_preprocessed(truth, 500, seed);
            const auto found = discover(ds.sessions, ds.catalog);
            const auto mapped = remap_graph(found, ds.catalog, synthetic_catalog(5));
            sum += edge_score(g, mapped).f1;
        }
        total += sum;
        per += " " + name + fmt("=%.3f", sum / 5.0);
    }
    const double mean = total / 15.0;
    const double secs = seconds_since(t0);
    return {mean >= 0.7 && secs < 120.0,
            fmt("mean directed-edge F1 %.3f (>= 0.7);", mean) + per + fmt(", %.1fs (< 120s)", secs)};
}

Outcome mixture_recovery() {
    const auto t0 = Clock::now();
    double ari = 0.0, f1 = 0.0;
    std::string ks;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto truth = make_truth({mixture_dag_a(), mixture_dag_b()});
        SyntheticSample sample;
        const auto ds = sample_preprocessed(truth, 300, seed, &sample);
        StateConfig cfg;
        const auto states = detect_states(ds, cfg);
        const auto m = score_recovery(sample.truth, states, ds);
        ari += m.ari / 5.0;
        double state_f1 = 0.0;
        for (const auto& s : m.per_state) {
            state_f1 += s.f1 / static_cast<double>(m.per_state.size());
        }
        f1 += state_f1 / 5.0;
        ks += (ks.empty() ? "" : ",") + std::to_string(states.k());
    }
    const double secs = seconds_since(t0);
    return {ari >= 0.8 && f1 >= 0.6 && secs < 300.0,
            fmt("mean ARI %.3f (>= 0.8)", ari) + fmt(", mean per-state F1 %.3f (>= 0.6)", f1) + ", K per seed " + ks +
                fmt(", %.1fs (< 300s)", secs)};
}

// ---------------------------------------------------------------- mining

Outcome pattern_oracle() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(77);
    const double supports[] = {0.1, 0.2, 0.25, 1.0 / 3.0, 0.4, 0.5, 2.0 / 3.0, 0.75, 1.0};
    std::size_t corpora = 0, mismatches = 0, patterns = 0;
    for (int c = 0; c < 300; ++c) {
        const std::size_t n = 1 + gen() % 6;
        const std::size_t alphabet = 2 + gen() % 3;
        std::vector<std::vector<EventType>> db(n);
        for (auto& seq : db) {
            const std::size_t len = gen() % 7;
            for (std::size_t i = 0; i < len; ++i) {
                seq.push_back(static_cast<EventType>(gen() % alphabet));
            }
        }
        const double min_support = supports[gen() % std::size(supports)];
        const std::size_t max_len = 1 + gen() % 6;

        // Brute force: every index subset of every sequence.
        std::map<std::vector<EventType>, std::size_t> count;
        for (const auto& seq : db) {
            std::set<std::vector<EventType>> subs;
            for (std::size_t mask = 1; mask < (std::size_t{1} << seq.size()); ++mask) {
                std::vector<EventType> sub;
                for (std::size_t i = 0; i < seq.size(); ++i) {
                    if (mask & (std::size_t{1} << i)) {
                        sub.push_back(seq[i]);
                    }
                }
                if (sub.size() <= max_len) {
                    subs.insert(std::move(sub));
                }
            }
            for (const auto& s : subs) {
                ++count[s];
            }
        }
        std::map<std::vector<EventType>, std::pair<std::size_t, double>> want;
        for (const auto& [p, k] : count) {
            const double support = static_cast<double>(k) / static_cast<double>(n);
            if (support >= min_support) {
                want[p] = {k, support};
            }
        }
        std::map<std::vector<EventType>, std::pair<std::size_t, double>> got;
        for (const auto& p : mine_patterns(db, min_support, max_len)) {
            got[p.events] = {p.count, p.support};
        }
        ++corpora;
        patterns += want.size();
        if (got != want) {
            ++mismatches;
        }
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && corpora >= 200,
            std::to_string(corpora) + " corpora, " + std::to_string(patterns) + " patterns, " +
                std::to_string(mismatches) + " mismatching" + fmt(", %.2fs", secs)};
}

// ---------------------------------------------------------------- layout

struct LayoutTally {
    std::size_t layouts = 0;
    std::size_t rank_violations = 0;
    std::size_t unconverged = 0;
    std::size_t slope_violations = 0;
    std::size_t bar_violations = 0;
    std::size_t max_iterations = 0;
};

void check_layout(const std::vector<EventType>& pattern, const CausalGraph& g, LayoutTally& t) {
    const FlowConfig cfg;
    const auto lay = flow_layout(pattern, g, cfg);
    ++t.layouts;
    t.max_iterations = std::max(t.max_iterations, lay.iterations);
    if (!lay.converged || lay.iterations > 300 || lay.max_displacement >= 1e-3) {
        ++t.unconverged;
    }
    const auto& nodes = lay.nodes;
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        std::size_t causes = 0;
        for (std::size_t b = 0; b < nodes.size(); ++b) {
            if (a != b && g.has_edge(nodes[b].event, nodes[a].event)) {
                ++causes;
                if (nodes[b].rank >= nodes[a].rank) {
                    ++t.rank_violations;
                }
            }
        }
        std::size_t flows_in = 0;
        for (const auto& f : lay.flows) {
            flows_in += f.dst == a;
        }
        if (nodes[a].bar_length != causes || flows_in != causes) {
            ++t.bar_violations;
        }
    }
    for (const auto& ch : lay.structures.chains) {
        const double xa = nodes[ch.a].x, xm = nodes[ch.mid].x, xc = nodes[ch.c].x;
        if (std::abs(xm - 0.5 * (xa + xc)) > 0.25 * std::abs(xc - xa) + cfg.tol) {
            ++t.slope_violations;
        }
    }
}

Outcome layout_invariants() {
    const auto t0 = Clock::now();
    LayoutTally t;
    service::AnalysisConfig cfg;
    cfg.session_interval_ms = kInterval;
    const std::vector<std::vector<CausalGraph>> suites = {
        {chain_dag()}, {fork_dag()}, {collider_dag()}, {mixture_dag_a(), mixture_dag_b()}};
    for (std::size_t s = 0; s < suites.size(); ++s) {
        const auto sample = sample_sequences(make_truth(suites[s]), suites[s].size() == 1 ? 500 : 300, kSequenceLength, 1);
        const auto view = service::AnalysisView::from_payload(service::run_pipeline(sample.dataset, cfg).payload);
        for (std::size_t g = 0; g < view.graphs.size(); ++g) {
            for (const auto& p : view.patterns[g]) {
                check_layout(p.events, view.graphs[g], t);
            }
        }
        // The generating DAGs themselves, against every pattern mined anywhere.
        for (const auto& truth_dag : suites[s]) {
            const auto mapped = remap_graph(truth_dag, synthetic_catalog(5), view.catalog);
            for (const auto& pats : view.patterns) {
                for (const auto& p : pats) {
                    check_layout(p.events, mapped, t);
                }
            }
        }
    }
    const LayoutTally pipeline = t;
    // Denser 12-node graphs with random patterns of up to 12 events.
    Rng rng(99);
    for (int r = 0; r < 200; ++r) {
        const auto g = random_dag(12, 0.1 + 0.4 * rng.uniform(), 500 + static_cast<std::uint64_t>(r));
        std::vector<EventType> pattern;
        const std::size_t len = 1 + rng.below(12);
        for (std::size_t i = 0; i < len; ++i) {
            pattern.push_back(static_cast<EventType>(rng.below(12)));
        }
        check_layout(pattern, g, t);
    }
    const double secs = seconds_since(t0);
    const bool ok = t.rank_violations == 0 && t.unconverged == 0 && t.slope_violations == 0 && t.bar_violations == 0;
    return {ok, std::to_string(t.layouts) + " layouts: rank " + std::to_string(t.rank_violations) + ", unconverged " +
                    std::to_string(t.unconverged) + " (max " + std::to_string(t.max_iterations) + " iters), slope " +
                    std::to_string(t.slope_violations) + ", bars " + std::to_string(t.bar_violations) +
                    " violations (pipeline graphs: " + std::to_string(pipeline.layouts) + " layouts, " +
                    std::to_string(pipeline.unconverged) + " unconverged, " + std::to_string(pipeline.slope_violations) +
                    " slope)" + fmt(", %.1fs", secs)};
}

// ---------------------------------------------------------------- determinism

std::string run_capture(const std::string& cmd) {
    std::string out;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) {
        return out;
    }
    char buf[256];
    while (std::fgets(buf, sizeof buf, p)) {
        out += buf;
    }
    if (pclose(p) != 0) {
        throw std::runtime_error("command failed: " + cmd);
    }
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) {
        out.pop_back();
    }
    return out;
}

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("seqcause-acceptance-" + name + "-" + service::new_id(""));
    fs::create_directories(dir);
    return dir;
}

std::string csv_of(const Dataset& ds) {
    std::ostringstream out;
    write_csv(out, ds);
    return out.str();
}

Outcome end_to_end_determinism() {
    const auto t0 = Clock::now();
    const auto dir = scratch_dir("e2e");
    const auto sample = sample_sequences(make_truth({mixture_dag_a(), mixture_dag_b()}), 300, kSequenceLength, 7);
    service::write_file_atomic(dir / "events.csv", csv_of(sample.dataset));
    std::vector<std::string> exports;
    std::vector<std::string> diags;
    for (int run = 0; run < 2; ++run) {
        const auto data = dir / ("data" + std::to_string(run));
        const auto out = dir / ("export" + std::to_string(run));
        const std::string cli = std::string("SEQCAUSE_DATA_DIR='") + data.string() + "' '" + SEQCAUSE_CLI + "' ";
        const auto ds_id = run_capture(cli + "ingest '" + (dir / "events.csv").string() + "' 2>/dev/null");
        const auto an_id = run_capture(cli + "analyze " + ds_id + " --interval 60000 --seed 7 2>/dev/null");
        run_capture(cli + "export " + an_id + " --out '" + out.string() + "' 2>/dev/null");
        exports.push_back(service::read_file(out / "analysis.json"));
        diags.push_back(service::read_file(out / "diagnostics.jsonl"));
    }
    fs::remove_all(dir);
    const bool same = exports[0] == exports[1] && diags[0] == diags[1];
    return {same && !exports[0].empty(),
            std::string(same ? "byte-identical" : "DIFFERENT") + " exports (" + std::to_string(exports[0].size()) +
                " bytes)" + fmt(", %.1fs", seconds_since(t0))};
}

// ---------------------------------------------------------------- API

struct ApiCheck {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok) {
            failures.push_back(what);
        }
    }
};

bool has_keys(const nlohmann::json& j, std::initializer_list<const char*> keys) {
    if (!j.is_object()) {
        return false;
    }
    for (const auto* k : keys) {
        if (!j.contains(k)) {
            return false;
        }
    }
    return true;
}

bool valid_graph_entry(const nlohmann::json& g) {
    return has_keys(g, {"index", "count", "graph", "columns", "glyphs"}) && has_keys(g["graph"], {"nodes", "edges"}) &&
           g["columns"].is_array() && g["glyphs"].is_array() &&
           std::all_of(g["glyphs"].begin(), g["glyphs"].end(),
                       [](const auto& gl) { return has_keys(gl, {"type", "frequency", "quarter_dist", "type_color"}); });
}

bool valid_payload(const nlohmann::json& p) {
    if (!has_keys(p, {"config", "config_hash", "catalog", "summary", "graphs", "sessions", "sequence_groups"})) {
        return false;
    }
    const auto k = p["summary"].value("k", std::size_t{0});
    if (k == 0 || p["graphs"].size() != k) {
        return false;
    }
    for (const auto& g : p["graphs"]) {
        if (!valid_graph_entry(g) || !g.contains("patterns")) {
            return false;
        }
    }
    return true;
}

Outcome api_contract() {
    const auto t0 = Clock::now();
    const auto dir = scratch_dir("api");
    ApiCheck chk;
    {
        service::Store store(dir);
        service::JobRunner runner(store, 2);
        auto server = service::make_server(store, runner);
        const int port = server->bind_to_any_port("127.0.0.1");
        std::thread listener([&] { server->listen_after_bind(); });
        server->wait_until_ready();
        httplib::Client cli("127.0.0.1", port);
        cli.set_read_timeout(60, 0);

        auto json_of = [](const httplib::Result& r) {
            return r ? nlohmann::json::parse(r->body, nullptr, false) : nlohmann::json();
        };
        auto status_of = [](const httplib::Result& r) { return r ? r->status : -1; };

        // Datasets.
        const auto sample = sample_sequences(make_truth({mixture_dag_a(), mixture_dag_b()}), 300, kSequenceLength, 3);
        const auto csv = csv_of(sample.dataset);
        auto r = cli.Post("/datasets", csv, "text/csv");
        chk.expect(status_of(r) == 201, "POST /datasets -> 201");
        const auto created = json_of(r);
        chk.expect(has_keys(created, {"id", "event_count", "sequence_count", "catalog"}), "dataset schema");
        const auto ds_id = created.value("id", "");
        chk.expect(created.value("event_count", 0ul) == sample.dataset.event_count(), "event count echoed");

        r = cli.Get("/datasets/" + ds_id);
        chk.expect(status_of(r) == 200 && json_of(r).value("event_count", 0ul) == sample.dataset.event_count(),
                   "GET /datasets/{id}");
        chk.expect(status_of(cli.Get("/datasets/nope")) == 404, "GET unknown dataset -> 404");
        chk.expect(status_of(cli.Post("/datasets", "", "text/csv")) == 422, "empty upload -> 422");
        r = cli.Post("/datasets", "sequence_id,timestamp,event_type\ns1,10,a\ns1,oops,b\n", "text/csv");
        chk.expect(status_of(r) == 422 && json_of(r).value("row", 0) == 2, "bad row -> 422 with row");
        r = cli.Post("/datasets", "sequence_id,timestamp,event_type\ns1,10,a\n", "text/csv");
        const auto dup_a = json_of(r).value("id", "");
        r = cli.Post("/datasets", "sequence_id,timestamp,event_type\ns1,10,a\n", "text/csv");
        chk.expect(status_of(r) == 201 && json_of(r).value("id", "") != dup_a, "duplicate upload -> new id");

        // Analysis submission errors.
        chk.expect(status_of(cli.Post("/analyses", R"({"dataset_id":"nope","config":{"session_interval_ms":1000}})",
                                      "application/json")) == 404,
                   "analysis on unknown dataset -> 404");
        chk.expect(status_of(cli.Post("/analyses",
                                      nlohmann::json{{"dataset_id", ds_id}, {"config", {{"session_interval_ms", 60000}, {"alpha", 2}}}}.dump(),
                                      "application/json")) == 422,
                   "invalid config -> 422");
        chk.expect(status_of(cli.Post("/analyses", nlohmann::json{{"dataset_id", ds_id}}.dump(), "application/json")) == 422,
                   "missing interval -> 422");
        chk.expect(status_of(cli.Post("/analyses", "{", "application/json")) == 400, "malformed body -> 400");

        // A running job observed by 16 concurrent readers.
        std::atomic<int> reads_while_running{0};
        std::atomic<bool> release{false};
        runner.on_running([&](const std::string&) {
            const auto until = Clock::now() + std::chrono::seconds(20);
            while (reads_while_running.load() < 16 * 8 && Clock::now() < until) {
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
            }
            release = true;
        });
        r = cli.Post("/analyses",
                     nlohmann::json{{"dataset_id", ds_id}, {"config", {{"session_interval_ms", 60000}, {"seed", 3}}}}.dump(),
                     "application/json");
        chk.expect(status_of(r) == 202 && json_of(r).value("status", "") == "queued", "POST /analyses -> 202 queued");
        const auto an_id = json_of(r).value("id", "");

        std::atomic<int> violations{0};
        std::atomic<int> saw_409{0};
        std::mutex body_mu;
        std::string first_export;
        std::vector<std::thread> readers;
        for (int t = 0; t < 16; ++t) {
            readers.emplace_back([&, t] {
                httplib::Client c("127.0.0.1", port);
                c.set_read_timeout(60, 0);
                int after_done = 0;
                const auto until = Clock::now() + std::chrono::seconds(60);
                while (after_done < 3 && Clock::now() < until) {
                    auto st = c.Get("/analyses/" + an_id);
                    const auto rec = st ? nlohmann::json::parse(st->body, nullptr, false) : nlohmann::json();
                    const auto status = rec.value("status", "");
                    if (!st || st->status != 200 || (status != "queued" && status != "running" && status != "done")) {
                        ++violations;
                        break;
                    }
                    if (status == "done" && !rec.contains("k")) {
                        ++violations;
                    }
                    const char* paths[] = {"/graphs", "/export", "/graphs/0/patterns", "/graphs?sort=count"};
                    auto res = c.Get("/analyses/" + an_id + paths[t % 4]);
                    if (!res) {
                        ++violations;
                        break;
                    }
                    if (res->status == 409) {
                        ++saw_409;
                    } else if (res->status == 200) {
                        auto body = nlohmann::json::parse(res->body, nullptr, false);
                        bool ok = false;
                        if (t % 4 == 1) {
                            ok = valid_payload(body);
                            std::lock_guard lock(body_mu);
                            if (first_export.empty()) {
                                first_export = res->body;
                            } else if (first_export != res->body) {
                                ok = false;
                            }
                        } else if (t % 4 == 2) {
                            ok = has_keys(body, {"graph", "patterns"});
                        } else {
                            ok = has_keys(body, {"graphs"}) && !body["graphs"].empty() &&
                                 std::all_of(body["graphs"].begin(), body["graphs"].end(), valid_graph_entry);
                        }
                        if (!ok) {
                            ++violations;
                        }
                    } else {
                        ++violations;
                    }
                    if (status == "done" && res->status == 200) {
                        ++after_done;
                    }
                    if (!release) {
                        ++reads_while_running;
                    }
                }
                if (after_done < 3) {
                    ++violations;
                }
            });
        }
        for (auto& th : readers) {
            th.join();
        }
        runner.wait(an_id);
        runner.on_running(nullptr);
        chk.expect(violations == 0, "16 readers saw " + std::to_string(violations.load()) + " inconsistent responses");
        chk.expect(saw_409 > 0, "readers observed 409 while running");

        // Query endpoints on the finished analysis.
        r = cli.Get("/analyses/" + an_id);
        const auto record = json_of(r);
        chk.expect(status_of(r) == 200 && record.value("status", "") == "done" &&
                       has_keys(record, {"id", "dataset_id", "config", "config_hash", "timing", "k", "converged"}),
                   "GET /analyses/{id} schema");
        chk.expect(status_of(cli.Get("/analyses/nope")) == 404, "unknown analysis -> 404");
        chk.expect(status_of(cli.Get("/analyses/nope/graphs")) == 404, "unknown analysis graphs -> 404");

        const auto payload = json_of(cli.Get("/analyses/" + an_id + "/export"));
        chk.expect(valid_payload(payload), "export schema");
        const auto view = service::AnalysisView::from_payload(payload);

        auto graphs = json_of(cli.Get("/analyses/" + an_id + "/graphs?sort=count"))["graphs"];
        bool sorted = graphs.size() == view.graphs.size();
        for (std::size_t i = 1; i < graphs.size(); ++i) {
            sorted = sorted && graphs[i - 1]["count"].get<std::size_t>() >= graphs[i]["count"].get<std::size_t>();
        }
        chk.expect(sorted, "graphs?sort=count descending");
        chk.expect(status_of(cli.Get("/analyses/" + an_id + "/graphs?sort=bogus")) == 422, "bad sort -> 422");

        std::size_t edge_queries = 0;
        for (const auto& g : view.graphs) {
            for (const auto& e : g.edges()) {
                const auto q = "/analyses/" + an_id + "/graphs?edge=" + view.catalog.label(e.src) + "," +
                               view.catalog.label(e.dst);
                const auto got = json_of(cli.Get(q))["graphs"].get<std::vector<std::size_t>>();
                std::vector<std::size_t> want;
                for (std::size_t k = 0; k < view.graphs.size(); ++k) {
                    if (view.graphs[k].has_edge(e.src, e.dst)) {
                        want.push_back(k);
                    }
                }
                chk.expect(got == want, "edge query " + q);
                ++edge_queries;
            }
        }
        chk.expect(status_of(cli.Get("/analyses/" + an_id + "/graphs?edge=zz,e1")) == 422, "unknown edge label -> 422");

        for (std::size_t g = 0; g < view.graphs.size(); ++g) {
            const auto base = "/analyses/" + an_id + "/graphs/" + std::to_string(g);
            auto all = json_of(cli.Get(base + "/patterns"))["patterns"];
            chk.expect(all.size() == view.patterns[g].size(), "unfiltered pattern list");
            for (EventType root = 0; root < view.catalog.size(); ++root) {
                if (!view.graphs[g].parents(root).empty()) {
                    continue;
                }
                auto pats = json_of(cli.Get(base + "/patterns?target=" + view.catalog.label(root)))["patterns"];
                bool only_root = true;
                for (const auto& p : pats) {
                    for (auto e : p["event_ids"]) {
                        only_root = only_root && e.get<EventType>() == root;
                    }
                }
                chk.expect(only_root, "target=root yields patterns over the root only");
            }
            std::vector<std::string> sub;
            for (const auto& e : view.graphs[g].edges()) {
                sub = {view.catalog.label(e.src), view.catalog.label(e.dst)};
                break;
            }
            if (!sub.empty()) {
                auto pats = json_of(cli.Get(base + "/patterns?subgraph=" + sub[0] + "," + sub[1]))["patterns"];
                const auto idx = view.filter_patterns(g, std::vector<EventType>{*view.catalog.find(sub[0]), *view.catalog.find(sub[1])}, std::nullopt);
                chk.expect(pats.size() == idx.size(), "subgraph filter matches explained_by");
            }
            for (std::size_t p = 0; p < view.patterns[g].size(); ++p) {
                r = cli.Get(base + "/patterns/" + std::to_string(p) + "/flow");
                const auto flow = json_of(r);
                bool ok = status_of(r) == 200 && has_keys(flow, {"nodes", "flows"});
                if (ok) {
                    for (const auto& f : flow["flows"]) {
                        ok = ok && flow["nodes"][f["src"].get<std::size_t>()]["rank"].get<std::size_t>() <
                                       flow["nodes"][f["dst"].get<std::size_t>()]["rank"].get<std::size_t>();
                    }
                    for (const auto& n : flow["nodes"]) {
                        ok = ok && has_keys(n, {"event", "rank", "x", "bar_length"});
                    }
                }
                chk.expect(ok, base + "/patterns/" + std::to_string(p) + "/flow rank-monotone");
            }
            chk.expect(status_of(cli.Get(base + "/patterns/999999/flow")) == 404, "unknown pattern -> 404");
            if (!view.patterns[g].empty()) {
                const auto seqs = json_of(cli.Get("/analyses/" + an_id + "/sequences?graph=" + std::to_string(g) + "&pattern=0"));
                chk.expect(seqs.value("count", 0ul) == view.matching_sessions(g, 0).size() &&
                               seqs["sequences"].size() == seqs.value("count", 0ul),
                           "sequences count equals match_sequences");
            }
        }
        chk.expect(status_of(cli.Get("/analyses/" + an_id + "/graphs/999/patterns")) == 404, "unknown graph -> 404");
        const auto all_seqs = json_of(cli.Get("/analyses/" + an_id + "/sequences?graph=0"));
        chk.expect(all_seqs.value("count", 0ul) == view.sessions[0].size(), "sequences without pattern -> whole group");
        chk.expect(status_of(cli.Get("/analyses/" + an_id + "/sequences?graph=0&pattern=x")) == 422, "bad pattern index -> 422");

        // max_iter = 0 finishes unconverged.
        r = cli.Post("/analyses",
                     nlohmann::json{{"dataset_id", ds_id}, {"config", {{"session_interval_ms", 60000}, {"max_iter", 0}}}}.dump(),
                     "application/json");
        const auto zero_id = json_of(r).value("id", "");
        runner.wait(zero_id);
        const auto zero = json_of(cli.Get("/analyses/" + zero_id));
        chk.expect(zero.value("status", "") == "done" && zero.value("converged", true) == false, "max_iter=0 -> done, unconverged");

        // Dataset deleted while the job runs.
        runner.on_running([&](const std::string&) {
            cli.Delete("/datasets/" + ds_id);
        });
        r = cli.Post("/analyses",
                     nlohmann::json{{"dataset_id", ds_id}, {"config", {{"session_interval_ms", 60000}}}}.dump(),
                     "application/json");
        const auto doomed = json_of(r).value("id", "");
        runner.wait(doomed);
        runner.on_running(nullptr);
        const auto failed = json_of(cli.Get("/analyses/" + doomed));
        chk.expect(failed.value("status", "") == "failed" && failed.contains("reason") && !failed.contains("k"),
                   "dataset deleted mid-run -> failed with reason");
        chk.expect(status_of(cli.Get("/analyses/" + doomed + "/graphs")) == 409, "failed analysis -> 409, no graphs");
        chk.expect(status_of(cli.Get("/datasets/" + ds_id)) == 404, "deleted dataset -> 404");
        chk.expect(status_of(cli.Delete("/datasets/" + ds_id)) == 404, "second delete -> 404");
        chk.expect(status_of(cli.Delete("/datasets/" + dup_a)) == 204, "DELETE /datasets/{id} -> 204");

        server->stop();
        listener.join();
        chk.expect(edge_queries > 0, "at least one edge query ran");
    }
    fs::remove_all(dir);
    std::string detail = chk.failures.empty() ? "all endpoint checks passed" : std::to_string(chk.failures.size()) + " failed: ";
    for (std::size_t i = 0; i < chk.failures.size() && i < 5; ++i) {
        detail += (i ? "; " : "") + chk.failures[i];
    }
    return {chk.failures.empty(), detail + fmt(", %.1fs", seconds_since(t0))};
}

struct Criterion {
    const char* name;
    std::function<Outcome()> run;
};

const std::vector<Criterion> kCriteria = {
    {"partial-correlation", partial_correlation_kernel},
    {"ci-calibration", ci_calibration},
    {"structure-recovery", structure_recovery},
    {"mixture-recovery", mixture_recovery},
    {"pattern-oracle", pattern_oracle},
    {"layout-invariants", layout_invariants},
    {"determinism", end_to_end_determinism},
    {"api-contract", api_contract},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> wanted(argv + 1, argv + argc);
    int failures = 0;
    for (const auto& c : kCriteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) {
            continue;
        }
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
