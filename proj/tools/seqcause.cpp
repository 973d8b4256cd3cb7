#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "seqcause/event_io.hpp"
#include "seqcause/service/http_api.hpp"
#include "seqcause/service/job_runner.hpp"
#include "seqcause/service/store.hpp"
#include "seqcause/synthetic.hpp"

// After Eigen: <resolv.h> defines a macro that clashes with Eigen internals.
#include <CLI11.hpp>
#include <httplib.h>

namespace fs = std::filesystem;
using namespace seqcause;
using namespace seqcause::service;

namespace {

int ingest(Store& store, const std::string& file) {
    const auto bytes = read_file(file);
    auto ds = parse_events(read_records(bytes, detect_format(bytes)));
    const auto sequences = ds.sequences.size();
    const auto events = ds.event_count();
    const auto id = store.add_dataset(std::move(ds), fs::path(file).filename().string());
    std::cout << id << '\n';
    std::cerr << "ingested " << events << " events in " << sequences << " sequences\n";
    return 0;
}

int analyze(Store& store, const std::string& dataset_id, const AnalysisConfig& cfg) {
    cfg.validate();
    JobRunner runner(store, 1);
    const auto id = runner.submit(dataset_id, cfg);
    runner.wait(id);
    const auto snap = store.analysis(id);
    std::cout << id << '\n';
    if (snap->status != Status::done) {
        std::cerr << "analysis failed: " << snap->reason << '\n';
        return 1;
    }
    const auto& summary = snap->view->payload.at("summary");
    std::cerr << "done: " << summary.at("k") << " graphs, converged=" << summary.at("converged") << '\n';
    return 0;
}

std::shared_ptr<const AnalysisSnapshot> done_analysis(const Store& store, const std::string& id) {
    auto snap = store.analysis(id);
    if (!snap) {
        throw NotFoundError("unknown analysis '" + id + "'");
    }
    if (snap->status != Status::done) {
        throw Error("analysis is " + to_string(snap->status));
    }
    return snap;
}

int export_analysis(const Store& store, const std::string& id, const fs::path& out) {
    const auto snap = done_analysis(store, id);
    fs::create_directories(out);
    write_file_atomic(out / "analysis.json", snap->view->payload.dump(2) + "\n");
    write_file_atomic(out / "diagnostics.jsonl", read_file(store.diagnostics_path(id)));
    std::cerr << "wrote " << (out / "analysis.json").string() << '\n';
    return 0;
}

struct SimulateOptions {
    std::size_t states = 2;
    std::size_t nodes = 5;
    std::uint64_t seed = 1;
    std::size_t sequences = 300;
    std::size_t length = 20;
    double edge_prob = 0.4;
    double p_act = 0.9;
    double p_base = 0.05;
    fs::path out = ".";
};

int simulate(const SimulateOptions& o) {
    std::vector<CausalGraph> dags;
    for (std::size_t s = 0; s < o.states; ++s) {
        dags.push_back(random_dag(o.nodes, o.edge_prob, mix_seed(o.seed, 1000 + s)));
    }
    const auto truth = make_truth(std::move(dags), {o.p_base, o.p_act});
    const auto sample = sample_sequences(truth, o.sequences, o.length, o.seed);
    fs::create_directories(o.out);
    std::ostringstream csv;
    write_csv(csv, sample.dataset);
    write_file_atomic(o.out / "events.csv", csv.str());
    write_file_atomic(o.out / "truth.json", truth_to_json(sample.truth).dump(2) + "\n");
    std::cerr << "wrote " << sample.dataset.sequences.size() << " sequences to " << (o.out / "events.csv").string()
              << '\n';
    return 0;
}

int score(const Store& store, const fs::path& truth_file, const std::string& id) {
    const auto truth = truth_from_json(nlohmann::json::parse(read_file(truth_file)));
    const auto snap = done_analysis(store, id);
    const auto& view = *snap->view;
    std::vector<std::pair<std::string, std::size_t>> groups;
    for (const auto& sg : view.payload.at("sequence_groups")) {
        groups.emplace_back(sg.at("sequence_id").get<std::string>(), sg.at("group").get<std::size_t>());
    }
    std::cout << metrics_to_json(score_recovery(truth, view.graphs, view.catalog, groups)).dump(2) << '\n';
    return 0;
}

int serve(Store& store, const std::string& host, int port, std::size_t workers) {
    JobRunner runner(store, workers);
    auto server = make_server(store, runner);
    std::cerr << "listening on " << host << ':' << port << " (data in " << store.root().string() << ")\n";
    if (!server->listen(host, port)) {
        std::cerr << "cannot listen on " << host << ':' << port << '\n';
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal state discovery for event sequences"};
    app.require_subcommand(1);
    std::string data_dir;
    app.add_option("--data-dir", data_dir, "Data directory (default: $SEQCAUSE_DATA_DIR or ./seqcause-data)");

    std::string file;
    auto* ingest_cmd = app.add_subcommand("ingest", "Store a CSV or JSON-lines event file as a dataset");
    ingest_cmd->add_option("file", file)->required()->check(CLI::ExistingFile);

    std::string dataset_id;
    AnalysisConfig cfg;
    std::string config_file;
    auto* analyze_cmd = app.add_subcommand("analyze", "Run an analysis on a stored dataset");
    analyze_cmd->add_option("dataset-id", dataset_id)->required();
    analyze_cmd->add_option("--config", config_file, "JSON config; flags given explicitly override it");
    std::vector<std::pair<CLI::Option*, std::string>> flag_keys = {
        {analyze_cmd->add_option("--interval", cfg.session_interval_ms, "Session gap in milliseconds"),
         "session_interval_ms"},
        {analyze_cmd->add_option("--alpha", cfg.alpha), "alpha"},
        {analyze_cmd->add_option("--max-cond", cfg.max_cond_size), "max_cond_size"},
        {analyze_cmd->add_option("--support", cfg.min_support), "min_support"},
        {analyze_cmd->add_option("--max-len", cfg.max_pattern_len), "max_pattern_len"},
        {analyze_cmd->add_option("--max-patterns", cfg.max_patterns), "max_patterns"},
        {analyze_cmd->add_option("--eps", cfg.eps), "eps"},
        {analyze_cmd->add_option("--min-pts", cfg.min_pts), "min_pts"},
        {analyze_cmd->add_option("--max-iter", cfg.max_iter), "max_iter"},
        {analyze_cmd->add_option("--min-group", cfg.min_group_size), "min_group_size"},
        {analyze_cmd->add_option("--min-count", cfg.min_type_count), "min_type_count"},
        {analyze_cmd->add_option("--seed", cfg.seed), "seed"},
    };

    std::string analysis_id;
    std::string out_dir;
    auto* export_cmd = app.add_subcommand("export", "Write an analysis payload to a directory");
    export_cmd->add_option("analysis-id", analysis_id)->required();
    export_cmd->add_option("--out", out_dir)->required();

    SimulateOptions sim;
    std::string sim_out = ".";
    auto* sim_cmd = app.add_subcommand("simulate", "Sample sequences from random noisy-OR DAGs");
    sim_cmd->add_option("--states", sim.states)->check(CLI::PositiveNumber);
    sim_cmd->add_option("--nodes", sim.nodes)->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim.seed);
    sim_cmd->add_option("--sequences", sim.sequences, "Sequences per state");
    sim_cmd->add_option("--length", sim.length, "Steps per sequence")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--edge-prob", sim.edge_prob)->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--p-act", sim.p_act)->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--p-base", sim.p_base)->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--out", sim_out, "Output directory for events.csv and truth.json");

    std::string truth_file;
    auto* score_cmd = app.add_subcommand("score", "Compare an analysis against a simulation truth file");
    score_cmd->add_option("--truth", truth_file)->required()->check(CLI::ExistingFile);
    score_cmd->add_option("--analysis", analysis_id)->required();

    int port = 8080;
    std::string host = "127.0.0.1";
    std::size_t workers = 2;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    serve_cmd->add_option("--port", port);
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--workers", workers)->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim_cmd->parsed()) {
            sim.out = sim_out;
            return simulate(sim);
        }
        Store store(data_dir.empty() ? default_data_dir() : fs::path(data_dir));
        if (ingest_cmd->parsed()) {
            return ingest(store, file);
        }
        if (analyze_cmd->parsed()) {
            // Explicit flags override the config file.
            auto j = config_file.empty() ? nlohmann::json::object() : nlohmann::json::parse(read_file(config_file));
            const auto flags = cfg.to_json();
            for (const auto& [opt, key] : flag_keys) {
                if (opt->count() > 0) {
                    j[key] = flags[key];
                }
            }
            cfg = AnalysisConfig::from_json(j);
            return analyze(store, dataset_id, cfg);
        }
        if (export_cmd->parsed()) {
            return export_analysis(store, analysis_id, out_dir);
        }
        if (score_cmd->parsed()) {
            return score(store, truth_file, analysis_id);
        }
        if (serve_cmd->parsed()) {
            return serve(store, host, port, workers);
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error at " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
