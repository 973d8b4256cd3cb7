#include "seqcause/service/store.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "seqcause/event_io.hpp"

namespace seqcause::service {

namespace fs = std::filesystem;

fs::path default_data_dir() {
    if (const char* env = std::getenv("SEQCAUSE_DATA_DIR"); env && *env) {
        return env;
    }
    return "seqcause-data";
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp-" + new_id("");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            throw Error("short write to " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string new_id(std::string_view prefix) {
    static std::mutex mu;
    static std::mt19937_64 gen{std::random_device{}()};
    std::uint64_t r;
    {
        std::lock_guard lock(mu);
        r = gen();
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(r));
    return std::string(prefix) + buf;
}

std::string to_string(Status s) {
    switch (s) {
        case Status::queued: return "queued";
        case Status::running: return "running";
        case Status::done: return "done";
        case Status::failed: return "failed";
    }
    return "failed";
}

Status status_from_string(const std::string& s) {
    if (s == "queued") return Status::queued;
    if (s == "running") return Status::running;
    if (s == "done") return Status::done;
    if (s == "failed") return Status::failed;
    throw Error("unknown status '" + s + "'");
}

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

nlohmann::json AnalysisSnapshot::record_json() const {
    nlohmann::json j = {{"id", id},
                        {"dataset_id", dataset_id},
                        {"status", to_string(status)},
                        {"config", config.to_json()},
                        {"config_hash", config.hash()},
                        {"timing", {{"created_ms", created_ms}, {"started_ms", started_ms}, {"finished_ms", finished_ms}}}};
    if (!reason.empty()) {
        j["reason"] = reason;
    }
    if (view) {
        const auto& summary = view->payload.at("summary");
        j["k"] = summary.at("k");
        j["converged"] = summary.at("converged");
        j["iterations"] = summary.at("iterations");
    }
    return j;
}

Store::Store(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_ / "datasets");
    fs::create_directories(root_ / "analyses");
    load();
}

fs::path Store::payload_path(const std::string& id) const {
    return root_ / "analyses" / (id + ".payload.json");
}

fs::path Store::diagnostics_path(const std::string& id) const {
    return root_ / "analyses" / (id + ".diagnostics.jsonl");
}

void Store::load() {
    for (const auto& entry : fs::directory_iterator(root_ / "datasets")) {
        if (entry.path().extension() != ".json") {
            continue;
        }
        auto j = nlohmann::json::parse(read_file(entry.path()));
        auto ds = std::make_shared<DatasetEntry>();
        ds->id = j.at("id").get<std::string>();
        ds->source = j.value("source", "");
        ds->data = dataset_from_json(j.at("dataset"));
        datasets_.emplace(ds->id, std::move(ds));
    }
    for (const auto& entry : fs::directory_iterator(root_ / "analyses")) {
        const auto name = entry.path().filename().string();
        if (name.size() < 12 || name.substr(name.size() - 12) != ".record.json") {
            continue;
        }
        auto j = nlohmann::json::parse(read_file(entry.path()));
        auto snap = std::make_shared<AnalysisSnapshot>();
        snap->id = j.at("id").get<std::string>();
        snap->dataset_id = j.at("dataset_id").get<std::string>();
        snap->config = AnalysisConfig::from_json(j.at("config"));
        snap->status = status_from_string(j.at("status").get<std::string>());
        snap->reason = j.value("reason", "");
        const auto& t = j.at("timing");
        snap->created_ms = t.value("created_ms", std::int64_t{0});
        snap->started_ms = t.value("started_ms", std::int64_t{0});
        snap->finished_ms = t.value("finished_ms", std::int64_t{0});
        if (snap->status == Status::done) {
            snap->view = std::make_shared<AnalysisView>(
                AnalysisView::from_payload(nlohmann::json::parse(read_file(payload_path(snap->id)))));
        } else if (snap->status != Status::failed) {
            snap->status = Status::failed;
            snap->reason = "interrupted by service shutdown";
            write_file_atomic(entry.path(), snap->record_json().dump(2));
        }
        analyses_.emplace(snap->id, std::move(snap));
    }
}

std::string Store::add_dataset(Dataset data, std::string source) {
    auto entry = std::make_shared<DatasetEntry>();
    entry->id = new_id("ds_");
    entry->source = std::move(source);
    entry->data = std::move(data);
    nlohmann::json j = {{"id", entry->id}, {"source", entry->source}, {"dataset", dataset_to_json(entry->data)}};
    write_file_atomic(root_ / "datasets" / (entry->id + ".json"), j.dump());
    std::lock_guard lock(mu_);
    auto id = entry->id;
    datasets_.emplace(id, std::move(entry));
    return id;
}

std::shared_ptr<const DatasetEntry> Store::dataset(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = datasets_.find(id);
    return it == datasets_.end() ? nullptr : it->second;
}

bool Store::remove_dataset(const std::string& id) {
    std::lock_guard lock(mu_);
    if (datasets_.erase(id) == 0) {
        return false;
    }
    std::error_code ec;
    fs::remove(root_ / "datasets" / (id + ".json"), ec);
    return true;
}

std::vector<std::string> Store::dataset_ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> ids;
    for (const auto& [id, entry] : datasets_) {
        ids.push_back(id);
    }
    return ids;
}

void Store::publish(std::shared_ptr<const AnalysisSnapshot> snap, const std::string& diagnostics_jsonl) {
    if (snap->status == Status::done) {
        write_file_atomic(payload_path(snap->id), snap->view->payload.dump());
        write_file_atomic(diagnostics_path(snap->id), diagnostics_jsonl);
    }
    write_file_atomic(root_ / "analyses" / (snap->id + ".record.json"), snap->record_json().dump(2));
    std::lock_guard lock(mu_);
    analyses_[snap->id] = std::move(snap);
}

std::shared_ptr<const AnalysisSnapshot> Store::analysis(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = analyses_.find(id);
    return it == analyses_.end() ? nullptr : it->second;
}

std::vector<std::string> Store::analysis_ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> ids;
    for (const auto& [id, snap] : analyses_) {
        ids.push_back(id);
    }
    return ids;
}

}  // namespace seqcause::service
