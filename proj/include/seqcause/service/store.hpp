#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "seqcause/error.hpp"
#include "seqcause/event_model.hpp"
#include "seqcause/service/config.hpp"
#include "seqcause/service/pipeline.hpp"

namespace seqcause::service {

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// $SEQCAUSE_DATA_DIR, else ./seqcause-data.
std::filesystem::path default_data_dir();

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// prefix + 16 random hex digits.
std::string new_id(std::string_view prefix);

enum class Status { queued, running, done, failed };
std::string to_string(Status s);
Status status_from_string(const std::string& s);

struct DatasetEntry {
    std::string id;
    std::string source;
    Dataset data;
};

/// Immutable once published; a newer snapshot replaces it wholesale.
struct AnalysisSnapshot {
    std::string id;
    std::string dataset_id;
    AnalysisConfig config;
    Status status = Status::queued;
    std::string reason;
    std::int64_t created_ms = 0;
    std::int64_t started_ms = 0;
    std::int64_t finished_ms = 0;
    std::shared_ptr<const AnalysisView> view;  // set iff done

    nlohmann::json record_json() const;
};

/// File-backed registry of datasets and analyses under one directory.
/// Everything on disk is loaded at construction; analyses that were still
/// queued or running are marked failed.
class Store {
public:
    explicit Store(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }

    std::string add_dataset(Dataset data, std::string source);
    std::shared_ptr<const DatasetEntry> dataset(const std::string& id) const;
    bool remove_dataset(const std::string& id);
    std::vector<std::string> dataset_ids() const;

    /// Persists the record (and the payload and diagnostics when done)
    /// before making the snapshot visible to readers.
    void publish(std::shared_ptr<const AnalysisSnapshot> snap, const std::string& diagnostics_jsonl = "");
    std::shared_ptr<const AnalysisSnapshot> analysis(const std::string& id) const;
    std::vector<std::string> analysis_ids() const;

    std::filesystem::path payload_path(const std::string& analysis_id) const;
    std::filesystem::path diagnostics_path(const std::string& analysis_id) const;

private:
    void load();

    std::filesystem::path root_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<const DatasetEntry>> datasets_;
    std::map<std::string, std::shared_ptr<const AnalysisSnapshot>> analyses_;
};

std::int64_t now_ms();

}  // namespace seqcause::service
