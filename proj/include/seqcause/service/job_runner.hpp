#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "seqcause/service/config.hpp"
#include "seqcause/service/store.hpp"

namespace seqcause::service {

/// Bounded worker pool for analyses. Jobs on the same dataset run one at a
/// time in submission order; jobs on different datasets may overlap.
class JobRunner {
public:
    explicit JobRunner(Store& store, std::size_t workers = 2);
    ~JobRunner();

    JobRunner(const JobRunner&) = delete;
    JobRunner& operator=(const JobRunner&) = delete;

    /// Throws NotFoundError for an unknown dataset. The config must already
    /// be validated.
    std::string submit(const std::string& dataset_id, const AnalysisConfig& cfg);

    /// Blocks until the analysis is done or failed.
    void wait(const std::string& analysis_id);
    void wait_idle();

    /// Called on the worker thread right after an analysis is published as
    /// running. Test hook.
    void on_running(std::function<void(const std::string&)> hook);

private:
    struct Job {
        std::string analysis_id;
        std::string dataset_id;
    };

    void work();
    void run(const Job& job);

    Store& store_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Job> pending_;
    std::set<std::string> busy_datasets_;
    std::size_t active_ = 0;
    bool stopping_ = false;
    std::function<void(const std::string&)> on_running_;
    std::vector<std::thread> threads_;
};

}  // namespace seqcause::service
