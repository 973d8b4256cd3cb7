#include "seqcause/service/job_runner.hpp"

#include <algorithm>

namespace seqcause::service {

JobRunner::JobRunner(Store& store, std::size_t workers) : store_(store) {
    for (std::size_t i = 0; i < std::max<std::size_t>(workers, 1); ++i) {
        threads_.emplace_back([this] { work(); });
    }
}

JobRunner::~JobRunner() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) {
        t.join();
    }
}

void JobRunner::on_running(std::function<void(const std::string&)> hook) {
    std::lock_guard lock(mu_);
    on_running_ = std::move(hook);
}

std::string JobRunner::submit(const std::string& dataset_id, const AnalysisConfig& cfg) {
    if (!store_.dataset(dataset_id)) {
        throw NotFoundError("unknown dataset '" + dataset_id + "'");
    }
    auto snap = std::make_shared<AnalysisSnapshot>();
    snap->id = new_id("an_");
    snap->dataset_id = dataset_id;
    snap->config = cfg;
    snap->created_ms = now_ms();
    const auto id = snap->id;
    store_.publish(std::move(snap));
    {
        std::lock_guard lock(mu_);
        pending_.push_back({id, dataset_id});
    }
    cv_.notify_all();
    return id;
}

void JobRunner::wait(const std::string& analysis_id) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] {
        auto snap = store_.analysis(analysis_id);
        return !snap || snap->status == Status::done || snap->status == Status::failed;
    });
}

void JobRunner::wait_idle() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return pending_.empty() && active_ == 0; });
}

void JobRunner::work() {
    std::unique_lock lock(mu_);
    while (true) {
        auto next = pending_.end();
        cv_.wait(lock, [&] {
            next = std::find_if(pending_.begin(), pending_.end(),
                                [&](const Job& j) { return !busy_datasets_.count(j.dataset_id); });
            return stopping_ || next != pending_.end();
        });
        if (stopping_) {
            return;
        }
        const Job job = *next;
        pending_.erase(next);
        busy_datasets_.insert(job.dataset_id);
        ++active_;
        lock.unlock();
        run(job);
        lock.lock();
        busy_datasets_.erase(job.dataset_id);
        --active_;
        cv_.notify_all();
    }
}

void JobRunner::run(const Job& job) {
    const auto queued = store_.analysis(job.analysis_id);
    auto finish = [&](Status status, std::string reason, std::shared_ptr<const AnalysisView> view,
                      const std::string& diag, std::int64_t started) {
        auto snap = std::make_shared<AnalysisSnapshot>(*queued);
        snap->status = status;
        snap->reason = std::move(reason);
        snap->view = std::move(view);
        snap->started_ms = started;
        snap->finished_ms = now_ms();
        store_.publish(std::move(snap), diag);
        std::lock_guard lock(mu_);
        cv_.notify_all();
    };

    const auto started = now_ms();
    const auto dataset = store_.dataset(job.dataset_id);
    if (!dataset) {
        finish(Status::failed, "dataset was deleted", nullptr, "", started);
        return;
    }
    {
        auto running = std::make_shared<AnalysisSnapshot>(*queued);
        running->status = Status::running;
        running->started_ms = started;
        store_.publish(std::move(running));
    }
    std::function<void(const std::string&)> hook;
    {
        std::lock_guard lock(mu_);
        hook = on_running_;
    }
    if (hook) {
        hook(job.analysis_id);
    }

    try {
        auto out = run_pipeline(dataset->data, queued->config);
        if (!store_.dataset(job.dataset_id)) {
            finish(Status::failed, "dataset was deleted", nullptr, "", started);
            return;
        }
        auto view = std::make_shared<AnalysisView>(AnalysisView::from_payload(std::move(out.payload)));
        finish(Status::done, "", std::move(view), out.diagnostics.to_jsonl(), started);
    } catch (const std::exception& e) {
        finish(Status::failed, e.what(), nullptr, "", started);
    }
}

}  // namespace seqcause::service
