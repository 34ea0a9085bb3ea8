#include "peerloop/service/jobs.hpp"

namespace peerloop::service {

JobQueue::JobQueue(int workers, std::size_t capacity) : capacity_(capacity) {
    for (int i = 0; i < workers; ++i) threads_.emplace_back([this] { run(); });
}

JobQueue::~JobQueue() { shutdown(); }

bool JobQueue::try_push(std::function<void()> job) {
    {
        std::lock_guard lock(mutex_);
        if (stopping_ || queue_.size() >= capacity_) return false;
        queue_.push_back(std::move(job));
    }
    ready_.notify_one();
    return true;
}

void JobQueue::wait_idle() {
    std::unique_lock lock(mutex_);
    idle_.wait(lock, [this] { return queue_.empty() && running_ == 0; });
}

void JobQueue::shutdown() {
    {
        std::lock_guard lock(mutex_);
        if (stopping_ && threads_.empty()) return;
        stopping_ = true;
    }
    ready_.notify_all();
    for (auto& t : threads_) {
        if (t.joinable()) t.join();
    }
    threads_.clear();
}

std::size_t JobQueue::pending() const {
    std::lock_guard lock(mutex_);
    return queue_.size() + running_;
}

void JobQueue::run() {
    for (;;) {
        std::function<void()> job;
        {
            std::unique_lock lock(mutex_);
            ready_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            // Drain what is queued before exiting so accepted work is not lost.
            if (queue_.empty()) return;
            job = std::move(queue_.front());
            queue_.pop_front();
            ++running_;
        }
        try {
            job();
        } catch (...) {
        }
        {
            std::lock_guard lock(mutex_);
            --running_;
            if (queue_.empty() && running_ == 0) idle_.notify_all();
        }
    }
}

}  // namespace peerloop::service
