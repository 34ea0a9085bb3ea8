#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace peerloop::service {

/// Fixed worker pool over a bounded FIFO. Exceptions escaping a job are
/// swallowed; jobs report their own failures.
class JobQueue {
public:
    JobQueue(int workers, std::size_t capacity);
    ~JobQueue();

    JobQueue(const JobQueue&) = delete;
    JobQueue& operator=(const JobQueue&) = delete;

    /// False when the queue is full or shutting down.
    bool try_push(std::function<void()> job);

    /// Blocks until no job is queued or running.
    void wait_idle();

    void shutdown();

    std::size_t pending() const;

private:
    void run();

    mutable std::mutex mutex_;
    std::condition_variable ready_;
    std::condition_variable idle_;
    std::deque<std::function<void()>> queue_;
    std::size_t capacity_;
    std::size_t running_ = 0;
    bool stopping_ = false;
    std::vector<std::thread> threads_;
};

}  // namespace peerloop::service
