#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>

namespace peerloop {

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

std::string format_timestamp(Timestamp ts);

class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override;
};

/// Deterministic clock: starts at `start` and advances by `step` on every read.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start = 1'700'000'000'000, Timestamp step = 0)
        : now_(start), step_(step) {}

    Timestamp now() const override { return now_.fetch_add(step_); }
    void advance(Timestamp delta) { now_.fetch_add(delta); }
    void set(Timestamp ts) { now_.store(ts); }

private:
    mutable std::atomic<Timestamp> now_;
    Timestamp step_;
};

}  // namespace peerloop
