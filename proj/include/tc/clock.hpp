#pragma once

#include <atomic>
#include <cstdint>

namespace tc {

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;
using DurationMs = std::int64_t;

class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override;
};

/// Test clock; only moves when told to.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start = 0) : now_(start) {}

    Timestamp now() const override { return now_.load(); }
    void set(Timestamp t) { now_.store(t); }
    void advance(DurationMs d) { now_.fetch_add(d); }

private:
    std::atomic<Timestamp> now_;
};

}  // namespace tc
