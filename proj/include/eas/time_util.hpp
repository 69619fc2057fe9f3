#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <string>
#include <string_view>

namespace eas {

using Millis = std::chrono::milliseconds;
using Timestamp = std::chrono::sys_time<Millis>;

/// All timing decisions take "now" from a Clock supplied by the caller.
using Clock = std::function<Timestamp()>;

Timestamp system_now();
Clock system_clock();

/// UTC, millisecond precision: 2015-05-05T08:00:00.000Z
std::string format_rfc3339(Timestamp t);

/// Accepts the format produced by format_rfc3339, plus an optional
/// fractional part of 1-9 digits and a numeric offset instead of Z.
/// Throws Error{BadRequest} on anything else.
Timestamp parse_rfc3339(std::string_view text);

/// Simulated clock for tests and rehearsals; safe to read from many threads.
class ManualClock {
public:
    explicit ManualClock(Timestamp start) : now_(start.time_since_epoch().count()) {}

    Timestamp now() const { return Timestamp(Millis(now_.load())); }
    void set(Timestamp t) { now_.store(t.time_since_epoch().count()); }
    void advance(Millis d) { now_.fetch_add(d.count()); }

    Clock as_clock() const {
        return [this] { return now(); };
    }

private:
    std::atomic<Millis::rep> now_;
};

}  // namespace eas
