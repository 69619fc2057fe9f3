#pragma once

#include "eas/state.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eas::store {

inline constexpr const char* kLogFileName = "eas.log";
inline constexpr const char* kSnapshotFileName = "eas.snapshot";

/// CRC-32C (Castagnoli), as used in the record trailer.
std::uint32_t crc32c(std::span<const std::uint8_t> data);

/// 4-byte big-endian length, payload, 4-byte big-endian CRC32C of the payload.
std::vector<std::uint8_t> frame_record(std::string_view payload);

struct LogOptions {
    std::filesystem::path dir;
    /// 0 = unbounded. Appends that would grow the log past this fail with
    /// StorageFull.
    std::uint64_t max_log_bytes = 0;
    bool sync = true;
};

struct Snapshot {
    std::uint64_t as_of_seq = 0;
    State state;
};

/// Append-only event log for one deployment. One writer at a time (appends
/// are serialized internally); readers see every event whose append returned.
class EventLog {
public:
    /// Opens or creates `<dir>/eas.log`. A torn final record is truncated
    /// away and reported through warnings(); corruption anywhere earlier
    /// throws Error{CorruptEvent}.
    explicit EventLog(LogOptions options);
    ~EventLog();

    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    /// Validates, frames, writes and syncs. Returns the assigned seq.
    /// Errors: SchemaViolation, StorageFull, IoError.
    std::uint64_t append(EventKind kind, const Json& payload, Timestamp ts);

    std::uint64_t last_seq() const;
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Events with seq > after_seq, in order.
    std::vector<Event> read_events(std::uint64_t after_seq = 0) const;

    /// Fold over every event from the empty state.
    State replay() const;
    /// Fold over events after base.last_seq, starting from `base`.
    State replay_from(State base) const;

    /// Writes `<dir>/eas.snapshot` atomically (temp file + rename).
    Snapshot snapshot(const State& state) const;
    std::optional<Snapshot> load_snapshot() const;
    /// Latest snapshot (if any and readable) plus the tail of the log.
    State load_state() const;

    const std::filesystem::path& dir() const { return options_.dir; }

private:
    std::filesystem::path log_path() const;
    std::filesystem::path snapshot_path() const;

    LogOptions options_;
    int fd_ = -1;
    mutable std::mutex mutex_;
    std::uint64_t last_seq_ = 0;
    std::uint64_t committed_bytes_ = 0;
    std::vector<std::string> warnings_;
};

struct ScanResult {
    std::vector<Event> events;
    std::uint64_t valid_bytes = 0;  ///< offset just past the last good record
    bool torn_tail = false;
};

/// Parses framed records from a byte buffer. Only the final record may be
/// incomplete or fail its checksum; anything else throws CorruptEvent.
ScanResult scan_records(std::span<const std::uint8_t> bytes);

}  // namespace eas::store
