#include "eas/event_log.hpp"

#include "eas/error.hpp"

#include <boost/crc.hpp>

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <iterator>
#include <unistd.h>

namespace eas::store {

std::uint32_t crc32c(std::span<const std::uint8_t> data) {
    boost::crc_optimal<32, 0x1EDC6F41, 0xFFFFFFFF, 0xFFFFFFFF, true, true> crc;
    crc.process_bytes(data.data(), data.size());
    return crc.checksum();
}

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_be32(const std::uint8_t* p) {
    return std::uint32_t{p[0]} << 24 | std::uint32_t{p[1]} << 16 | std::uint32_t{p[2]} << 8 | p[3];
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(int fd, const std::vector<std::uint8_t>& bytes, const std::string& what) {
    std::size_t done = 0;
    while (done < bytes.size()) {
        const auto n = ::write(fd, bytes.data() + done, bytes.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == ENOSPC || errno == EFBIG)
                throw Error(ErrorCode::StorageFull, what + ": " + std::strerror(errno));
            throw Error(ErrorCode::IoError, what + ": " + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

}  // namespace

std::vector<std::uint8_t> frame_record(std::string_view payload) {
    if (payload.size() > 0xFFFFFFFFu) throw Error(ErrorCode::StorageFull, "record too large");
    std::vector<std::uint8_t> out;
    out.reserve(payload.size() + 8);
    put_be32(out, static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    put_be32(out, crc32c({reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()}));
    return out;
}

ScanResult scan_records(std::span<const std::uint8_t> bytes) {
    ScanResult result;
    std::size_t pos = 0;
    std::uint64_t expected_seq = 1;
    while (pos < bytes.size()) {
        const std::size_t remaining = bytes.size() - pos;
        if (remaining < 4) {
            result.torn_tail = true;
            break;
        }
        const std::uint32_t len = get_be32(bytes.data() + pos);
        if (remaining < 8 + static_cast<std::size_t>(len)) {
            result.torn_tail = true;
            break;
        }
        const auto payload = bytes.subspan(pos + 4, len);
        const std::uint32_t stored = get_be32(bytes.data() + pos + 4 + len);
        const bool last = pos + 8 + len == bytes.size();
        if (crc32c(payload) != stored) {
            if (last) {
                result.torn_tail = true;
                break;
            }
            throw Error(ErrorCode::CorruptEvent,
                        "checksum mismatch in event " + std::to_string(expected_seq));
        }
        Event event;
        try {
            event = event_from_json(Json::parse(payload.begin(), payload.end()));
        } catch (const std::exception& ex) {
            throw Error(ErrorCode::CorruptEvent, "event " + std::to_string(expected_seq) +
                                                     " does not decode: " + ex.what());
        }
        if (event.seq != expected_seq)
            throw Error(ErrorCode::CorruptEvent, "expected event " + std::to_string(expected_seq) +
                                                     ", found " + std::to_string(event.seq));
        result.events.push_back(std::move(event));
        ++expected_seq;
        pos += 8 + len;
        result.valid_bytes = pos;
    }
    return result;
}

EventLog::EventLog(LogOptions options) : options_(std::move(options)) {
    std::error_code ec;
    std::filesystem::create_directories(options_.dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + options_.dir.string() + ": " + ec.message());

    const auto bytes = read_file(log_path());
    auto scan = scan_records(bytes);
    if (scan.torn_tail) {
        warnings_.push_back("discarded torn final record (" +
                            std::to_string(bytes.size() - scan.valid_bytes) + " bytes) after event " +
                            std::to_string(scan.events.empty() ? 0 : scan.events.back().seq));
        std::filesystem::resize_file(log_path(), scan.valid_bytes, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot truncate torn log tail: " + ec.message());
    }
    last_seq_ = scan.events.empty() ? 0 : scan.events.back().seq;
    committed_bytes_ = scan.valid_bytes;

    fd_ = ::open(log_path().c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::IoError, "cannot open " + log_path().string() + ": " + std::strerror(errno));
}

EventLog::~EventLog() {
    if (fd_ >= 0) ::close(fd_);
}

std::filesystem::path EventLog::log_path() const { return options_.dir / kLogFileName; }
std::filesystem::path EventLog::snapshot_path() const { return options_.dir / kSnapshotFileName; }

std::uint64_t EventLog::append(EventKind kind, const Json& payload, Timestamp ts) {
    validate_payload(kind, payload);
    std::lock_guard lock(mutex_);
    Event event{last_seq_ + 1, ts, kind, payload};
    const auto record = frame_record(canonical_dump(event_to_json(event)));
    if (options_.max_log_bytes && committed_bytes_ + record.size() > options_.max_log_bytes)
        throw Error(ErrorCode::StorageFull, "event log reached its size limit");
    try {
        write_all(fd_, record, "append to event log");
    } catch (...) {
        // Leave no partial record behind for the next writer.
        if (::ftruncate(fd_, static_cast<off_t>(committed_bytes_)) != 0) { /* the scan on reopen drops the torn record */ }
        throw;
    }
    if (options_.sync && ::fdatasync(fd_) != 0)
        throw Error(ErrorCode::IoError, std::string("fdatasync: ") + std::strerror(errno));
    committed_bytes_ += record.size();
    return last_seq_ = event.seq;
}

std::uint64_t EventLog::last_seq() const {
    std::lock_guard lock(mutex_);
    return last_seq_;
}

std::vector<Event> EventLog::read_events(std::uint64_t after_seq) const {
    std::uint64_t limit;
    {
        std::lock_guard lock(mutex_);
        limit = committed_bytes_;
    }
    auto bytes = read_file(log_path());
    if (bytes.size() > limit) bytes.resize(limit);
    auto scan = scan_records(bytes);
    std::vector<Event> out;
    for (auto& e : scan.events)
        if (e.seq > after_seq) out.push_back(std::move(e));
    return out;
}

State EventLog::replay() const { return replay_from(State{}); }

State EventLog::replay_from(State base) const {
    for (const auto& e : read_events(base.last_seq)) apply(base, e);
    return base;
}

Snapshot EventLog::snapshot(const State& state) const {
    const Json record{{"as_of_seq", state.last_seq}, {"state", state_to_json(state)}};
    const auto bytes = frame_record(canonical_dump(record));
    const auto tmp = snapshot_path().string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(ErrorCode::IoError, "cannot write snapshot: " + std::string(std::strerror(errno)));
    try {
        write_all(fd, bytes, "write snapshot");
        if (options_.sync && ::fsync(fd) != 0)
            throw Error(ErrorCode::IoError, std::string("fsync snapshot: ") + std::strerror(errno));
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    std::error_code ec;
    std::filesystem::rename(tmp, snapshot_path(), ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot install snapshot: " + ec.message());
    return {state.last_seq, state};
}

std::optional<Snapshot> EventLog::load_snapshot() const {
    const auto bytes = read_file(snapshot_path());
    if (bytes.empty()) return std::nullopt;
    if (bytes.size() < 8) return std::nullopt;
    const std::uint32_t len = get_be32(bytes.data());
    if (bytes.size() != 8 + static_cast<std::size_t>(len)) return std::nullopt;
    const std::span<const std::uint8_t> payload(bytes.data() + 4, len);
    if (crc32c(payload) != get_be32(bytes.data() + 4 + len)) return std::nullopt;
    try {
        const auto j = Json::parse(payload.begin(), payload.end());
        Snapshot snap{j.at("as_of_seq").get<std::uint64_t>(), state_from_json(j.at("state"))};
        if (snap.state.last_seq != snap.as_of_seq) return std::nullopt;
        return snap;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

State EventLog::load_state() const {
    auto snap = load_snapshot();
    if (!snap) return replay();
    if (snap->as_of_seq > last_seq())
        throw Error(ErrorCode::CorruptEvent, "snapshot is ahead of the event log (seq " +
                                                 std::to_string(snap->as_of_seq) + ")");
    return replay_from(std::move(snap->state));
}

}  // namespace eas::store
