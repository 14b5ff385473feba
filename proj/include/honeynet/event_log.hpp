#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <vector>

#include "honeynet/event.hpp"

namespace honeynet {

// Sim logs reject timestamp regressions; live logs clamp a late wall-clock
// stamp up to the last appended timestamp so the file stays ordered.
enum class ClockMode { Sim, Live };

// Append-only, line-delimited threat-event log.
//
// Any number of threads may call append(); appends are serialized and each
// line is flushed before append() returns. Readers may run concurrently and
// always observe a prefix of the log.
class EventLog {
public:
    // Memory-only log.
    explicit EventLog(ClockMode mode = ClockMode::Sim);
    // File-backed log. An existing file is loaded and appended to; a torn
    // final line (no trailing newline, unparsable) is discarded.
    EventLog(std::filesystem::path path, ClockMode mode);

    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    // Assigns the next sequential id (ignoring event.id) and persists the
    // record. Throws OrderingError (sim mode) or IoError.
    EventId append(ThreatEvent event);

    // Events with id > since_id, oldest first, at most `limit` of them.
    std::vector<ThreatEvent> read_from(EventId since_id,
                                       std::size_t limit = std::numeric_limits<std::size_t>::max()) const;
    std::vector<ThreatEvent> snapshot() const;
    EventId last_id() const;
    std::size_t size() const;

    // Blocks until an event newer than since_id exists, the timeout passes,
    // or close() is called. Returns true when newer events are available.
    bool wait_for_newer(EventId since_id, std::chrono::milliseconds timeout) const;
    // Wakes all waiters; further waits return immediately.
    void close();

    ClockMode mode() const { return mode_; }
    const std::filesystem::path& path() const { return path_; }

private:
    void load_existing();

    ClockMode mode_;
    std::filesystem::path path_;
    std::ofstream out_;
    mutable std::mutex mutex_;
    mutable std::condition_variable appended_;
    std::vector<ThreatEvent> events_;
    bool closed_ = false;
};

}  // namespace honeynet
