#include "honeynet/event_log.hpp"

#include <algorithm>
#include <sstream>

#include "honeynet/error.hpp"

namespace honeynet {

EventLog::EventLog(ClockMode mode) : mode_(mode) {}

EventLog::EventLog(std::filesystem::path path, ClockMode mode) : mode_(mode), path_(std::move(path)) {
    load_existing();
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open event log for append: " + path_.string());
}

void EventLog::load_existing() {
    std::error_code ec;
    if (!std::filesystem::exists(path_, ec)) return;

    std::ifstream in(path_, std::ios::binary);
    if (!in) throw IoError("cannot read event log: " + path_.string());
    std::stringstream buf;
    buf << in.rdbuf();
    std::string content = buf.str();

    std::size_t good_end = 0;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool repaired_tail = false;
    while (pos < content.size()) {
        auto nl = content.find('\n', pos);
        ++line_no;
        if (nl == std::string::npos) {
            // Torn write: keep it only if it happens to be a whole record.
            try {
                auto e = parse_event(std::string_view(content).substr(pos));
                if (e.id == events_.size() + 1) {
                    events_.push_back(std::move(e));
                    content += '\n';
                    good_end = content.size();
                    repaired_tail = true;
                }
            } catch (const ParseError&) {
            }
            break;
        }
        auto e = parse_event(std::string_view(content).substr(pos, nl - pos));
        if (e.id != events_.size() + 1) {
            throw IoError(path_.string() + ":" + std::to_string(line_no) + ": expected id " +
                          std::to_string(events_.size() + 1) + ", found " + std::to_string(e.id));
        }
        if (!events_.empty() && e.timestamp_ms < events_.back().timestamp_ms) {
            throw OrderingError(path_.string() + ":" + std::to_string(line_no) + ": timestamp regression");
        }
        events_.push_back(std::move(e));
        pos = nl + 1;
        good_end = pos;
    }

    if (repaired_tail || good_end != content.size()) {
        std::ofstream rewrite(path_, std::ios::binary | std::ios::trunc);
        rewrite.write(content.data(), static_cast<std::streamsize>(good_end));
        if (!rewrite) throw IoError("cannot repair torn event log: " + path_.string());
    }
}

EventId EventLog::append(ThreatEvent event) {
    std::lock_guard lock(mutex_);
    if (!events_.empty() && event.timestamp_ms < events_.back().timestamp_ms) {
        if (mode_ == ClockMode::Sim) {
            throw OrderingError("event at t=" + std::to_string(event.timestamp_ms) +
                                " precedes last appended t=" + std::to_string(events_.back().timestamp_ms));
        }
        event.timestamp_ms = events_.back().timestamp_ms;
    }
    if (event.payload_prefix.size() > kPayloadPrefixCap) event.payload_prefix.resize(kPayloadPrefixCap);
    event.id = events_.size() + 1;

    if (out_.is_open()) {
        std::string line = serialize_event(event);
        line += '\n';
        out_.write(line.data(), static_cast<std::streamsize>(line.size()));
        out_.flush();
        if (!out_) throw IoError("write failed on event log: " + path_.string());
    }
    events_.push_back(std::move(event));
    appended_.notify_all();
    return events_.back().id;
}

std::vector<ThreatEvent> EventLog::read_from(EventId since_id, std::size_t limit) const {
    std::lock_guard lock(mutex_);
    std::vector<ThreatEvent> out;
    if (since_id >= events_.size()) return out;
    auto first = events_.begin() + static_cast<std::ptrdiff_t>(since_id);
    auto count = std::min<std::size_t>(limit, static_cast<std::size_t>(events_.end() - first));
    out.assign(first, first + static_cast<std::ptrdiff_t>(count));
    return out;
}

std::vector<ThreatEvent> EventLog::snapshot() const {
    std::lock_guard lock(mutex_);
    return events_;
}

EventId EventLog::last_id() const {
    std::lock_guard lock(mutex_);
    return events_.size();
}

std::size_t EventLog::size() const {
    std::lock_guard lock(mutex_);
    return events_.size();
}

bool EventLog::wait_for_newer(EventId since_id, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    appended_.wait_for(lock, timeout, [&] { return closed_ || events_.size() > since_id; });
    return events_.size() > since_id;
}

void EventLog::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    appended_.notify_all();
}

}  // namespace honeynet
