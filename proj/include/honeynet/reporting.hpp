#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "honeynet/detection.hpp"
#include "honeynet/event.hpp"

namespace honeynet {

struct DeviceCounts {
    std::int64_t footprint = 0;  // footprint-class evidence events
    std::int64_t ddos = 0;       // DDoS-class reports

    bool operator==(const DeviceCounts&) const = default;
};

struct DailyReport {
    int day_index = 1;  // 1-based
    std::map<std::string, DeviceCounts> devices;

    bool operator==(const DailyReport&) const = default;
};

// 1-based day of a timestamp: floor(t / day_length) + 1.
int day_of(TimeMs t, TimeMs day_length_ms);

// Per device and day: footprint = evidence events of Footprint, PortScan and
// SynScan reports, bucketed by the event's own timestamp; ddos = number of
// SlowlorisDoS and UdpBroadcastFlood reports, bucketed by start time.
// Evidence ids are resolved against that device's log.
// Produces days 1..max(last day with data, min_days); empty when both are 0.
// Every report lists every device named in either map.
std::vector<DailyReport> aggregate_daily(const std::map<std::string, std::vector<ThreatEvent>>& logs,
                                         const std::map<std::string, std::vector<AttackReport>>& reports,
                                         TimeMs day_length_ms, int min_days = 0);

struct TableColumn {
    std::string device;
    std::string label;
};

struct TableLayout {
    std::vector<TableColumn> footprint_columns;
    std::vector<TableColumn> ddos_columns;

    // Firewall | Honeypot 2 | Honeypot 1 for footprinting and
    // Honeypot 1 | Honeypot 2 | Firewall for DDoS.
    static TableLayout reference();
    // Every device in first-day order, labelled by its id, in both tables.
    static TableLayout from_devices(std::span<const DailyReport> daily);
};

// Two aligned tables, rows "Day N | c1 | c2 | ...", each preceded by a
// title line and a header row.
std::string render_tables(std::span<const DailyReport> daily, const TableLayout& layout);
std::string render_tables(std::span<const DailyReport> daily);
// Inverse of render_tables for the same layout. Throws ParseError.
std::vector<DailyReport> parse_tables(std::string_view text, const TableLayout& layout);

struct SeriesRecord {
    int day = 1;
    std::string device;
    std::string metric;  // "footprint" or "ddos"
    std::int64_t value = 0;

    bool operator==(const SeriesRecord&) const = default;
};

// One record per (day, device, metric), ordered by day, device, metric.
std::vector<SeriesRecord> export_series(std::span<const DailyReport> daily);
std::vector<DailyReport> import_series(std::span<const SeriesRecord> records);

// "day,device,metric,value" header followed by one line per record.
std::string format_series_csv(std::span<const SeriesRecord> records);
std::vector<SeriesRecord> parse_series_csv(std::string_view text);

}  // namespace honeynet
