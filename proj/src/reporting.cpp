#include "honeynet/reporting.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

#include "honeynet/error.hpp"
#include "text_util.hpp"

namespace honeynet {
namespace {

constexpr std::string_view kFootprintTitle = "Footprinting events per device";
constexpr std::string_view kDdosTitle = "DDoS attacks per device";

void render_one(std::ostringstream& out, std::string_view title, std::span<const DailyReport> daily,
                const std::vector<TableColumn>& columns, std::int64_t DeviceCounts::*metric) {
    std::vector<std::string> first{""};
    for (const auto& d : daily) first.push_back("Day " + std::to_string(d.day_index));
    std::vector<std::vector<std::string>> cols{first};
    for (const auto& c : columns) {
        std::vector<std::string> col{c.label};
        for (const auto& d : daily) {
            auto it = d.devices.find(c.device);
            col.push_back(std::to_string(it == d.devices.end() ? 0 : it->second.*metric));
        }
        cols.push_back(std::move(col));
    }
    std::vector<std::size_t> width;
    for (const auto& col : cols) {
        std::size_t w = 0;
        for (const auto& cell : col) w = std::max(w, cell.size());
        width.push_back(w);
    }
    out << title << "\n";
    for (std::size_t row = 0; row < first.size(); ++row) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const auto& cell = cols[c][row];
            if (c == 0) {
                out << cell << std::string(width[c] - cell.size(), ' ');
            } else {
                out << " | " << std::string(width[c] - cell.size(), ' ') << cell;
            }
        }
        out << "\n";
    }
}

std::vector<std::string_view> cells_of(std::string_view line) {
    std::vector<std::string_view> cells;
    for (auto c : detail::split(line, '|')) cells.push_back(detail::trim(c));
    return cells;
}

}  // namespace

int day_of(TimeMs t, TimeMs day_length_ms) {
    if (day_length_ms <= 0) throw ValidationError("day length must be positive", {"day_length_ms"});
    TimeMs q = t / day_length_ms;
    if (t % day_length_ms != 0 && t < 0) --q;
    return static_cast<int>(q) + 1;
}

std::vector<DailyReport> aggregate_daily(const std::map<std::string, std::vector<ThreatEvent>>& logs,
                                         const std::map<std::string, std::vector<AttackReport>>& reports,
                                         TimeMs day_length_ms, int min_days) {
    std::set<std::string> devices;
    for (const auto& [d, _] : logs) devices.insert(d);
    for (const auto& [d, _] : reports) devices.insert(d);

    std::map<int, std::map<std::string, DeviceCounts>> by_day;
    int last_day = std::max(0, min_days);
    auto bump = [&](int day, const std::string& device, std::int64_t DeviceCounts::*metric) {
        by_day[day][device].*metric += 1;
        last_day = std::max(last_day, day);
    };

    for (const auto& [device, device_reports] : reports) {
        std::unordered_map<EventId, TimeMs> stamp;
        if (auto it = logs.find(device); it != logs.end()) {
            for (const auto& e : it->second) stamp.emplace(e.id, e.timestamp_ms);
        }
        for (const auto& r : device_reports) {
            if (is_ddos_class(r.attack_class)) {
                bump(day_of(r.start_time_ms, day_length_ms), device, &DeviceCounts::ddos);
                continue;
            }
            for (auto id : r.evidence) {
                auto s = stamp.find(id);
                if (s == stamp.end()) {
                    throw ValidationError("report evidence id " + std::to_string(id) + " is not in the " + device +
                                              " log",
                                          {device});
                }
                bump(day_of(s->second, day_length_ms), device, &DeviceCounts::footprint);
            }
        }
    }
    for (const auto& [_, events] : logs) {
        for (const auto& e : events) last_day = std::max(last_day, day_of(e.timestamp_ms, day_length_ms));
    }

    std::vector<DailyReport> out;
    for (int day = 1; day <= last_day; ++day) {
        DailyReport r;
        r.day_index = day;
        for (const auto& d : devices) r.devices[d] = DeviceCounts{};
        if (auto it = by_day.find(day); it != by_day.end()) {
            for (const auto& [d, counts] : it->second) r.devices[d] = counts;
        }
        out.push_back(std::move(r));
    }
    return out;
}

TableLayout TableLayout::reference() {
    TableLayout l;
    l.footprint_columns = {{"firewall", "Firewall"}, {"honeypot2", "Honeypot 2"}, {"honeypot1", "Honeypot 1"}};
    l.ddos_columns = {{"honeypot1", "Honeypot 1"}, {"honeypot2", "Honeypot 2"}, {"firewall", "Firewall"}};
    return l;
}

TableLayout TableLayout::from_devices(std::span<const DailyReport> daily) {
    TableLayout l;
    if (daily.empty()) return l;
    for (const auto& [d, _] : daily.front().devices) l.footprint_columns.push_back({d, d});
    l.ddos_columns = l.footprint_columns;
    return l;
}

std::string render_tables(std::span<const DailyReport> daily, const TableLayout& layout) {
    std::ostringstream out;
    render_one(out, kFootprintTitle, daily, layout.footprint_columns, &DeviceCounts::footprint);
    out << "\n";
    render_one(out, kDdosTitle, daily, layout.ddos_columns, &DeviceCounts::ddos);
    return out.str();
}

std::string render_tables(std::span<const DailyReport> daily) {
    return render_tables(daily, TableLayout::from_devices(daily));
}

std::vector<DailyReport> parse_tables(std::string_view text, const TableLayout& layout) {
    std::map<int, DailyReport> days;
    auto lines = detail::split(text, '\n');

    auto parse_one = [&](std::string_view title, const std::vector<TableColumn>& columns,
                         std::int64_t DeviceCounts::*metric) {
        std::size_t i = 0;
        while (i < lines.size() && detail::trim(lines[i]) != title) ++i;
        if (i == lines.size()) throw ParseError(std::string(title), "table title not found");
        if (++i >= lines.size()) throw ParseError(std::string(title), "missing header row");
        auto header = cells_of(lines[i]);
        if (header.size() != columns.size() + 1) throw ParseError("header", "column count does not match layout");
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (header[c + 1] != columns[c].label) {
                throw ParseError("header", "expected column '" + columns[c].label + "'");
            }
        }
        for (++i; i < lines.size() && !detail::trim(lines[i]).empty(); ++i) {
            auto cells = cells_of(lines[i]);
            if (cells.size() != columns.size() + 1) throw ParseError("row", "cell count does not match header");
            if (cells[0].substr(0, 4) != "Day ") throw ParseError("day", "expected 'Day N'");
            auto day = detail::parse_int<int>(cells[0].substr(4));
            if (!day || *day < 1) throw ParseError("day", "bad day index");
            auto& report = days[*day];
            report.day_index = *day;
            for (std::size_t c = 0; c < columns.size(); ++c) {
                auto v = detail::parse_int<std::int64_t>(cells[c + 1]);
                if (!v || *v < 0) throw ParseError(columns[c].device, "bad count");
                report.devices[columns[c].device].*metric = *v;
            }
        }
    };
    parse_one(kFootprintTitle, layout.footprint_columns, &DeviceCounts::footprint);
    parse_one(kDdosTitle, layout.ddos_columns, &DeviceCounts::ddos);

    std::vector<DailyReport> out;
    for (auto& [_, r] : days) out.push_back(std::move(r));
    return out;
}

std::vector<SeriesRecord> export_series(std::span<const DailyReport> daily) {
    std::vector<SeriesRecord> out;
    for (const auto& d : daily) {
        for (const auto& [device, counts] : d.devices) {
            out.push_back({d.day_index, device, "ddos", counts.ddos});
            out.push_back({d.day_index, device, "footprint", counts.footprint});
        }
    }
    return out;
}

std::vector<DailyReport> import_series(std::span<const SeriesRecord> records) {
    std::map<int, DailyReport> days;
    for (const auto& r : records) {
        auto& d = days[r.day];
        d.day_index = r.day;
        auto& counts = d.devices[r.device];
        if (r.metric == "footprint") counts.footprint = r.value;
        else if (r.metric == "ddos") counts.ddos = r.value;
        else throw ParseError("metric", "unknown metric '" + r.metric + "'");
    }
    std::vector<DailyReport> out;
    for (auto& [_, d] : days) out.push_back(std::move(d));
    return out;
}

std::string format_series_csv(std::span<const SeriesRecord> records) {
    std::string out = "day,device,metric,value\n";
    for (const auto& r : records) {
        out += std::to_string(r.day) + "," + r.device + "," + r.metric + "," + std::to_string(r.value) + "\n";
    }
    return out;
}

std::vector<SeriesRecord> parse_series_csv(std::string_view text) {
    std::vector<SeriesRecord> out;
    bool header = true;
    for (auto line : detail::split(text, '\n')) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line == "day,device,metric,value") continue;
        }
        auto f = detail::split(line, ',');
        if (f.size() != 4) throw ParseError("value", "expected 4 comma-separated fields");
        auto day = detail::parse_int<int>(f[0]);
        if (!day) throw ParseError("day", "not an integer");
        if (f[1].empty()) throw ParseError("device", "empty");
        if (f[2] != "footprint" && f[2] != "ddos") throw ParseError("metric", "unknown metric");
        auto value = detail::parse_int<std::int64_t>(f[3]);
        if (!value) throw ParseError("value", "not an integer");
        out.push_back({*day, std::string(f[1]), std::string(f[2]), *value});
    }
    return out;
}

}  // namespace honeynet
