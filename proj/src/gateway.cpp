#include "honeynet/gateway.hpp"

#include <algorithm>
#include <cctype>

#include "honeynet/error.hpp"
#include "text_util.hpp"

namespace honeynet {
namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string format_ports(const PortRange& r) {
    if (r.full()) return "any";
    if (r.lo == r.hi) return std::to_string(r.lo);
    return std::to_string(r.lo) + "-" + std::to_string(r.hi);
}

PortRange parse_ports(std::string_view text) {
    if (lower(text) == "any" || text == "*") return PortRange{};
    auto dash = text.find('-');
    auto lo = detail::parse_int<std::uint16_t>(text.substr(0, dash));
    auto hi = dash == std::string_view::npos ? lo : detail::parse_int<std::uint16_t>(text.substr(dash + 1));
    if (!lo || !hi || *lo > *hi) throw ValidationError("bad port range '" + std::string(text) + "'", {"ports"});
    return PortRange{*lo, *hi};
}

std::string describe_deny(const FirewallRule* rule, std::size_t index) {
    if (!rule) return "denied by default policy";
    std::string d = "denied by rule " + std::to_string(index + 1);
    if (!rule->comment.empty()) d += ": " + rule->comment;
    return d;
}

DropReason deny_reason(const FirewallRule& rule) {
    return rule.dst_ports.full() ? DropReason::AclDeny : DropReason::PortFiltered;
}

}  // namespace

std::string_view to_string(RuleAction a) { return a == RuleAction::Allow ? "allow" : "deny"; }

void FirewallRule::validate() const {
    if (dst_ports.lo > dst_ports.hi) throw ValidationError("port range lo > hi", {"ports"});
}

std::string format_rule(const FirewallRule& rule) {
    std::string out;
    out += to_string(rule.action);
    out += ' ';
    out += rule.src_cidr.prefix_len() == 0 ? "any" : rule.src_cidr.to_string();
    out += ' ' + format_ports(rule.dst_ports) + ' ';
    out += rule.protocol ? lower(to_string(*rule.protocol)) : "any";
    if (!rule.comment.empty()) out += ' ' + rule.comment;
    return out;
}

FirewallRule parse_rule(std::string_view line) {
    line = detail::trim(line);
    std::vector<std::string_view> head;
    std::string_view rest = line;
    while (head.size() < 4) {
        auto start = rest.find_first_not_of(" \t");
        if (start == std::string_view::npos) break;
        rest.remove_prefix(start);
        auto end = rest.find_first_of(" \t");
        head.push_back(rest.substr(0, end));
        rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
    }
    static const char* const kFields[] = {"action", "cidr", "ports", "protocol"};
    if (head.size() < 4) throw ValidationError("rule is missing a field", {kFields[head.size()]});

    FirewallRule rule;
    auto action = lower(head[0]);
    if (action == "allow") rule.action = RuleAction::Allow;
    else if (action == "deny") rule.action = RuleAction::Deny;
    else throw ValidationError("unknown rule action '" + std::string(head[0]) + "'", {"action"});

    try {
        rule.src_cidr = Cidr::parse(head[1]);
    } catch (const ValidationError&) {
        throw ValidationError("malformed CIDR '" + std::string(head[1]) + "'", {"cidr"});
    }
    rule.dst_ports = parse_ports(head[2]);

    auto proto = lower(head[3]);
    if (proto != "any") {
        std::string upper(head[3]);
        for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        rule.protocol = parse_protocol(upper);
        if (!rule.protocol) throw ValidationError("unknown protocol '" + std::string(head[3]) + "'", {"protocol"});
    }
    rule.comment = std::string(detail::trim(rest));
    rule.validate();
    return rule;
}

std::string format_rules(std::span<const FirewallRule> rules) {
    std::string out;
    for (const auto& r : rules) out += format_rule(r) + "\n";
    return out;
}

std::vector<FirewallRule> parse_rules(std::string_view text) {
    std::vector<FirewallRule> out;
    for (auto raw : detail::split(text, '\n')) {
        auto line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        out.push_back(parse_rule(line));
    }
    return out;
}

void RouterConfig::validate() const {
    std::vector<std::string> offenders;
    if (flood_rate_per_s <= 0) offenders.push_back("flood_rate_per_s");
    if (flood_burst <= 0) offenders.push_back("flood_burst");
    if (!offenders.empty()) throw ValidationError("invalid router config", offenders);
    for (const auto& r : acl) r.validate();
}

std::int64_t TokenBucketState::refilled(const Bucket& b, TimeMs now, std::int64_t rate_per_s, std::int64_t burst) {
    const std::int64_t cap = burst * 1000;
    TimeMs elapsed = std::max<TimeMs>(0, now - b.last_refill_ms);
    // once the deficit is covered the exact product no longer matters
    if (elapsed >= (cap - b.milli_tokens) / rate_per_s + 1) return cap;
    return std::min(cap, b.milli_tokens + elapsed * rate_per_s);
}

void TokenBucketState::evict_idle(TimeMs now) {
    if (now - last_sweep_ms_ < 60'000) return;
    last_sweep_ms_ = now;
    for (auto it = buckets_.begin(); it != buckets_.end();) {
        if (now - it->second.last_refill_ms >= kIdleEvictionMs) it = buckets_.erase(it);
        else ++it;
    }
}

bool TokenBucketState::take(Ipv4 source, TimeMs now, std::int64_t rate_per_s, std::int64_t burst) {
    evict_idle(now);
    auto [it, inserted] = buckets_.try_emplace(source, Bucket{burst * 1000, now});
    auto& b = it->second;
    if (!inserted) {
        b.milli_tokens = refilled(b, now, rate_per_s, burst);
        b.last_refill_ms = std::max(b.last_refill_ms, now);
    }
    if (b.milli_tokens < 1000) return false;
    b.milli_tokens -= 1000;
    return true;
}

std::int64_t TokenBucketState::milli_tokens(Ipv4 source, TimeMs now, std::int64_t rate_per_s,
                                            std::int64_t burst) const {
    auto it = buckets_.find(source);
    if (it == buckets_.end()) return burst * 1000;
    return refilled(it->second, now, rate_per_s, burst);
}

Decision router_forward(const RouterConfig& config, TokenBucketState& buckets, const PacketEnvelope& packet,
                        TimeMs now) {
    for (const auto& rule : config.acl) {
        if (!rule.matches(packet.src.ip, packet.dst.port, packet.protocol)) continue;
        if (rule.action == RuleAction::Deny) return Decision::dropped(deny_reason(rule));
        break;
    }
    if (config.enabled_flood_defense &&
        !buckets.take(packet.src.ip, now, config.flood_rate_per_s, config.flood_burst)) {
        return Decision::dropped(DropReason::FloodLimited);
    }
    return Decision::forward();
}

FirewallVerdict firewall_evaluate(std::span<const FirewallRule> rules, RuleAction default_policy,
                                  const PacketEnvelope& packet, TimeMs now) {
    const FirewallRule* matched = nullptr;
    std::size_t index = 0;
    for (; index < rules.size(); ++index) {
        if (rules[index].matches(packet.src.ip, packet.dst.port, packet.protocol)) {
            matched = &rules[index];
            break;
        }
    }
    RuleAction action = matched ? matched->action : default_policy;
    if (action == RuleAction::Allow) return FirewallVerdict{Decision::forward(), std::nullopt};

    ThreatEvent e;
    e.timestamp_ms = now;
    e.sensor_id = std::string(kFirewallSensorId);
    e.source = packet.src;
    e.dest_port = packet.protocol == Protocol::Icmp ? 0 : packet.dst.port;
    e.protocol = packet.protocol;
    e.kind = packet.kind;
    if (protocol_of(e.kind) != e.protocol) {
        e.kind = packet.protocol == Protocol::Udp    ? EventKind::UdpDatagram
                 : packet.protocol == Protocol::Icmp ? EventKind::IcmpEcho
                                                     : EventKind::TcpConnect;
    }
    e.severity = assign_severity(e.kind);
    e.payload_prefix = payload_prefix_of(packet.payload);
    e.description = describe_deny(matched, index) + ", dst " + packet.dst.to_string();
    return FirewallVerdict{Decision::dropped(matched ? deny_reason(*matched) : DropReason::PolicyDeny), std::move(e)};
}

std::vector<FirewallRule> RuleSnapshot::rules() const {
    std::vector<FirewallRule> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.rule);
    return out;
}

std::string format_journal_record(const JournalRecord& r) {
    std::string line = std::to_string(r.version) + '\t' + std::to_string(r.at_ms) + '\t';
    line += r.op == JournalRecord::Op::Add ? "add" : "delete";
    line += '\t' + std::to_string(r.position) + '\t' + std::to_string(r.rule_id) + '\t';
    if (r.op == JournalRecord::Op::Add) line += escape_field(format_rule(r.rule));
    line += '\t' + escape_field(r.note);
    return line;
}

JournalRecord parse_journal_record(std::string_view line) {
    static const char* const kFields[] = {"version", "at", "op", "position", "rule_id", "rule", "note"};
    auto fields = detail::split(line, '\t');
    for (std::size_t i = fields.size(); i < std::size(kFields); ++i) throw ParseError(kFields[i], "missing");
    if (fields.size() > std::size(kFields)) throw ParseError("note", "trailing data");

    JournalRecord r;
    auto version = detail::parse_int<std::uint64_t>(fields[0]);
    if (!version) throw ParseError("version", "not an integer");
    auto at = detail::parse_int<TimeMs>(fields[1]);
    if (!at) throw ParseError("at", "not an integer");
    if (fields[2] == "add") r.op = JournalRecord::Op::Add;
    else if (fields[2] == "delete") r.op = JournalRecord::Op::Delete;
    else throw ParseError("op", "expected add or delete");
    auto position = detail::parse_int<std::size_t>(fields[3]);
    if (!position) throw ParseError("position", "not an integer");
    auto id = detail::parse_int<std::uint64_t>(fields[4]);
    if (!id) throw ParseError("rule_id", "not an integer");
    r.version = *version;
    r.at_ms = *at;
    r.position = *position;
    r.rule_id = *id;
    if (r.op == JournalRecord::Op::Add) {
        try {
            r.rule = parse_rule(unescape_field(fields[5], "rule"));
        } catch (const ValidationError& e) {
            throw ParseError("rule", e.what());
        }
    }
    r.note = unescape_field(fields[6], "note");
    return r;
}

RuleSnapshot replay_journal(std::span<const JournalRecord> records) {
    RuleSnapshot s;
    for (const auto& r : records) {
        if (r.version != s.version + 1) {
            throw ValidationError("journal version gap at " + std::to_string(r.version), {std::to_string(r.version)});
        }
        if (r.op == JournalRecord::Op::Add) {
            if (r.position > s.entries.size()) {
                throw ValidationError("journal insert past end at version " + std::to_string(r.version),
                                      {std::to_string(r.version)});
            }
            s.entries.insert(s.entries.begin() + static_cast<std::ptrdiff_t>(r.position), RuleEntry{r.rule_id, r.rule});
        } else {
            auto it = std::find_if(s.entries.begin(), s.entries.end(),
                                   [&](const RuleEntry& e) { return e.id == r.rule_id; });
            if (it == s.entries.end()) {
                throw ValidationError("journal deletes unknown rule " + std::to_string(r.rule_id),
                                      {std::to_string(r.version)});
            }
            s.entries.erase(it);
        }
        s.version = r.version;
    }
    return s;
}

RuleStore::RuleStore(RuleAction default_policy)
    : default_policy_(default_policy), current_(std::make_shared<RuleSnapshot>()) {}

RuleStore::RuleStore(const std::filesystem::path& journal_path, RuleAction default_policy)
    : RuleStore(default_policy) {
    journal_path_ = journal_path;
    if (std::filesystem::exists(journal_path)) {
        std::ifstream in(journal_path, std::ios::binary);
        if (!in) throw IoError("cannot read journal " + journal_path.string());
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            journal_.push_back(parse_journal_record(line));
        }
        auto replayed = std::make_shared<RuleSnapshot>(replay_journal(journal_));
        for (const auto& e : replayed->entries) next_rule_id_ = std::max(next_rule_id_, e.id + 1);
        for (const auto& r : journal_) next_rule_id_ = std::max(next_rule_id_, r.rule_id + 1);
        current_ = std::move(replayed);
    }
    journal_out_.open(journal_path, std::ios::binary | std::ios::app);
    if (!journal_out_) throw IoError("cannot open journal " + journal_path.string() + " for append");
}

void RuleStore::commit(JournalRecord record, std::shared_ptr<RuleSnapshot> next) {
    if (journal_path_) {
        journal_out_ << format_journal_record(record) << '\n';
        journal_out_.flush();
        if (!journal_out_) throw IoError("journal write failed: " + journal_path_->string());
    }
    journal_.push_back(std::move(record));
    std::lock_guard lock(snapshot_mutex_);
    current_ = std::move(next);
}

std::uint64_t RuleStore::add_rule(const FirewallRule& rule, std::size_t position, std::string note, TimeMs now) {
    rule.validate();
    std::lock_guard lock(write_mutex_);
    if (position > current_->entries.size()) {
        throw ValidationError("position " + std::to_string(position) + " is past the end of " +
                                  std::to_string(current_->entries.size()) + " rules",
                              {"position"});
    }
    auto next = std::make_shared<RuleSnapshot>(*current_);
    next->version += 1;
    std::uint64_t id = next_rule_id_++;
    next->entries.insert(next->entries.begin() + static_cast<std::ptrdiff_t>(position), RuleEntry{id, rule});
    JournalRecord rec{next->version, now, JournalRecord::Op::Add, position, id, rule, std::move(note)};
    auto version = next->version;
    commit(std::move(rec), std::move(next));
    return version;
}

std::uint64_t RuleStore::append_rule(const FirewallRule& rule, std::string note, TimeMs now) {
    rule.validate();
    std::lock_guard lock(write_mutex_);
    auto next = std::make_shared<RuleSnapshot>(*current_);
    next->version += 1;
    std::uint64_t id = next_rule_id_++;
    std::size_t position = next->entries.size();
    next->entries.push_back(RuleEntry{id, rule});
    JournalRecord rec{next->version, now, JournalRecord::Op::Add, position, id, rule, std::move(note)};
    auto version = next->version;
    commit(std::move(rec), std::move(next));
    return version;
}

std::uint64_t RuleStore::delete_rule(std::uint64_t rule_id, std::string note, TimeMs now) {
    std::lock_guard lock(write_mutex_);
    auto next = std::make_shared<RuleSnapshot>(*current_);
    auto it = std::find_if(next->entries.begin(), next->entries.end(),
                           [&](const RuleEntry& e) { return e.id == rule_id; });
    if (it == next->entries.end()) throw NotFoundError("no firewall rule with id " + std::to_string(rule_id));
    next->entries.erase(it);
    next->version += 1;
    JournalRecord rec{next->version, now, JournalRecord::Op::Delete, 0, rule_id, {}, std::move(note)};
    auto version = next->version;
    commit(std::move(rec), std::move(next));
    return version;
}

std::shared_ptr<const RuleSnapshot> RuleStore::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return current_;
}

std::vector<JournalRecord> RuleStore::journal() const {
    std::lock_guard lock(write_mutex_);
    return journal_;
}

FirewallVerdict RuleStore::evaluate(const PacketEnvelope& packet, TimeMs now) const {
    auto snap = snapshot();
    auto rules = snap->rules();
    return firewall_evaluate(rules, default_policy_, packet, now);
}

}  // namespace honeynet
