#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "honeynet/event.hpp"
#include "honeynet/packet.hpp"
#include "honeynet/simulation.hpp"

namespace honeynet {

enum class RuleAction { Allow, Deny };
std::string_view to_string(RuleAction a);

struct PortRange {
    std::uint16_t lo = 0;
    std::uint16_t hi = 65535;

    bool contains(std::uint16_t port) const { return lo <= port && port <= hi; }
    bool full() const { return lo == 0 && hi == 65535; }
    bool operator==(const PortRange&) const = default;
};

struct FirewallRule {
    RuleAction action = RuleAction::Deny;
    Cidr src_cidr;
    PortRange dst_ports;
    std::optional<Protocol> protocol;  // nullopt matches any protocol
    std::string comment;

    // Throws ValidationError (lo > hi).
    void validate() const;
    bool matches(Ipv4 src, std::uint16_t dst_port, Protocol proto) const {
        return src_cidr.contains(src) && dst_ports.contains(dst_port) && (!protocol || *protocol == proto);
    }
    bool operator==(const FirewallRule&) const = default;
};

// Rules file record: <allow|deny> <cidr|any> <lo-hi|port|any> <tcp|udp|icmp|any> [comment...]
std::string format_rule(const FirewallRule& rule);
// Throws ValidationError naming the malformed field (action, cidr, ports, protocol).
FirewallRule parse_rule(std::string_view line);
std::string format_rules(std::span<const FirewallRule> rules);
// Blank lines and '#' comments are skipped.
std::vector<FirewallRule> parse_rules(std::string_view text);

struct Decision {
    std::optional<DropReason> drop;  // nullopt = Forward

    static Decision forward() { return {}; }
    static Decision dropped(DropReason r) { return Decision{r}; }
    bool forwarded() const { return !drop; }
    bool operator==(const Decision&) const = default;
};

struct RouterConfig {
    std::vector<FirewallRule> acl;
    std::int64_t flood_rate_per_s = 10;
    std::int64_t flood_burst = 20;
    bool enabled_flood_defense = true;

    void validate() const;
};

// Per-source token buckets kept in milli-tokens so refill arithmetic is
// exact: refill(dt ms) = dt * rate milli-tokens, capped at burst * 1000.
class TokenBucketState {
public:
    static constexpr TimeMs kIdleEvictionMs = 10 * 60 * 1000;

    // Refills, then spends one token if available.
    bool take(Ipv4 source, TimeMs now, std::int64_t rate_per_s, std::int64_t burst);
    // Token balance after refilling to `now`, in milli-tokens; burst for unseen sources.
    std::int64_t milli_tokens(Ipv4 source, TimeMs now, std::int64_t rate_per_s, std::int64_t burst) const;
    std::size_t tracked_sources() const { return buckets_.size(); }

private:
    struct Bucket {
        std::int64_t milli_tokens = 0;
        TimeMs last_refill_ms = 0;
    };
    static std::int64_t refilled(const Bucket& b, TimeMs now, std::int64_t rate_per_s, std::int64_t burst);
    void evict_idle(TimeMs now);

    std::map<Ipv4, Bucket> buckets_;
    TimeMs last_sweep_ms_ = 0;
};

// First-match ACL (no match = forward), then the flood limiter.
// A matching Deny rule drops with PortFiltered when it names specific
// ports and AclDeny when it covers every port.
Decision router_forward(const RouterConfig& config, TokenBucketState& buckets, const PacketEnvelope& packet,
                        TimeMs now);

struct FirewallVerdict {
    Decision decision;
    std::optional<ThreatEvent> event;  // set for every deny; id unassigned
};

inline constexpr std::string_view kFirewallSensorId = "firewall";

// First matching rule decides, otherwise the default policy. Every deny
// yields a ThreatEvent from sensor "firewall".
FirewallVerdict firewall_evaluate(std::span<const FirewallRule> rules, RuleAction default_policy,
                                  const PacketEnvelope& packet, TimeMs now);

struct RuleEntry {
    std::uint64_t id = 0;
    FirewallRule rule;
    bool operator==(const RuleEntry&) const = default;
};

struct RuleSnapshot {
    std::uint64_t version = 0;
    std::vector<RuleEntry> entries;

    std::vector<FirewallRule> rules() const;
    bool operator==(const RuleSnapshot&) const = default;
};

struct JournalRecord {
    enum class Op { Add, Delete };
    std::uint64_t version = 0;
    TimeMs at_ms = 0;
    Op op = Op::Add;
    std::size_t position = 0;  // Add only
    std::uint64_t rule_id = 0;
    FirewallRule rule;  // Add only
    std::string note;

    bool operator==(const JournalRecord&) const = default;
};

// Tab separated: version at op position rule_id rule note
std::string format_journal_record(const JournalRecord& r);
JournalRecord parse_journal_record(std::string_view line);
// Applies records in order to an empty rule set. Throws ValidationError on
// an inconsistent journal.
RuleSnapshot replay_journal(std::span<const JournalRecord> records);

// Versioned, journaled firewall rule set. Mutations are serialized; readers
// take an immutable snapshot and never wait on a mutation in progress
// beyond a pointer copy.
class RuleStore {
public:
    explicit RuleStore(RuleAction default_policy = RuleAction::Deny);
    // Replays an existing journal (if any) and appends future changes to it.
    RuleStore(const std::filesystem::path& journal_path, RuleAction default_policy = RuleAction::Deny);

    // Inserts at position (0 = first). Throws ValidationError for a bad rule
    // or a position past the end. Returns the new version.
    std::uint64_t add_rule(const FirewallRule& rule, std::size_t position, std::string note, TimeMs now);
    std::uint64_t append_rule(const FirewallRule& rule, std::string note, TimeMs now);
    // Throws NotFoundError for an unknown id.
    std::uint64_t delete_rule(std::uint64_t rule_id, std::string note, TimeMs now);

    std::shared_ptr<const RuleSnapshot> snapshot() const;
    std::vector<JournalRecord> journal() const;
    RuleAction default_policy() const { return default_policy_; }

    FirewallVerdict evaluate(const PacketEnvelope& packet, TimeMs now) const;

private:
    void commit(JournalRecord record, std::shared_ptr<RuleSnapshot> next);

    RuleAction default_policy_;
    mutable std::mutex write_mutex_;     // serializes mutations and the journal
    mutable std::mutex snapshot_mutex_;  // guards only the current_ pointer
    std::shared_ptr<const RuleSnapshot> current_;
    std::vector<JournalRecord> journal_;
    std::uint64_t next_rule_id_ = 1;
    std::optional<std::filesystem::path> journal_path_;
    std::ofstream journal_out_;
};

}  // namespace honeynet
