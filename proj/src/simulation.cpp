#include "honeynet/simulation.hpp"

#include "honeynet/error.hpp"

namespace honeynet {

std::string_view to_string(DropReason r) {
    switch (r) {
        case DropReason::TtlExceeded: return "TtlExceeded";
        case DropReason::NoRoute: return "NoRoute";
        case DropReason::AclDeny: return "AclDeny";
        case DropReason::PortFiltered: return "PortFiltered";
        case DropReason::FloodLimited: return "FloodLimited";
        case DropReason::PolicyDeny: return "PolicyDeny";
    }
    return "?";
}

void SimClock::advance_to(TimeMs t) {
    if (t < now_ms_) throw OrderingError("simulation clock cannot move backwards");
    now_ms_ = t;
}

Simulation::Simulation(Topology topology)
    : topology_(std::move(topology)),
      receivers_(topology_.nodes().size()),
      filters_(topology_.nodes().size()) {}

void Simulation::push(TimeMs at, std::variant<Arrival, Timer> work) {
    queue_.push(Item{at, next_seq_++, std::move(work)});
}

void Simulation::schedule(TimeMs when, std::function<void()> action) {
    push(std::max(when, now()), Timer{std::move(action)});
}

void Simulation::on_deliver(std::string_view node, Receiver receiver) {
    auto idx = topology_.index_of(node);
    if (!idx) throw ValidationError("unknown node '" + std::string(node) + "'", {std::string(node)});
    receivers_[*idx] = std::move(receiver);
}

void Simulation::set_filter(std::string_view node, Filter filter) {
    auto idx = topology_.index_of(node);
    if (!idx) throw ValidationError("unknown node '" + std::string(node) + "'", {std::string(node)});
    filters_[*idx] = std::move(filter);
}

void Simulation::on_drop(DropObserver observer) { drop_observers_.push_back(std::move(observer)); }

void Simulation::submit(PacketEnvelope packet) {
    std::lock_guard lock(inbox_mutex_);
    inbox_.push_back(std::move(packet));
}

void Simulation::drain_inbox() {
    std::vector<PacketEnvelope> batch;
    {
        std::lock_guard lock(inbox_mutex_);
        batch.swap(inbox_);
    }
    for (auto& p : batch) send(std::move(p));
}

void Simulation::record(TimeMs at, std::size_t node, PacketId id, TranscriptEntry::Outcome outcome,
                        std::optional<DropReason> reason) {
    if (!transcript_enabled_) return;
    transcript_.push_back(TranscriptEntry{at, topology_.nodes()[node].name, id, outcome, reason});
}

void Simulation::drop(const PacketEnvelope& packet, std::size_t node, DropReason reason) {
    DropRecord rec{now(), node < topology_.nodes().size() ? topology_.nodes()[node].name : NodeId{}, packet.id,
                   reason, packet.sent_at_ms};
    if (node < topology_.nodes().size()) record(now(), node, packet.id, TranscriptEntry::Outcome::Dropped, reason);
    drops_.push_back(rec);
    for (auto& obs : drop_observers_) obs(packet, drops_.back());
}

SendResult Simulation::send(PacketEnvelope packet, const PathPolicy& policy) {
    packet.id = next_packet_id_++;
    packet.sent_at_ms = now();
    SendResult result{packet.id, std::nullopt};

    constexpr std::size_t kUnknown = static_cast<std::size_t>(-1);
    const NodeInfo* origin = topology_.find_by_ip(packet.src.ip);
    const NodeInfo* target = packet.deliver_to ? topology_.find(*packet.deliver_to)
                                               : topology_.find_by_ip(packet.dst.ip);
    std::size_t origin_idx = origin ? *topology_.index_of(origin->name) : kUnknown;
    if (origin) packet.route = {origin->name};

    if (!origin || !target) {
        result.dropped = DropReason::NoRoute;
        drop(packet, origin_idx, DropReason::NoRoute);
        return result;
    }
    std::size_t target_idx = *topology_.index_of(target->name);

    std::vector<std::size_t> path;
    if (policy.explicit_route.empty()) {
        path = topology_.shortest_path_indices(origin_idx, target_idx);
    } else {
        for (const auto& name : policy.explicit_route) {
            auto idx = topology_.index_of(name);
            if (!idx) {
                path.clear();
                break;
            }
            if (!path.empty() && !topology_.link_latency(path.back(), *idx)) {
                path.clear();
                break;
            }
            path.push_back(*idx);
        }
        if (!path.empty() && (path.front() != origin_idx || path.back() != target_idx)) path.clear();
    }
    if (path.empty()) {
        result.dropped = DropReason::NoRoute;
        drop(packet, origin_idx, DropReason::NoRoute);
        return result;
    }
    if (packet.ttl <= 0) {
        result.dropped = DropReason::TtlExceeded;
        drop(packet, origin_idx, DropReason::TtlExceeded);
        return result;
    }

    auto shared_path = std::make_shared<const std::vector<std::size_t>>(std::move(path));
    if (shared_path->size() == 1) {
        push(now(), Arrival{std::move(packet), shared_path, 0});
    } else {
        auto latency = *topology_.link_latency((*shared_path)[0], (*shared_path)[1]);
        push(now() + latency, Arrival{std::move(packet), shared_path, 1});
    }
    return result;
}

bool Simulation::step() {
    Item item = queue_.top();
    queue_.pop();
    clock_.advance_to(item.at);

    if (auto* timer = std::get_if<Timer>(&item.work)) {
        timer->action();
        return false;
    }

    auto& arrival = std::get<Arrival>(item.work);
    auto& packet = arrival.packet;
    const auto& path = *arrival.path;
    std::size_t node = path[arrival.hop];
    const NodeInfo& info = topology_.nodes()[node];
    bool final_hop = arrival.hop + 1 == path.size();

    if (arrival.hop > 0) {
        packet.route.push_back(info.name);
        --packet.ttl;
        if (!final_hop && packet.ttl <= 0) {
            drop(packet, node, DropReason::TtlExceeded);
            return false;
        }
    }
    if (filters_[node]) {
        if (auto reason = filters_[node](packet, info)) {
            drop(packet, node, *reason);
            return false;
        }
    }
    if (final_hop) {
        record(now(), node, packet.id, TranscriptEntry::Outcome::Delivered);
        if (receivers_[node]) receivers_[node](packet);
        return true;
    }
    record(now(), node, packet.id, TranscriptEntry::Outcome::Hop);
    auto latency = *topology_.link_latency(node, path[arrival.hop + 1]);
    push(now() + latency, Arrival{std::move(packet), arrival.path, arrival.hop + 1});
    return false;
}

std::size_t Simulation::run(std::optional<TimeMs> limit) {
    std::size_t delivered = 0;
    drain_inbox();
    while (!queue_.empty()) {
        if (limit && queue_.top().at > *limit) break;
        if (step()) ++delivered;
        drain_inbox();
    }
    if (limit && *limit > now()) clock_.advance_to(*limit);
    return delivered;
}

std::size_t Simulation::run_until_idle() { return run(std::nullopt); }

std::size_t Simulation::run_until(TimeMs limit) { return run(limit); }

}  // namespace honeynet
