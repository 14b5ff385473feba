#include "doctest.h"
#include "honeynet/error.hpp"
#include "honeynet/sensor.hpp"

using namespace honeynet;

namespace {

PacketEnvelope tcp(TcpSegment seg, std::uint16_t src_port, std::uint16_t dport, std::string payload = {}) {
    PacketEnvelope p;
    p.src = NetEndpoint{Ipv4(198, 51, 100, 9), src_port};
    p.dst = NetEndpoint{Ipv4(10, 10, 0, 20), dport};
    p.protocol = Protocol::Tcp;
    p.segment = seg;
    p.payload = std::move(payload);
    return p;
}

std::vector<EventKind> kinds(const std::vector<ThreatEvent>& events) {
    std::vector<EventKind> out;
    for (const auto& e : events) out.push_back(e.kind);
    return out;
}

}  // namespace

TEST_CASE("config parses and validates") {
    auto c = SensorConfig::parse("tcp_ports=22,80\nudp_ports=53\nsensor_id=edge\nsession_idle_timeout_ms=500\n");
    CHECK(c.monitored_tcp_ports == std::set<std::uint16_t>{22, 80});
    CHECK(c.monitored_udp_ports == std::set<std::uint16_t>{53});
    CHECK(c.sensor_id == "edge");
    CHECK(c.session_idle_timeout_ms == 500);
    CHECK_THROWS_AS(SensorConfig::parse("tcp_ports=x\n"), ParseError);
    CHECK_THROWS_AS(SensorConfig::parse("colour=blue\n"), ParseError);
    SensorConfig bad;
    bad.session_idle_timeout_ms = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("segment sequences map to the documented events") {
    EventLog log;
    SensorHoneypot s(SensorConfig{}, log);
    CHECK(kinds(s.ingest(tcp(TcpSegment::Syn, 1000, 80), 0)) == std::vector{EventKind::TcpSyn});
    CHECK(s.ingest(tcp(TcpSegment::Ack, 1000, 80), 1).empty());
    CHECK(kinds(s.ingest(tcp(TcpSegment::Data, 1000, 80, "GET / HTTP/1.1\r\n"), 2)) ==
          std::vector{EventKind::HttpRequestPartial});
    CHECK(s.ingest(tcp(TcpSegment::Data, 1000, 80, "X-a: 1\r\n"), 3).empty());
    CHECK(kinds(s.ingest(tcp(TcpSegment::Data, 1000, 80, "\r\n"), 4)) == std::vector{EventKind::HttpRequestComplete});
    CHECK(s.ingest(tcp(TcpSegment::Fin, 1000, 80), 5).empty());

    auto sessions = s.sessions();
    REQUIRE(sessions.size() == 1);
    CHECK(sessions[0].tcp_handshake_complete);
    CHECK(sessions[0].http_header_complete);
    CHECK(sessions[0].header_completed_at_ms == 4);
    CHECK(sessions[0].closed_at_ms == 5);
    CHECK(sessions[0].header_lines_received == 2);
    CHECK(sessions[0].event_ids == std::vector<EventId>{1, 2, 3});
    CHECK(s.stats().events == 3);
    CHECK(s.stats().transitions == 3);
}

TEST_CASE("half-open sessions yield TcpSynIncomplete on idle expiry or FIN") {
    EventLog log;
    SensorHoneypot s(SensorConfig{}, log);
    s.ingest(tcp(TcpSegment::Syn, 1, 22), 0);
    s.ingest(tcp(TcpSegment::Syn, 2, 23), 10);
    CHECK(s.next_expiry() == 30'001);
    CHECK(s.expire_sessions(30'000).empty());
    CHECK(kinds(s.expire_sessions(30'001)) == std::vector{EventKind::TcpSynIncomplete});
    CHECK(kinds(s.ingest(tcp(TcpSegment::Rst, 2, 23), 30'002)) == std::vector{EventKind::TcpSynIncomplete});
    CHECK(s.open_sessions() == 0);
    CHECK_FALSE(s.next_expiry());

    // Completed handshakes close silently.
    s.ingest(tcp(TcpSegment::Syn, 3, 22), 40'000);
    s.ingest(tcp(TcpSegment::Ack, 3, 22), 40'001);
    CHECK(s.expire_sessions(90'000).empty());
}

TEST_CASE("a second SYN on the same tuple closes the previous session") {
    EventLog log;
    SensorHoneypot s(SensorConfig{}, log);
    s.ingest(tcp(TcpSegment::Syn, 5, 80), 0);
    CHECK(kinds(s.ingest(tcp(TcpSegment::Syn, 5, 80), 100)) ==
          std::vector{EventKind::TcpSynIncomplete, EventKind::TcpSyn});
}

TEST_CASE("connect actions are whole sessions") {
    EventLog log;
    SensorHoneypot s(SensorConfig{}, log);
    CHECK(kinds(s.ingest(tcp(TcpSegment::Connect, 7, 22), 0)) == std::vector{EventKind::TcpConnect});
    CHECK(kinds(s.ingest(tcp(TcpSegment::Connect, 8, 80, "GET / HTTP/1.1\r\nHost: h\r\n\r\n"), 5)) ==
          std::vector{EventKind::HttpRequestComplete});
    CHECK(s.open_sessions() == 0);
    CHECK(s.sessions().size() == 2);
}

TEST_CASE("udp, broadcast and icmp") {
    EventLog log;
    SensorHoneypot s(SensorConfig{}, log);
    PacketEnvelope u = tcp(TcpSegment::None, 9, 53, "xyz");
    u.protocol = Protocol::Udp;
    CHECK(kinds(s.ingest(u, 0)) == std::vector{EventKind::UdpDatagram});
    u.dst.ip = Ipv4::broadcast();
    auto b = s.ingest(u, 1);
    CHECK(kinds(b) == std::vector{EventKind::UdpBroadcast});
    CHECK(b[0].payload_prefix == "xyz");
    CHECK(b[0].protocol == Protocol::Udp);
    u.dst.port = 9999;
    CHECK(s.ingest(u, 2).empty());
    PacketEnvelope icmp = u;
    icmp.protocol = Protocol::Icmp;
    CHECK(kinds(s.ingest(icmp, 3)) == std::vector{EventKind::IcmpEcho});
}

TEST_CASE("unmonitored ports and strays produce nothing") {
    EventLog log;
    SensorHoneypot s(SensorConfig{}, log);
    CHECK(s.ingest(tcp(TcpSegment::Syn, 1, 9999), 0).empty());
    CHECK(s.ingest(tcp(TcpSegment::Data, 1, 80, "x"), 0).empty());
    CHECK(s.ingest(tcp(TcpSegment::Fin, 1, 80), 0).empty());
    CHECK(s.stats().unmonitored == 1);
    CHECK(s.stats().stray == 2);
    CHECK(log.size() == 0);
}

TEST_CASE("a slowloris-style session keeps its header open") {
    EventLog log;
    SensorHoneypot s(SensorConfig{}, log);
    s.ingest(tcp(TcpSegment::Syn, 50, 80), 0);
    s.ingest(tcp(TcpSegment::Data, 50, 80, "GET /?1 HTTP/1.1\r\n"), 5);
    for (int k = 1; k <= 5; ++k) s.ingest(tcp(TcpSegment::Data, 50, 80, "X-a: b\r\n"), k * 10'000);
    s.ingest(tcp(TcpSegment::Fin, 50, 80), 60'000);
    auto sess = s.sessions().at(0);
    CHECK(sess.tcp_handshake_complete);
    CHECK_FALSE(sess.http_header_complete);
    CHECK(sess.header_lines_received == 6);
    CHECK(sess.incomplete_until() == 60'000);
    CHECK(log.size() == 2);
}
