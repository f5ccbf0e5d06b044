import pytest

from kyesim.netcore import (Drop, EventScheduler, FlowKey, FlowRule, Forward, Header, Host, Network, Packet,
                            PacketKind, Proto, RateLimit, SetField, Switch, SwitchSpec, TableFull, Topology,
                            TopologyError, Trace, UnknownPort, ip)
from kyesim.netcore.switch import FlowMeter

from conftest import line, star


def _hdr(src="10.0.0.1", dst="10.0.1.1", **kw):
    return Header(ip(src), ip(dst), **kw)


def _switch(capacity=10):
    sw = Switch("s1", capacity)
    sw.ports = {1: "hosts", 2: "hosts", 3: "hosts"}
    return sw


class TestFlowKey:
    def test_wildcard_matches_everything(self):
        assert FlowKey().matches(_hdr(), 1)

    def test_prefix_match(self):
        key = FlowKey.build(dst="10.0.1.0/24")
        assert key.matches(_hdr(dst="10.0.1.77"))
        assert not key.matches(_hdr(dst="10.0.2.1"))

    def test_in_port_and_tenant(self):
        key = FlowKey.pair(ip("10.0.0.1"), ip("10.0.1.1"), in_port=2, tenant_tag=5)
        assert key.matches(_hdr(tenant_tag=5), 2)
        assert not key.matches(_hdr(tenant_tag=5), 1)
        assert not key.matches(_hdr(tenant_tag=4), 2)

    def test_exact_includes_transport(self):
        h = _hdr(proto=Proto.UDP, src_port=5, dst_port=9)
        key = FlowKey.exact(h)
        assert key.matches(h)
        assert not key.matches(_hdr(proto=Proto.UDP, src_port=6, dst_port=9))

    def test_setfield_rejects_unknown_field(self):
        with pytest.raises(ValueError):
            SetField("ttl", 3)


class TestSwitchTable:
    def test_empty_table_is_a_miss(self):
        sw = _switch()
        pkt = Packet.tcp("10.0.0.1", "10.0.1.1")
        assert sw.lookup(pkt, 1) is None
        assert sw.process_packet(pkt, 1)[0].kind == "packet_in"

    def test_priority_wins_over_specificity(self):
        sw = _switch()
        sw.install_rule(FlowRule(FlowKey.pair(ip("10.0.0.1"), ip("10.0.1.1")), (Forward(2),), 10))
        rid = sw.install_rule(FlowRule(FlowKey.build(dst="10.0.1.0/24"), (Forward(3),), 20))
        assert sw.lookup(Packet.tcp("10.0.0.1", "10.0.1.1"), 1).rule_id == rid

    def test_equal_priority_ties_to_older_rule(self):
        sw = _switch()
        first = sw.install_rule(FlowRule(FlowKey(), (Forward(2),), 5))
        sw.install_rule(FlowRule(FlowKey(), (Forward(3),), 5))
        assert sw.lookup(Packet.tcp("10.0.0.1", "10.0.1.1"), 1).rule_id == first

    def test_counters_update_on_hit(self):
        sw = _switch()
        rid = sw.install_rule(FlowRule(FlowKey(), (Forward(2),)))
        sw.process_packet(Packet.tcp("10.0.0.1", "10.0.1.1", size=100), 1, 0.5)
        rule = sw.rule(rid)
        assert (rule.packet_count, rule.byte_count, rule.last_matched) == (1, 100, 0.5)

    def test_table_full(self):
        sw = _switch(capacity=1)
        sw.install_rule(FlowRule(FlowKey()))
        with pytest.raises(TableFull):
            sw.install_rule(FlowRule(FlowKey()))

    def test_unknown_port(self):
        with pytest.raises(UnknownPort):
            _switch().process_packet(Packet.tcp("10.0.0.1", "10.0.1.1"), 9)

    def test_empty_action_list_drops(self):
        sw = _switch()
        sw.install_rule(FlowRule(FlowKey()))
        assert sw.process_packet(Packet.tcp("10.0.0.1", "10.0.1.1"), 1)[0].kind == "drop"

    def test_drop_action(self):
        sw = _switch()
        sw.install_rule(FlowRule(FlowKey(), (Drop(),)))
        assert sw.process_packet(Packet.tcp("10.0.0.1", "10.0.1.1"), 1)[0].kind == "drop"

    def test_rewrite_then_forward(self):
        sw = _switch()
        sw.install_rule(FlowRule(FlowKey(), (SetField("dst_ip", ip("10.9.9.9")), Forward(3))))
        (out,) = sw.process_packet(Packet.tcp("10.0.0.1", "10.0.1.1"), 1)
        assert out.port == 3 and out.packet.header.dst_ip == ip("10.9.9.9")

    def test_rate_limit_drops_excess(self):
        sw = _switch()
        sw.install_rule(FlowRule(FlowKey(), (RateLimit(250), Forward(2))))
        kinds = [sw.process_packet(Packet.udp("10.0.0.1", "10.0.1.1", size=100), 1, 0.1 * i)[0].kind
                 for i in range(4)]
        assert kinds == ["output", "output", "drop", "drop"]

    def test_syn_proxy_answers_misses(self):
        sw = Switch("s1", syn_proxy_enabled=True)
        sw.ports = {1: "hosts"}
        (out,) = sw.process_packet(Packet.tcp("10.0.0.1", "10.0.1.1"), 1)
        assert out.kind == "syn_proxy_reply" and out.packet.kind is PacketKind.TCP_SYNACK
        assert sw.rules == []

    def test_hard_timeout_before_idle(self):
        sw = _switch()
        sw.install_rule(FlowRule(FlowKey(), idle_timeout=5.0, hard_timeout=2.0), 0.0)
        assert sw.expire_rules(1.99) == []
        assert len(sw.expire_rules(2.0)) == 1


class TestFlowMeter:
    def test_rate_over_window(self):
        m = FlowMeter(1.0)
        h = _hdr()
        for i in range(10):
            m.record(h, 100, i * 0.1)
        assert m.flow_rates(0.95)[h] == pytest.approx(1000)
        assert m.cumulative[h] == 1000

    def test_source_packet_rate(self):
        m = FlowMeter(1.0)
        for i in range(5):
            m.record(_hdr(dst=f"10.0.1.{i}"), 64, 0.1 * i)
        assert m.source_packet_rates(0.5)[ip("10.0.0.1")] == pytest.approx(5)


class TestTopology:
    def test_ports_assigned_in_order(self):
        topo = star(2)
        assert [topo.host(h).port for h in ("a0", "h1", "h2")] == [1, 2, 3]

    def test_longest_prefix_owner(self):
        topo = star(2)
        assert topo.host_for_ip("10.2.0.1").host_id == "h1"
        assert topo.host_for_ip("10.3.4.5").host_id == "dark"
        assert topo.host_for_ip("192.168.0.1") is None

    def test_disconnected_graph_rejected(self):
        with pytest.raises(TopologyError):
            Topology([SwitchSpec("s1"), SwitchSpec("s2")], [])

    def test_nonpositive_latency_rejected(self):
        with pytest.raises(TopologyError):
            Topology([SwitchSpec("s1")], [Host("x", 1, "s1", latency=0)])

    def test_next_hop_on_line(self):
        topo = line(3)
        assert topo.next_hop("s1", "s3") == "s2"
        assert topo.out_port_towards("s1", topo.host("h1")) == topo.neighbor_port("s1", "s2")


class TestScheduler:
    def test_fifo_on_equal_times(self):
        sch = EventScheduler()
        seen = []
        for tag in "abc":
            sch.schedule(1.0, seen.append, tag)
        sch.run()
        assert seen == list("abc")

    def test_run_until_sets_clock(self):
        sch = EventScheduler()
        sch.schedule(5.0, lambda: None)
        sch.run_until(2.0)
        assert sch.now == 2.0 and len(sch) == 1


class TestNetwork:
    def test_delivery_without_controller_needs_rules(self):
        net = Network(star(1))
        net.install("s1", FlowRule(FlowKey(), (Forward(2),)))
        got = []
        net.on_receive("h1", lambda p, t: got.append(t))
        net.send("a0", Packet.udp("10.1.0.1", "10.2.0.1"))
        net.run_until(1.0)
        assert got == [pytest.approx(0.0005 + 0.01)]

    def test_responsive_host_answers_syn(self):
        net = Network(star(1))
        net.install("s1", FlowRule(FlowKey(), (Forward(2),), 1))
        net.install("s1", FlowRule(FlowKey.build(dst="10.1.0.0/16"), (Forward(1),), 2))
        got = []
        net.on_receive("a0", lambda p, t: got.append(p.kind))
        net.send("a0", Packet.tcp("10.1.0.1", "10.2.0.1"))
        net.run_until(1.0)
        assert got == [PacketKind.TCP_SYNACK]

    def test_idle_timeout_expires_rule(self):
        net = Network(star(1))
        net.install("s1", FlowRule(FlowKey(), (Forward(2),), idle_timeout=1.0))
        net.run_until(0.5)
        assert len(net.switches["s1"].rules) == 1
        net.run_until(1.5)
        assert net.switches["s1"].rules == []
        assert net.trace.of_kind("rule_remove")

    def test_trace_csv_format(self):
        t = Trace()
        t.emit(0.5, "s1", "packet_in", "x,y")
        assert t.to_csv() == 'time,switch,event_kind,detail\n0.500000000,s1,packet_in,"x,y"\n'
