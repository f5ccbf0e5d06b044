import pytest

from kyesim.controlplane import (AccessControl, AccessMatrix, Aggregation, AggregationConfig, DosDetector,
                                 DosResponse, DosThresholdConfig, TenantRouting, TrwCb, TrwCbConfig, WorkingSet,
                                 WorkingSetConfig)
from kyesim.kye import (BoundaryEstimate, DetectionTriggered, InferenceReport, InsufficientCoverage, Mechanism,
                        NoPortDistinctPair, NoWildcardObserved, PatternNotFound, ProbeBatch, ProbeKind,
                        ReplayAttacker, SideChannel, TableSnapshot, classify_defense, detect_co_residency,
                        detect_redirection, detect_syn_proxy, estimate_credit_params, estimate_detection_boundary,
                        infer_aggregation_threshold, interleave, read_tenant_rules, reconstruct_access_matrix,
                        scan_batch, success_runs)
from kyesim.netcore import FlowKey, FlowRule, Forward, Host, Network, Packet, SwitchSpec, Topology, ip

from conftest import rig, star
from oracles import even_pattern


def _hosts(n):
    return [ip(f"10.2.0.{i}") for i in range(1, n + 1)]


def _dark(n):
    return [ip("10.3.0.0") + i for i in range(1, n + 1)]


class TestSideChannel:
    def test_snapshot_before_and_after_install(self):
        net, _, att = rig(star(1))
        ch = att.channels["s1"]
        before = ch.snapshot()
        net.send("a0", Packet.tcp("10.1.0.1", "10.2.0.1"))
        net.run_until(1)
        after = ch.snapshot()
        added, removed = before.diff(after)
        assert not before.rules and len(added) == 2 and removed == []
        assert added[0].match == FlowKey.pair(ip("10.1.0.1"), ip("10.2.0.1"))
        assert added[1].match == FlowKey.pair(ip("10.2.0.1"), ip("10.1.0.1"))

    def test_snapshot_is_a_copy(self):
        net, _, att = rig(star(1))
        net.send("a0", Packet.tcp("10.1.0.1", "10.2.0.1"))
        net.run_until(1)
        snap = att.channels["s1"].snapshot()
        snap.rules[0].priority = 999
        assert net.switches["s1"].rules[0].priority != 999

    def test_poll_mode_sees_rules_late(self):
        net, _, att = rig(star(1), poll_interval=0.5)
        ch = att.channels["s1"]
        net.send("a0", Packet.tcp("10.1.0.1", "10.2.0.1"))
        net.run_until(2)
        adds = [e for e in ch.events if e.op == "add" and e.rule.match.src_ip == ip("10.1.0.1")]
        assert len(adds) == 1 and adds[0].time == pytest.approx(0.5)

    def test_resolve_picks_rule_alive_at_time(self):
        net, _, att = rig(star(1))
        net.send("a0", Packet.tcp("10.1.0.1", "10.2.0.1"))
        net.run_until(1)
        from kyesim.netcore import Header
        hdr = Header(ip("10.1.0.1"), ip("10.2.0.1"))
        assert att.channels["s1"].resolve(hdr, 1, 0.5).out_ports == [2]


class TestProbes:
    @pytest.mark.parametrize("n,k", [(10, 0), (10, 10), (20, 7), (13, 5)])
    def test_interleave_matches_oracle(self, n, k):
        assert interleave(n, k) == even_pattern(n, k)

    def test_empty_batch_gives_empty_record(self):
        _, _, att = rig(star(1))
        rec = att.run_probe_batch(ProbeBatch(ProbeKind.SCAN, ip("10.1.0.1"), [], 1.0))
        assert rec.is_empty() and rec.rule_delta == [] and rec.end == rec.start
        with pytest.raises(ValueError):
            classify_defense(rec)

    def test_invalid_batch(self):
        with pytest.raises(ValueError):
            ProbeBatch(ProbeKind.SCAN, 1, [2], 0.0)

    def test_scan_batch_ratio(self):
        b = scan_batch("10.1.0.1", 20, 0.35, _hosts(20), _dark(20), 1.0)
        assert sum(b.expect_reply) == 7 and len(set(b.destinations)) == 20

    def test_success_runs(self):
        assert success_runs([1, 1, 0, 0, 1, 0, 1, 1, 1]) == [(0, 2), (4, 1), (6, 3)]
        assert success_runs([]) == []

    @pytest.mark.parametrize("poll", [0.0, 0.25])
    def test_replayed_traffic_gives_identical_switch_trace(self, poll):
        def build(side):
            net = Network(star(4))
            from kyesim.controlplane import Controller
            Controller(net, [TrwCb()])
            chans = [SideChannel(net, "s1", poll)] if side else []
            return net, chans
        net, chans = build(True)
        from kyesim.kye import Attacker
        att = Attacker(net, ["a0"], chans)
        att.run_probe_batch(scan_batch("10.1.0.1", 12, 0.25, _hosts(4), _dark(12), 2.0))
        net2, _ = build(False)
        ReplayAttacker(net2, att.log).run()
        net2.run_until(net.scheduler.now)
        assert net.trace.switch_events() == net2.trace.switch_events()


def _credit_record(base, reward, n):
    topo = star(n, latency=0.197)
    _, _, att = rig(topo, [TrwCb(TrwCbConfig(base_credit=base, success_reward=reward, credit_release="on_drain"))])
    return att.run_probe_batch(ProbeBatch(ProbeKind.SCAN, ip("10.1.0.1"), _hosts(n), 100.0,
                                          expect_reply=[True] * n))


class TestInference:
    def test_credit_default_pattern(self):
        rec = _credit_record(10, 2, 100)
        assert [n for _, n in success_runs(rec.outcomes)[:2]] == [10, 20]
        assert estimate_credit_params([rec]) == (10, 2)

    def test_credit_other_params(self):
        assert estimate_credit_params([_credit_record(5, 3, 60)]) == (5, 3)

    def test_credit_pattern_absent(self):
        _, _, att = rig(star(10))
        rec = att.run_probe_batch(ProbeBatch(ProbeKind.SCAN, ip("10.1.0.1"), _hosts(10), 10.0))
        with pytest.raises(PatternNotFound):
            estimate_credit_params([rec])

    def test_boundary_needs_both_outcomes(self):
        class R:
            def __init__(self, fr, det):
                self.failed_ratio, self.detected = fr, det
        with pytest.raises(InsufficientCoverage):
            estimate_detection_boundary([R(0.2, False), R(0.4, False)])
        b = estimate_detection_boundary([R(0.2, False), R(0.4, False), R(0.6, True), R(0.9, True)])
        assert (b.estimate, b.ci_low, b.ci_high) == (pytest.approx(0.5), 0.4, 0.6)

    def test_report_round_trip(self):
        rep = InferenceReport(Mechanism.CREDIT_BASED_LIMIT, BoundaryEstimate(0.5, 0.4, 0.6), (10, 2),
                              AccessMatrix.square(["10.0.0.0/24"], [[True]]), 1.0, True, {"x": 1})
        back = InferenceReport.from_dict(rep.to_dict())
        assert back.to_json() == rep.to_json()


class TestClassifier:
    def _scan(self, apps, topo=None, n=6, k=3, rate=2.0):
        _, _, att = rig(topo or star(6), apps)
        return classify_defense(att.run_probe_batch(scan_batch("10.1.0.1", n, k / n, _hosts(6), _dark(n), rate)))

    def test_none(self):
        _, _, att = rig(star(6))
        rec = att.run_probe_batch(ProbeBatch(ProbeKind.SCAN, ip("10.1.0.1"), _hosts(6), 2.0,
                                             expect_reply=[True] * 6))
        assert classify_defense(rec) is Mechanism.NONE

    def test_filtering(self):
        _, _, att = rig(star(2), [TrwCb()])
        rec = att.run_probe_batch(ProbeBatch(ProbeKind.SCAN, ip("10.1.0.1"), _dark(12), 2.0,
                                             expect_reply=[False] * 12))
        assert rec.detected and classify_defense(rec) is Mechanism.TRAFFIC_FILTERING

    def test_credit(self):
        assert classify_defense(_credit_record(10, 2, 60)) is Mechanism.CREDIT_BASED_LIMIT

    def test_working_set(self):
        _, _, att = rig(star(4), [WorkingSet(WorkingSetConfig(install_delay=0.5))])
        rec = att.run_probe_batch(ProbeBatch(ProbeKind.SCAN, ip("10.1.0.1"), _hosts(4), 2.0,
                                             expect_reply=[True] * 4))
        assert classify_defense(rec) is Mechanism.WORKING_SET_DELAY

    def test_syn_proxy(self):
        _, _, att = rig(star(2, syn_proxy=True))
        rec = att.run_probe_batch(ProbeBatch(ProbeKind.SYN, ip("10.1.0.1"), _hosts(2), 2.0))
        assert classify_defense(rec) is Mechanism.SYN_PROXY_WHITEHOLE


class TestCampaigns:
    SUBNETS = ["10.0.0.0/24", "10.0.1.0/24", "10.0.2.0/24"]

    def _access_rig(self, allow):
        hosts = [Host("a0", ip("10.9.0.1"), "s1", port=1, latency=0.0005, prefix=16)]
        hosts += [Host(f"x{i}", ip(f"10.0.{i}.9"), "s1", latency=0.01) for i in range(3)]
        hosts += [Host(f"r{i}", ip(f"10.2.0.{i}"), "s1", latency=0.01) for i in range(1, 41)]
        subnets = self.SUBNETS + ["10.2.0.0/24"]
        grid = [row + [True] for row in allow] + [[True] * 4]
        m = AccessMatrix.square(subnets, grid)
        return rig(Topology([SwitchSpec("s1")], hosts), [TrwCb(), AccessControl(m)])

    def test_zero_boundary_refused(self):
        _, _, att = self._access_rig([[True] * 3] * 3)
        with pytest.raises(DetectionTriggered):
            reconstruct_access_matrix(att, self.SUBNETS, self.SUBNETS, 0.0, _hosts(40))

    def test_all_allow_matrix(self):
        net, _, att = self._access_rig([[True] * 3] * 3)
        m = reconstruct_access_matrix(att, self.SUBNETS, self.SUBNETS, 0.5, _hosts(40))
        assert m.allow == [[True] * 3] * 3 and not net.trace.of_kind("detection")

    def test_mixed_matrix_recovered_stealthily(self):
        grid = [[True, False, False], [False, True, True], [True, False, True]]
        net, _, att = self._access_rig(grid)
        m = reconstruct_access_matrix(att, self.SUBNETS, self.SUBNETS, 0.5, _hosts(40))
        assert m.allow == grid and not net.trace.of_kind("detection")

    def test_aggregation_without_wildcard(self):
        _, _, att = rig(star(2))
        with pytest.raises(NoWildcardObserved):
            infer_aggregation_threshold(att, "10.2.0.1")

    def test_aggregation_rate(self):
        hosts = [Host("a0", ip("10.1.0.1"), "s1", latency=0.0005, prefix=16),
                 Host("n2", ip("10.2.0.0"), "s1", prefix=24, responsive=False)]
        _, _, att = rig(Topology([SwitchSpec("s1")], hosts),
                        [Aggregation(AggregationConfig(rate_threshold=1.0e6 / 8))])
        assert infer_aggregation_threshold(att, "10.2.0.9", max_rate=2.0) == pytest.approx(1.0, abs=0.1)

    def test_syn_proxy_on_off(self):
        assert detect_syn_proxy(rig(star(1, syn_proxy=True))[2], "10.2.0.1")
        assert not detect_syn_proxy(rig(star(1))[2], "10.2.0.1")

    def _dos_star(self, response):
        extra = [Host("hp", ip("10.8.0.1"), "s1", port=9, sink=True)]
        topo = star(2, extra_hosts=extra)
        cfg = DosThresholdConfig(threshold=100, response=response, honeypot_port=9)
        return rig(topo, [DosDetector(cfg)])[2]

    def test_redirection_detected(self):
        assert detect_redirection(self._dos_star(DosResponse.REDIRECT), ["10.2.0.1", "10.2.0.2"])

    def test_filtering_is_not_redirection(self):
        assert not detect_redirection(self._dos_star(DosResponse.FILTER), ["10.2.0.1", "10.2.0.2"])

    def test_no_port_distinct_pair(self):
        hosts = [Host("a0", ip("10.1.0.1"), "s1", latency=0.0005, prefix=16),
                 Host("h1", ip("10.2.0.1"), "s1", port=2), Host("h2", ip("10.2.0.2"), "s1", port=2)]
        _, _, att = rig(Topology([SwitchSpec("s1")], hosts))
        with pytest.raises(NoPortDistinctPair):
            detect_redirection(att, ["10.2.0.1", "10.2.0.2"])

    def _tenant_rig(self):
        hosts = [Host("a0", ip("10.1.0.1"), "s1", port=1, tenant=1, latency=0.0005),
                 Host("v2", ip("10.5.0.2"), "s1", port=1, tenant=2),
                 Host("r2", ip("10.5.0.3"), "s1", port=2, tenant=2)]
        return rig(Topology([SwitchSpec("s1")], hosts), [TenantRouting()])

    def test_co_residency(self):
        _, _, att = self._tenant_rig()
        assert detect_co_residency(att, "10.5.0.2", tenant_tag=1)
        assert not detect_co_residency(att, "10.5.0.3", tenant_tag=1)

    def test_read_tenant_rules(self):
        _, _, att = self._tenant_rig()
        detect_co_residency(att, "10.5.0.2", tenant_tag=1)
        detect_co_residency(att, "10.5.0.3", tenant_tag=2)
        groups = read_tenant_rules(att.channels["s1"].snapshot())
        assert sorted(groups) == [1, 2]
        assert all(r.match.tenant_tag == t for t, rules in groups.items() for r in rules)

    def test_read_tenant_rules_untagged(self):
        snap = TableSnapshot("s1", 0.0, [FlowRule(FlowKey(), (Forward(1),))])
        assert list(read_tenant_rules(snap)) == ["none"]
