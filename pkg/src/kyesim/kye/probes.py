"""Probe batches, their observation records, and the attacker host that runs them."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

from ..netcore import FlowRule, Header, Packet, PacketKind, ip
from .sidechannel import RuleEvent, SideChannel, TableSnapshot


class ProbeKind(enum.Enum):
    SCAN = "scan"
    DOS = "dos"
    ACCESS = "access"
    FLOW_RAMP = "flow_ramp"
    SYN = "syn"
    REDIRECT = "redirect"
    CORES = "cores"


def interleave(n: int, k: int) -> list[bool]:
    """``n`` outcomes with exactly ``k`` successes spread as evenly as possible."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    return [((i + 1) * k) // n - (i * k) // n == 1 for i in range(n)]


@dataclass
class ProbeBatch:
    kind: ProbeKind
    src_ip: int
    destinations: list[int]
    rate: float
    duration: Optional[float] = None
    target_success_ratio: Optional[float] = None
    expect_reply: Optional[list[bool]] = None
    offsets: Optional[list[float]] = None  # explicit send times; default i / rate
    seed: int = 0
    packet: str = "syn"  # "syn" | "udp"
    size: int = 64
    dst_port: int = 80
    reuse_flow: bool = False
    tenant_tag: Optional[int] = None
    stop_on_detection: bool = False
    settle: float = 1.5

    def __post_init__(self):
        self.src_ip = ip(self.src_ip)
        self.destinations = [ip(d) for d in self.destinations]
        if self.rate <= 0:
            raise ValueError("probe rate must be > 0")
        if self.target_success_ratio is not None and not 0 <= self.target_success_ratio <= 1:
            raise ValueError("target_success_ratio must lie in [0, 1]")
        if self.offsets is not None and len(self.offsets) != len(self.destinations):
            raise ValueError("offsets must align with destinations")
        if self.expect_reply is not None and len(self.expect_reply) != len(self.destinations):
            raise ValueError("expect_reply must align with destinations")
        if self.packet not in ("syn", "udp"):
            raise ValueError(f"unknown probe packet type {self.packet!r}")

    def schedule(self) -> list[float]:
        times = self.offsets if self.offsets is not None else [i / self.rate for i in range(len(self.destinations))]
        if self.duration is not None:
            times = [t for t in times if t < self.duration]
        return list(times)


@dataclass
class ProbeResult:
    index: int
    dst: int
    header: Header
    offset: float
    sent_at: Optional[float] = None
    replied: bool = False
    reply_time: Optional[float] = None
    reply_kind: Optional[str] = None
    expect_reply: Optional[bool] = None
    terminal: Optional[FlowRule] = None
    terminal_switch: Optional[str] = None

    @property
    def sent(self) -> bool:
        return self.sent_at is not None


@dataclass
class ObservationRecord:
    batch: ProbeBatch
    start: float
    end: float
    switch: str
    ingress_port: int
    attacker_latency: float
    probes: list[ProbeResult] = field(default_factory=list)
    rule_delta: list[RuleEvent] = field(default_factory=list)
    before: Optional[TableSnapshot] = None
    after: Optional[TableSnapshot] = None
    detected: bool = False
    detection_time: Optional[float] = None

    @property
    def issued(self) -> list[ProbeResult]:
        """Probes sent before the attacker saw itself detected."""
        sent = [p for p in self.probes if p.sent]
        if self.detection_time is None:
            return sent
        return [p for p in sent if p.sent_at <= self.detection_time]

    @property
    def successes(self) -> int:
        return sum(p.replied for p in self.issued)

    @property
    def failures(self) -> int:
        return len(self.issued) - self.successes

    @property
    def failed_ratio(self) -> float:
        n = len(self.issued)
        return self.failures / n if n else 0.0

    @property
    def success_ratio(self) -> float:
        n = len(self.issued)
        return self.successes / n if n else 0.0

    @property
    def outcomes(self) -> list[int]:
        return [int(p.replied) for p in self.probes]

    @property
    def reply_events(self) -> list[tuple[int, bool, Optional[float]]]:
        return [(p.index, p.replied, p.reply_time) for p in self.probes]

    def added_rules(self) -> list[FlowRule]:
        return [e.rule for e in self.rule_delta if e.op == "add"]

    def is_empty(self) -> bool:
        return not self.probes


def _reply_key(header: Header) -> tuple:
    return (header.src_ip, header.dst_ip, header.src_port, header.dst_port)


class Attacker:
    """A host that injects probes and reads flow tables through side channels.

    ``host_ids`` are the topology hosts sitting on the attacker's port (its own
    address plus any spoofed ranges it answers for). The first channel is the
    designated monitored switch, which must be the attacker's ingress switch.
    """

    def __init__(self, network, host_ids, channels, known_k: int = 1):
        self.net = network
        self.host_ids = list(host_ids)
        self.host = network.topology.host(self.host_ids[0])
        chans = channels if isinstance(channels, (list, tuple)) else [channels]
        self.channels: dict[str, SideChannel] = {c.switch_id: c for c in chans}
        self.primary = chans[0]
        if self.primary.switch_id != self.host.switch:
            raise ValueError("the designated side channel must watch the attacker's ingress switch")
        self.known_k = known_k
        self.log: list[tuple] = []
        self._sport = 20000
        self._batch_no = 0
        self._waiting: dict[tuple, deque] = {}
        self._current: Optional[ObservationRecord] = None
        for hid in self.host_ids:
            network.on_receive(hid, self._on_receive)
        for ch in chans:
            ch.attach()
            ch.listeners.append(self._on_rule_event)

    @property
    def ip(self) -> int:
        return self.host.ip

    @property
    def ingress_port(self) -> int:
        return self.host.port

    def _next_sport(self) -> int:
        self._sport += 1
        if self._sport > 65000:
            self._sport = 20001
        return self._sport

    # ------------------------------------------------------------ running

    def advance(self, t_end: float) -> None:
        self.log.append(("run", t_end))
        self.net.run_until(t_end)

    def idle(self, seconds: float) -> None:
        self.advance(self.net.now + seconds)

    def run_probe_batch(self, batch: ProbeBatch) -> ObservationRecord:
        start = self.net.now
        self._batch_no += 1
        rec = ObservationRecord(batch, start, start, self.host.switch, self.ingress_port,
                                self.host.latency, before=self.primary.snapshot())
        times = batch.schedule()
        fixed = self._next_sport() if batch.reuse_flow else None
        for i, off in enumerate(times):
            dst = batch.destinations[i]
            sport = fixed if fixed is not None else self._next_sport()
            if batch.packet == "udp":
                pkt = Packet.udp(batch.src_ip, dst, sport, batch.dst_port, batch.size, batch.tenant_tag)
            else:
                pkt = Packet.tcp(batch.src_ip, dst, sport, batch.dst_port, PacketKind.TCP_SYN,
                                 batch.size, batch.tenant_tag)
            pkt.flow_id = f"p{sport}-{i}"
            expect = batch.expect_reply[i] if batch.expect_reply is not None else None
            rec.probes.append(ProbeResult(i, dst, pkt.header, off, expect_reply=expect))
            self.log.append(("send", self._batch_no, off, self.host_ids[0], pkt, i))
            self.net.scheduler.schedule(off, self._fire, rec, i, pkt)
        self._current = rec
        end = start + (times[-1] if times else 0.0) + (batch.settle if times else 0.0)
        self.advance(end)
        self._current = None
        self._waiting.clear()
        rec.end = end
        rec.after = self.primary.snapshot()
        rec.rule_delta = [e for ch in self.channels.values() for e in ch.events_between(start, end)]
        rec.rule_delta.sort(key=lambda e: (e.time, e.switch, e.rule.rule_id))
        for p in rec.probes:
            if p.sent:
                self._resolve(rec, p)
        return rec

    def _fire(self, rec: ObservationRecord, i: int, pkt: Packet) -> None:
        if rec.batch.stop_on_detection and rec.detected:
            return
        probe = rec.probes[i]
        probe.sent_at = self.net.now
        self._waiting.setdefault(_reply_key(pkt.header), deque()).append(i)
        self.log.append(("fired", self._batch_no, i))
        self.net.send(self.host_ids[0], pkt)

    def _on_receive(self, packet: Packet, now: float) -> None:
        rec = self._current
        if rec is None:
            return
        h = packet.header
        key = (h.dst_ip, h.src_ip, h.dst_port, h.src_port)
        queue = self._waiting.get(key)
        if not queue:
            return
        probe = rec.probes[queue.popleft()]
        probe.reply_kind = packet.kind.value
        probe.reply_time = now
        probe.replied = packet.kind is not PacketKind.TCP_RST

    def _on_rule_event(self, ev: RuleEvent) -> None:
        rec = self._current
        if rec is None or rec.detected or ev.op != "add":
            return
        m = ev.rule.match
        if m.src_plen and not m.dst_plen and m.covers_src(rec.batch.src_ip):
            rec.detected = True
            rec.detection_time = ev.time

    # ------------------------------------------------------------ inference helpers

    def _resolve(self, rec: ObservationRecord, probe: ProbeResult) -> None:
        t = probe.sent_at + self.host.latency
        switch, header, port = self.host.switch, probe.header, self.ingress_port
        rule = self.channels[switch].resolve(header, port, t, rec.end)
        hops = 1
        while rule is not None:
            probe.terminal, probe.terminal_switch = rule, switch
            if not rule.rewrites or hops >= max(self.known_k, 1):
                break
            # follow a rewrite chain while the next hop is also watched
            for a in rule.rewrites:
                header = a.apply(header)
            ports = rule.out_ports
            if len(ports) != 1 or self.net.topology.is_host_port(switch, ports[0]):
                break
            _, peer, peer_port, link = self.net.topology.peer(switch, ports[0])
            if peer not in self.channels:
                break
            t += link.latency
            switch, port = peer, peer_port
            rule = self.channels[switch].resolve(header, port, t, rec.end)
            hops += 1


class ReplayAttacker:
    """Re-injects an attacker's exact traffic log without any side channel attached."""

    def __init__(self, network, log):
        self.net = network
        self.log = list(log)

    def run(self) -> None:
        fired = {(e[1], e[2]) for e in self.log if e[0] == "fired"}
        for entry in self.log:
            if entry[0] == "send":
                _, b, off, host_id, pkt, i = entry
                self.net.scheduler.schedule(off, self._fire, (b, i) in fired, host_id, pkt)
            elif entry[0] == "run":
                self.net.run_until(entry[1])

    def _fire(self, go: bool, host_id: str, pkt: Packet) -> None:
        if go:
            self.net.send(host_id, replace(pkt, meta=dict(pkt.meta)))
