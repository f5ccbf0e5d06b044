"""OpenFlow-style switch: one flow table, table-miss to controller, optional SYN proxy."""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Callable, Optional

from .flow import Drop, FlowRule, Forward, RateLimit, SendToController, SetField
from .packet import Header, Packet, PacketKind

DEFAULT_CAPACITY = 1000


class TableFull(Exception):
    pass


class UnknownPort(Exception):
    pass


@dataclass
class Emitted:
    """Something the switch did with a packet; the network turns these into events."""

    kind: str  # output | packet_in | drop | syn_proxy_reply
    port: Optional[int]
    packet: Packet
    detail: str = ""


class FlowMeter:
    """Sliding-window byte/packet accounting per exact header, as exported by flow sampling."""

    def __init__(self, window: float = 1.0):
        self.window = window
        self._samples: deque = deque()
        self.cumulative: dict[Header, int] = defaultdict(int)

    def record(self, header: Header, size: int, now: float) -> None:
        self._samples.append((now, header, size))
        self.cumulative[header] += size

    def _trim(self, now: float) -> None:
        while self._samples and self._samples[0][0] <= now - self.window:
            self._samples.popleft()

    def flow_rates(self, now: float) -> dict[Header, float]:
        """Bytes/sec per flow over the last window."""
        self._trim(now)
        out: dict[Header, float] = defaultdict(float)
        for _, hdr, size in self._samples:
            out[hdr] += size / self.window
        return dict(out)

    def source_packet_rates(self, now: float) -> dict[int, float]:
        self._trim(now)
        out: dict[int, float] = defaultdict(float)
        for _, hdr, _ in self._samples:
            out[hdr.src_ip] += 1 / self.window
        return dict(out)


class Switch:
    def __init__(self, switch_id: str, capacity: int = DEFAULT_CAPACITY, syn_proxy_enabled: bool = False,
                 emit: Callable[[float, str, str, str], None] | None = None):
        self.switch_id = switch_id
        self.capacity = capacity
        self.syn_proxy_enabled = syn_proxy_enabled
        self.ports: dict[int, str] = {}
        self.rules: list[FlowRule] = []
        self.meter = FlowMeter()
        self.observers: list[Callable[[str, FlowRule, float], None]] = []
        self._emit = emit or (lambda *a: None)
        self._next_id = 1
        self._rl_windows: dict[int, deque] = defaultdict(deque)

    def __repr__(self) -> str:
        return f"Switch({self.switch_id!r}, rules={len(self.rules)})"

    # ------------------------------------------------------------ table ops

    def lookup(self, packet: Packet, in_port: Optional[int] = None, now: float = 0.0) -> Optional[FlowRule]:
        """Highest-priority match, ties to lowest rule_id. ``None`` is a table miss."""
        best = None
        for rule in self.rules:
            if rule.match.matches(packet.header, in_port):
                if best is None or (rule.priority, -rule.rule_id) > (best.priority, -best.rule_id):
                    best = rule
        if best is not None:
            best.packet_count += 1
            best.byte_count += packet.size
            best.last_matched = now
        return best

    def install_rule(self, rule: FlowRule, now: float = 0.0) -> int:
        if len(self.rules) >= self.capacity:
            self._emit(now, self.switch_id, "table_full", rule.describe())
            raise TableFull(f"{self.switch_id} at capacity {self.capacity}")
        rule.rule_id = self._next_id
        self._next_id += 1
        rule.installed_at = now
        rule.last_matched = now
        self.rules.append(rule)
        self._emit(now, self.switch_id, "rule_install", rule.describe())
        for obs in self.observers:
            obs("add", rule.copy(), now)
        return rule.rule_id

    def remove_rule(self, rule_id: int, now: float = 0.0, reason: str = "delete") -> FlowRule:
        for i, rule in enumerate(self.rules):
            if rule.rule_id == rule_id:
                del self.rules[i]
                self._rl_windows.pop(rule_id, None)
                self._emit(now, self.switch_id, "rule_remove", f"{reason} {rule.describe()}")
                for obs in self.observers:
                    obs("remove", rule.copy(), now)
                return rule
        raise KeyError(rule_id)

    def expire_rules(self, now: float) -> list[int]:
        expired = []
        for rule in self.rules:
            if rule.hard_timeout is not None and now >= rule.installed_at + rule.hard_timeout:
                expired.append((rule.rule_id, "hard_timeout"))
            elif rule.idle_timeout is not None and now >= rule.last_matched + rule.idle_timeout:
                expired.append((rule.rule_id, "idle_timeout"))
        for rid, why in expired:
            self.remove_rule(rid, now, why)
        return [rid for rid, _ in expired]

    def next_expiry(self) -> Optional[float]:
        times = []
        for r in self.rules:
            if r.hard_timeout is not None:
                times.append(r.installed_at + r.hard_timeout)
            if r.idle_timeout is not None:
                times.append(r.last_matched + r.idle_timeout)
        return min(times) if times else None

    def rule(self, rule_id: int) -> FlowRule:
        for r in self.rules:
            if r.rule_id == rule_id:
                return r
        raise KeyError(rule_id)

    # ------------------------------------------------------------ pipeline

    def process_packet(self, packet: Packet, in_port: int, now: float = 0.0) -> list[Emitted]:
        if in_port not in self.ports:
            raise UnknownPort(f"{self.switch_id} has no port {in_port}")
        self.meter.record(packet.header, packet.size, now)
        rule = self.lookup(packet, in_port, now)
        if rule is None:
            if self.syn_proxy_enabled and packet.kind is PacketKind.TCP_SYN:
                return [Emitted("syn_proxy_reply", in_port, packet.reply(PacketKind.TCP_SYNACK, now))]
            return [Emitted("packet_in", in_port, packet)]
        return self.apply_actions(rule.actions, packet, in_port, now, rule.rule_id)

    def apply_actions(self, actions, packet: Packet, in_port: int, now: float,
                      rule_id: Optional[int] = None) -> list[Emitted]:
        if not actions:
            return [Emitted("drop", None, packet, "empty action list")]
        header = packet.header
        out: list[Emitted] = []
        for act in actions:
            if isinstance(act, SetField):
                header = act.apply(header)
            elif isinstance(act, Forward):
                out.append(Emitted("output", act.port, packet.with_header(header)))
            elif isinstance(act, RateLimit):
                if not self._admit(rule_id, packet.size, act.bytes_per_sec, now):
                    return [Emitted("drop", None, packet, "rate_limit")]
            elif isinstance(act, SendToController):
                out.append(Emitted("packet_in", in_port, packet.with_header(header)))
            elif isinstance(act, Drop):
                return [Emitted("drop", None, packet, "drop action")]
        if not out:
            out.append(Emitted("drop", None, packet, "no output"))
        return out

    def _admit(self, rule_id, size: int, limit: float, now: float) -> bool:
        win = self._rl_windows[rule_id if rule_id is not None else -1]
        while win and win[0][0] <= now - 1.0:
            win.popleft()
        used = sum(s for _, s in win)
        if used + size > limit:
            return False
        win.append((now, size))
        return True

    def snapshot_rules(self) -> tuple[FlowRule, ...]:
        return tuple(r.copy() for r in self.rules)
