"""Read-only view of one switch's flow table.

Two modes: with ``poll_interval == 0`` the channel sees every table change as
it happens (an observer receiving rule copies); with a positive interval it
diffs periodic snapshots, so changes are only noticed at poll times.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from ..netcore import FlowRule, Header


@dataclass(frozen=True)
class TableSnapshot:
    switch: str
    time: float
    rules: tuple

    def by_id(self) -> dict[int, FlowRule]:
        return {r.rule_id: r for r in self.rules}

    def diff(self, later: "TableSnapshot") -> tuple[list[FlowRule], list[FlowRule]]:
        """(added, removed) going from this snapshot to ``later``."""
        mine, theirs = self.by_id(), later.by_id()
        added = [theirs[i] for i in sorted(theirs.keys() - mine.keys())]
        removed = [mine[i] for i in sorted(mine.keys() - theirs.keys())]
        return added, removed

    def signature(self) -> tuple:
        return tuple((r.rule_id, r.priority, r.match, r.actions, r.packet_count, r.byte_count)
                     for r in self.rules)


@dataclass(frozen=True)
class RuleEvent:
    time: float
    op: str  # "add" | "remove"
    switch: str
    rule: FlowRule


@dataclass
class RuleLife:
    rule: FlowRule
    added: float
    removed: Optional[float] = None

    def alive_at(self, t: float) -> bool:
        return self.added <= t and (self.removed is None or t < self.removed)


class SideChannel:
    def __init__(self, network, switch_id: str, poll_interval: float = 0.0):
        if switch_id not in network.switches:
            raise KeyError(f"unknown switch {switch_id}")
        if poll_interval < 0:
            raise ValueError("poll_interval must be >= 0")
        self.net = network
        self.switch_id = switch_id
        self.poll_interval = poll_interval
        self.events: list[RuleEvent] = []
        self.history: dict[int, RuleLife] = {}
        self._by_src: dict[int, list[RuleLife]] = {}
        self._wild: list[RuleLife] = []
        self.listeners: list[Callable[[RuleEvent], None]] = []
        self.last: Optional[TableSnapshot] = None
        self.attached = False

    @property
    def _switch(self):
        return self.net.switches[self.switch_id]

    def snapshot(self) -> TableSnapshot:
        snap = TableSnapshot(self.switch_id, self.net.now, self._switch.snapshot_rules())
        self.last = snap
        return snap

    def attach(self) -> "SideChannel":
        if self.attached:
            return self
        self.attached = True
        base = self.snapshot()
        for r in base.rules:
            self._remember(RuleLife(r, r.installed_at))
        if self.poll_interval == 0:
            self._switch.observers.append(self._observe)
        else:
            self._baseline = base
            self.net.scheduler.schedule(self.poll_interval, self._poll)
        return self

    def detach(self) -> None:
        if not self.attached:
            return
        self.attached = False
        if self._observe in self._switch.observers:
            self._switch.observers.remove(self._observe)

    def _observe(self, op: str, rule: FlowRule, now: float) -> None:
        self._record(RuleEvent(now, op, self.switch_id, rule))

    def _poll(self) -> None:
        if not self.attached:
            return
        snap = self.snapshot()
        added, removed = self._baseline.diff(snap)
        for r in removed:
            self._record(RuleEvent(snap.time, "remove", self.switch_id, r))
        for r in added:
            self._record(RuleEvent(snap.time, "add", self.switch_id, r))
        self._baseline = snap
        self.net.scheduler.schedule(self.poll_interval, self._poll)

    def _record(self, ev: RuleEvent) -> None:
        self.events.append(ev)
        if ev.op == "add":
            self._remember(RuleLife(ev.rule, ev.time))
        elif ev.rule.rule_id in self.history:
            self.history[ev.rule.rule_id].removed = ev.time
        for fn in self.listeners:
            fn(ev)

    def _remember(self, life: RuleLife) -> None:
        self.history[life.rule.rule_id] = life
        m = life.rule.match
        if m.src_plen == 32:
            self._by_src.setdefault(m.src_ip, []).append(life)
        else:
            self._wild.append(life)

    def events_between(self, t0: float, t1: float) -> list[RuleEvent]:
        return [e for e in self.events if t0 <= e.time <= t1]

    def resolve(self, header: Header, in_port: Optional[int], t: float,
                until: float = float("inf")) -> Optional[FlowRule]:
        """Rule that handled (or will handle) a packet seen at time ``t``.

        The best live rule at ``t`` wins; failing that, the first matching rule
        installed after ``t`` and no later than ``until`` (the rule a packet-in
        produced).
        """
        best = None
        later = None
        for life in self._by_src.get(header.src_ip, []) + self._wild:
            r = life.rule
            if not r.match.matches(header, in_port):
                continue
            if life.alive_at(t):
                if best is None or (r.priority, -r.rule_id) > (best.priority, -best.rule_id):
                    best = r
            elif t < life.added <= until and (later is None or (life.added, r.rule_id) < later[0]):
                later = ((life.added, r.rule_id), r)
        if best is not None:
            return best
        return later[1] if later else None
