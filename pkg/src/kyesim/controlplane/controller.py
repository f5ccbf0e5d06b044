"""Controller: runs packet-ins through an ordered pipeline of policy apps."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from ..netcore import FlowKey, FlowRule, Network, Packet, TableFull
from .routing import NoRoute, RouteConfig, route_baseline
from .verdicts import Defer, InstallRule, InstallRuleChain, PacketOutNoRule, SilentDrop

log = logging.getLogger(__name__)

BLOCK_PRIORITY = 1000


@dataclass
class PacketIn:
    switch: str
    packet: Packet
    in_port: int
    time: float
    at_edge: bool
    deferred: bool = False

    @property
    def header(self):
        return self.packet.header


class Controller:
    def __init__(self, network: Network, apps=(), route: RouteConfig | None = None, obfuscator=None):
        self.net = network
        self.apps = list(apps)
        self.route = route or RouteConfig()
        self.obfuscator = obfuscator
        self.messages: Counter = Counter()
        self.blocked: set[int] = set()
        network.attach_controller(self)
        if obfuscator is not None:
            obfuscator.bind(self)
        for app in self.apps:
            start = getattr(app, "start", None)
            if start is not None:
                start(self)

    @property
    def now(self) -> float:
        return self.net.now

    @property
    def topology(self):
        return self.net.topology

    def trace(self, switch: str, kind: str, detail: str = "") -> None:
        self.net.trace.emit(self.now, switch, kind, detail)

    # ------------------------------------------------------------ packet-in

    def handle_packet_in(self, switch: str, packet: Packet, in_port: int, deferred: bool = False) -> None:
        ctx = PacketIn(switch, packet, in_port, self.now,
                       self.topology.is_host_port(switch, in_port), deferred)
        verdict = None
        for app in self.apps:
            verdict = app.on_packet_in(ctx)
            if verdict is not None:
                break
        if verdict is None:
            verdict = InstallRule()
        self.apply(verdict, ctx)

    def default_rule(self, switch: str, packet: Packet) -> FlowRule:
        return route_baseline(self.topology, switch, packet.header, self.route).rule

    def apply(self, verdict, ctx: PacketIn) -> None:
        if self.obfuscator is not None and ctx.at_edge:
            verdict = self.obfuscator.transform(verdict, ctx)
        if isinstance(verdict, InstallRule):
            try:
                rule = verdict.rule or self.default_rule(ctx.switch, ctx.packet)
            except NoRoute as exc:
                self.trace(ctx.switch, "silent_drop", f"no route {ctx.header.describe()}")
                log.debug("%s", exc)
                return
            target = verdict.switch or ctx.switch
            if self.install(target, rule) is not None and target == ctx.switch:
                self.packet_out(ctx, rule.actions)
        elif isinstance(verdict, InstallRuleChain):
            if self.install_chain(verdict.rules):
                for sw, rule in verdict.rules:
                    if sw == ctx.switch:
                        self.packet_out(ctx, rule.actions)
                        break
        elif isinstance(verdict, PacketOutNoRule):
            actions = verdict.actions
            if actions is None:
                try:
                    actions = self.default_rule(ctx.switch, ctx.packet).actions
                except NoRoute:
                    self.trace(ctx.switch, "silent_drop", f"no route {ctx.header.describe()}")
                    return
            self.packet_out(ctx, actions)
        elif isinstance(verdict, SilentDrop):
            self.trace(ctx.switch, "silent_drop", f"{verdict.reason} {ctx.header.describe()}".strip())
        elif isinstance(verdict, Defer):
            self.net.scheduler.schedule(verdict.delay, self.handle_packet_in,
                                        ctx.switch, ctx.packet, ctx.in_port, True)
        else:
            raise TypeError(f"unknown verdict {verdict!r}")

    # ------------------------------------------------------------ southbound

    def install(self, switch: str, rule: FlowRule) -> Optional[int]:
        self.messages["flow_mod"] += 1
        try:
            return self.net.install(switch, rule)
        except TableFull:
            return None

    def install_chain(self, rules: list[tuple[str, FlowRule]]) -> bool:
        """All-or-nothing install; rolls back on TableFull."""
        done = []
        for sw, rule in rules:
            rid = self.install(sw, rule)
            if rid is None:
                for psw, prid in reversed(done):
                    self.net.remove(psw, prid, "rollback")
                return False
            done.append((sw, rid))
        return True

    def packet_out(self, ctx: PacketIn, actions) -> None:
        self.messages["packet_out"] += 1
        self.net.packet_out(ctx.switch, ctx.packet, ctx.in_port, actions)

    def block_source(self, switch: str, src_ip: int, detail: str = "") -> None:
        """Defense response to a detected scanner: drop everything from src/32."""
        self.blocked.add(src_ip)
        self.trace(switch, "detection", detail)
        if self.obfuscator is not None and self.obfuscator.active:
            # per-flow drops are planned through the obfuscation chain instead
            return
        rule = FlowRule(FlowKey(src_ip=src_ip, src_plen=32), (), BLOCK_PRIORITY)
        self.install(switch, rule)
