"""Working-set policy: rules for unfamiliar destinations wait for a positive reply."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

from .verdicts import Defer, InstallRule, PacketOutNoRule


@dataclass(frozen=True)
class WorkingSetConfig:
    capacity: int = 8
    lifetime: float = 60.0
    install_delay: float = 0.5

    def __post_init__(self):
        if self.capacity < 1 or self.lifetime <= 0 or self.install_delay < 0:
            raise ValueError("invalid working-set configuration")


def _prune(config: WorkingSetConfig, ws: OrderedDict, now: float) -> None:
    for dst in [d for d, t in ws.items() if now - t >= config.lifetime]:
        del ws[dst]


def working_set_touch(config: WorkingSetConfig, ws: OrderedDict, dst: int, now: float) -> None:
    ws[dst] = now
    ws.move_to_end(dst)
    while len(ws) > config.capacity:
        ws.popitem(last=False)


def working_set_decide(config: WorkingSetConfig, ws: OrderedDict, dst: int, now: float):
    _prune(config, ws, now)
    if dst in ws:
        return InstallRule()
    return Defer(config.install_delay)


class WorkingSet:
    name = "working_set"

    def __init__(self, config: WorkingSetConfig = WorkingSetConfig()):
        self.config = config
        self.sets: dict[int, OrderedDict] = {}
        self.awaiting: dict[tuple[int, int], str] = {}
        self.ctl = None

    def start(self, controller) -> None:
        self.ctl = controller

    def working_set(self, host_ip: int) -> OrderedDict:
        return self.sets.setdefault(host_ip, OrderedDict())

    def on_packet_in(self, ctx):
        if not ctx.at_edge:
            return None
        src, dst = ctx.header.src_ip, ctx.header.dst_ip
        origin = self.awaiting.pop((dst, src), None)
        if origin is not None:
            # positive reply for a withheld flow: now it earns its rule
            working_set_touch(self.config, self.working_set(dst), src, ctx.time)
            self.ctl.install(origin, self.ctl.default_rule(origin, ctx.packet.reply(ctx.packet.kind, ctx.time)))
            return None
        if ctx.deferred:
            self.awaiting[(src, dst)] = ctx.switch
            return PacketOutNoRule()
        verdict = working_set_decide(self.config, self.working_set(src), dst, ctx.time)
        if isinstance(verdict, InstallRule):
            working_set_touch(self.config, self.working_set(src), dst, ctx.time)
        return verdict
