"""Wildcard aggregation with per-flow promotion past a rate or size threshold."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..netcore import FlowKey, FlowRule, Forward, Header
from ..netcore.packet import prefix_mask
from .routing import NoRoute, out_port
from .verdicts import InstallRule


@dataclass(frozen=True)
class AggregationConfig:
    rate_threshold: Optional[float] = None  # bytes/sec
    size_threshold: Optional[int] = None  # cumulative bytes
    prefix_len: int = 24
    poll_interval: float = 0.5
    wildcard_priority: int = 10
    exact_priority: int = 20

    def __post_init__(self):
        if self.rate_threshold is None and self.size_threshold is None:
            raise ValueError("aggregation needs a rate or size threshold")
        if not 0 <= self.prefix_len <= 32:
            raise ValueError("prefix_len out of range")


@dataclass
class FlowStats:
    rate: float = 0.0
    cumulative_bytes: int = 0


def flow_key(header: Header) -> FlowKey:
    return FlowKey(header.src_ip, 32, header.dst_ip, 32, header.proto, header.src_port,
                   header.dst_port, None, None, header.tenant_tag)


def over_threshold(config: AggregationConfig, stats: FlowStats) -> bool:
    if config.rate_threshold is not None and stats.rate >= config.rate_threshold:
        return True
    return config.size_threshold is not None and stats.cumulative_bytes >= config.size_threshold


def aggregation_decide(config: AggregationConfig, stats: FlowStats, header: Header, port: int) -> InstallRule:
    if over_threshold(config, stats):
        return InstallRule(FlowRule(flow_key(header), (Forward(port),), config.exact_priority))
    wild = FlowKey(dst_ip=header.dst_ip & prefix_mask(config.prefix_len), dst_plen=config.prefix_len)
    return InstallRule(FlowRule(wild, (Forward(port),), config.wildcard_priority))


class Aggregation:
    name = "aggregation"

    def __init__(self, config: AggregationConfig):
        self.config = config
        self.ctl = None
        self.promoted: set[tuple[str, FlowKey]] = set()
        self.edges: set[str] = set()

    def start(self, controller) -> None:
        self.ctl = controller
        controller.net.scheduler.schedule(self.config.poll_interval, self._poll)

    def _stats(self, switch: str, header: Header) -> FlowStats:
        meter = self.ctl.net.switches[switch].meter
        rate = meter.flow_rates(self.ctl.now).get(header, 0.0)
        return FlowStats(rate, meter.cumulative.get(header, 0))

    def on_packet_in(self, ctx):
        if not ctx.at_edge or ctx.deferred:
            return None
        try:
            port = out_port(self.ctl.topology, ctx.switch, ctx.header.dst_ip)
        except NoRoute:
            return None
        self.edges.add(ctx.switch)
        verdict = aggregation_decide(self.config, self._stats(ctx.switch, ctx.header), ctx.header, port)
        if verdict.rule.match.is_exact_pair:
            self.promoted.add((ctx.switch, verdict.rule.match))
        return verdict

    def _poll(self) -> None:
        now = self.ctl.now
        for sw_id in sorted(self.edges):
            meter = self.ctl.net.switches[sw_id].meter
            rates = meter.flow_rates(now)
            for header, total in list(meter.cumulative.items()):
                stats = FlowStats(rates.get(header, 0.0), total)
                key = flow_key(header)
                if (sw_id, key) in self.promoted or not over_threshold(self.config, stats):
                    continue
                try:
                    port = out_port(self.ctl.topology, sw_id, header.dst_ip)
                except NoRoute:
                    continue
                self.promoted.add((sw_id, key))
                self.ctl.install(sw_id, FlowRule(key, (Forward(port),), self.config.exact_priority))
        self.ctl.net.scheduler.schedule(self.config.poll_interval, self._poll)
