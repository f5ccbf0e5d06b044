"""Threshold DoS detection over per-source packet rates, with three response styles."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from ..netcore import FlowKey, FlowRule, Forward, RateLimit, ip_str
from .routing import NoRoute, out_port
from .verdicts import InstallRule

DOS_PRIORITY = 500


class DosResponse(enum.Enum):
    FILTER = "filter"
    RATE_LIMIT = "rate_limit"
    REDIRECT = "redirect"


@dataclass(frozen=True)
class DosThresholdConfig:
    threshold: float = 100.0  # packets/sec
    window: float = 1.0
    response: DosResponse = DosResponse.FILTER
    honeypot_port: Optional[int] = None
    rate_limit_bytes: float = 12_500.0
    poll_interval: float = 0.5

    def __post_init__(self):
        if self.threshold <= 0 or self.window <= 0 or self.poll_interval <= 0:
            raise ValueError("invalid DoS configuration")
        if self.response is DosResponse.REDIRECT and self.honeypot_port is None:
            raise ValueError("redirect response needs a honeypot port")


def dos_threshold_check(config: DosThresholdConfig, src_ip: int, rate: float,
                        victim_ip: Optional[int] = None, victim_port: Optional[int] = None):
    """Return the response rule once ``rate`` exceeds the threshold, else None."""
    if rate <= config.threshold:
        return None
    if config.response is DosResponse.FILTER:
        return InstallRule(FlowRule(FlowKey(src_ip=src_ip, src_plen=32), (), DOS_PRIORITY))
    if config.response is DosResponse.REDIRECT:
        return InstallRule(FlowRule(FlowKey(src_ip=src_ip, src_plen=32),
                                    (Forward(config.honeypot_port),), DOS_PRIORITY))
    if victim_ip is None or victim_port is None:
        raise ValueError("rate limiting needs the victim address and port")
    return InstallRule(FlowRule(FlowKey.pair(src_ip, victim_ip),
                                (RateLimit(config.rate_limit_bytes), Forward(victim_port)), DOS_PRIORITY))


class DosDetector:
    """Polls switch meters; responds once per offending source."""

    name = "dos"

    def __init__(self, config: DosThresholdConfig = DosThresholdConfig()):
        self.config = config
        self.handled: set[tuple[str, int]] = set()
        self.ctl = None

    def start(self, controller) -> None:
        self.ctl = controller
        controller.net.scheduler.schedule(self.config.poll_interval, self._poll)

    def on_packet_in(self, ctx):
        return None

    def _poll(self) -> None:
        now = self.ctl.now
        for sw_id in sorted(self.ctl.net.switches):
            meter = self.ctl.net.switches[sw_id].meter
            for src, pps in sorted(meter.source_packet_rates(now).items()):
                if (sw_id, src) in self.handled or pps <= self.config.threshold:
                    continue
                flows = {h: r for h, r in meter.flow_rates(now).items() if h.src_ip == src}
                victim = max(sorted(flows, key=lambda h: h.describe()), key=flows.get)
                try:
                    port = out_port(self.ctl.topology, sw_id, victim.dst_ip)
                except NoRoute:
                    port = None
                verdict = dos_threshold_check(self.config, src, pps, victim.dst_ip, port)
                self.handled.add((sw_id, src))
                self.ctl.trace(sw_id, "detection", f"dos src={ip_str(src)} pps={pps:g}")
                self.ctl.install(sw_id, verdict.rule)
        self.ctl.net.scheduler.schedule(self.config.poll_interval, self._poll)
