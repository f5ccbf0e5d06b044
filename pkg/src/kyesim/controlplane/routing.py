"""Shortest-path forwarding with exact src/dst rules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..netcore import FlowKey, FlowRule, Forward, Header, Topology
from .verdicts import InstallRule


class NoRoute(Exception):
    pass


@dataclass
class RouteConfig:
    priority: int = 1
    idle_timeout: Optional[float] = None
    hard_timeout: Optional[float] = None


def out_port(topology: Topology, switch_id: str, dst_ip: int) -> int:
    host = topology.host_for_ip(dst_ip)
    if host is None:
        raise NoRoute(f"no host owns {dst_ip}")
    return topology.out_port_towards(switch_id, host)


def route_baseline(topology: Topology, switch_id: str, header: Header,
                   config: RouteConfig = RouteConfig()) -> InstallRule:
    """Forward rule on the asking switch: match src/32 + dst/32, output toward dst."""
    port = out_port(topology, switch_id, header.dst_ip)
    rule = FlowRule(FlowKey.pair(header.src_ip, header.dst_ip, tenant_tag=header.tenant_tag),
                    (Forward(port),), config.priority, config.idle_timeout, config.hard_timeout)
    return InstallRule(rule, switch_id)
