"""Tag-based multi-tenant routing."""

from __future__ import annotations

from typing import Optional

from ..netcore import FlowKey, FlowRule, Forward
from .routing import NoRoute, RouteConfig, out_port
from .verdicts import InstallRule


class UnknownTenant(LookupError):
    pass


def tenant_route(topology, switch_id: str, header, in_port: int,
                 tenants: Optional[set[int]] = None, config: RouteConfig = RouteConfig()) -> InstallRule:
    tag = header.tenant_tag
    if tag is None or (tenants is not None and tag not in tenants):
        raise UnknownTenant(tag)
    host = topology.host_for_ip(header.dst_ip)
    if host is None:
        raise NoRoute(f"tenant {tag}: no host owns {header.dst_ip}")
    if host.switch == switch_id and host.port == in_port:
        # co-resident VM behind the same port: hairpin back out
        port = in_port
    else:
        port = out_port(topology, switch_id, header.dst_ip)
    match = FlowKey.pair(header.src_ip, header.dst_ip, tenant_tag=tag)
    return InstallRule(FlowRule(match, (Forward(port),), config.priority,
                                config.idle_timeout, config.hard_timeout), switch_id)


class TenantRouting:
    name = "tenant"

    def __init__(self, tenants: Optional[set[int]] = None):
        self.tenants = tenants
        self.ctl = None

    def start(self, controller) -> None:
        self.ctl = controller

    def on_packet_in(self, ctx):
        try:
            return tenant_route(self.ctl.topology, ctx.switch, ctx.header, ctx.in_port,
                                self.tenants, self.ctl.route)
        except UnknownTenant:
            return None
