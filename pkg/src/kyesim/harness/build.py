"""Scenario -> live simulation objects."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..controlplane import (AccessControl, AccessMatrix, Aggregation, AggregationConfig, Controller,
                            DosDetector, DosResponse, DosThresholdConfig, RouteConfig, TenantRouting,
                            TrwCb, TrwCbConfig, WorkingSet, WorkingSetConfig)
from ..kye import Attacker, SideChannel
from ..netcore import EventScheduler, Host, Link, Network, SwitchSpec, Topology, Trace, ip
from ..netcore.packet import parse_prefix
from ..netcore.topology import natural_key
from ..obfuscation import Obfuscator
from . import schema

MBPS = 1e6 / 8  # bytes per second in one Mbit/s


@dataclass
class Simulation:
    scenario: schema.Scenario
    seed: int
    network: Network
    controller: Controller
    trace: Trace
    apps: dict = field(default_factory=dict)
    attacker: Optional[Attacker] = None
    obfuscator: Optional[Obfuscator] = None

    @property
    def topology(self) -> Topology:
        return self.network.topology

    def pool(self, name: str) -> list[int]:
        """Addresses of the hosts ``{name}1..{name}N`` in index order."""
        hosts = [h for h in self.topology.hosts if h.host_id.startswith(name) and h.host_id[len(name):].isdigit()]
        return [h.ip for h in sorted(hosts, key=lambda h: int(h.host_id[len(name):]))]

    def address(self, ref: str) -> int:
        if ref == "self":
            return self.attacker.ip
        try:
            return self.topology.host(ref).ip
        except KeyError:
            return ip(ref)

    def truth_matrix(self) -> Optional[AccessMatrix]:
        app = self.apps.get("access_control")
        return app.matrix if app is not None else None


def build_topology(model: schema.TopologyModel) -> Topology:
    switches = [SwitchSpec(s.id, s.capacity, s.syn_proxy) for s in model.switches]
    hosts = [Host(h.id, ip(h.ip), h.switch, h.port, h.latency, h.prefix, h.responsive, h.tenant, h.sink)
             for h in model.hosts]
    for p in model.pools:
        net, _ = parse_prefix(p.network)
        hosts += [Host(f"{p.name}{i}", net + i, p.switch, 0, p.latency, 32, p.responsive, p.tenant)
                  for i in range(1, p.count + 1)]
    links = [Link(ln.a, ln.b, ln.latency) for ln in model.links]
    return Topology(switches, hosts, links)


def build_app(policy):
    if isinstance(policy, schema.TrwCbPolicy):
        cfg = TrwCbConfig(policy.base_credit, policy.success_reward, policy.alpha, policy.beta,
                          policy.theta0, policy.theta1, policy.connection_timeout, policy.credit_release)
        return TrwCb(cfg)
    if isinstance(policy, schema.AccessPolicy):
        return AccessControl(AccessMatrix.square(policy.subnets, policy.allow))
    if isinstance(policy, schema.AggregationPolicy):
        rate = policy.rate_threshold_mbps * MBPS if policy.rate_threshold_mbps is not None else None
        return Aggregation(AggregationConfig(rate, policy.size_threshold_bytes, policy.prefix_len,
                                             policy.poll_interval))
    if isinstance(policy, schema.WorkingSetPolicy):
        return WorkingSet(WorkingSetConfig(policy.capacity, policy.lifetime, policy.install_delay))
    if isinstance(policy, schema.DosPolicy):
        return DosDetector(DosThresholdConfig(policy.threshold_pps, 1.0, DosResponse(policy.response),
                                              policy.honeypot_port, policy.rate_limit_bytes,
                                              policy.poll_interval))
    if isinstance(policy, schema.TenantPolicy):
        return TenantRouting(set(policy.tenants) if policy.tenants is not None else None)
    raise TypeError(policy)


def monitored_switches(topology: Topology, designated: str, extra: list[str], n: Optional[int] = None) -> list[str]:
    """Designated switch first; with ``n`` given, fill up with the switches nearest to it."""
    chosen = [designated] + [s for s in extra if s != designated]
    if n is not None:
        dist = topology.distances_to(designated)
        ranked = sorted(dist, key=lambda s: (dist[s], natural_key(s)))
        chosen = (chosen + [s for s in ranked if s not in chosen])[:n]
    return chosen


def build(scenario: schema.Scenario, seed: Optional[int] = None, side_channel: bool = True,
          monitor_count: Optional[int] = None) -> Simulation:
    seed = scenario.seed if seed is None else seed
    topo = build_topology(scenario.topology)
    trace = Trace()
    net = Network(topo, EventScheduler(seed), trace, scenario.controller_latency)
    apps = {}
    for p in scenario.policies:
        app = build_app(p)
        apps[app.name] = app
    obf = None
    if scenario.obfuscation is not None:
        obf = Obfuscator(scenario.obfuscation.k, seed=scenario.obfuscation.seed + seed)
    route = RouteConfig(idle_timeout=scenario.routing.idle_timeout, hard_timeout=scenario.routing.hard_timeout)
    ctl = Controller(net, list(apps.values()), route, obf)
    sim = Simulation(scenario, seed, net, ctl, trace, apps, None, obf)
    if scenario.attacker is not None and side_channel:
        a = scenario.attacker
        names = monitored_switches(topo, a.monitor, a.extra_monitored, monitor_count)
        chans = [SideChannel(net, s, a.poll_interval) for s in names]
        sim.attacker = Attacker(net, a.hosts, chans, known_k=obf.k if obf else 1)
    return sim
