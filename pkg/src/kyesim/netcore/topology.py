"""Switches, hosts and links; hop-count routing helpers."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx

from .packet import in_prefix, ip


class TopologyError(ValueError):
    pass


def natural_key(name: str):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", name)]


@dataclass
class SwitchSpec:
    switch_id: str
    capacity: int = 1000
    syn_proxy: bool = False


@dataclass
class Host:
    host_id: str
    ip: int
    switch: str
    port: int = 0
    latency: float = 0.001
    prefix: int = 32  # < 32 means the host fronts a whole subnet (gateway or attacker range)
    responsive: bool = True
    tenant: Optional[int] = None
    sink: bool = False  # honeypot-style host: absorbs whatever its port outputs, owns no route

    def owns(self, addr: int) -> bool:
        return in_prefix(addr, self.ip, self.prefix)


@dataclass
class Link:
    a: str
    b: str
    latency: float = 0.001
    a_port: int = 0
    b_port: int = 0


@dataclass
class Topology:
    switches: list[SwitchSpec]
    hosts: list[Host]
    links: list[Link] = field(default_factory=list)

    def __post_init__(self):
        self._by_switch = {s.switch_id: s for s in self.switches}
        self._hosts = {h.host_id: h for h in self.hosts}
        self.port_map: dict[str, dict[int, tuple]] = {s.switch_id: {} for s in self.switches}
        errors = []
        for h in self.hosts:
            if h.switch not in self._by_switch:
                errors.append(f"host {h.host_id} attached to unknown switch {h.switch}")
                continue
            if h.latency <= 0:
                errors.append(f"host {h.host_id} link latency must be > 0")
            ports = self.port_map[h.switch]
            if not h.port:
                h.port = max(ports, default=0) + 1
            entry = ports.get(h.port)
            if entry is None:
                ports[h.port] = ("hosts", [h.host_id])
            elif entry[0] == "hosts":
                entry[1].append(h.host_id)
            else:
                errors.append(f"port {h.switch}:{h.port} already used by a switch link")
        for ln in self.links:
            for end in (ln.a, ln.b):
                if end not in self._by_switch:
                    errors.append(f"link endpoint {end} is not a switch")
            if ln.latency <= 0:
                errors.append(f"link {ln.a}-{ln.b} latency must be > 0")
            if errors:
                continue
            ln.a_port = ln.a_port or max(self.port_map[ln.a], default=0) + 1
            self.port_map[ln.a][ln.a_port] = ("switch", ln.b, 0, ln)
            ln.b_port = ln.b_port or max(self.port_map[ln.b], default=0) + 1
            self.port_map[ln.b][ln.b_port] = ("switch", ln.a, ln.a_port, ln)
            self.port_map[ln.a][ln.a_port] = ("switch", ln.b, ln.b_port, ln)
        self.graph = nx.Graph()
        self.graph.add_nodes_from(self._by_switch)
        self.graph.add_edges_from((ln.a, ln.b) for ln in self.links)
        if self.switches and not nx.is_connected(self.graph):
            errors.append("switch graph is not connected")
        if errors:
            raise TopologyError("; ".join(errors))
        self._dist_cache: dict[str, dict[str, int]] = {}

    # ------------------------------------------------------------ lookups

    def host(self, host_id: str) -> Host:
        return self._hosts[host_id]

    def switch_spec(self, switch_id: str) -> SwitchSpec:
        return self._by_switch[switch_id]

    def host_for_ip(self, addr: int | str) -> Optional[Host]:
        """Longest-prefix owner of an address."""
        addr = ip(addr)
        best = None
        for h in self.hosts:
            if not h.sink and h.owns(addr) and (best is None or h.prefix > best.prefix):
                best = h
        return best

    def is_host_port(self, switch_id: str, port: int) -> bool:
        entry = self.port_map[switch_id].get(port)
        return entry is not None and entry[0] == "hosts"

    def peer(self, switch_id: str, port: int) -> tuple:
        try:
            return self.port_map[switch_id][port]
        except KeyError:
            raise TopologyError(f"{switch_id} has no port {port}") from None

    def neighbor_port(self, switch_id: str, neighbor: str) -> int:
        for port, entry in sorted(self.port_map[switch_id].items()):
            if entry[0] == "switch" and entry[1] == neighbor:
                return port
        raise TopologyError(f"{switch_id} is not adjacent to {neighbor}")

    def distances_to(self, target: str) -> dict[str, int]:
        if target not in self._dist_cache:
            self._dist_cache[target] = nx.single_source_shortest_path_length(self.graph, target)
        return self._dist_cache[target]

    def next_hop(self, switch_id: str, target: str) -> Optional[str]:
        """Neighbor one hop closer to ``target`` (lowest switch id on ties); None when already there."""
        if switch_id == target:
            return None
        dist = self.distances_to(target)
        here = dist[switch_id]
        options = [n for n in self.graph.neighbors(switch_id) if dist.get(n) == here - 1]
        return min(options, key=natural_key)

    def out_port_towards(self, switch_id: str, host: Host) -> int:
        nxt = self.next_hop(switch_id, host.switch)
        if nxt is None:
            return host.port
        return self.neighbor_port(switch_id, nxt)

    @property
    def avg_out_degree_minus_one(self) -> float:
        """o, where o + 1 is the mean switch degree in the switch graph."""
        if not self.switches:
            return 0.0
        deg = sum(d for _, d in self.graph.degree()) / len(self.switches)
        return deg - 1
