"""Data-plane engine: moves packets between hosts and switches over timed links."""

from __future__ import annotations

from typing import Callable, Optional

from .flow import FlowRule
from .packet import Packet, PacketKind
from .scheduler import EventScheduler
from .switch import Emitted, Switch
from .topology import Topology
from .trace import Trace


class Network:
    def __init__(self, topology: Topology, scheduler: Optional[EventScheduler] = None,
                 trace: Optional[Trace] = None, controller_latency: float = 0.0):
        self.topology = topology
        self.scheduler = scheduler or EventScheduler()
        self.trace = trace if trace is not None else Trace()
        self.controller_latency = controller_latency
        self.controller = None
        self.switches: dict[str, Switch] = {}
        for spec in topology.switches:
            sw = Switch(spec.switch_id, spec.capacity, spec.syn_proxy, emit=self.trace.emit)
            sw.ports = {p: e[0] for p, e in topology.port_map[spec.switch_id].items()}
            self.switches[spec.switch_id] = sw
        self.receivers: dict[str, list[Callable[[Packet, float], None]]] = {}
        self._expiry_pending: dict[str, set[float]] = {s: set() for s in self.switches}

    @property
    def now(self) -> float:
        return self.scheduler.now

    def attach_controller(self, controller) -> None:
        self.controller = controller

    def on_receive(self, host_id: str, callback: Callable[[Packet, float], None]) -> None:
        self.receivers.setdefault(host_id, []).append(callback)

    # ------------------------------------------------------------ traffic

    def send(self, host_id: str, packet: Packet) -> None:
        host = self.topology.host(host_id)
        packet.created_at = self.now
        self.scheduler.schedule(host.latency, self._arrive, host.switch, packet, host.port)

    def _arrive(self, switch_id: str, packet: Packet, port: int) -> None:
        sw = self.switches[switch_id]
        self._handle(switch_id, sw.process_packet(packet, port, self.now))

    def _handle(self, switch_id: str, emissions: list[Emitted]) -> None:
        for e in emissions:
            if e.kind == "output":
                self._output(switch_id, e.port, e.packet)
            elif e.kind == "packet_in":
                self.trace.emit(self.now, switch_id, "packet_in", f"port={e.port} {e.packet.header.describe()}")
                if self.controller is not None:
                    self.scheduler.schedule(self.controller_latency, self.controller.handle_packet_in,
                                            switch_id, e.packet, e.port)
            elif e.kind == "syn_proxy_reply":
                self.trace.emit(self.now, switch_id, "syn_proxy_reply", e.packet.header.describe())
                self._output(switch_id, e.port, e.packet)
            else:
                self.trace.emit(self.now, switch_id, "drop", f"{e.detail} {e.packet.header.describe()}")

    def _output(self, switch_id: str, port: int, packet: Packet) -> None:
        entry = self.topology.peer(switch_id, port)
        if entry[0] == "switch":
            _, peer, peer_port, link = entry
            self.scheduler.schedule(link.latency, self._arrive, peer, packet, peer_port)
            return
        targets = [h for h in entry[1] if self.topology.host(h).owns(packet.header.dst_ip)]
        targets = targets or [h for h in entry[1] if self.topology.host(h).sink]
        if not targets:
            self.trace.emit(self.now, switch_id, "drop", f"no host on port {port} {packet.header.describe()}")
        for hid in targets:
            host = self.topology.host(hid)
            self.scheduler.schedule(host.latency, self._deliver, hid, packet)

    def _deliver(self, host_id: str, packet: Packet) -> None:
        host = self.topology.host(host_id)
        self.trace.emit(self.now, host.switch, "deliver", f"{host_id} {packet.kind.value} {packet.header.describe()}")
        if host.responsive and packet.kind is PacketKind.TCP_SYN:
            self.send(host_id, packet.reply(PacketKind.TCP_SYNACK, self.now))
        for cb in self.receivers.get(host_id, ()):
            cb(packet, self.now)

    # ------------------------------------------------------------ control channel

    def install(self, switch_id: str, rule: FlowRule) -> int:
        sw = self.switches[switch_id]
        rid = sw.install_rule(rule, self.now)
        if rule.idle_timeout is not None or rule.hard_timeout is not None:
            self._schedule_expiry(switch_id, sw.next_expiry())
        return rid

    def remove(self, switch_id: str, rule_id: int, reason: str = "delete") -> FlowRule:
        return self.switches[switch_id].remove_rule(rule_id, self.now, reason)

    def packet_out(self, switch_id: str, packet: Packet, in_port: int, actions) -> None:
        sw = self.switches[switch_id]
        self.trace.emit(self.now, switch_id, "packet_out", packet.header.describe())
        self._handle(switch_id, sw.apply_actions(tuple(actions), packet, in_port, self.now))

    def _schedule_expiry(self, switch_id: str, when: Optional[float]) -> None:
        if when is None:
            return
        when = max(when, self.now)
        pending = self._expiry_pending[switch_id]
        if when in pending:
            return
        pending.add(when)
        self.scheduler.at(when, self._expire, switch_id, when)

    def _expire(self, switch_id: str, when: float) -> None:
        self._expiry_pending[switch_id].discard(when)
        sw = self.switches[switch_id]
        sw.expire_rules(self.now)
        nxt = sw.next_expiry()
        if nxt is not None:
            self._schedule_expiry(switch_id, max(nxt, self.now + 1e-9) if nxt <= self.now else nxt)

    def run_until(self, t_end: float) -> list:
        """Advance the simulation; returns trace records produced in this call."""
        start = len(self.trace.records)
        self.scheduler.run_until(t_end)
        return self.trace.records[start:]
