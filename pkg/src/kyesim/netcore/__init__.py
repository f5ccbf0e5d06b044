from .flow import Action, Drop, FlowKey, FlowRule, Forward, RateLimit, SendToController, SetField
from .network import Network
from .packet import Header, Packet, PacketKind, Proto, ip, ip_str, parse_prefix
from .scheduler import EventScheduler
from .switch import Emitted, FlowMeter, Switch, TableFull, UnknownPort
from .topology import Host, Link, SwitchSpec, Topology, TopologyError
from .trace import Trace, TraceRecord

__all__ = [
    "Action", "Drop", "Emitted", "EventScheduler", "FlowKey", "FlowMeter", "FlowRule", "Forward",
    "Header", "Host", "Link", "Network", "Packet", "PacketKind", "Proto", "RateLimit",
    "SendToController", "SetField", "Switch", "SwitchSpec", "TableFull", "Topology", "TopologyError",
    "Trace", "TraceRecord", "UnknownPort", "ip", "ip_str", "parse_prefix",
]
