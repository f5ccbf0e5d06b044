"""Packets and fully specified headers."""

from __future__ import annotations

import enum
import ipaddress
from dataclasses import dataclass, field, replace
from typing import Optional


class Proto(enum.Enum):
    TCP = "tcp"
    UDP = "udp"
    ICMP = "icmp"


class PacketKind(enum.Enum):
    TCP_SYN = "syn"
    TCP_SYNACK = "synack"
    TCP_DATA = "data"
    TCP_RST = "rst"
    UDP = "udp"
    ICMP = "icmp"


_FLAGS = {
    PacketKind.TCP_SYN: frozenset({"SYN"}),
    PacketKind.TCP_SYNACK: frozenset({"SYN", "ACK"}),
    PacketKind.TCP_DATA: frozenset({"ACK"}),
    PacketKind.TCP_RST: frozenset({"RST"}),
}


def ip(text: str | int) -> int:
    if isinstance(text, int):
        return text
    return int(ipaddress.IPv4Address(text))


def ip_str(value: int) -> str:
    return str(ipaddress.IPv4Address(value))


def parse_prefix(text: str) -> tuple[int, int]:
    """``"10.0.1.0/24"`` -> (network int, prefix length)."""
    net = ipaddress.IPv4Network(text, strict=False)
    return int(net.network_address), net.prefixlen


def prefix_mask(plen: int) -> int:
    return ((1 << 32) - 1) ^ ((1 << (32 - plen)) - 1) if plen else 0


def in_prefix(addr: int, net: int, plen: int) -> bool:
    mask = prefix_mask(plen)
    return (addr & mask) == (net & mask)


@dataclass(frozen=True)
class Header:
    src_ip: int
    dst_ip: int
    proto: Proto = Proto.TCP
    src_port: int = 0
    dst_port: int = 0
    tcp_flags: frozenset = frozenset()
    tenant_tag: Optional[int] = None

    def reversed(self, flags: frozenset = frozenset()) -> "Header":
        return replace(
            self,
            src_ip=self.dst_ip,
            dst_ip=self.src_ip,
            src_port=self.dst_port,
            dst_port=self.src_port,
            tcp_flags=flags,
        )

    def describe(self) -> str:
        s = f"{ip_str(self.src_ip)}:{self.src_port}>{ip_str(self.dst_ip)}:{self.dst_port}/{self.proto.value}"
        if self.tenant_tag is not None:
            s += f"#t{self.tenant_tag}"
        return s


@dataclass
class Packet:
    header: Header
    kind: PacketKind = PacketKind.TCP_SYN
    size: int = 64
    flow_id: str = ""
    created_at: float = 0.0
    meta: dict = field(default_factory=dict)

    @classmethod
    def tcp(cls, src, dst, sport=0, dport=80, kind=PacketKind.TCP_SYN, size=64,
            tenant_tag=None, flow_id="", created_at=0.0) -> "Packet":
        hdr = Header(ip(src), ip(dst), Proto.TCP, sport, dport, _FLAGS.get(kind, frozenset()), tenant_tag)
        return cls(hdr, kind, size, flow_id, created_at)

    @classmethod
    def udp(cls, src, dst, sport=0, dport=9, size=64, tenant_tag=None, flow_id="", created_at=0.0) -> "Packet":
        hdr = Header(ip(src), ip(dst), Proto.UDP, sport, dport, frozenset(), tenant_tag)
        return cls(hdr, PacketKind.UDP, size, flow_id, created_at)

    def reply(self, kind: PacketKind, now: float) -> "Packet":
        return Packet(self.header.reversed(_FLAGS.get(kind, frozenset())), kind, 64, self.flow_id, now)

    def with_header(self, header: Header) -> "Packet":
        return Packet(header, self.kind, self.size, self.flow_id, self.created_at, dict(self.meta))
