"""Flow keys, actions and flow rules."""

from __future__ import annotations

import copy
from dataclasses import dataclass, replace
from typing import Optional, Union

from .packet import Header, Proto, in_prefix, ip, ip_str, parse_prefix


@dataclass(frozen=True)
class FlowKey:
    """Match pattern. ``None`` on any optional field means wildcard (ANY).

    Address fields are (network, prefix length) pairs; a prefix length of 0
    matches every address.
    """

    src_ip: int = 0
    src_plen: int = 0
    dst_ip: int = 0
    dst_plen: int = 0
    ip_proto: Optional[Proto] = None
    src_port: Optional[int] = None
    dst_port: Optional[int] = None
    tcp_flags: Optional[frozenset] = None
    in_port: Optional[int] = None
    tenant_tag: Optional[int] = None

    @classmethod
    def build(cls, src: str | None = None, dst: str | None = None, **kw) -> "FlowKey":
        """Convenience constructor taking CIDR strings, e.g. ``build(dst="10.0.1.0/24")``."""
        s_ip, s_len = parse_prefix(src) if src else (0, 0)
        d_ip, d_len = parse_prefix(dst) if dst else (0, 0)
        return cls(s_ip, s_len, d_ip, d_len, **kw)

    @classmethod
    def exact(cls, header: Header, in_port: Optional[int] = None) -> "FlowKey":
        return cls(header.src_ip, 32, header.dst_ip, 32, header.proto, header.src_port,
                   header.dst_port, header.tcp_flags, in_port, header.tenant_tag)

    @classmethod
    def pair(cls, src: int, dst: int, in_port: Optional[int] = None,
             tenant_tag: Optional[int] = None) -> "FlowKey":
        """src/32 + dst/32, everything else ANY."""
        return cls(ip(src), 32, ip(dst), 32, in_port=in_port, tenant_tag=tenant_tag)

    def matches(self, header: Header, in_port: Optional[int] = None) -> bool:
        if self.src_plen and not in_prefix(header.src_ip, self.src_ip, self.src_plen):
            return False
        if self.dst_plen and not in_prefix(header.dst_ip, self.dst_ip, self.dst_plen):
            return False
        if self.ip_proto is not None and self.ip_proto != header.proto:
            return False
        if self.src_port is not None and self.src_port != header.src_port:
            return False
        if self.dst_port is not None and self.dst_port != header.dst_port:
            return False
        if self.tcp_flags is not None and self.tcp_flags != header.tcp_flags:
            return False
        if self.in_port is not None and self.in_port != in_port:
            return False
        if self.tenant_tag is not None and self.tenant_tag != header.tenant_tag:
            return False
        return True

    @property
    def is_exact_pair(self) -> bool:
        return self.src_plen == 32 and self.dst_plen == 32

    def covers_src(self, addr: int) -> bool:
        return not self.src_plen or in_prefix(addr, self.src_ip, self.src_plen)

    def describe(self) -> str:
        parts = []
        if self.src_plen:
            parts.append(f"src={ip_str(self.src_ip)}/{self.src_plen}")
        if self.dst_plen:
            parts.append(f"dst={ip_str(self.dst_ip)}/{self.dst_plen}")
        for name in ("ip_proto", "src_port", "dst_port", "in_port", "tenant_tag"):
            val = getattr(self, name)
            if val is not None:
                parts.append(f"{name}={val.value if isinstance(val, Proto) else val}")
        if self.tcp_flags is not None:
            parts.append("flags=" + "|".join(sorted(self.tcp_flags)))
        return " ".join(parts) or "*"


# ---------------------------------------------------------------- actions

SETTABLE_FIELDS = {"src_ip", "dst_ip", "src_port", "dst_port", "tenant_tag"}


@dataclass(frozen=True)
class Forward:
    port: int


@dataclass(frozen=True)
class Drop:
    pass


@dataclass(frozen=True)
class SetField:
    field: str
    value: int

    def __post_init__(self):
        if self.field not in SETTABLE_FIELDS:
            raise ValueError(f"SetField cannot target {self.field!r}")

    def apply(self, header: Header) -> Header:
        return replace(header, **{self.field: self.value})


@dataclass(frozen=True)
class RateLimit:
    bytes_per_sec: float


@dataclass(frozen=True)
class SendToController:
    pass


Action = Union[Forward, Drop, SetField, RateLimit, SendToController]


def describe_action(a: Action) -> str:
    if isinstance(a, Forward):
        return f"output:{a.port}"
    if isinstance(a, SetField):
        val = ip_str(a.value) if a.field.endswith("_ip") else a.value
        return f"set_{a.field}:{val}"
    if isinstance(a, RateLimit):
        return f"meter:{a.bytes_per_sec:g}"
    if isinstance(a, SendToController):
        return "controller"
    return "drop"


@dataclass
class FlowRule:
    match: FlowKey
    actions: tuple = ()
    priority: int = 1
    idle_timeout: Optional[float] = None
    hard_timeout: Optional[float] = None
    rule_id: int = 0
    installed_at: float = 0.0
    packet_count: int = 0
    byte_count: int = 0
    last_matched: float = 0.0

    def __post_init__(self):
        self.actions = tuple(self.actions)
        if self.priority < 0:
            raise ValueError("priority must be >= 0")

    @property
    def is_drop(self) -> bool:
        return not self.actions or all(isinstance(a, Drop) for a in self.actions)

    @property
    def out_ports(self) -> list[int]:
        return [a.port for a in self.actions if isinstance(a, Forward)]

    @property
    def rewrites(self) -> list[SetField]:
        return [a for a in self.actions if isinstance(a, SetField)]

    def copy(self) -> "FlowRule":
        return copy.copy(self)

    def describe(self) -> str:
        acts = ",".join(describe_action(a) for a in self.actions) or "drop"
        return f"id={self.rule_id} prio={self.priority} match=[{self.match.describe()}] actions=[{acts}]"
