"""Static subnet access-control matrix."""

from __future__ import annotations

from dataclasses import dataclass

from ..netcore import ip
from ..netcore.packet import in_prefix, parse_prefix
from .verdicts import InstallRule, SilentDrop


class UnknownSubnet(LookupError):
    pass


@dataclass
class AccessMatrix:
    sources: list[str]
    destinations: list[str]
    allow: list[list[bool]]

    def __post_init__(self):
        if len(self.allow) != len(self.sources) or any(len(r) != len(self.destinations) for r in self.allow):
            raise ValueError("allow grid dimensions must match the subnet lists")
        self._src = [parse_prefix(s) for s in self.sources]
        self._dst = [parse_prefix(d) for d in self.destinations]

    @classmethod
    def square(cls, subnets: list[str], allow: list[list[bool]]) -> "AccessMatrix":
        return cls(list(subnets), list(subnets), [list(map(bool, r)) for r in allow])

    @staticmethod
    def _index(nets, addr: int) -> int:
        best, best_len = None, -1
        for i, (net, plen) in enumerate(nets):
            if in_prefix(addr, net, plen) and plen > best_len:
                best, best_len = i, plen
        if best is None:
            raise UnknownSubnet(addr)
        return best

    def allowed(self, src_ip, dst_ip) -> bool:
        return self.allow[self._index(self._src, ip(src_ip))][self._index(self._dst, ip(dst_ip))]

    def __eq__(self, other) -> bool:
        if not isinstance(other, AccessMatrix):
            return NotImplemented
        return (self.sources, self.destinations, self.allow) == (other.sources, other.destinations, other.allow)

    def cells_equal(self, other: "AccessMatrix") -> int:
        return sum(a == b for ra, rb in zip(self.allow, other.allow) for a, b in zip(ra, rb))

    def to_dict(self) -> dict:
        return {"sources": self.sources, "destinations": self.destinations, "allow": self.allow}

    def render(self) -> str:
        width = max(len(s) for s in self.sources + self.destinations)
        lines = [" " * width + " " + " ".join(d.rjust(width) for d in self.destinations)]
        for s, row in zip(self.sources, self.allow):
            lines.append(s.ljust(width) + " " + " ".join(("allow" if a else "deny").rjust(width) for a in row))
        return "\n".join(lines)


def access_control_decide(matrix: AccessMatrix, src_ip, dst_ip):
    """Allowed pairs get the normal forwarding rule; denied ones are dropped without a rule."""
    if matrix.allowed(src_ip, dst_ip):
        return InstallRule()
    return SilentDrop("access denied")


class AccessControl:
    name = "access_control"

    def __init__(self, matrix: AccessMatrix):
        self.matrix = matrix

    def on_packet_in(self, ctx):
        if not ctx.at_edge:
            return None
        try:
            return access_control_decide(self.matrix, ctx.header.src_ip, ctx.header.dst_ip)
        except UnknownSubnet:
            return None
