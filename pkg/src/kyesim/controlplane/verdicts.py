"""What a policy app decides for one packet-in."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..netcore import FlowRule


@dataclass
class InstallRule:
    """Install ``rule`` on ``switch`` (None = the switch that raised the packet-in).

    ``rule=None`` asks the controller for the default forwarding rule of the flow.
    """

    rule: Optional[FlowRule] = None
    switch: Optional[str] = None


@dataclass
class InstallRuleChain:
    rules: list[tuple[str, FlowRule]] = field(default_factory=list)


@dataclass
class PacketOutNoRule:
    actions: Optional[tuple] = None  # None = default forwarding actions


@dataclass
class SilentDrop:
    reason: str = ""


@dataclass
class Defer:
    delay: float


PolicyVerdict = InstallRule | InstallRuleChain | PacketOutNoRule | SilentDrop | Defer
