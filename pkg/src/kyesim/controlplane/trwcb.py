"""Threshold random walk with credit-based connection limiting (TRW-CB).

Each source host starts with ``base_credit`` credits. A first-contact
connection costs one credit; a successful one earns ``success_reward``.
Outcomes also drive a sequential probability ratio test in the log domain;
crossing the upper threshold blocks the host with a drop rule.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from ..netcore import FlowKey, FlowRule, PacketKind, ip_str
from .verdicts import InstallRule, SilentDrop


class Outcome(enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"


class Status(enum.Enum):
    BENIGN = "benign"
    BLOCKED = "blocked"


class UnknownPending(KeyError):
    pass


@dataclass(frozen=True)
class TrwCbConfig:
    base_credit: int = 10
    success_reward: int = 2
    alpha: float = 0.00005
    beta: float = 0.01
    theta0: float = 0.8
    theta1: float = 0.2
    connection_timeout: float = 1.0
    # "immediate": rewards credited on each success; "on_drain": rewards are
    # banked and released once the host has no connection left pending
    credit_release: str = "immediate"
    contacted_capacity: Optional[int] = None

    def __post_init__(self):
        problems = []
        if not 0 < self.theta1 < self.theta0 < 1:
            problems.append("need 0 < theta1 < theta0 < 1")
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            problems.append("alpha and beta must lie in (0, 1)")
        if self.base_credit < 1:
            problems.append("base_credit must be >= 1")
        if self.credit_release not in ("immediate", "on_drain"):
            problems.append("credit_release must be 'immediate' or 'on_drain'")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def upper(self) -> float:
        return math.log((1 - self.beta) / self.alpha)

    @property
    def lower(self) -> float:
        return math.log(self.beta / (1 - self.alpha))

    @property
    def success_step(self) -> float:
        return math.log(self.theta1 / self.theta0)

    @property
    def failure_step(self) -> float:
        return math.log((1 - self.theta1) / (1 - self.theta0))


@dataclass
class TrwCbHostState:
    host_ip: int
    credits: int
    pending: dict = field(default_factory=dict)  # dst -> deadline
    contacted: dict = field(default_factory=dict)  # dst -> None, insertion ordered
    log_likelihood: float = 0.0
    status: Status = Status.BENIGN
    escrow: int = 0
    forwarded: int = 0
    successes: int = 0
    failures: int = 0

    @classmethod
    def fresh(cls, host_ip: int, config: TrwCbConfig) -> "TrwCbHostState":
        return cls(host_ip, config.base_credit)


def trwcb_on_first_contact(state: TrwCbHostState, config: TrwCbConfig, dst: int,
                           now: float = 0.0) -> Optional[SilentDrop]:
    """Gate a first-contact connection. ``None`` means it may be forwarded."""
    if dst in state.pending or dst in state.contacted:
        raise ValueError(f"{ip_str(dst)} is not a first contact")
    if state.status is Status.BLOCKED:
        return SilentDrop("trwcb blocked")
    if state.credits <= 0:
        return SilentDrop("trwcb no credit")
    state.credits -= 1
    state.forwarded += 1
    state.pending[dst] = now + config.connection_timeout
    return None


def trwcb_on_outcome(state: TrwCbHostState, config: TrwCbConfig, dst: int,
                     outcome: Outcome) -> Optional[InstallRule]:
    """Resolve a pending connection. Returns a drop rule for src/32 on detection."""
    if dst not in state.pending:
        raise UnknownPending(ip_str(dst))
    del state.pending[dst]
    state.contacted[dst] = None
    if config.contacted_capacity is not None and len(state.contacted) > config.contacted_capacity:
        state.contacted.pop(next(iter(state.contacted)))
    if outcome is Outcome.SUCCESS:
        state.successes += 1
        if config.credit_release == "immediate":
            state.credits += config.success_reward
        else:
            state.escrow += config.success_reward
        state.log_likelihood += config.success_step
    else:
        state.failures += 1
        state.log_likelihood += config.failure_step
    if not state.pending and state.escrow:
        state.credits += state.escrow
        state.escrow = 0
    if state.status is Status.BLOCKED:
        return None
    if state.log_likelihood >= config.upper:
        state.status = Status.BLOCKED
        return InstallRule(FlowRule(FlowKey(src_ip=state.host_ip, src_plen=32), (), 1000))
    if state.log_likelihood <= config.lower:
        state.log_likelihood = 0.0
    return None


class TrwCb:
    """Controller app. Only acts on packet-ins raised at host-facing edge ports."""

    name = "trwcb"

    def __init__(self, config: TrwCbConfig = TrwCbConfig()):
        self.config = config
        self.states: dict[int, TrwCbHostState] = {}
        self.ingress: dict[int, str] = {}
        self.ctl = None

    def start(self, controller) -> None:
        self.ctl = controller

    def state(self, host_ip: int) -> TrwCbHostState:
        if host_ip not in self.states:
            self.states[host_ip] = TrwCbHostState.fresh(host_ip, self.config)
        return self.states[host_ip]

    def on_packet_in(self, ctx):
        if not ctx.at_edge or ctx.deferred:
            return None
        src, dst = ctx.header.src_ip, ctx.header.dst_ip
        initiator = self.states.get(dst)
        if initiator is not None and src in initiator.pending:
            outcome = Outcome.FAILURE if ctx.packet.kind is PacketKind.TCP_RST else Outcome.SUCCESS
            self.resolve(dst, src, outcome)
            return None
        if initiator is not None and src in initiator.contacted:
            return None
        st = self.state(src)
        self.ingress.setdefault(src, ctx.switch)
        if st.status is Status.BLOCKED:
            return SilentDrop("trwcb blocked")
        if dst in st.pending or dst in st.contacted:
            return None
        verdict = trwcb_on_first_contact(st, self.config, dst, ctx.time)
        if verdict is None:
            self.ctl.net.scheduler.schedule(self.config.connection_timeout, self._timeout, src, dst)
        return verdict

    def _timeout(self, src: int, dst: int) -> None:
        st = self.states[src]
        if dst in st.pending and st.pending[dst] <= self.ctl.now + 1e-12:
            self.resolve(src, dst, Outcome.FAILURE)

    def resolve(self, src: int, dst: int, outcome: Outcome) -> None:
        st = self.states[src]
        verdict = trwcb_on_outcome(st, self.config, dst, outcome)
        if verdict is not None:
            detail = (f"src={ip_str(src)} failures={st.failures} successes={st.successes} "
                      f"llr={st.log_likelihood:.6f}")
            self.ctl.block_source(self.ingress.get(src, ""), src, detail)
