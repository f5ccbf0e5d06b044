"""Scenario file format (JSON, versioned) and its validation."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

SCHEMA_VERSION = 1


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line, self.column = line, column


class ValidationError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------- topology

class SwitchModel(Model):
    id: str
    capacity: int = Field(1000, ge=1)
    syn_proxy: bool = False


class HostModel(Model):
    id: str
    ip: str
    switch: str
    port: int = Field(0, ge=0)
    latency: float = Field(0.001, gt=0)
    prefix: int = Field(32, ge=0, le=32)
    responsive: bool = True
    tenant: Optional[int] = None
    sink: bool = False


class PoolModel(Model):
    """``count`` hosts named ``{name}{i}`` at ``network + i``, each on its own port."""

    name: str = "h"
    network: str
    count: int = Field(ge=1)
    switch: str
    latency: float = Field(0.001, gt=0)
    responsive: bool = True
    tenant: Optional[int] = None


class LinkModel(Model):
    a: str
    b: str
    latency: float = Field(0.001, gt=0)


class TopologyModel(Model):
    switches: list[SwitchModel]
    hosts: list[HostModel] = []
    pools: list[PoolModel] = []
    links: list[LinkModel] = []


# ---------------------------------------------------------------- policies

class TrwCbPolicy(Model):
    name: Literal["trwcb"]
    base_credit: int = Field(10, ge=1)
    success_reward: int = Field(2, ge=0)
    alpha: float = Field(0.00005, gt=0, lt=1)
    beta: float = Field(0.01, gt=0, lt=1)
    theta0: float = Field(0.8, gt=0, lt=1)
    theta1: float = Field(0.2, gt=0, lt=1)
    connection_timeout: float = Field(1.0, gt=0)
    credit_release: Literal["immediate", "on_drain"] = "immediate"

    @model_validator(mode="after")
    def _order(self):
        if not self.theta1 < self.theta0:
            raise ValueError("theta1 must be below theta0")
        return self


class AccessPolicy(Model):
    name: Literal["access_control"]
    subnets: list[str]
    allow: list[list[bool]]


class AggregationPolicy(Model):
    name: Literal["aggregation"]
    rate_threshold_mbps: Optional[float] = Field(None, gt=0)
    size_threshold_bytes: Optional[int] = Field(None, gt=0)
    prefix_len: int = Field(24, ge=0, le=32)
    poll_interval: float = Field(0.5, gt=0)


class WorkingSetPolicy(Model):
    name: Literal["working_set"]
    capacity: int = Field(8, ge=1)
    lifetime: float = Field(60.0, gt=0)
    install_delay: float = Field(0.5, ge=0)


class DosPolicy(Model):
    name: Literal["dos"]
    threshold_pps: float = Field(100.0, gt=0)
    response: Literal["filter", "rate_limit", "redirect"] = "filter"
    honeypot_port: Optional[int] = None
    rate_limit_bytes: float = Field(12_500.0, gt=0)
    poll_interval: float = Field(0.5, gt=0)


class TenantPolicy(Model):
    name: Literal["tenant"]
    tenants: Optional[list[int]] = None


Policy = Annotated[Union[TrwCbPolicy, AccessPolicy, AggregationPolicy, WorkingSetPolicy, DosPolicy,
                         TenantPolicy], Field(discriminator="name")]


class RoutingModel(Model):
    idle_timeout: Optional[float] = Field(None, gt=0)
    hard_timeout: Optional[float] = Field(None, gt=0)


# ---------------------------------------------------------------- attacker campaign

class AttackerModel(Model):
    hosts: list[str]
    monitor: str
    extra_monitored: list[str] = []
    poll_interval: float = Field(0.0, ge=0)


class CreditScan(Model):
    recipe: Literal["credit_scan"]
    src: str
    count: int = Field(ge=1)
    rate: float = Field(gt=0)
    targets: str = "h"
    settle: float = Field(1.5, ge=0)


class FailureScan(Model):
    recipe: Literal["failure_scan"]
    src: str
    count: int = Field(ge=1)
    rate: float = Field(gt=0)
    dark: str
    settle: float = Field(1.5, ge=0)


class BoundarySweep(Model):
    recipe: Literal["boundary_sweep"]
    batches: int = Field(ge=1)
    probes: int = Field(ge=1)
    rate: float = Field(0.5, gt=0)
    src_prefix: str
    targets: str = "h"
    dark: str
    settle: float = Field(1.5, ge=0)


class AccessMatrixRecipe(Model):
    recipe: Literal["access_matrix"]
    boundary: Optional[float] = None
    base_credit: int = 10
    success_reward: int = 2
    targets: str = "h"
    rate: float = Field(0.5, gt=0)


class ProbeModel(Model):
    kind: Literal["scan", "dos", "access", "flow_ramp", "syn", "redirect", "cores"] = "scan"
    src: Optional[str] = None
    destinations: list[str]
    repeat: int = Field(1, ge=1)
    rate: float = Field(gt=0)
    packet: Literal["syn", "udp"] = "syn"
    size: int = Field(64, ge=1)
    reuse_flow: bool = False
    expect_reply: Optional[bool] = None
    tenant_tag: Optional[int] = None
    settle: float = Field(1.5, ge=0)


class ClassifyRecipe(Model):
    recipe: Literal["classify"]
    probe: ProbeModel


class AggregationRecipe(Model):
    recipe: Literal["aggregation"]
    dst: str
    mode: Literal["rate", "size"] = "rate"
    step_mbps: float = Field(0.1, gt=0)
    hold: float = Field(2.0, gt=0)
    max_mbps: float = Field(3.0, gt=0)
    packet_size: int = Field(1250, ge=64)


class SynProxyRecipe(Model):
    recipe: Literal["syn_proxy"]
    dst: str


class RedirectionRecipe(Model):
    recipe: Literal["redirection"]
    candidates: list[str]
    rate: float = Field(400.0, gt=0)
    duration: float = Field(3.0, gt=0)


class CoResidencyRecipe(Model):
    recipe: Literal["co_residency"]
    targets: list[str]
    tenant_tag: Optional[int] = None


class TenantRulesRecipe(Model):
    recipe: Literal["tenant_rules"]


class ObfuscationSweepRecipe(Model):
    recipe: Literal["obfuscation_sweep"]
    ns: list[int] = [2, 4, 8]
    os: list[int] = [2, 3, 4]
    trials: int = Field(100_000, ge=1)


Recipe = Annotated[Union[CreditScan, FailureScan, BoundarySweep, AccessMatrixRecipe, ClassifyRecipe,
                         AggregationRecipe, SynProxyRecipe, RedirectionRecipe, CoResidencyRecipe,
                         TenantRulesRecipe, ObfuscationSweepRecipe], Field(discriminator="recipe")]


class ObfuscationModel(Model):
    k: int = Field(1, ge=1)
    seed: int = 0


class Scenario(Model):
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str
    description: str = ""
    seed: int = 0
    duration: Optional[float] = Field(None, ge=0)
    topology: Optional[TopologyModel] = None
    controller_latency: float = Field(0.0, ge=0)
    policies: list[Policy] = []
    routing: RoutingModel = RoutingModel()
    attacker: Optional[AttackerModel] = None
    campaign: list[Recipe] = []
    obfuscation: Optional[ObfuscationModel] = None

    @model_validator(mode="after")
    def _references(self):
        errors = []
        needs_net = any(r.recipe != "obfuscation_sweep" for r in self.campaign)
        if needs_net and (self.topology is None or self.attacker is None):
            errors.append("network campaigns need a topology and an attacker")
        if self.topology is not None:
            sw = {s.id for s in self.topology.switches}
            hosts = {h.id for h in self.topology.hosts}
            hosts |= {f"{p.name}{i}" for p in self.topology.pools for i in range(1, p.count + 1)}
            for h in self.topology.hosts:
                if h.switch not in sw:
                    errors.append(f"host {h.id}: unknown switch {h.switch}")
            for p in self.topology.pools:
                if p.switch not in sw:
                    errors.append(f"pool {p.name}: unknown switch {p.switch}")
            for ln in self.topology.links:
                for end in (ln.a, ln.b):
                    if end not in sw:
                        errors.append(f"link {ln.a}-{ln.b}: unknown switch {end}")
            if self.attacker is not None:
                for h in self.attacker.hosts:
                    if h not in hosts:
                        errors.append(f"attacker host {h} does not exist")
                for s in [self.attacker.monitor] + self.attacker.extra_monitored:
                    if s not in sw:
                        errors.append(f"monitored switch {s} does not exist")
        for p in self.policies:
            if isinstance(p, AccessPolicy):
                if len(p.allow) != len(p.subnets) or any(len(r) != len(p.subnets) for r in p.allow):
                    errors.append("access_control: allow grid must be square over the subnet list")
            if isinstance(p, AggregationPolicy) and p.rate_threshold_mbps is None and p.size_threshold_bytes is None:
                errors.append("aggregation: set a rate or size threshold")
            if isinstance(p, DosPolicy) and p.response == "redirect" and p.honeypot_port is None:
                errors.append("dos: redirect response needs honeypot_port")
        if errors:
            raise ValueError("; ".join(errors))
        return self


def _line_of(text: str, loc) -> Optional[int]:
    """Best-effort line number of the first key named in a validation error location."""
    keys = [k for k in loc if isinstance(k, str)]
    if not keys:
        return None
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{keys[-1]}"' in line:
            return i
    return None


def parse_scenario(text: str) -> Scenario:
    if not text.strip():
        raise ParseError("scenario file is empty", 1, 1)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    try:
        return Scenario.model_validate(data)
    except pydantic.ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = ".".join(str(x) for x in err["loc"])
            line = _line_of(text, err["loc"])
            msgs.append(f"{loc or '<root>'}: {err['msg']}" + (f" (line {line})" if line else ""))
        raise ValidationError(msgs) from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    if not path.exists():
        bundled = Path(__file__).with_name("scenarios") / f"{path.name}.json"
        if path.suffix or not bundled.exists():
            raise FileNotFoundError(path)
        path = bundled
    return parse_scenario(path.read_text(encoding="utf-8"))


def dump_scenario(s: Scenario) -> str:
    return json.dumps(s.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in Path(__file__).with_name("scenarios").glob("*.json"))
