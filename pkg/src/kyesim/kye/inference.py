"""Turning observation records into conclusions about the network's defenses."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Optional

from ..controlplane.access import AccessMatrix
from ..netcore import RateLimit
from .probes import ObservationRecord


class Mechanism(enum.Enum):
    TRAFFIC_FILTERING = "TrafficFiltering"
    RATE_LIMIT = "RateLimit"
    CREDIT_BASED_LIMIT = "CreditBasedLimit"
    REDIRECTION = "Redirection"
    SYN_PROXY_WHITEHOLE = "SynProxyWhitehole"
    WORKING_SET_DELAY = "WorkingSetDelay"
    NONE = "None"
    UNKNOWN = "Unknown"


class PatternNotFound(ValueError):
    pass


class InsufficientCoverage(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryEstimate:
    estimate: float
    ci_low: float
    ci_high: float

    @property
    def width(self) -> float:
        return self.ci_high - self.ci_low

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


@dataclass
class InferenceReport:
    mechanism: Optional[Mechanism] = None
    detection_boundary: Optional[BoundaryEstimate] = None
    credit_estimate: Optional[tuple] = None
    access_matrix: Optional[AccessMatrix] = None
    aggregation_threshold: Optional[float] = None
    co_resident: Optional[bool] = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        b = self.detection_boundary
        return {
            "mechanism": self.mechanism.value if self.mechanism else None,
            "detection_boundary": None if b is None else
            {"estimate": b.estimate, "ci": [b.ci_low, b.ci_high]},
            "credit_estimate": None if self.credit_estimate is None else
            {"base": self.credit_estimate[0], "reward": self.credit_estimate[1]},
            "access_matrix": self.access_matrix.to_dict() if self.access_matrix else None,
            "aggregation_threshold": self.aggregation_threshold,
            "co_resident": self.co_resident,
            "extras": self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "InferenceReport":
        b = d.get("detection_boundary")
        c = d.get("credit_estimate")
        m = d.get("access_matrix")
        return cls(
            Mechanism(d["mechanism"]) if d.get("mechanism") else None,
            BoundaryEstimate(b["estimate"], *b["ci"]) if b else None,
            (c["base"], c["reward"]) if c else None,
            AccessMatrix(m["sources"], m["destinations"], m["allow"]) if m else None,
            d.get("aggregation_threshold"),
            d.get("co_resident"),
            dict(d.get("extras") or {}),
        )


# ---------------------------------------------------------------- helpers

def success_runs(outcomes: list[int]) -> list[tuple[int, int]]:
    """(start index, length) of every maximal run of 1s."""
    runs, start = [], None
    for i, v in enumerate(list(outcomes) + [0]):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i - start))
            start = None
    return runs


def _plain_forward(rule) -> bool:
    return (not rule.is_drop and not rule.rewrites and len(rule.out_ports) == 1
            and not any(isinstance(a, RateLimit) for a in rule.actions))


def _is_redirection(record: ObservationRecord) -> bool:
    by_dst: dict[int, list] = {}
    for p in record.probes:
        if p.sent and p.terminal is not None:
            by_dst.setdefault(p.dst, []).append(p.terminal)
    if len(by_dst) < 2:
        return False
    early = {d: rules[0] for d, rules in by_dst.items()}
    late = {d: rules[-1] for d, rules in by_dst.items()}
    if any(r.is_drop for r in late.values()):
        return False
    early_ports = [tuple(r.out_ports) for r in early.values()]
    late_ports = {tuple(r.out_ports) for r in late.values()}
    return len(set(early_ports)) == len(early_ports) and len(late_ports) == 1


def classify_defense(record: ObservationRecord) -> Mechanism:
    """Name the defense from what a probe batch made the switch do.

    Checks run from the most specific rule signature to the weakest timing
    signature; anything matching none of them is reported as Unknown rather
    than guessed.
    """
    if record.is_empty():
        raise ValueError("cannot classify an empty record")
    sent = [p for p in record.probes if p.sent]
    terminals = [p.terminal for p in sent if p.terminal is not None]
    added = record.added_rules()
    src = record.batch.src_ip

    if any(r.is_drop for r in terminals) or any(
            r.is_drop and r.match.src_plen and r.match.covers_src(src) for r in added):
        return Mechanism.TRAFFIC_FILTERING
    if any(isinstance(a, RateLimit) for r in terminals + added for a in r.actions):
        return Mechanism.RATE_LIMIT
    if _is_redirection(record):
        return Mechanism.REDIRECTION
    replied = [p for p in sent if p.replied]
    if replied and not terminals and not added:
        return Mechanism.SYN_PROXY_WHITEHOLE
    runs = success_runs([int(p.replied) for p in sent])
    if (len(runs) >= 2 and runs[0][0] == 0 and sent
            and all(p.expect_reply for p in sent) and len(replied) < len(sent)):
        return Mechanism.CREDIT_BASED_LIMIT
    lagged = [p for p in replied if p.terminal is not None]
    if lagged and all(p.terminal.installed_at >= p.reply_time - record.attacker_latency - 1e-9
                      for p in lagged):
        return Mechanism.WORKING_SET_DELAY
    if (sent and len(terminals) == len(sent) and all(_plain_forward(r) for r in terminals)
            and all(p.replied for p in sent if p.expect_reply)):
        return Mechanism.NONE
    return Mechanism.UNKNOWN


def estimate_credit_params(records) -> tuple:
    """(base credit, reward per success) read off the first two success bursts."""
    for rec in records:
        runs = success_runs(rec.outcomes)
        if len(runs) < 2 or runs[0][0] != 0:
            continue
        base, second = runs[0][1], runs[1][1]
        reward = second / base
        return base, int(reward) if reward == int(reward) else reward
    raise PatternNotFound("no record shows a burst, a gap and a second burst")


def estimate_detection_boundary(records) -> BoundaryEstimate:
    """Midpoint between the worst undetected and the mildest detected batch."""
    detected = [r.failed_ratio for r in records if r.detected]
    undetected = [r.failed_ratio for r in records if not r.detected]
    if not detected or not undetected:
        raise InsufficientCoverage("batches must include both detected and undetected outcomes")
    lo, hi = max(undetected), min(detected)
    return BoundaryEstimate((lo + hi) / 2, min(lo, hi), max(lo, hi))
