"""Multi-batch attack procedures built on the attacker's probe primitive."""

from __future__ import annotations

import random
from typing import Optional

from ..controlplane.access import AccessMatrix
from ..netcore import ip, parse_prefix
from .inference import BoundaryEstimate, Mechanism, classify_defense
from .probes import Attacker, ObservationRecord, ProbeBatch, ProbeKind, interleave


class DetectionTriggered(RuntimeError):
    pass


class NoWildcardObserved(RuntimeError):
    pass


class NoPortDistinctPair(RuntimeError):
    pass


def mixed_targets(n: int, k: int, responsive: list[int], dark: list[int]) -> tuple[list[int], list[bool]]:
    """Interleave ``k`` responsive and ``n - k`` dark destinations, all distinct."""
    if k > len(responsive) or n - k > len(dark):
        raise ValueError("target pools too small for the requested batch")
    pattern = interleave(n, k)
    r, d = iter(responsive), iter(dark)
    return [next(r) if ok else next(d) for ok in pattern], pattern


def scan_batch(src, n: int, success_ratio: float, responsive, dark, rate: float, **kw) -> ProbeBatch:
    k = round(success_ratio * n)
    dsts, expect = mixed_targets(n, k, [ip(x) for x in responsive], [ip(x) for x in dark])
    return ProbeBatch(ProbeKind.SCAN, ip(src), dsts, rate, target_success_ratio=k / n if n else 0.0,
                      expect_reply=expect, **kw)


def boundary_campaign(attacker: Attacker, batches: int, probes: int, responsive, dark, src_prefix: str,
                      rate: float = 0.5, seed: int = 0, settle: float = 1.5) -> list[ObservationRecord]:
    """Scan batches with success ratios drawn uniformly from [0, 1], each from a fresh source."""
    rng = random.Random(seed)
    net, plen = parse_prefix(src_prefix)
    if batches > (1 << (32 - plen)) - 2:
        raise ValueError("source prefix too small for one fresh address per batch")
    records = []
    for b in range(batches):
        ratio = round(rng.random() * probes) / probes
        batch = scan_batch(net + b + 1, probes, ratio, responsive, dark, rate, seed=seed + b,
                           stop_on_detection=True, settle=settle)
        records.append(attacker.run_probe_batch(batch))
    return records


def reconstruct_access_matrix(attacker: Attacker, sources: list[str], destinations: list[str],
                              boundary: float, responsive, credit: tuple = (10, 2), rate: float = 0.5,
                              src_host: int = 7, dst_host: int = 9, settle: float = 1.5) -> AccessMatrix:
    """Probe every subnet pair from a spoofed in-subnet source, padding with successes.

    Before each (assumed failing) access probe the attacker opens connections to
    known-responsive hosts until the projected failed ratio sits at or below
    ``boundary`` and it holds at least one credit.
    """
    if isinstance(boundary, BoundaryEstimate):
        boundary = boundary.estimate
    if boundary <= 0:
        raise DetectionTriggered("no padding can keep the failed ratio under a zero boundary")
    base, reward = credit
    responsive = [ip(x) for x in responsive]
    allow = [[False] * len(destinations) for _ in sources]
    for si, s in enumerate(sources):
        src = parse_prefix(s)[0] + src_host
        fails = succ = 0
        credits = base
        pool = iter(responsive)
        for di, d in enumerate(destinations):
            dst = parse_prefix(d)[0] + dst_host
            pad = []
            while ((fails + 1) / (fails + 1 + succ + len(pad)) > boundary
                   or credits + len(pad) * (reward - 1) < 1):
                try:
                    pad.append(next(pool))
                except StopIteration:
                    raise DetectionTriggered(f"responsive pool exhausted while padding {s}") from None
            if pad:
                rec = attacker.run_probe_batch(ProbeBatch(ProbeKind.SCAN, src, pad, rate, settle=settle,
                                                          expect_reply=[True] * len(pad)))
                _check_stealth(rec, s)
                ok = sum(p.replied for p in rec.probes)
                succ += ok
                credits += ok * reward - len(pad)
            rec = attacker.run_probe_batch(ProbeBatch(ProbeKind.ACCESS, src, [dst], rate, settle=settle))
            _check_stealth(rec, s)
            probe = rec.probes[0]
            fails += 0 if probe.replied else 1
            credits += reward if probe.replied else 0
            credits -= 1
            term = probe.terminal
            allow[si][di] = term is not None and not term.is_drop and bool(term.out_ports)
    return AccessMatrix(list(sources), list(destinations), allow)


def _check_stealth(rec: ObservationRecord, subnet: str) -> None:
    if rec.detected:
        raise DetectionTriggered(f"detected while probing from {subnet}")


def infer_aggregation_threshold(attacker: Attacker, dst, step: float = 0.1, hold: float = 2.0,
                                max_rate: float = 3.0, packet_size: int = 1250,
                                mode: str = "rate", src=None) -> float:
    """Ramp one UDP flow until the switch gives it its own rule.

    Rates are in Mbit/s. In ``rate`` mode the estimate is the ramp step at which
    the exact-match rule appeared; in ``size`` mode it is the number of bytes
    the attacker had sent by then.
    """
    src = ip(src) if src is not None else attacker.ip
    dst = ip(dst)
    first = attacker.run_probe_batch(ProbeBatch(ProbeKind.FLOW_RAMP, src, [dst], 1.0, packet="udp",
                                                size=packet_size, reuse_flow=True, settle=0.1))
    term = first.probes[0].terminal
    if term is None or term.match.dst_plen >= 32 or term.match.src_plen:
        raise NoWildcardObserved("fresh flow did not land on an aggregate rule")
    offsets, rates = [], []
    t, level = 0.0, 1
    while round(level * step, 10) <= max_rate + 1e-12:
        r = round(level * step, 10)
        pps = r * 1e6 / 8 / packet_size
        n = int(round(pps * hold))
        offsets += [t + i / pps for i in range(n)]
        rates += [r] * n
        t += hold
        level += 1
    sport_flow = ProbeBatch(ProbeKind.FLOW_RAMP, src, [dst] * len(offsets), max(rates), offsets=offsets,
                            packet="udp", size=packet_size, reuse_flow=True, settle=hold)
    rec = attacker.run_probe_batch(sport_flow)
    exact = [e for e in rec.rule_delta if e.op == "add" and e.rule.match.is_exact_pair
             and e.rule.match.src_ip == src and e.rule.match.dst_ip == dst]
    if not exact:
        raise NoWildcardObserved("ramp ended without a flow-specific rule")
    seen = exact[0].time
    sent = [p for p in rec.probes if p.sent and p.sent_at <= seen]
    if mode == "size":
        return float(len(sent) * packet_size)
    return rates[len(sent) - 1] if sent else rates[0]


def detect_syn_proxy(attacker: Attacker, dst, settle: float = 1.0) -> bool:
    rec = attacker.run_probe_batch(ProbeBatch(ProbeKind.SYN, attacker.ip, [ip(dst)], 1.0, settle=settle))
    p = rec.probes[0]
    return p.reply_kind == "synack" and p.terminal is None and not rec.added_rules()


def probe_ports(attacker: Attacker, candidates, settle: float = 1.0) -> dict[int, tuple]:
    rec = attacker.run_probe_batch(ProbeBatch(ProbeKind.REDIRECT, attacker.ip, [ip(c) for c in candidates],
                                              10.0, settle=settle))
    return {p.dst: tuple(p.terminal.out_ports) for p in rec.probes if p.terminal is not None}


def detect_redirection(attacker: Attacker, candidates, src=None, rate: float = 400.0,
                       duration: float = 3.0, settle: float = 1.0) -> bool:
    """Find two destinations leaving on different ports, then hammer both."""
    ports = probe_ports(attacker, candidates, settle)
    pair = None
    items = sorted(ports.items())
    for i, (d1, p1) in enumerate(items):
        for d2, p2 in items[i + 1:]:
            if p1 and p2 and p1 != p2:
                pair = (d1, d2)
                break
        if pair:
            break
    if pair is None:
        raise NoPortDistinctPair("every candidate leaves on the same port")
    src = ip(src) if src is not None else attacker.ip
    n = int(rate * duration)
    dsts = [pair[i % 2] for i in range(n)]
    rec = attacker.run_probe_batch(ProbeBatch(ProbeKind.DOS, src, dsts, rate, packet="udp", size=1000,
                                              settle=settle))
    return classify_defense(rec) is Mechanism.REDIRECTION


def detect_co_residency(attacker: Attacker, target, tenant_tag: Optional[int] = None,
                        settle: float = 1.0) -> bool:
    rec = attacker.run_probe_batch(ProbeBatch(ProbeKind.CORES, attacker.ip, [ip(target)], 1.0,
                                              tenant_tag=tenant_tag, settle=settle))
    term = rec.probes[0].terminal
    return term is not None and term.out_ports == [attacker.ingress_port]


def read_tenant_rules(snapshot) -> dict:
    groups: dict = {}
    for r in snapshot.rules:
        key = r.match.tenant_tag if r.match.tenant_tag is not None else "none"
        groups.setdefault(key, []).append(r)
    return groups
