"""Closed-form attacker success probability under k-hop obfuscation, and its Monte Carlo check."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class ObfuscationParams:
    n: int  # switches the attacker can monitor
    o: float  # average out-degree minus one
    k: Optional[int] = None
    p_accept: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.o < 1 or (self.k is not None and self.k < 1):
            raise ValueError("need n >= 1, o >= 1 and k >= 1")
        if not 0 < self.p_accept <= 1:
            raise ValueError("p_accept must lie in (0, 1]")

    def with_k(self, k: int) -> "ObfuscationParams":
        return ObfuscationParams(self.n, self.o, k, self.p_accept)


def p_success(params: ObfuscationParams) -> float:
    """Chance the attacker watches every hop s1..sk; s1 is always known to it."""
    k = params.k
    if k is None:
        raise ValueError("p_success needs k")
    if k == 1:
        return 1.0
    return min(1.0, max(0.0, ((params.n / k) / params.o) ** (k - 1)))


def attack_feasible(params: ObfuscationParams) -> bool:
    """Full chain knowledge needs at least one monitored switch per hop."""
    return params.k is not None and params.k <= params.n


def choose_k(params: ObfuscationParams) -> int:
    for k in range(1, params.n + 1):
        if p_success(params.with_k(k)) <= params.p_accept:
            return k
    return params.n + 1


def monte_carlo_success(params: ObfuscationParams, trials: int, seed: int = 0) -> float:
    """Empirical success rate of an attacker spreading n monitors over k hop levels.

    At every hop after s1 the path takes one of ``o`` candidate switches
    uniformly; the attacker covers ``n / k`` of the candidates at that level
    (floor or ceiling, drawn so the mean is exactly ``n / k``).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    k, n = params.k, params.n
    if k is None:
        raise ValueError("monte_carlo_success needs k")
    if k == 1:
        return 1.0
    o = params.o
    if o != int(o):
        raise ValueError("Monte Carlo model needs an integer out-degree")
    o = int(o)
    rng = np.random.default_rng(seed)
    if k > n:
        # fewer monitors than hops: s1 plus n - 1 randomly chosen levels get one each
        covered = np.zeros((trials, k), dtype=bool)
        covered[:, 0] = True
        if n > 1:
            picks = rng.permuted(np.tile(np.arange(1, k), (trials, 1)), axis=1)[:, :n - 1]
            np.put_along_axis(covered, picks, True, axis=1)
        return float(covered.all(axis=1).mean())
    share = n / k
    lo = math.floor(share)
    frac = share - lo
    hit = np.ones(trials, dtype=bool)
    for _ in range(k - 1):
        watched = np.minimum(lo + (rng.random(trials) < frac), o)
        chosen = rng.integers(0, o, trials)
        hit &= chosen < watched
    return float(hit.mean())


def binomial_tolerance(p: float, trials: int, sigmas: float = 3.0) -> float:
    return sigmas * math.sqrt(p * (1 - p) / trials)


SWEEP_COLUMNS = ("n", "k", "o", "p_formula", "p_monte_carlo", "trials")


def sweep(ns=(2, 4, 8), os=(2, 3, 4), trials: int = 100_000, seed: int = 0) -> list[dict]:
    rows = []
    for n in ns:
        for k in range(1, n + 1):
            for o in os:
                params = ObfuscationParams(n, o, k)
                cell_seed = np.random.SeedSequence([seed, n, k, o]).generate_state(1)[0]
                rows.append({"n": n, "k": k, "o": o, "p_formula": p_success(params),
                             "p_monte_carlo": monte_carlo_success(params, trials, int(cell_seed)),
                             "trials": trials})
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "p_formula": f"{r['p_formula']:.6f}", "p_monte_carlo": f"{r['p_monte_carlo']:.6f}"})
    return buf.getvalue()
