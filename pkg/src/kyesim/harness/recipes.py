"""One handler per campaign recipe: run it, then file the findings."""

from __future__ import annotations

from ..kye import (DetectionTriggered, InsufficientCoverage, Mechanism, NoPortDistinctPair, NoWildcardObserved,
                   PatternNotFound, ProbeBatch, ProbeKind, boundary_campaign, classify_defense,
                   detect_co_residency, detect_redirection, detect_syn_proxy, estimate_credit_params,
                   estimate_detection_boundary, infer_aggregation_threshold, read_tenant_rules,
                   reconstruct_access_matrix)
from ..netcore import ip
from ..netcore.packet import parse_prefix
from ..obfuscation import sweep
from . import schema


def _fig3_rows(records, start: int = 1) -> list[dict]:
    return [{"batch": start + i, "rate": r.batch.rate, "requests": len(r.issued),
             "responses": sum(p.replied for p in r.issued)} for i, r in enumerate(records)]


def credit_scan(ctx, step: schema.CreditScan) -> None:
    sim = ctx.sim
    targets = sim.pool(step.targets)[:step.count]
    if len(targets) < step.count:
        raise ValueError(f"pool {step.targets!r} has fewer than {step.count} hosts")
    rec = sim.attacker.run_probe_batch(ProbeBatch(ProbeKind.SCAN, ip(step.src), targets, step.rate,
                                                  expect_reply=[True] * len(targets), settle=step.settle))
    ctx.add_records("credit_scan", [rec])
    ctx.figures["fig4"] = [{"request_index": p.index + 1, "outcome": int(p.replied)} for p in rec.probes]
    ctx.figures.setdefault("fig3", []).extend(_fig3_rows([rec], len(ctx.figures.get("fig3", [])) + 1))
    ctx.report.mechanism = classify_defense(rec)
    try:
        ctx.report.credit_estimate = estimate_credit_params([rec])
    except PatternNotFound:
        ctx.report.extras["credit_pattern"] = "not found"


def failure_scan(ctx, step: schema.FailureScan) -> None:
    sim = ctx.sim
    net, _ = parse_prefix(step.dark)
    dsts = [net + i for i in range(1, step.count + 1)]
    rec = sim.attacker.run_probe_batch(ProbeBatch(ProbeKind.SCAN, ip(step.src), dsts, step.rate,
                                                  expect_reply=[False] * len(dsts), stop_on_detection=True,
                                                  settle=step.settle))
    ctx.add_records("failure_scan", [rec])
    ctx.figures.setdefault("fig3", []).extend(_fig3_rows([rec], len(ctx.figures.get("fig3", [])) + 1))
    ctx.report.mechanism = classify_defense(rec)
    ctx.report.extras["scan_detected"] = rec.detected
    ctx.report.extras["failures_before_detection"] = rec.failures if rec.detected else None


def boundary_sweep(ctx, step: schema.BoundarySweep) -> None:
    sim = ctx.sim
    dark_net, _ = parse_prefix(step.dark)
    dark = [dark_net + i for i in range(1, step.probes + 1)]
    records = boundary_campaign(sim.attacker, step.batches, step.probes, sim.pool(step.targets), dark,
                                step.src_prefix, step.rate, sim.seed, step.settle)
    ctx.add_records("boundary_sweep", records)
    ctx.figures["fig3"] = _fig3_rows(records)
    detected = [(i + 1, r) for i, r in enumerate(records) if r.detected]
    ctx.figures["fig5"] = [{"batch": b, "success_ratio": r.success_ratio, "failed_ratio": r.failed_ratio}
                           for b, r in detected]
    ratios = sorted(r.failed_ratio for _, r in detected)
    ctx.figures["fig6"] = [{"failed_ratio": x, "cdf": (i + 1) / len(ratios)} for i, x in enumerate(ratios)]
    try:
        ctx.report.detection_boundary = estimate_detection_boundary(records)
    except InsufficientCoverage as exc:
        ctx.report.extras["boundary_error"] = str(exc)
    ctx.report.extras["max_detected_success_ratio"] = max((r.success_ratio for _, r in detected), default=None)
    ctx.report.extras["batches_detected"] = len(detected)


def access_matrix(ctx, step: schema.AccessMatrixRecipe) -> None:
    sim = ctx.sim
    truth = sim.truth_matrix()
    if truth is None:
        raise ValueError("access_matrix recipe needs an access_control policy")
    boundary = step.boundary
    if boundary is None:
        if ctx.report.detection_boundary is None:
            raise ValueError("no boundary given and none estimated earlier in the campaign")
        boundary = ctx.report.detection_boundary.estimate
    before = len(sim.trace.of_kind("detection"))
    try:
        m = reconstruct_access_matrix(sim.attacker, truth.sources, truth.destinations, boundary,
                                      sim.pool(step.targets), (step.base_credit, step.success_reward), step.rate)
    except DetectionTriggered as exc:
        ctx.report.extras["access_matrix_error"] = str(exc)
        m = None
    ctx.report.access_matrix = m
    ctx.summary["access_detection_events"] = len(sim.trace.of_kind("detection")) - before
    ctx.summary["access_cells_matching"] = truth.cells_equal(m) if m is not None else 0
    ctx.summary["access_cells_total"] = len(truth.sources) * len(truth.destinations)
    ctx.summary["access_matrix_matches_truth"] = m == truth


def classify(ctx, step: schema.ClassifyRecipe) -> None:
    sim = ctx.sim
    pr = step.probe
    dsts = [sim.address(d) for d in pr.destinations] * pr.repeat
    src = sim.address(pr.src) if pr.src else sim.attacker.ip
    expect = None if pr.expect_reply is None else [pr.expect_reply] * len(dsts)
    rec = sim.attacker.run_probe_batch(ProbeBatch(ProbeKind(pr.kind), src, dsts, pr.rate, expect_reply=expect,
                                                  packet=pr.packet, size=pr.size, reuse_flow=pr.reuse_flow,
                                                  tenant_tag=pr.tenant_tag, settle=pr.settle))
    ctx.add_records("classify", [rec])
    ctx.report.mechanism = classify_defense(rec)


def aggregation(ctx, step: schema.AggregationRecipe) -> None:
    sim = ctx.sim
    try:
        est = infer_aggregation_threshold(sim.attacker, sim.address(step.dst), step.step_mbps, step.hold,
                                          step.max_mbps, step.packet_size, step.mode)
    except NoWildcardObserved as exc:
        ctx.report.extras["aggregation_error"] = str(exc)
        return
    ctx.report.aggregation_threshold = est
    ctx.report.extras["aggregation_mode"] = step.mode
    ctx.report.extras["aggregation_units"] = "Mbit/s" if step.mode == "rate" else "bytes"


def syn_proxy(ctx, step: schema.SynProxyRecipe) -> None:
    ctx.report.extras["syn_proxy"] = detect_syn_proxy(ctx.sim.attacker, ctx.sim.address(step.dst))


def redirection(ctx, step: schema.RedirectionRecipe) -> None:
    sim = ctx.sim
    try:
        found = detect_redirection(sim.attacker, [sim.address(c) for c in step.candidates],
                                   rate=step.rate, duration=step.duration)
    except NoPortDistinctPair as exc:
        ctx.report.extras["redirection_error"] = str(exc)
        return
    ctx.report.extras["redirection"] = found
    if found:
        ctx.report.mechanism = Mechanism.REDIRECTION


def co_residency(ctx, step: schema.CoResidencyRecipe) -> None:
    sim = ctx.sim
    results = {t: detect_co_residency(sim.attacker, sim.address(t), step.tenant_tag) for t in step.targets}
    ctx.report.extras["co_residency"] = results
    ctx.report.co_resident = results[step.targets[0]]


def tenant_rules(ctx, step: schema.TenantRulesRecipe) -> None:
    groups = read_tenant_rules(ctx.sim.attacker.primary.snapshot())
    ctx.report.extras["tenant_rules"] = {str(k): len(v) for k, v in sorted(groups.items(), key=lambda kv: str(kv[0]))}


def obfuscation_sweep(ctx, step: schema.ObfuscationSweepRecipe) -> None:
    trials = ctx.trials if ctx.trials is not None else step.trials
    ctx.figures["obfuscation_sweep"] = sweep(step.ns, step.os, trials, ctx.seed)


HANDLERS = {
    "credit_scan": credit_scan,
    "failure_scan": failure_scan,
    "boundary_sweep": boundary_sweep,
    "access_matrix": access_matrix,
    "classify": classify,
    "aggregation": aggregation,
    "syn_proxy": syn_proxy,
    "redirection": redirection,
    "co_residency": co_residency,
    "tenant_rules": tenant_rules,
    "obfuscation_sweep": obfuscation_sweep,
}
