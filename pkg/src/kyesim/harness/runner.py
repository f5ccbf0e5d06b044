"""Running scenarios and writing their artifacts."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..kye import InferenceReport, ReplayAttacker
from ..netcore import ip_str
from ..netcore.trace import SWITCH_EVENTS
from ..obfuscation import SWEEP_COLUMNS, sweep_csv
from . import schema
from .build import Simulation, build
from .recipes import HANDLERS

FIGURE_COLUMNS = {
    "fig3": ("batch", "rate", "requests", "responses"),
    "fig4": ("request_index", "outcome"),
    "fig5": ("batch", "success_ratio", "failed_ratio"),
    "fig6": ("failed_ratio", "cdf"),
    "obfuscation_sweep": SWEEP_COLUMNS,
}

OBSERVATION_COLUMNS = ("recipe", "batch", "kind", "src", "probe", "dst", "sent_at", "replied", "reply_time",
                       "terminal_switch", "terminal_rule", "detected")


class MissingCampaignData(LookupError):
    pass


@dataclass
class ExperimentResult:
    scenario: schema.Scenario
    seed: int
    report: InferenceReport
    figures: dict = field(default_factory=dict)
    records: list = field(default_factory=list)  # (recipe name, ObservationRecord)
    summary: dict = field(default_factory=dict)
    trace_csv: str = ""
    switch_trace_csv: str = ""
    attacker_log: list = field(default_factory=list)
    out_dir: Optional[Path] = None
    files: dict = field(default_factory=dict)
    sim: Optional[Simulation] = None


@dataclass
class _Context:
    sim: Simulation
    seed: int
    trials: Optional[int]
    report: InferenceReport = field(default_factory=InferenceReport)
    figures: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add_records(self, recipe: str, recs) -> None:
        self.records.extend((recipe, r) for r in recs)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.9f}".rstrip("0").rstrip(".") if v == v else "nan"
    if v is None:
        return ""
    return str(v)


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def observations_csv(records) -> str:
    rows = []
    for b, (recipe, rec) in enumerate(records, 1):
        for p in rec.probes:
            rows.append({"recipe": recipe, "batch": b, "kind": rec.batch.kind.value, "src": ip_str(rec.batch.src_ip),
                         "probe": p.index + 1, "dst": ip_str(p.dst), "sent_at": p.sent_at,
                         "replied": int(p.replied), "reply_time": p.reply_time,
                         "terminal_switch": p.terminal_switch,
                         "terminal_rule": p.terminal.describe() if p.terminal is not None else None,
                         "detected": int(rec.detected)})
    return rows_to_csv(OBSERVATION_COLUMNS, rows)


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def switch_trace_csv(trace) -> str:
    return trace.to_csv(trace.switch_events())


def run_experiment(scenario: schema.Scenario, out_dir=None, seed: Optional[int] = None,
                   trials: Optional[int] = None, monitor_count: Optional[int] = None) -> ExperimentResult:
    seed = scenario.seed if seed is None else seed
    needs_net = scenario.topology is not None
    sim = build(scenario, seed, monitor_count=monitor_count) if needs_net else None
    ctx = _Context(sim, seed, trials)
    for step in scenario.campaign:
        HANDLERS[step.recipe](ctx, step)
    if sim is not None:
        if scenario.duration is not None and sim.attacker is not None and sim.network.now < scenario.duration:
            sim.attacker.advance(scenario.duration)
        ctx.summary["detection_events"] = len(sim.trace.of_kind("detection"))
        ctx.summary["controller_messages"] = dict(sorted(sim.controller.messages.items()))
        ctx.summary["sim_time"] = sim.network.now
        if sim.obfuscator is not None:
            ctx.summary["obfuscation_k"] = sim.obfuscator.k
            ctx.summary["obfuscation_overhead"] = dict(sorted(sim.obfuscator.overhead.items()))
    result = ExperimentResult(scenario, seed, ctx.report, ctx.figures, ctx.records, ctx.summary, sim=sim)
    if sim is not None:
        result.trace_csv = sim.trace.to_csv()
        result.switch_trace_csv = switch_trace_csv(sim.trace)
        result.attacker_log = list(sim.attacker.log) if sim.attacker is not None else []
    if out_dir is not None:
        write_outputs(result, Path(out_dir))
    return result


def emit_figures(result: ExperimentResult, out_dir, names=None) -> dict:
    """Write one CSV per figure. Asking for a figure the campaign never produced is an error."""
    out_dir = Path(out_dir)
    wanted = list(names) if names is not None else sorted(result.figures)
    paths = {}
    for name in wanted:
        if name not in FIGURE_COLUMNS:
            raise KeyError(f"unknown figure {name!r}")
        rows = result.figures.get(name)
        if rows is None:
            raise MissingCampaignData(f"{name} needs a campaign this scenario did not run")
        path = out_dir / f"{name}.csv"
        text = sweep_csv(rows) if name == "obfuscation_sweep" else rows_to_csv(FIGURE_COLUMNS[name], rows)
        atomic_write(path, text)
        paths[name] = path
    return paths


def write_outputs(result: ExperimentResult, out_dir: Path, fmt: str = "csv") -> dict:
    files = {}
    report = result.report.to_json()
    files["report.json"] = report
    files["summary.json"] = json.dumps({"scenario": result.scenario.name, "seed": result.seed, **result.summary},
                                       sort_keys=True, indent=2, default=str) + "\n"
    if result.sim is not None:
        files["trace.csv"] = result.trace_csv
        files["switch_trace.csv"] = result.switch_trace_csv
    if result.records:
        files["observations.csv"] = observations_csv(result.records)
    if fmt == "json":
        files["figures.json"] = json.dumps(result.figures, sort_keys=True, indent=2) + "\n"
    for name, text in sorted(files.items()):
        atomic_write(out_dir / name, text)
    paths = {name: out_dir / name for name in files}
    paths.update(emit_figures(result, out_dir))
    result.out_dir = out_dir
    result.files = paths
    return paths


def detached_switch_trace(result: ExperimentResult) -> str:
    """Replay the attacker's exact traffic with no side channel attached; return the switch-event trace."""
    sim = build(result.scenario, result.seed, side_channel=False)
    ReplayAttacker(sim.network, result.attacker_log).run()
    return switch_trace_csv(sim.trace)


def run_with_obfuscation(scenario: schema.Scenario, k: int, n: int = 1, seed: Optional[int] = None,
                         out_dir=None) -> InferenceReport:
    obf = schema.ObfuscationModel(k=k, seed=scenario.obfuscation.seed if scenario.obfuscation else 0)
    variant = scenario.model_copy(update={"obfuscation": obf})
    return run_experiment(variant, out_dir, seed, monitor_count=n).report
