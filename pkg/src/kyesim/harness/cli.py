"""Command-line entry point: ``kyesim run|sweep|report|validate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import schema
from .runner import atomic_write, rows_to_csv, run_experiment, write_outputs

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


def _load(path: str):
    return schema.load_scenario(path)


def cmd_run(args) -> int:
    scenario = _load(args.scenario)
    out = Path(args.out or f"results/{scenario.name}")
    result = run_experiment(scenario, None, args.seed, args.trials)
    paths = write_outputs(result, out, args.format)
    print(result.report.to_json() if args.format == "json" else _report_text(result.report.to_dict()), end="")
    print(f"wrote {len(paths)} files to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = _load(args.scenario)
    base = scenario.seed if args.seed is None else args.seed
    out = Path(args.out or f"results/{scenario.name}-sweep")
    rows = []
    for s in range(base, base + args.seeds):
        result = run_experiment(scenario, out / f"seed-{s}", s, args.trials)
        r = result.report
        rows.append({"seed": s, "mechanism": r.mechanism.value if r.mechanism else None,
                     "boundary": r.detection_boundary.estimate if r.detection_boundary else None,
                     "detection_events": result.summary.get("detection_events")})
    cols = ("seed", "mechanism", "boundary", "detection_events")
    if args.format == "json":
        atomic_write(out / "sweep.json", json.dumps(rows, indent=2, sort_keys=True) + "\n")
    else:
        atomic_write(out / "sweep.csv", rows_to_csv(cols, rows))
    print(f"ran {len(rows)} seeds into {out}")
    return EXIT_OK


def _report_text(d: dict) -> str:
    lines = []
    for key in sorted(d):
        val = d[key]
        if key == "access_matrix" and val:
            lines.append("access_matrix:")
            width = max(len(s) for s in val["sources"] + val["destinations"])
            for src, row in zip(val["sources"], val["allow"]):
                lines.append("  " + src.ljust(width) + " " + " ".join("A" if a else "." for a in row))
        else:
            lines.append(f"{key}: {json.dumps(val, sort_keys=True)}")
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    path = Path(args.result_dir) / "report.json"
    data = json.loads(path.read_text(encoding="utf-8"))
    if args.format == "json":
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(_report_text(data), end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = _load(args.scenario)
    print(f"{scenario.name}: ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kyesim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--trials", type=int, help="Monte Carlo trials per cell")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("run", help="run one scenario")
    sp.add_argument("scenario", help="path or bundled scenario name")
    common(sp)
    sp.set_defaults(fn=cmd_run)
    sp = sub.add_parser("sweep", help="run a scenario over consecutive seeds")
    sp.add_argument("scenario")
    sp.add_argument("--seeds", type=int, default=5)
    common(sp)
    sp.set_defaults(fn=cmd_sweep)
    sp = sub.add_parser("report", help="print a finished run's report")
    sp.add_argument("result_dir")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(fn=cmd_report)
    sp = sub.add_parser("validate", help="check a scenario file")
    sp.add_argument("scenario")
    sp.set_defaults(fn=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.fn(args)
    except (schema.ParseError, schema.ValidationError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - the CLI reports and exits non-zero
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
