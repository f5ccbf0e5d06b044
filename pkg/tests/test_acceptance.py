"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import math

import pytest

from kyesim.harness import bundled_scenarios, detached_switch_trace, load_scenario, run_experiment
from kyesim.kye import Mechanism
from kyesim.obfuscation import ObfuscationParams, end_to_end_defeat_test, monte_carlo_success

from oracles import ACCESS_ALLOW, boundary_oracle, credit_burst_pattern, p_formula, sprt_detection_step

RESULTS = []


def verdict(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_ac1_credit_burst_pattern():
    res = run_experiment(load_scenario("trwcb_fig4"))
    bits = [r["outcome"] for r in sorted(res.figures["fig4"], key=lambda r: r["request_index"])]
    expected = credit_burst_pattern(100, 100.0, 0.395, 10, 2)
    runs, prev = [], 0
    for i, b in enumerate(bits + [0]):
        if b and not prev:
            start = i
        if prev and not b:
            runs.append((start, i - start))
        prev = b
    shape = len(runs) == 2 and runs[0] == (0, 10) and runs[1][1] == 20 and runs[1][0] > 10
    verdict("AC1 burst pattern", shape and bits == expected and res.report.credit_estimate == (10, 2),
            f"runs={runs} oracle_match={bits == expected} estimate={res.report.credit_estimate}")


def test_ac2_sprt_detection_point():
    want = sprt_detection_step([False] * 30)
    got = run_experiment(load_scenario("trwcb_detect")).report.extras["failures_before_detection"]
    want10 = sprt_detection_step([False] * 30, theta0=0.75, theta1=0.3)
    got10 = run_experiment(load_scenario("trwcb_detect_theta10")).report.extras["failures_before_detection"]
    verdict("AC2 detection point", got == want == 8 and got10 == want10 == 10,
            f"defaults {got} (oracle {want}); theta=(0.75,0.3) {got10} (oracle {want10})")


def test_ac3_detection_boundary():
    rep = run_experiment(load_scenario("boundary_sweep")).report
    b = rep.detection_boundary
    lo, hi, mid = boundary_oracle(100)
    worst = rep.extras["max_detected_success_ratio"]
    ok = abs(b.estimate - 0.55) <= 0.07 and worst is not None and worst <= 0.57 and b.contains(mid)
    verdict("AC3 detection boundary", ok,
            f"estimate={b.estimate:.4f} ci=[{b.ci_low:.4f},{b.ci_high:.4f}] oracle={mid:.4f} "
            f"max_detected_success={worst}")


def test_ac4_access_matrix():
    res = run_experiment(load_scenario("access_matrix"))
    m = res.report.access_matrix
    cells = sum(a == b for row, want in zip(m.allow, ACCESS_ALLOW) for a, b in zip(row, want))
    det = res.summary["detection_events"]
    verdict("AC4 access matrix", cells == 49 and det == 0, f"{cells}/49 cells, {det} detections")


CLASSIFY = {
    "classify_filtering": Mechanism.TRAFFIC_FILTERING,
    "classify_rate_limit": Mechanism.RATE_LIMIT,
    "classify_credit": Mechanism.CREDIT_BASED_LIMIT,
    "classify_working_set": Mechanism.WORKING_SET_DELAY,
    "classify_redirection": Mechanism.REDIRECTION,
    "classify_syn_proxy": Mechanism.SYN_PROXY_WHITEHOLE,
    "classify_none": Mechanism.NONE,
}


def test_ac5_classifier():
    got = {n: run_experiment(load_scenario(n)).report.mechanism for n in CLASSIFY}
    right = sum(got[n] is m for n, m in CLASSIFY.items())
    wrong = {n: (g.value if g else None) for n, g in got.items() if g is not CLASSIFY[n]}
    verdict("AC5 classifier", right == 7, f"{right}/7 correct {wrong or ''}".strip())


def test_ac6_aggregation_threshold():
    found = {}
    for tau, name in ((0.5, "aggregation_rate_0_5"), (1.0, "aggregation_rate_1_0"), (2.0, "aggregation_rate_2_0")):
        found[tau] = run_experiment(load_scenario(name)).report.aggregation_threshold
    ok = all(v is not None and tau - 1e-9 <= v <= tau + 0.1 + 1e-9 for tau, v in found.items())
    verdict("AC6 aggregation threshold", ok, f"{found}")


def test_ac7_obfuscation_probability():
    rows = run_experiment(load_scenario("obfuscation_sweep")).figures["obfuscation_sweep"]
    bad = []
    for r in rows:
        p = p_formula(r["n"], r["k"], r["o"])
        tol = 3 * math.sqrt(p * (1 - p) / r["trials"])
        if r["trials"] != 100_000 or abs(r["p_monte_carlo"] - p) > tol or abs(r["p_formula"] - p) > 1e-12:
            bad.append((r["n"], r["k"], r["o"]))
        if r["k"] == 1 and r["p_formula"] != 1.0:
            bad.append(("k=1", r["n"], r["o"]))
    cells = {(r["n"], r["k"], r["o"]) for r in rows}
    full = cells == {(n, k, o) for n in (2, 4, 8) for k in range(1, n + 1) for o in (2, 3, 4)}
    past_n = [monte_carlo_success(ObfuscationParams(n, o, n + 1), 100_000) for n in (2, 4, 8) for o in (2, 3, 4)]
    ok = not bad and full and all(v == 0.0 for v in past_n)
    verdict("AC7 obfuscation probability", ok,
            f"{len(rows)} cells within 3 sigma={not bad}, grid complete={full}, k>n empirical={set(past_n)}")


def test_ac8_countermeasure_defeat():
    s = load_scenario("e2e_obfuscation_defeat")
    k = s.obfuscation.k
    defeated = end_to_end_defeat_test(s, k=k, n=1)
    baseline = end_to_end_defeat_test(s, k=1, n=1)
    d_cells = sum(a == b for row, want in zip(defeated.access_matrix.allow, ACCESS_ALLOW) for a, b in zip(row, want))
    b_cells = sum(a == b for row, want in zip(baseline.access_matrix.allow, ACCESS_ALLOW) for a, b in zip(row, want))
    ok = (k == 2 and defeated.mechanism in (Mechanism.UNKNOWN, Mechanism.NONE) and d_cells < 49
          and baseline.mechanism is Mechanism.TRAFFIC_FILTERING and b_cells == 49)
    verdict("AC8 countermeasure defeat", ok,
            f"k={k}: {defeated.mechanism.value}, {d_cells}/49; k=1: {baseline.mechanism.value}, {b_cells}/49")


def _tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def test_ac9_determinism_and_passivity(tmp_path):
    differ, active = [], []
    for name in bundled_scenarios():
        s = load_scenario(name)
        a = run_experiment(s, tmp_path / name / "a")
        run_experiment(s, tmp_path / name / "b")
        if _tree(tmp_path / name / "a") != _tree(tmp_path / name / "b"):
            differ.append(name)
        if a.sim is not None and detached_switch_trace(a) != a.switch_trace_csv:
            active.append(name)
    n = len(bundled_scenarios())
    verdict("AC9 determinism and passivity", not differ and not active,
            f"{n} scenarios; non-deterministic={differ or 'none'}; trace changed by side channel={active or 'none'}")
