"""``podnet`` command line.

Exit codes: 0 success (``ttest``: H0 kept), 1 ``ttest`` rejected H0,
2 bad input or configuration, 3 event budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (
    CalibrationTable,
    EmptyTable,
    InsufficientData,
    NegativeValue,
    OverheadFactor,
    SchemaError,
    SummaryStats,
    calibrate_alpha,
    calibrate_Tc,
    calibration_from_dict,
    calibration_to_dict,
    interpolate_Tc,
    load_measurements,
    pooled_t_test,
    predict_Td,
    predict_Tt,
    summarize,
)
from .k8s.config import ConfigError, Scenario, load_scenario
from .k8s.simulate import SimResult, simulate
from .petri import BudgetExceeded, trace_to_jsonl
from .planner import MissingCalibration, plan_input_from_dict, recommend
from .report import SUMMARY_FIELDS, csv_text, dumps_json, fmt, manifest, write_csv, write_json

EXIT_OK, EXIT_REJECT, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    """Reported as exit status 2."""


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _level(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return value


# -- simulate --------------------------------------------------------------


def replication_seed(seed: int, point: int, rep: int) -> int:
    return int(np.random.SeedSequence([seed, point, rep]).generate_state(1, dtype=np.uint64)[0])


def result_to_dict(res: SimResult, C: int, rho: Fraction, n: int, rep: int) -> dict:
    return {
        "C": C,
        "rho": str(rho),
        "n": n,
        "replication": rep,
        "seed": res.seed,
        "T_d": res.T_d,
        "T_t": res.T_t,
        "T_down": res.T_down,
        "events": len(res.trace),
        "pods": [
            {
                "pod_id": p.pod_id,
                "node": p.node,
                "schedule_time": p.schedule_time,
                "running_time": p.running_time,
                "terminal_time": p.terminal_time,
                "terminal_phase": p.terminal_phase,
                "restarts": p.restarts,
                "termination_duration": p.termination_duration,
            }
            for p in res.pods.values()
        ],
        "downloads": [{"node": d.node, "image": d.image, "start": d.start, "end": d.end} for d in res.downloads],
        "creations": [
            {"container_id": c.container_id, "node": c.node, "start": c.start, "end": c.end} for c in res.creations
        ],
    }


def _mean_termination(res: SimResult) -> float | None:
    values = list(res.termination_durations.values())
    return sum(values) / len(values) if values else None


SERIES_HEADER = ("C", "rho", "n", "replication", "seed", "T_d", "T_t", "T_down", "termination_s")
SUMMARY_HEADER = ("C", "rho", "n", "metric") + SUMMARY_FIELDS


def _summary_row(key, metric, values, alpha):
    values = [v for v in values if v is not None]
    if len(values) >= 2:
        s = summarize(values, alpha)
        return (*key, metric, s.mean, s.std, s.count, s.ci_low, s.ci_high)
    if len(values) == 1:
        return (*key, metric, values[0], None, 1, None, None)
    return (*key, metric, None, None, 0, None, None)


def cmd_simulate(args) -> int:
    scenario: Scenario = load_scenario(args.config)
    seed = scenario.seed if args.seed is None else args.seed
    reps = scenario.replications if args.reps is None else args.reps
    budget = scenario.max_events if args.max_events is None else args.max_events
    out = Path(args.out) if args.out else None

    jobs = []
    for point, (C, rho, cluster) in enumerate(scenario.points()):
        deployment = scenario.deployment(C, rho)
        for rep in range(reps):
            jobs.append((point, C, rho, cluster, deployment, rep, replication_seed(seed, point, rep)))

    def run(job):
        _, C, rho, cluster, deployment, rep, s = job
        return simulate(cluster, deployment, seed=s, max_events=budget, until=scenario.until)

    workers = max(1, min(len(jobs), os.cpu_count() or 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, jobs))  # map keeps job order

    series, per_point = [], {}
    for job, res in zip(jobs, results):
        point, C, rho, cluster, _, rep, s = job
        row = (C, rho, cluster.n, rep, s, res.T_d, res.T_t, res.T_down, _mean_termination(res))
        series.append(row)
        per_point.setdefault((C, rho, cluster.n), []).append(row)
        if out is not None:
            stem = f"point-{point:03d}-rep-{rep:03d}"
            write_json(out / "replications" / f"{stem}.json", result_to_dict(res, C, rho, cluster.n, rep))
            if args.trace:
                (out / "traces").mkdir(parents=True, exist_ok=True)
                (out / "traces" / f"{stem}.jsonl").write_text(trace_to_jsonl(res.trace))

    summary = []
    for key, rows in per_point.items():
        for metric, col in (("T_d", 5), ("T_t", 6), ("T_down", 7), ("termination_s", 8)):
            summary.append(_summary_row(key, metric, [r[col] for r in rows], args.alpha))

    text = csv_text(SUMMARY_HEADER, summary)
    sys.stdout.write(text)
    if out is not None:
        write_csv(out / "series.csv", SERIES_HEADER, series)
        (out / "summary.csv").write_text(text)
        write_json(
            out / "manifest.json",
            manifest("simulate", [args.config], out, seed=seed, replications=reps, max_events=budget,
                     alpha=args.alpha, trace=bool(args.trace)),
        )
    return EXIT_OK


# -- calibrate -------------------------------------------------------------


def _group_summaries(samples, alpha):
    groups: dict[tuple, list[float]] = {}
    for s in samples:
        groups.setdefault((s.experiment, s.n, s.pods, s.containers, s.metric), []).append(s.value)
    rows = []
    for key in sorted(groups):
        values = groups[key]
        if len(values) >= 2:
            st = summarize(values, alpha)
            rows.append((*key, st.mean, st.std, st.count, st.ci_low, st.ci_high))
        else:
            rows.append((*key, values[0], None, 1, None, None))
    return rows


def cmd_calibrate(args) -> int:
    samples = load_measurements(args.measurements)
    if not samples:
        raise InputError("no measurements to calibrate from")
    try:
        table = calibrate_Tc(samples)
    except EmptyTable:
        table = None
    alpha = calibrate_alpha(samples, args.alpha)
    if table is None and not alpha.measured:
        raise InputError("measurements contain neither deploy_time_s nor paired exec/bandwidth series")

    result = calibration_to_dict(table, alpha)
    lines = []
    if table is not None:
        lines.append(f"T_c grid: {len(table.entries)} entries, asymptote t_c = {fmt(table.t_c)} s")
    lines.append("alpha: " + ", ".join(f"rho={r['rho']}: {fmt(r['alpha'])}" for r in alpha.to_rows()))
    print("\n".join(lines))
    if args.out:
        out = Path(args.out)
        write_json(out / "calibration.json", result)
        if table is not None:
            write_csv(out / "tc_table.csv", ("rho", "n", "C", "Tc_s"),
                      [(r["rho"], r["n"], r["C"], r["Tc_s"]) for r in table.to_rows()])
        write_csv(out / "alpha.csv", ("rho", "alpha"), [(r["rho"], r["alpha"]) for r in alpha.to_rows()])
        write_csv(out / "summary.csv", ("experiment", "n", "pods", "containers", "metric") + SUMMARY_FIELDS,
                  _group_summaries(samples, args.alpha))
        write_json(out / "manifest.json", manifest("calibrate", [args.measurements], out, alpha=args.alpha))
    return EXIT_OK


def load_calibration(path: str | Path) -> tuple[CalibrationTable | None, OverheadFactor]:
    try:
        return calibration_from_dict(json.loads(Path(path).read_text()))
    except (OSError, ValueError, KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"cannot read calibration {path}: {exc}") from None


# -- ttest -----------------------------------------------------------------


def _read_stats(path: str, metric: str | None, alpha: float) -> SummaryStats:
    """A measurement CSV (one metric) or a ``mean,std,count`` summary CSV."""
    text = Path(path).read_text()
    head = text.splitlines()[0].strip() if text.strip() else ""
    cols = [c.strip() for c in head.split(",")]
    if {"mean", "std", "count"} <= set(cols):
        rows = list(csv.DictReader(text.splitlines()))
        if len(rows) != 1:
            raise InputError(f"{path}: a summary file holds exactly one row")
        row = rows[0]
        try:
            return SummaryStats.from_moments(float(row["mean"]), float(row["std"]), int(row["count"]), alpha)
        except ValueError as exc:
            if isinstance(exc, InsufficientData):
                raise
            raise InputError(f"{path}: {exc}") from None
    samples = load_measurements(path)
    metrics = sorted({s.metric for s in samples})
    if metric is None:
        if len(metrics) > 1:
            raise InputError(f"{path} holds several metrics {metrics}; pick one with --metric")
        metric = metrics[0] if metrics else None
    values = [s.value for s in samples if s.metric == metric]
    return summarize(values, alpha, metric)


def cmd_ttest(args) -> int:
    a = _read_stats(args.sample_a, args.metric, args.alpha)
    b = _read_stats(args.sample_b, args.metric, args.alpha)
    decision = pooled_t_test(a, b, args.alpha)
    text = dumps_json(decision.to_dict())
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "ttest.json", {"decision": decision.to_dict(), "sample_a": a.to_dict(), "sample_b": b.to_dict()})
        write_json(out / "manifest.json",
                   manifest("ttest", [args.sample_a, args.sample_b], out, alpha=args.alpha, metric=args.metric))
    return EXIT_REJECT if decision.reject_H0 else EXIT_OK


# -- plan ------------------------------------------------------------------


def cmd_plan(args) -> int:
    try:
        raw = json.loads(Path(args.plan_config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read plan config: {exc}") from None
    inputs = [args.plan_config]
    table, alpha_fn = None, None
    cal_path = args.calibration or raw.get("calibration")
    if isinstance(cal_path, dict):
        table, alpha_fn = calibration_from_dict(cal_path)
    elif cal_path:
        cal_path = Path(cal_path)
        if not cal_path.is_absolute() and not args.calibration:
            cal_path = Path(args.plan_config).parent / cal_path
        table, alpha_fn = load_calibration(cal_path)
        inputs.append(str(cal_path))
    if "alpha" in raw:
        alpha_fn = OverheadFactor({Fraction(str(k)): float(v) for k, v in raw["alpha"].items()})
    try:
        inp = plan_input_from_dict(raw, table, alpha_fn)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad plan config: {exc}") from None
    rec = recommend(inp)
    explanation = "\n".join(rec.decision_trace) + "\n"
    sys.stdout.write(explanation)
    if args.out:
        out = Path(args.out)
        write_json(out / "plan.json", rec.to_dict())
        (out / "plan.txt").write_text(explanation)
        write_json(out / "manifest.json", manifest("plan", inputs, out))
    return EXIT_OK


# -- predict ---------------------------------------------------------------


def cmd_predict(args) -> int:
    C, pods, n = args.containers, args.pods, args.machines
    if pods > C or C % pods:
        raise InputError(f"{pods} pods cannot evenly hold {C} containers")
    if args.tc is not None:
        if not args.tc > 0:
            raise InputError("--tc must be > 0")
        tc = args.tc
    else:
        table, _ = load_calibration(args.calibration)
        if table is None:
            raise InputError("calibration has no T_c table")
        tc = interpolate_Tc(table, Fraction(pods, C), n, C)
    if args.tdown < 0:
        raise InputError("--tdown must be >= 0")
    Td = predict_Td(C, pods, n, tc)
    Tt = predict_Tt(Td, args.tdown)
    print(f"T_c = {fmt(tc)} s")
    print(f"T_d = {fmt(Td)} s")
    print(f"T_t = {fmt(Tt)} s")
    return EXIT_OK


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="podnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and summarise T_d, T_t and termination times")
    p.add_argument("config")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--reps", type=_positive_int)
    p.add_argument("--alpha", type=_level, default=0.05)
    p.add_argument("--out")
    p.add_argument("--max-events", type=_positive_int)
    p.add_argument("--trace", action="store_true", help="also write one JSONL trace per replication")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="T_c grid and overhead factor from a measurement CSV")
    p.add_argument("measurements")
    p.add_argument("--alpha", type=_level, default=0.05)
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("ttest", help="pooled two-sample t-test (exit 0 keep H0, 1 reject)")
    p.add_argument("sample_a")
    p.add_argument("sample_b")
    p.add_argument("--alpha", type=_level, default=0.05)
    p.add_argument("--metric")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ttest)

    p = sub.add_parser("plan", help="recommend rho for an application profile")
    p.add_argument("plan_config")
    p.add_argument("--calibration")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("predict", help="closed-form T_d and T_t")
    p.add_argument("--containers", type=_positive_int, required=True)
    p.add_argument("--pods", type=_positive_int, required=True)
    p.add_argument("--machines", type=_positive_int, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--tc", type=float)
    src.add_argument("--calibration")
    p.add_argument("--tdown", type=float, default=0.0)
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error in {exc.field}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, SchemaError, NegativeValue, InsufficientData, MissingCalibration, EmptyTable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
