"""Command-line front end.

Subcommands: build-matrix (fuse PM/FM/CM CSVs into a design matrix),
rca (diagnose a degraded KPI), reldisc (discover a relationship between
two PM columns), synth (emit a seeded scenario with ground truth), and
bench (scaling measurements).

Exit codes: 0 success, 2 input error, 3 diagnosis found no cause. Given
identical inputs and seeds, every subcommand writes byte-identical
outputs; only measured timings vary between runs.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import rca as rca_mod
from . import reldisc as reldisc_mod
from . import synth as synth_mod
from . import telemetry
from ._backend import BACKEND_NAME, available_backends

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NO_CAUSE = 3

_DURATION_RE = re.compile(r"^(\d+)(ms|s|m|h|d)?$")
_DURATION_MS = {"ms": 1, "s": 1_000, "m": 60_000, "h": 3_600_000, "d": 86_400_000}


def parse_duration(text: str) -> int:
    """Milliseconds from '900000', '900s', '15m', '1h', or '5d'."""
    match = _DURATION_RE.match(text.strip())
    if not match:
        raise ValueError(
            f"unparseable duration {text!r} (expected <int>[ms|s|m|h|d])"
        )
    value, unit = match.groups()
    return int(value) * _DURATION_MS[unit or "ms"]


def _parse_epsilon_grid(text: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ValueError(f"bad epsilon grid {text!r}; expected comma-separated floats") from None
    if not grid or any(e <= 0 for e in grid):
        raise ValueError("epsilon grid must be non-empty, all entries > 0")
    return grid


def _parse_sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ValueError(f"bad sizes {text!r}; expected comma-separated integers") from None
    if len(sizes) < 2 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be >= 2 strictly ascending integers")
    return sizes


def cmd_build_matrix(args: argparse.Namespace) -> int:
    grid = telemetry.TimeGrid(
        window_start=telemetry.parse_timestamp(args.window_start),
        delta_t=parse_duration(args.delta_t),
        window=parse_duration(args.window),
    )
    pm = telemetry.read_pm_csv(args.pm, grid, bs_id=args.bs_id)
    fm = telemetry.read_fm_csv(args.fm, bs_id=args.bs_id) if args.fm else []
    cm = telemetry.read_cm_csv(args.cm, bs_id=args.bs_id) if args.cm else []
    matrix = telemetry.build_design_matrix(pm, fm, cm, grid)
    telemetry.write_matrix_csv(matrix, args.output)
    r, p, q = matrix.kind_counts()
    print(
        f"wrote {args.output}: m={matrix.rows} rows, n={matrix.n_columns} columns "
        f"(PM r={r}, FM p={p}, CM q={q})"
    )
    return EXIT_OK


def cmd_rca(args: argparse.Namespace) -> int:
    matrix = telemetry.read_matrix_csv(args.matrix)
    spec = rca_mod.KpiSpec(
        column_index=matrix.column_index(args.kpi),
        threshold=args.threshold,
        direction=args.direction,
    )
    if args.filter:
        causality = rca_mod.read_filter_csv(args.filter, matrix, args.kpi)
    else:
        causality = rca_mod.CausalityFilter.allow_all_except_kpi(
            matrix.n_columns, spec.column_index
        )
    report = rca_mod.diagnose(
        matrix,
        spec,
        causality,
        epsilon_grid=_parse_epsilon_grid(args.epsilon_grid),
        min_pts=args.min_pts,
    )
    payload = report.to_json()
    if args.output:
        Path(args.output).write_text(payload)
        if report.root_cause is None:
            print(f"wrote {args.output}: no admissible cause found")
        else:
            print(f"wrote {args.output}: root cause {report.root_cause} (score {report.score:.6f})")
    else:
        sys.stdout.write(payload)
    return EXIT_OK if report.root_cause is not None else EXIT_NO_CAUSE


def cmd_reldisc(args: argparse.Namespace) -> int:
    matrix = telemetry.read_matrix_csv(args.matrix)
    for name in (args.x_col, args.y_col):
        idx = matrix.column_index(name)
        if matrix.kinds[idx] != telemetry.PM:
            raise ValueError(
                f"column {name!r} is {matrix.kinds[idx]}; relationship discovery "
                "pairs one PM column with another"
            )
    params = reldisc_mod.RelDiscParams(
        k=args.k,
        aggregate=args.aggregate,
        gamma=args.gamma,
        smooth_window=args.smooth_window,
        kmeans_mode=args.kmeans_mode,
    )
    p_x = matrix.column(args.x_col)
    p_y = matrix.column(args.y_col)
    table = reldisc_mod.discover(p_x, p_y, params)
    out = Path(args.output)
    reldisc_mod.write_lookup_csv(out, table, imputed=False)
    imputed_path = out.with_suffix(".imputed.csv")
    reldisc_mod.write_lookup_csv(imputed_path, table, imputed=True)
    if args.plot:
        reldisc_mod.write_plot_json(args.plot, reldisc_mod.plot_data(p_x, p_y, table))
    defined = int((~np.isnan(table.y)).sum())
    print(
        f"wrote {out} and {imputed_path}: k={table.size} clusters, "
        f"{defined} with support > gamma={args.gamma}"
    )
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = synth_mod.generate(
        seed=args.seed,
        rows=args.rows,
        delta_t=parse_duration(args.delta_t),
        cause_kind=args.cause_kind,
    )
    (out_dir / "pm.csv").write_text(result.pm_csv)
    (out_dir / "fm.csv").write_text(result.fm_csv)
    (out_dir / "cm.csv").write_text(result.cm_csv)
    (out_dir / "filter.csv").write_text(result.filter_csv)
    telemetry.write_matrix_csv(result.matrix, out_dir / "matrix.csv")
    scenario = result.scenario
    truth = {
        "seed": scenario.seed,
        "bs_id": scenario.bs_id,
        "kpi": scenario.kpi_name,
        "threshold": scenario.threshold,
        "direction": scenario.direction,
        "cause": {
            "kind": scenario.cause.kind,
            "column": scenario.cause.column,
            "start_bin": scenario.cause.start_bin,
            "length": scenario.cause.length,
        },
        "cause_index": scenario.cause_index,
        "window": {
            "start": scenario.grid.window_start,
            "delta_t": scenario.grid.delta_t,
            "rows": scenario.grid.rows,
        },
    }
    (out_dir / "truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    print(
        f"wrote scenario seed={scenario.seed} to {out_dir}: cause "
        f"{scenario.cause.column} ({scenario.cause.kind}) over bins "
        f"[{scenario.cause.start_bin}, {scenario.cause.start_bin + scenario.cause.length})"
    )
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    if args.mode == "rca_vs_n":
        sizes = _parse_sizes(args.sizes) if args.sizes else bench_mod.RCA_COLUMN_SIZES
        points = bench_mod.run_rca_scaling(sizes, seed=args.seed, repeats=args.repeats)
        bench_mod.write_timings_csv(args.output, points)
        print(f"rca scaling over columns n={list(sizes)} (backend: {BACKEND_NAME})")
        print(bench_mod.summarize(points))
    elif args.mode == "reldisc_vs_m":
        sizes = _parse_sizes(args.sizes) if args.sizes else bench_mod.RELDISC_SIZES
        points = bench_mod.run_reldisc_scaling(sizes, seed=args.seed, repeats=args.repeats)
        bench_mod.write_timings_csv(args.output, points)
        print(f"relationship discovery scaling over samples m={list(sizes)} (backend: {BACKEND_NAME})")
        print(bench_mod.summarize(points))
    else:
        sizes = _parse_sizes(args.sizes) if args.sizes else bench_mod.BACKEND_SIZES
        rows = bench_mod.run_backend_compare(sizes, seed=args.seed, repeats=args.repeats)
        bench_mod.write_backend_csv(args.output, rows)
        print(f"clustering kernel comparison across backends {available_backends()}")
        for name in available_backends():
            points = [p for b, p in rows if b == name]
            print(f"[{name}]")
            print(bench_mod.summarize(points))
    print(f"wrote {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ricdiag",
        description="Self-diagnosis toolkit for base-station telemetry",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-matrix", help="fuse PM/FM/CM CSVs into a design matrix")
    p.add_argument("--pm", required=True, help="PM CSV (timestamp,bs_id,<col>...)")
    p.add_argument("--fm", help="FM CSV (bs_id,alarm_id,raised_at,cleared_at)")
    p.add_argument("--cm", help="CM CSV (bs_id,param_id,old/new,changed_at,reverted_at)")
    p.add_argument("--bs-id", help="base station to select when files carry several")
    p.add_argument("--window-start", required=True, help="epoch ms or ISO-8601")
    p.add_argument("--delta-t", required=True, help="bin width, e.g. 15m, 1h, 900000")
    p.add_argument("--window", required=True, help="window length, e.g. 5d, 30h")
    p.add_argument("--output", required=True, help="matrix CSV path (manifest written alongside)")
    p.set_defaults(func=cmd_build_matrix)

    p = sub.add_parser("rca", help="diagnose the root cause of a degraded KPI")
    p.add_argument("--matrix", required=True, help="matrix CSV from build-matrix")
    p.add_argument("--kpi", required=True, help="KPI column name")
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--direction", choices=rca_mod.DIRECTIONS, default="above_is_bad")
    p.add_argument("--filter", help="causality filter CSV (kpi_name,column_name,allowed)")
    p.add_argument("--epsilon-grid", default="0.1,0.3,0.5")
    p.add_argument("--min-pts", type=int, default=rca_mod.DEFAULT_MIN_PTS)
    p.add_argument("--output", help="report JSON path (stdout when omitted)")
    p.set_defaults(func=cmd_rca)

    p = sub.add_parser("reldisc", help="discover y = f(x) between two PM columns")
    p.add_argument("--matrix", required=True)
    p.add_argument("--x-col", required=True)
    p.add_argument("--y-col", required=True)
    p.add_argument("--k", type=int, default=reldisc_mod.DEFAULT_K)
    p.add_argument("--aggregate", choices=reldisc_mod.AGGREGATES,
                   default=reldisc_mod.DEFAULT_AGGREGATE)
    p.add_argument("--gamma", type=int, default=reldisc_mod.DEFAULT_GAMMA)
    p.add_argument("--smooth-window", type=int, default=reldisc_mod.DEFAULT_SMOOTH_WINDOW)
    p.add_argument("--kmeans-mode", choices=reldisc_mod.KMEANS_MODES, default="frozen")
    p.add_argument("--plot", help="optional plot-data JSON path")
    p.add_argument("--output", required=True,
                   help="lookup CSV path; an .imputed.csv twin is written alongside")
    p.set_defaults(func=cmd_reldisc)

    p = sub.add_parser("synth", help="generate a seeded scenario with ground truth")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rows", type=int, default=synth_mod.DEFAULT_ROWS)
    p.add_argument("--delta-t", default=str(synth_mod.DEFAULT_DELTA_T))
    p.add_argument("--cause-kind", choices=(telemetry.PM, telemetry.FM, telemetry.CM))
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="measure pipeline scaling")
    p.add_argument("--mode", choices=("rca_vs_n", "reldisc_vs_m", "backends"),
                   default="rca_vs_n")
    p.add_argument("--sizes", help="comma-separated ascending sizes (mode default otherwise)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--output", required=True, help="timings CSV path")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        message = exc.args[0] if exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
