"""Command-line front end: single solves, benchmark sweeps, rate traces.

All CSV output uses fixed column orders (documented in ``--help``) and
full-precision decimal floats. Exit codes: 0 success, 1 usage or
configuration error, 2 solver finished in a non-optimal status.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import multiprocessing
import os
import sys
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import problems
from .outer import FslpConfig, SolveReport, SolveStatus, make_config, solve

# Bench protocol defaults: the model-decrease cutoff is matched to the
# feasibility tolerance so runs do not burn iterations resolving decreases
# smaller than the feasibility noise floor.
BENCH_MODEL_TOL = 1e-6

OUTER_CSV_COLUMNS = "k,objective,h,delta,model_decrease,inner_status,inner_iters,accepted"
INNER_CSV_COLUMNS = "outer_iter,inner_iter,h,dist_to_wbar,dist_to_what"
INNER_CSV_COLUMNS_AA = INNER_CSV_COLUMNS + ",gamma_inf_norm,memory_cols,clipped_flag"
TABLE_CSV_COLUMNS = "variant,mean_n_con,mean_n_iter,mean_wall_seconds,success_count,problem_count"
LONG_CSV_COLUMNS = (
    "problem_id,variant,status,n_outer,n_g_evals,n_jac_evals,n_lp_solves,"
    "objective,wall_seconds,max_accepted_h,max_proj_ratio"
)
RATES_CSV_COLUMNS = "curve,problem,variant,iteration,value,status"


class UsageError(Exception):
    pass


@dataclasses.dataclass
class BenchmarkRow:
    """One summary line of table.csv; means cover successful solves only."""

    variant: str
    mean_n_con: float
    mean_n_iter: float
    mean_wall_seconds: float
    success_count: int
    problem_count: int

    def __post_init__(self):
        if self.success_count > self.problem_count:
            raise ValueError("success_count cannot exceed problem_count")

    def as_csv_fields(self) -> list:
        return [self.variant, _fmt(self.mean_n_con), _fmt(self.mean_n_iter),
                _fmt(self.mean_wall_seconds), str(self.success_count),
                str(self.problem_count)]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def parse_accels(text: str) -> List[Optional[int]]:
    out: List[Optional[int]] = []
    for token in text.split(","):
        token = token.strip().lower()
        if not token:
            continue
        if token == "none":
            out.append(None)
        elif token.startswith("aa:"):
            out.append(int(token[3:]))
        elif token.startswith("aa") and token[2:].isdigit():
            out.append(int(token[2:]))
        else:
            raise UsageError(f"unknown acceleration token {token!r}")
    if not out:
        raise UsageError("empty acceleration list")
    for d in out:
        if d is not None and d < 1:
            raise UsageError("acceleration depth must be at least 1")
    return out


def variant_label(accel: Optional[int]) -> str:
    return "FSLP" if accel is None else f"AA({accel})"


def _config_from_args(args, accel: Optional[int], **extra) -> FslpConfig:
    kwargs = dict(extra)
    if args.delta0 is not None:
        kwargs["delta0"] = args.delta0
    if args.sigma_inner is not None:
        kwargs["sigma_inner"] = args.sigma_inner
    if args.max_outer is not None:
        kwargs["max_outer"] = args.max_outer
    return make_config(accel, **kwargs)


def _load_spec_file(path: str):
    """A spec file holds an OCP description plus optional solver settings.

    Schema: {"ocp": {...}, "solver": {...}, "u_const": [...], "T0": float}.
    """
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read spec file {path}: {exc}")
    if "ocp" not in data:
        raise UsageError("spec file must contain an 'ocp' entry")
    try:
        spec = problems.OcpSpec.from_dict(data["ocp"])
        u_const = np.asarray(data.get("u_const", np.zeros(spec.n_u)), dtype=float)
        T0 = float(data.get("T0", 0.5 * (spec.T_bounds[0] + spec.T_bounds[1])))
        nlp = problems.build_p2p_ocp(spec)
        w0 = problems.init_feasible(spec, u_const, T0)
    except (problems.ProblemError, KeyError, ValueError) as exc:
        raise UsageError(f"invalid spec file {path}: {exc}")
    return nlp, w0, data.get("solver", {})


def _resolve_problem(args) -> Tuple[object, np.ndarray, dict]:
    if args.spec and args.problem:
        raise UsageError("pass either --problem or --spec, not both")
    if args.spec:
        return _load_spec_file(args.spec)
    name = args.problem or "circle"
    try:
        nlp, w0 = problems.named_problem(name)
    except problems.ProblemError as exc:
        raise UsageError(str(exc))
    return nlp, w0, {}


def write_outer_csv(report: SolveReport, path: str) -> None:
    lines = [OUTER_CSV_COLUMNS]
    for row in report.outer_trace:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row.as_csv_fields()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_inner_csv(report: SolveReport, path: str, accelerated: bool) -> None:
    lines = [INNER_CSV_COLUMNS_AA if accelerated else INNER_CSV_COLUMNS]
    for outer_k, res in enumerate(report.inner_results):
        for row in res.iterates_trace:
            fields = [outer_k, row.l, row.h, row.dist_to_wbar, row.dist_to_what]
            if accelerated:
                fields += [
                    0.0 if row.gamma_inf_norm is None else row.gamma_inf_norm,
                    0 if row.memory_cols is None else row.memory_cols,
                    0 if row.clipped is None else int(row.clipped),
                ]
            lines.append(",".join(_fmt(v) for v in fields))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_solve(args) -> int:
    nlp, w0, solver_overrides = _resolve_problem(args)
    accels = parse_accels(args.accel)
    if len(accels) != 1:
        raise UsageError("solve takes exactly one --accel variant")
    cfg = _config_from_args(args, accels[0], **solver_overrides)
    report = solve(nlp, w0, cfg, keep_inner_results=True)
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        fh.write(report.to_json() + "\n")
    write_outer_csv(report, os.path.join(outdir, "outer.csv"))
    write_inner_csv(report, os.path.join(outdir, "inner.csv"), cfg.accelerated)
    print(f"{report.problem} [{report.variant}]: {report.status} "
          f"objective={report.objective:.9g} outer={report.n_outer} "
          f"g_evals={report.counters.n_g_evals}")
    return 0 if report.status == SolveStatus.OPTIMAL else 2


def _bench_worker(job) -> dict:
    (problem_id, spec_dict, accel, cfg_kwargs, u_const, t0_horizon) = job
    spec = problems.OcpSpec.from_dict(spec_dict)
    nlp = problems.build_p2p_ocp(spec)
    w0 = problems.init_feasible(spec, u_const, t0_horizon)
    cfg = make_config(accel, record_iterates=False, **cfg_kwargs)
    report = solve(nlp, w0, cfg)
    accepted = [r for r in report.outer_trace if r.accepted]
    return {
        "problem_id": problem_id,
        "variant": variant_label(accel),
        "status": report.status,
        "n_outer": report.n_outer,
        "n_g_evals": report.counters.n_g_evals,
        "n_jac_evals": report.counters.n_jac_evals,
        "n_lp_solves": report.counters.n_lp_solves,
        "objective": report.objective,
        "wall_seconds": report.wall_seconds,
        "max_accepted_h": max((r.h for r in accepted), default=0.0),
        "max_proj_ratio": max((r.proj_ratio for r in accepted), default=0.0),
    }


def run_bench(
    suite: str,
    count: int,
    seed: int,
    accels: Sequence[Optional[int]],
    cfg_kwargs: Optional[dict] = None,
    jobs: int = 1,
) -> List[dict]:
    """Solve every (problem, variant) pair of a perturbed suite.

    Returns the long-format result rows sorted by (problem, variant order).
    Deterministic apart from the wall-time field.
    """
    if suite not in problems.SUITE_DEFAULTS:
        raise UsageError(f"unknown suite {suite!r} (have {sorted(problems.SUITE_DEFAULTS)})")
    if count < 1:
        raise UsageError("count must be at least 1")
    suite_def = problems.SUITE_DEFAULTS[suite]
    base_spec = suite_def["spec_fn"]()
    test_set = problems.perturbed_test_set(base_spec, count, suite_def["magnitude"], seed)
    cfg_kwargs = {**suite_def["cfg"], **(cfg_kwargs or {})}
    cfg_kwargs.setdefault("model_tol", BENCH_MODEL_TOL)

    jobs_list = []
    for a in accels:
        for i, spec in enumerate(test_set):
            jobs_list.append((i, spec.to_dict(), a, cfg_kwargs, suite_def["u_const"], suite_def["T0"]))
    if jobs > 1:
        with multiprocessing.Pool(jobs) as pool:
            rows = pool.map(_bench_worker, jobs_list)
    else:
        rows = [_bench_worker(j) for j in jobs_list]
    order = {variant_label(a): i for i, a in enumerate(accels)}
    rows.sort(key=lambda r: (r["problem_id"], order[r["variant"]]))
    return rows


def aggregate_bench(rows: List[dict], accels: Sequence[Optional[int]], count: int) -> List[BenchmarkRow]:
    """One summary row per variant; means over successful solves only."""
    table = []
    for a in accels:
        label = variant_label(a)
        good = [r for r in rows if r["variant"] == label and r["status"] == SolveStatus.OPTIMAL]
        table.append(BenchmarkRow(
            variant=label,
            mean_n_con=float(np.mean([r["n_g_evals"] for r in good])) if good else float("nan"),
            mean_n_iter=float(np.mean([r["n_outer"] for r in good])) if good else float("nan"),
            mean_wall_seconds=float(np.mean([r["wall_seconds"] for r in good])) if good else float("nan"),
            success_count=len(good),
            problem_count=count,
        ))
    return table


def cmd_bench(args) -> int:
    accels = parse_accels(args.accels)
    if args.suite not in problems.SUITE_DEFAULTS:
        raise UsageError(f"unknown suite {args.suite!r} (have {sorted(problems.SUITE_DEFAULTS)})")
    cfg_kwargs = dict(problems.SUITE_DEFAULTS[args.suite]["cfg"])
    cfg_kwargs.setdefault("model_tol", BENCH_MODEL_TOL)
    if args.sigma_inner is not None:
        cfg_kwargs["sigma_inner"] = args.sigma_inner
    if args.max_outer is not None:
        cfg_kwargs["max_outer"] = args.max_outer
    if args.delta0 is not None:
        cfg_kwargs["delta0"] = args.delta0
    rows = run_bench(args.suite, args.count, args.seed, accels, cfg_kwargs, jobs=args.jobs)
    table = aggregate_bench(rows, accels, args.count)

    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    long_lines = [LONG_CSV_COLUMNS]
    for r in rows:
        long_lines.append(",".join([
            str(r["problem_id"]), r["variant"], r["status"], str(r["n_outer"]),
            str(r["n_g_evals"]), str(r["n_jac_evals"]), str(r["n_lp_solves"]),
            _fmt(r["objective"]), _fmt(r["wall_seconds"]),
            _fmt(r["max_accepted_h"]), _fmt(r["max_proj_ratio"]),
        ]))
    with open(os.path.join(outdir, "long.csv"), "w") as fh:
        fh.write("\n".join(long_lines) + "\n")
    table_lines = [TABLE_CSV_COLUMNS]
    for t in table:
        table_lines.append(",".join(t.as_csv_fields()))
    with open(os.path.join(outdir, "table.csv"), "w") as fh:
        fh.write("\n".join(table_lines) + "\n")
    suite_def = problems.SUITE_DEFAULTS[args.suite]
    manifest = {
        "suite": args.suite,
        "seed": args.seed,
        "count": args.count,
        "magnitude": suite_def["magnitude"],
        "accels": [variant_label(a) for a in accels],
        "config": cfg_kwargs,
        "base_spec": suite_def["spec_fn"]().to_dict(),
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    for t in table:
        print(f"{t.variant}: mean_n_con={t.mean_n_con:.2f} "
              f"mean_n_iter={t.mean_n_iter:.2f} success={t.success_count}/{t.problem_count}")
    return 0 if all(t.success_count == t.problem_count for t in table) else 2


def cmd_trace_rates(args) -> int:
    nlp, w0, solver_overrides = _resolve_problem(args)
    accels = parse_accels(args.accels)
    lines = [RATES_CSV_COLUMNS]
    worst = 0
    for a in accels:
        cfg = _config_from_args(args, a, record_iterates=True, **solver_overrides)
        report = solve(nlp, w0, cfg, keep_inner_results=True)
        label = variant_label(a)
        if report.inner_results:
            first = report.inner_results[0]
            ref = first.iterates[-1] if first.iterates else None
            for i, w in enumerate(first.iterates):
                err = float(np.linalg.norm(w - ref))
                lines.append(f"inner_error,{report.problem},{label},{i},{_fmt(err)},{first.status}")
        for row in report.outer_trace:
            if np.isnan(row.model_decrease):
                continue
            lines.append(
                f"outer_metric,{report.problem},{label},{row.k},"
                f"{_fmt(abs(row.model_decrease))},{report.status}"
            )
        if report.status != SolveStatus.OPTIMAL:
            worst = 2
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "rates.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote rates.csv ({len(lines) - 1} rows)")
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fslp",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "CSV column orders:\n"
            f"  outer.csv: {OUTER_CSV_COLUMNS}\n"
            f"  inner.csv: {INNER_CSV_COLUMNS_AA} (plain runs omit the last three)\n"
            f"  table.csv: {TABLE_CSV_COLUMNS}\n"
            f"  long.csv:  {LONG_CSV_COLUMNS}\n"
            f"  rates.csv: {RATES_CSV_COLUMNS}\n"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--delta0", type=float, default=None, help="initial trust radius")
        p.add_argument("--sigma-inner", dest="sigma_inner", type=float, default=None,
                       help="inner feasibility tolerance")
        p.add_argument("--max-outer", dest="max_outer", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory (default: cwd)")

    p_solve = sub.add_parser("solve", help="solve one problem, write report + traces")
    p_solve.add_argument("--problem", default=None,
                         help="fixture name: circle, circle-ineq, doubleint1d, doubleint1d-vmax, pointmass2d")
    p_solve.add_argument("--spec", default=None, help="JSON problem/solver description")
    p_solve.add_argument("--accel", default="none", help="none, aa1, aa5, aa15 or aa:<d>")
    common(p_solve)

    p_bench = sub.add_parser("bench", help="run a perturbed suite over solver variants")
    p_bench.add_argument("--suite", required=True, help=f"one of {sorted(problems.SUITE_DEFAULTS)}")
    p_bench.add_argument("--count", type=int, required=True, help="number of perturbed problems")
    p_bench.add_argument("--seed", type=int, default=42)
    p_bench.add_argument("--accels", default="none,aa1,aa5,aa15", help="comma list of variants")
    p_bench.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    common(p_bench)

    p_rates = sub.add_parser("trace-rates", help="emit inner error curves and |m_k| curves")
    p_rates.add_argument("--problem", default=None)
    p_rates.add_argument("--spec", default=None)
    p_rates.add_argument("--accels", default="none,aa1,aa5")
    common(p_rates)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "trace-rates":
            return cmd_trace_rates(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except problems.ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
