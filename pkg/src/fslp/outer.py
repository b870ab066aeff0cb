"""Trust-region driver around the feasibility iterations.

Every accepted iterate is feasible to the inner tolerance; the objective
itself serves as the merit function and the linear model decrease is the
termination test. The trust radius adapts through the usual accept /
shrink / expand rules.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import lp as lp_mod
from .anderson import AaConfig, aa_feasibility_iterations
from .inner import InnerConfig, InnerResult, feasibility_iterations
from .model import (
    EvalCounters,
    StructuredNlp,
    Vector,
    eval_g_raw,
    infeasibility_from_parts,
    take_snapshot,
)

DELTA_FLOOR = 1e-12


class SolveStatus:
    OPTIMAL = "Optimal"
    MAX_ITER = "MaxIter"
    INIT_INFEASIBLE = "InitInfeasible"
    STALLED = "Stalled"


@dataclass
class FslpConfig:
    """All tunables of the outer loop.

    ``inner`` carries the feasibility-loop settings; pass an
    :class:`AaConfig` to run the accelerated variant (or build one with
    :func:`make_config`).
    """

    delta0: float = 0.25
    delta_max: float = 4.0
    shrink: float = 0.5
    expand: float = 2.0
    accept_rho: float = 1e-4
    good_rho: float = 0.75
    model_tol: float = 1e-9
    max_outer: int = 200
    inner: InnerConfig = field(default_factory=InnerConfig)

    def __post_init__(self):
        if not (0.0 < self.shrink < 1.0 < self.expand):
            raise ValueError("need 0 < shrink < 1 < expand")
        if not (0.0 < self.accept_rho < self.good_rho < 1.0):
            raise ValueError("need 0 < accept_rho < good_rho < 1")
        if self.delta0 > self.delta_max:
            raise ValueError("delta0 must not exceed delta_max")

    @property
    def accelerated(self) -> bool:
        return isinstance(self.inner, AaConfig)

    @property
    def variant_label(self) -> str:
        return f"AA({self.inner.depth})" if self.accelerated else "FSLP"


def make_config(acceleration: Optional[int] = None, **kwargs) -> FslpConfig:
    """Config factory: ``acceleration=None`` for the plain variant, or the
    memory depth d for the accelerated one. Keyword arguments matching inner
    config fields are routed there, everything else goes to FslpConfig."""
    inner_cls = AaConfig if acceleration else InnerConfig
    inner_fields = set(inner_cls.__dataclass_fields__)
    inner_kwargs = {k: v for k, v in kwargs.items() if k in inner_fields}
    outer_kwargs = {k: v for k, v in kwargs.items() if k not in inner_fields}
    if acceleration:
        inner_kwargs.setdefault("depth", int(acceleration))
    return FslpConfig(inner=inner_cls(**inner_kwargs), **outer_kwargs)


@dataclass
class OuterTraceRow:
    k: int
    objective: float
    h: float
    delta: float
    model_decrease: float
    inner_status: str
    inner_iters: int
    accepted: bool
    proj_ratio: float = float("nan")

    def as_csv_fields(self) -> list:
        return [
            self.k,
            self.objective,
            self.h,
            self.delta,
            self.model_decrease,
            self.inner_status,
            self.inner_iters,
            int(self.accepted),
        ]


@dataclass
class SolveReport:
    status: str
    w_star: Vector
    objective: float
    n_outer: int
    counters: EvalCounters
    wall_seconds: float
    outer_trace: List[OuterTraceRow] = field(default_factory=list)
    inner_results: List[InnerResult] = field(default_factory=list)
    variant: str = "FSLP"
    problem: str = "nlp"

    def to_json_dict(self) -> dict:
        return {
            "problem": self.problem,
            "variant": self.variant,
            "status": self.status,
            "objective": self.objective,
            "n_outer": self.n_outer,
            "wall_seconds": self.wall_seconds,
            "counters": self.counters.to_dict(),
            "w_star": [float(v) for v in np.asarray(self.w_star).reshape(-1)],
            "outer_trace": [
                {
                    "k": row.k,
                    "objective": row.objective,
                    "h": row.h,
                    "delta": row.delta,
                    "model_decrease": row.model_decrease,
                    "inner_status": row.inner_status,
                    "inner_iters": row.inner_iters,
                    "accepted": row.accepted,
                }
                for row in self.outer_trace
            ],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)


def trust_region_update(rho: float, delta: float, boundary_hit: bool, cfg: FslpConfig) -> float:
    """Radius rule: shrink on rejection, expand on a very good step that
    pressed against the trust boundary, otherwise keep."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if rho < cfg.accept_rho:
        return cfg.shrink * delta
    if rho >= cfg.good_rho and boundary_hit:
        return min(cfg.expand * delta, cfg.delta_max)
    return delta


def _run_inner(nlp, w_hat, w_bar, snapshot, delta, cfg: FslpConfig, counters) -> InnerResult:
    if cfg.accelerated:
        return aa_feasibility_iterations(nlp, w_hat, w_bar, snapshot, delta, cfg.inner, counters)
    return feasibility_iterations(nlp, w_hat, w_bar, snapshot, delta, cfg.inner, counters)


def solve(
    nlp: StructuredNlp,
    w_init: Vector,
    cfg: Optional[FslpConfig] = None,
    keep_inner_results: bool = False,
    problem_name: Optional[str] = None,
) -> SolveReport:
    """Run the full outer loop from a feasible starting point.

    Per iteration: linearize (reusing the snapshot while the current point
    stands), solve the trust-region LP, stop when the model no longer
    decreases, otherwise project back to feasibility and accept or reject
    by the actual-over-predicted objective decrease.
    """
    cfg = cfg or FslpConfig()
    counters = EvalCounters()
    t0 = time.perf_counter()
    w_init = np.asarray(w_init, dtype=float).copy()

    def finish(status: str, w: Vector, n_outer: int, trace, inners) -> SolveReport:
        return SolveReport(
            status=status,
            w_star=w,
            objective=float(nlp.c @ w),
            n_outer=n_outer,
            counters=counters,
            wall_seconds=time.perf_counter() - t0,
            outer_trace=trace,
            inner_results=inners,
            variant=cfg.variant_label,
            problem=problem_name or nlp.name,
        )

    sigma = cfg.inner.sigma_inner
    g0 = eval_g_raw(nlp, w_init, counters)
    h_hat = infeasibility_from_parts(nlp, w_init, g0)
    if h_hat > sigma:
        return finish(SolveStatus.INIT_INFEASIBLE, w_init, 0, [], [])

    w_hat = w_init
    delta = cfg.delta0
    trace: List[OuterTraceRow] = []
    inners: List[InnerResult] = []
    snapshot = None

    for k in range(cfg.max_outer):
        if snapshot is None:
            snapshot = take_snapshot(nlp, w_hat, counters)
        lp_problem = lp_mod.build_plp(nlp, snapshot, np.zeros(nlp.n_g), delta)
        out = lp_mod.solve_lp(lp_problem)
        counters.n_lp_solves += 1
        if out.status != lp_mod.LpStatus.OPTIMAL:
            trace.append(OuterTraceRow(k, float(nlp.c @ w_hat), h_hat, delta,
                                       float("nan"), f"Lp{out.status}", 0, False))
            delta *= cfg.shrink
            if delta < DELTA_FLOOR:
                return finish(SolveStatus.STALLED, w_hat, k + 1, trace, inners)
            continue

        w_bar = out.solution
        m_k = float(nlp.c @ (w_bar - w_hat))
        if m_k >= -cfg.model_tol:
            trace.append(OuterTraceRow(k, float(nlp.c @ w_hat), h_hat, delta,
                                       m_k, "terminated", 0, False))
            return finish(SolveStatus.OPTIMAL, w_hat, k + 1, trace, inners)

        step = nlp.select_y(w_bar) - nlp.select_y(w_hat)
        boundary_hit = bool(np.max(np.abs(step)) >= 0.999 * delta) if step.size else False

        res = _run_inner(nlp, w_hat, w_bar, snapshot, delta, cfg, counters)
        if keep_inner_results:
            inners.append(res)

        if not res.converged:
            trace.append(OuterTraceRow(k, float(nlp.c @ w_hat), h_hat, delta,
                                       m_k, res.status, res.g_evals_used, False))
            delta *= cfg.shrink
            if delta < DELTA_FLOOR:
                return finish(SolveStatus.STALLED, w_hat, k + 1, trace, inners)
            continue

        w_tilde = res.w_tilde
        rho = float(nlp.c @ w_hat - nlp.c @ w_tilde) / (-m_k)
        accepted = rho >= cfg.accept_rho
        new_delta = trust_region_update(rho, delta, boundary_hit, cfg)
        if accepted:
            w_hat = w_tilde
            h_hat = res.final_h
            snapshot = None
        trace.append(OuterTraceRow(
            k,
            float(nlp.c @ w_hat),
            res.final_h,
            delta,
            m_k,
            res.status,
            res.g_evals_used,
            accepted,
            proj_ratio=res.projection_ratio,
        ))
        delta = new_delta
        if delta < DELTA_FLOOR:
            return finish(SolveStatus.STALLED, w_hat, k + 1, trace, inners)

    return finish(SolveStatus.MAX_ITER, w_hat, cfg.max_outer, trace, inners)
