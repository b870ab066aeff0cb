"""Zero-order feasibility iterations.

Starting from the trust-region LP solution, repeatedly re-evaluate the
nonlinear constraints, shift the linear subproblem by the resulting
mismatch and re-solve, until the iterate is feasible and the projection
ratio condition holds. One constraint evaluation per loop entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import lp as lp_mod
from .model import (
    EvalCounters,
    JacobianSnapshot,
    StructuredNlp,
    Vector,
    eval_g_raw,
    infeasibility_from_parts,
    mismatch_from_parts,
)


class InnerStatus:
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    RATIO_VIOLATED = "RatioViolated"
    LP_FAILED = "LpFailed"
    ITER_LIMIT = "IterLimit"


@dataclass
class InnerConfig:
    """Tunables of the feasibility loop.

    ``sigma_inner`` must lie in (0, 1e-5). Divergence is declared after
    ``divergence_window`` consecutive entries whose infeasibility grew by
    more than ``divergence_growth`` times the previous value.
    """

    sigma_inner: float = 1e-6
    max_inner: int = 50
    divergence_window: int = 2
    divergence_growth: float = 1.0
    record_iterates: bool = True

    def __post_init__(self):
        if not (0.0 < self.sigma_inner < 1e-5):
            raise ValueError("sigma_inner must lie in (0, 1e-5)")
        if self.max_inner < 1:
            raise ValueError("max_inner must be at least 1")


@dataclass
class InnerTraceRow:
    l: int
    h: float
    dist_to_wbar: float
    dist_to_what: float
    gamma_inf_norm: Optional[float] = None
    memory_cols: Optional[int] = None
    clipped: Optional[bool] = None


@dataclass
class InnerResult:
    status: str
    w_tilde: Optional[Vector] = None
    iterates_trace: List[InnerTraceRow] = field(default_factory=list)
    iterates: List[Vector] = field(default_factory=list)
    g_evals_used: int = 0

    @property
    def converged(self) -> bool:
        return self.status == InnerStatus.CONVERGED

    @property
    def final_h(self) -> float:
        return self.iterates_trace[-1].h if self.iterates_trace else float("nan")

    @property
    def projection_ratio(self) -> float:
        """||w_bar - w_l|| / ||w_bar - w_hat|| at the last traced iterate."""
        if not self.iterates_trace:
            return float("nan")
        denom = self.iterates_trace[0].dist_to_what
        if denom <= 1e-300:
            return 0.0
        return self.iterates_trace[-1].dist_to_wbar / denom


def projection_ratio(w_bar: Vector, w_l: Vector, w_hat: Vector) -> float:
    """||w_bar - w_l|| / ||w_bar - w_hat||, defined as 0 for a zero LP step."""
    denom = float(np.linalg.norm(w_bar - w_hat))
    if denom <= 1e-300:
        return 0.0
    return float(np.linalg.norm(w_bar - w_l)) / denom


def solve_plp_at(
    nlp: StructuredNlp,
    snapshot: JacobianSnapshot,
    delta_l: Vector,
    trust_radius: float,
    counters: EvalCounters,
) -> lp_mod.LpOutcome:
    """One counted parametric-LP solve at the given mismatch."""
    plp = lp_mod.build_plp(nlp, snapshot, delta_l, trust_radius)
    out = lp_mod.solve_lp(plp)
    counters.n_lp_solves += 1
    return out


def feasibility_iterations(
    nlp: StructuredNlp,
    w_hat: Vector,
    w_bar: Vector,
    snapshot: JacobianSnapshot,
    trust_radius: float,
    cfg: InnerConfig,
    counters: EvalCounters,
) -> InnerResult:
    """Project the LP solution onto the feasible set by repeated re-evaluation.

    The convergence test (infeasibility below sigma_inner AND projection
    ratio below 1/2) runs at the top of every loop entry, before any
    subproblem is solved; each entry spends exactly one g evaluation.
    """
    w_hat = np.asarray(w_hat, dtype=float)
    w_bar = np.asarray(w_bar, dtype=float)
    res = InnerResult(status=InnerStatus.ITER_LIMIT)
    w_l = w_bar.copy()
    h_prev = None
    growth_streak = 0
    denom = float(np.linalg.norm(w_bar - w_hat))

    for l in range(cfg.max_inner + 1):
        g_val = eval_g_raw(nlp, w_l, counters)
        res.g_evals_used += 1
        h_l = infeasibility_from_parts(nlp, w_l, g_val)
        res.iterates_trace.append(
            InnerTraceRow(
                l=l,
                h=h_l,
                dist_to_wbar=float(np.linalg.norm(w_l - w_bar)),
                dist_to_what=float(np.linalg.norm(w_l - w_hat)),
            )
        )
        if cfg.record_iterates:
            res.iterates.append(w_l.copy())

        ratio = 0.0 if denom <= 1e-300 else res.iterates_trace[-1].dist_to_wbar / denom
        if h_l <= cfg.sigma_inner:
            if ratio < 0.5:
                res.status = InnerStatus.CONVERGED
                res.w_tilde = w_l.copy()
            else:
                res.status = InnerStatus.RATIO_VIOLATED
            return res

        if h_prev is not None and h_l > cfg.divergence_growth * h_prev:
            growth_streak += 1
        else:
            growth_streak = 0
        h_prev = h_l
        py_dev = np.max(np.abs(nlp.select_y(w_l) - nlp.select_y(w_hat))) if nlp.n_y else 0.0
        if growth_streak >= cfg.divergence_window or py_dev > 10.0 * trust_radius:
            res.status = InnerStatus.DIVERGED
            return res
        if l == cfg.max_inner:
            break

        delta_l = mismatch_from_parts(snapshot, w_l, g_val)
        out = solve_plp_at(nlp, snapshot, delta_l, trust_radius, counters)
        if out.status != lp_mod.LpStatus.OPTIMAL:
            res.status = InnerStatus.LP_FAILED
            return res
        w_l = out.solution

    res.status = InnerStatus.ITER_LIMIT
    return res


def contraction_estimate(iterates: List[Vector], w_ref: Vector) -> List[float]:
    """Per-step contraction rates ||w_{l+1}-w_ref|| / ||w_l-w_ref||.

    Pairs with denominator below 1e-14 are skipped and the final rate is
    dropped (its numerator is zero by construction when ``w_ref`` is the
    converged iterate). Requires at least three iterates.
    """
    if len(iterates) < 3:
        raise ValueError("contraction estimate needs at least 3 iterates")
    w_ref = np.asarray(w_ref, dtype=float)
    errs = [float(np.linalg.norm(np.asarray(w) - w_ref)) for w in iterates]
    rates = [
        errs[l + 1] / errs[l]
        for l in range(len(errs) - 1)
        if errs[l] > 1e-14
    ]
    return rates[:-1]
