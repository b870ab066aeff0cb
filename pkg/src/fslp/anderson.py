"""Anderson acceleration of the zero-order feasibility iterations.

Keeps depth-d histories of iterate and residual differences, combines them
with least-squares weights, and clips the accelerated iterate back into the
trust region. A safeguard replaces any oversized weight vector with zero,
which reduces the update to the plain fixed-point step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from . import lp as lp_mod
from .inner import (
    InnerConfig,
    InnerResult,
    InnerStatus,
    InnerTraceRow,
    solve_plp_at,
)
from .model import (
    EvalCounters,
    JacobianSnapshot,
    StructuredNlp,
    Vector,
    eval_g_raw,
    infeasibility_from_parts,
    mismatch_from_parts,
)


@dataclass
class AaConfig(InnerConfig):
    """Inner-loop tunables plus the acceleration depth and safeguards.

    ``gamma_bound`` of exactly 0 is a test sentinel that forces every
    weight vector to zero, i.e. plain fixed-point steps.
    """

    depth: int = 5
    gamma_bound: float = 1e4
    ls_rank_tol: float = 1e-12
    clip_all_coordinates: bool = False

    def __post_init__(self):
        super().__post_init__()
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if not (self.gamma_bound > 1.0 or self.gamma_bound == 0.0):
            raise ValueError("gamma_bound must exceed 1 (or be the 0 sentinel)")


@dataclass
class AndersonMemory:
    """Difference histories for the last ``depth`` steps, newest first."""

    depth: int
    last_w: Vector
    last_r: Vector
    w_diffs: List[Vector] = field(default_factory=list)
    r_diffs: List[Vector] = field(default_factory=list)

    def push(self, w_l: Vector, r_next: Vector) -> None:
        self.w_diffs.insert(0, np.asarray(w_l) - self.last_w)
        self.r_diffs.insert(0, np.asarray(r_next) - self.last_r)
        del self.w_diffs[self.depth:]
        del self.r_diffs[self.depth:]
        self.last_w = np.asarray(w_l).copy()
        self.last_r = np.asarray(r_next).copy()

    @property
    def m(self) -> int:
        return len(self.w_diffs)

    def step_matrix(self) -> Vector:
        return np.column_stack(self.w_diffs)

    def residual_matrix(self) -> Vector:
        return np.column_stack(self.r_diffs)


def aa_gamma(r_next: Vector, F: Vector, cfg: AaConfig) -> Vector:
    """Least-squares weights argmin ||r_next - F gamma||.

    Solved through a pivoted orthogonal factorization; columns judged
    rank-deficient get weight zero. Returns the zero vector whenever the
    minimizer violates the uniform bound (the safeguard).
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if F.ndim != 2 or F.shape[1] < 1:
        raise ValueError("F must have at least one column")
    m = F.shape[1]
    col_scale = float(np.max(np.linalg.norm(F, axis=0)))
    if col_scale == 0.0:
        return np.zeros(m)
    q, r, perm = scipy.linalg.qr(F, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > cfg.ls_rank_tol * diag[0])) if diag.size else 0
    if rank == 0:
        return np.zeros(m)
    rhs = q[:, :rank].T @ np.asarray(r_next, dtype=float)
    sub = scipy.linalg.solve_triangular(r[:rank, :rank], rhs)
    gamma = np.zeros(m)
    gamma[perm[:rank]] = sub
    if np.max(np.abs(gamma)) > cfg.gamma_bound:
        return np.zeros(m)
    return gamma


def aa_gamma_d1(r_next: Vector, r_prev: Vector) -> float:
    """Depth-1 closed form <r_next, r_next - r_prev> / ||r_next - r_prev||^2."""
    diff = np.asarray(r_next, dtype=float) - np.asarray(r_prev, dtype=float)
    nrm = float(np.linalg.norm(diff))
    if nrm <= 1e-14:
        return 0.0
    return float(np.dot(np.asarray(r_next, dtype=float), diff)) / (nrm * nrm)


def aa_update(
    w_l: Vector,
    r_next: Vector,
    memory: AndersonMemory,
    gamma: Vector,
    w_hat: Vector,
    trust_radius: float,
    py_indices: Optional[np.ndarray],
) -> Vector:
    """Affine combination step, clipped componentwise into the trust box.

    Clipping applies to ``py_indices`` coordinates (pass None to clip the
    whole vector); all other coordinates pass through unchanged.
    """
    gamma = np.asarray(gamma, dtype=float).reshape(-1)
    if gamma.size != memory.m:
        raise ValueError("gamma length disagrees with the memory depth in use")
    combo = (memory.step_matrix() + memory.residual_matrix()) @ gamma
    w_next = np.asarray(w_l, dtype=float) + np.asarray(r_next, dtype=float) - combo
    w_hat = np.asarray(w_hat, dtype=float)
    idx = np.arange(w_next.size) if py_indices is None else np.asarray(py_indices)
    lo = w_hat[idx] - trust_radius
    hi = w_hat[idx] + trust_radius
    w_next[idx] = np.clip(w_next[idx], lo, hi)
    return w_next


def aa_feasibility_iterations(
    nlp: StructuredNlp,
    w_hat: Vector,
    w_bar: Vector,
    snapshot: JacobianSnapshot,
    trust_radius: float,
    cfg: AaConfig,
    counters: EvalCounters,
) -> InnerResult:
    """Depth-d accelerated feasibility loop.

    Initialization uses the linearization point as iterate 0 and the LP
    solution as iterate 1; the loop then mirrors the plain iteration's
    convergence, divergence and failure semantics, with the accelerated
    update in place of the raw fixed-point step. One g evaluation per entry.
    """
    w_hat = np.asarray(w_hat, dtype=float)
    w_bar = np.asarray(w_bar, dtype=float)
    res = InnerResult(status=InnerStatus.ITER_LIMIT)
    w_l = w_bar.copy()
    memory = AndersonMemory(depth=cfg.depth, last_w=w_hat.copy(), last_r=w_bar - w_hat)
    h_prev = None
    growth_streak = 0
    denom = float(np.linalg.norm(w_bar - w_hat))
    clip_idx = None if cfg.clip_all_coordinates else nlp.py_indices

    for l in range(1, cfg.max_inner + 2):
        g_val = eval_g_raw(nlp, w_l, counters)
        res.g_evals_used += 1
        h_l = infeasibility_from_parts(nlp, w_l, g_val)
        row = InnerTraceRow(
            l=l,
            h=h_l,
            dist_to_wbar=float(np.linalg.norm(w_l - w_bar)),
            dist_to_what=float(np.linalg.norm(w_l - w_hat)),
        )
        res.iterates_trace.append(row)
        if cfg.record_iterates:
            res.iterates.append(w_l.copy())

        ratio = 0.0 if denom <= 1e-300 else row.dist_to_wbar / denom
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
        if l == cfg.max_inner + 1:
            break

        delta_l = mismatch_from_parts(snapshot, w_l, g_val)
        out = solve_plp_at(nlp, snapshot, delta_l, trust_radius, counters)
        if out.status != lp_mod.LpStatus.OPTIMAL:
            res.status = InnerStatus.LP_FAILED
            return res
        r_next = out.solution - w_l
        memory.push(w_l, r_next)
        gamma = aa_gamma(r_next, memory.residual_matrix(), cfg)
        w_next = aa_update(w_l, r_next, memory, gamma, w_hat, trust_radius, clip_idx)
        raw = w_l + r_next - (memory.step_matrix() + memory.residual_matrix()) @ gamma
        row.gamma_inf_norm = float(np.max(np.abs(gamma))) if gamma.size else 0.0
        row.memory_cols = memory.m
        row.clipped = bool(np.max(np.abs(raw - w_next)) > 0.0)
        w_l = w_next

    res.status = InnerStatus.ITER_LIMIT
    return res
