"""Structured NLP with a linear cost, linear constraints and a selected nonlinear block.

The problem class is

    min  c'w   s.t.   C w + g(P_y w) = 0,    A w + b <= 0,

where P_y picks the coordinates of w that enter the constraints nonlinearly.
Everything the solver needs from a problem instance lives here: evaluation
with call counting, the infeasibility measure, active-set queries, the
zero-order linearization mismatch and the solution classifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

Vector = np.ndarray
Matrix = np.ndarray

RANK_REL_TOL = 1e-10


class ModelError(ValueError):
    """Raised when problem data violates a structural invariant."""


class EvaluationError(RuntimeError):
    """A constraint callback produced a non-finite entry.

    ``index`` is the first offending row of the callback output.
    """

    def __init__(self, what: str, index: int):
        super().__init__(f"{what} returned a non-finite value at index {index}")
        self.what = what
        self.index = index


class Classification:
    """Outcome labels for :func:`classify_solution`."""

    FULLY_DETERMINED = "FullyDetermined"
    UNDER_DETERMINED = "UnderDetermined"
    LICQ_FAILS = "LicqFails"


@dataclass
class EvalCounters:
    """Monotone counters, incremented once per underlying callback call."""

    n_g_evals: int = 0
    n_jac_evals: int = 0
    n_lp_solves: int = 0

    def to_dict(self) -> dict:
        return {
            "n_g_evals": self.n_g_evals,
            "n_jac_evals": self.n_jac_evals,
            "n_lp_solves": self.n_lp_solves,
        }


def matrix_rank_qr(mat: Matrix) -> int:
    """Row rank via pivoted QR with a scale-invariant tolerance.

    A diagonal entry of R counts toward the rank when it exceeds
    ``RANK_REL_TOL`` times the largest column norm of ``mat``.
    """
    m = np.atleast_2d(np.asarray(mat, dtype=float))
    if m.size == 0:
        return 0
    col_scale = np.max(np.linalg.norm(m, axis=0))
    if col_scale == 0.0:
        return 0
    # Factor the wide side so R is square-ish and cheap.
    work = m.T if m.shape[0] > m.shape[1] else m
    r = scipy.linalg.qr(work, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    return int(np.sum(diag > RANK_REL_TOL * col_scale))


@dataclass(frozen=True)
class StructuredNlp:
    """Immutable problem data for one structured NLP.

    ``g`` maps a length-``n_y`` vector to the ``n_g`` nonlinear residuals and
    ``g_jacobian`` returns the corresponding ``n_g x n_y`` Jacobian. Both must
    be re-entrant; instances are safe to share read-only across solves.
    """

    c: Vector
    C: Matrix
    A: Matrix
    b: Vector
    py_indices: np.ndarray
    g: Callable[[Vector], Vector]
    g_jacobian: Callable[[Vector], Matrix]
    name: str = "nlp"
    require_full_rank_A: bool = True

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        A = np.asarray(self.A, dtype=float).reshape(-1, c.size)
        b = np.asarray(self.b, dtype=float)
        py = np.asarray(self.py_indices, dtype=int)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "py_indices", py)

        n_w = c.size
        if C.shape[1] != n_w:
            raise ModelError(f"C has {C.shape[1]} columns, expected {n_w}")
        if A.shape[0] != b.size:
            raise ModelError(f"A has {A.shape[0]} rows but b has {b.size}")
        if py.size != np.unique(py).size:
            raise ModelError("py_indices contains duplicates")
        if py.size and (py.min() < 0 or py.max() >= n_w):
            raise ModelError("py_indices out of range")
        if self.require_full_rank_A and A.shape[0] > 0:
            if A.shape[0] > A.shape[1] or matrix_rank_qr(A) < A.shape[0]:
                raise ModelError(
                    "inequality matrix A is row-rank deficient; pass "
                    "require_full_rank_A=False for problems with two-sided rows"
                )

    @property
    def n_w(self) -> int:
        return self.c.size

    @property
    def n_g(self) -> int:
        return self.C.shape[0]

    @property
    def n_b(self) -> int:
        return self.A.shape[0]

    @property
    def n_y(self) -> int:
        return self.py_indices.size

    def select_y(self, w: Vector) -> Vector:
        """P_y w: the nonlinearly-entering coordinates of w."""
        return np.asarray(w, dtype=float)[self.py_indices]


@dataclass(frozen=True)
class JacobianSnapshot:
    """Frozen linearization data taken at one feasible point.

    ``G_t`` is the nonlinear-block Jacobian expanded to full width
    (columns outside ``py_indices`` are zero); ``g_at_point`` caches the
    nonlinear residual at the linearization point so each later mismatch
    evaluation costs exactly one new ``g`` call.
    """

    G_t: Matrix
    linearization_point: Vector
    g_at_point: Vector


def eval_g_raw(nlp: StructuredNlp, w: Vector, counters: EvalCounters) -> Vector:
    """One counted evaluation of g(P_y w) with a finiteness check."""
    val = np.asarray(nlp.g(nlp.select_y(w)), dtype=float).reshape(-1)
    counters.n_g_evals += 1
    if val.size != nlp.n_g:
        raise ModelError(f"g returned {val.size} values, expected {nlp.n_g}")
    bad = ~np.isfinite(val)
    if bad.any():
        raise EvaluationError("g", int(np.argmax(bad)))
    return val


def eval_jacobian_raw(nlp: StructuredNlp, w: Vector, counters: EvalCounters) -> Matrix:
    """One counted evaluation of the n_g x n_y Jacobian of g at P_y w."""
    jac = np.asarray(nlp.g_jacobian(nlp.select_y(w)), dtype=float)
    counters.n_jac_evals += 1
    jac = jac.reshape(nlp.n_g, nlp.n_y)
    bad = ~np.isfinite(jac)
    if bad.any():
        raise EvaluationError("g_jacobian", int(np.argmax(bad.any(axis=1))))
    return jac


def eval_equality_residual(nlp: StructuredNlp, w: Vector, counters: EvalCounters) -> Vector:
    """C w + g(P_y w); exactly one g evaluation."""
    w = np.asarray(w, dtype=float)
    return nlp.C @ w + eval_g_raw(nlp, w, counters)


def infeasibility_from_parts(nlp: StructuredNlp, w: Vector, g_val: Vector) -> float:
    """Infeasibility measure from an already-evaluated g value."""
    w = np.asarray(w, dtype=float)
    eq = nlp.C @ w + g_val
    h = float(np.max(np.abs(eq))) if eq.size else 0.0
    if nlp.n_b:
        viol = nlp.A @ w + nlp.b
        h += float(np.max(np.maximum(viol, 0.0)))
    return h


def infeasibility(nlp: StructuredNlp, w: Vector, counters: EvalCounters) -> float:
    """h(w) = ||Cw + g(P_y w)||_inf + ||[Aw + b]^+||_inf  (one g evaluation)."""
    w = np.asarray(w, dtype=float)
    return infeasibility_from_parts(nlp, w, eval_g_raw(nlp, w, counters))


def active_set(nlp: StructuredNlp, w: Vector, tol: float = 1e-8) -> np.ndarray:
    """Indices i with |A_i w + b_i| <= tol, as a sorted integer array."""
    if nlp.n_b == 0:
        return np.empty(0, dtype=int)
    resid = nlp.A @ np.asarray(w, dtype=float) + nlp.b
    return np.flatnonzero(np.abs(resid) <= tol)


def take_snapshot(nlp: StructuredNlp, w_hat: Vector, counters: EvalCounters) -> JacobianSnapshot:
    """Linearize at w_hat: one g evaluation and one Jacobian evaluation."""
    w_hat = np.array(w_hat, dtype=float)
    g_hat = eval_g_raw(nlp, w_hat, counters)
    jac = eval_jacobian_raw(nlp, w_hat, counters)
    G_t = np.zeros((nlp.n_g, nlp.n_w))
    G_t[:, nlp.py_indices] = jac
    return JacobianSnapshot(G_t=G_t, linearization_point=w_hat, g_at_point=g_hat)


def mismatch_from_parts(snapshot: JacobianSnapshot, w_l: Vector, g_val: Vector) -> Vector:
    """delta = g(P_y w_l) - g(P_y w_hat) - G'(w_l - w_hat) from a known g value."""
    step = np.asarray(w_l, dtype=float) - snapshot.linearization_point
    return g_val - snapshot.g_at_point - snapshot.G_t @ step


def zero_order_mismatch(
    nlp: StructuredNlp,
    w_l: Vector,
    snapshot: JacobianSnapshot,
    counters: EvalCounters,
) -> Vector:
    """Linearization error of the nonlinear block at w_l; one g evaluation."""
    w_l = np.asarray(w_l, dtype=float)
    return mismatch_from_parts(snapshot, w_l, eval_g_raw(nlp, w_l, counters))


def classify_solution(
    nlp: StructuredNlp,
    w_star: Vector,
    tol: float,
    counters: EvalCounters,
    feas_tol: float = 1e-5,
) -> str:
    """Classify a feasible point by counting equality rows plus active rows.

    ``FullyDetermined`` when the stacked constraint Jacobian has exactly n_w
    independent rows, ``UnderDetermined`` when it has fewer (but independent)
    rows, ``LicqFails`` otherwise. ``tol`` is the active-set tolerance; the
    feasibility precondition is checked against ``feas_tol``.
    """
    w_star = np.asarray(w_star, dtype=float)
    h = infeasibility(nlp, w_star, counters)
    if h > feas_tol:
        raise ModelError(f"classify_solution requires a feasible point, h={h:.3e}")
    jac = eval_jacobian_raw(nlp, w_star, counters)
    eq_jac = nlp.C.copy()
    eq_jac[:, nlp.py_indices] += jac
    act = active_set(nlp, w_star, tol)
    stack = np.vstack([eq_jac, nlp.A[act]]) if act.size else eq_jac
    rows = stack.shape[0]
    if rows > nlp.n_w:
        return Classification.LICQ_FAILS
    if matrix_rank_qr(stack) < rows:
        return Classification.LICQ_FAILS
    if rows == nlp.n_w:
        return Classification.FULLY_DETERMINED
    return Classification.UNDER_DETERMINED
