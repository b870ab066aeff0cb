"""Dense LPs in "equalities + inequalities + variable bounds" form.

Holds the construction of the trust-region LP and its zero-order-shifted
parametric variant, plus a self-contained two-phase primal simplex solver
with native bounded variables (free variables handled without splitting).
The dense factor-free tableau is adequate at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import JacobianSnapshot, StructuredNlp, Vector, Matrix

# Nonbasic variable states; basic variables are tracked through `basis`.
_AT_LO, _AT_UP, _FREE, _BASIC = 0, 1, 2, 3

_PRICE_TOL = 1e-9
_PIV_TOL = 1e-10
_DEG_TOL = 1e-11


class LpStatus:
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


@dataclass(frozen=True)
class BoxedLp:
    """min cost'w  s.t.  eq_matrix w = eq_rhs,  ineq_matrix w <= ineq_rhs,
    lower <= w <= upper (infinities allowed in the bounds)."""

    cost: Vector
    eq_matrix: Matrix
    eq_rhs: Vector
    ineq_matrix: Matrix
    ineq_rhs: Vector
    lower: Vector
    upper: Vector

    def __post_init__(self):
        n = np.asarray(self.cost, dtype=float).size
        object.__setattr__(self, "cost", np.asarray(self.cost, dtype=float))
        object.__setattr__(self, "eq_matrix", np.asarray(self.eq_matrix, dtype=float).reshape(-1, n))
        object.__setattr__(self, "eq_rhs", np.asarray(self.eq_rhs, dtype=float).reshape(-1))
        object.__setattr__(self, "ineq_matrix", np.asarray(self.ineq_matrix, dtype=float).reshape(-1, n))
        object.__setattr__(self, "ineq_rhs", np.asarray(self.ineq_rhs, dtype=float).reshape(-1))
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float).reshape(-1))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float).reshape(-1))
        if self.eq_matrix.shape[0] != self.eq_rhs.size:
            raise ValueError("equality rows and rhs disagree")
        if self.ineq_matrix.shape[0] != self.ineq_rhs.size:
            raise ValueError("inequality rows and rhs disagree")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bound vectors must match the cost length")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n(self) -> int:
        return self.cost.size


@dataclass
class LpOutcome:
    status: str
    solution: Optional[Vector] = None
    objective: float = float("nan")
    pivot_count: int = 0


def build_plp(
    nlp: StructuredNlp,
    snapshot: JacobianSnapshot,
    delta_l: Vector,
    trust_radius: float,
) -> BoxedLp:
    """Assemble the parametric LP at mismatch ``delta_l``.

    The equality block enforces  delta_l + C w + g(P_y w_hat) + G'(w - w_hat) = 0,
    so with ``delta_l = 0`` this is exactly the trust-region LP at w_hat.
    Only the nonlinearly-entering coordinates get finite trust bounds.
    """
    if trust_radius <= 0.0:
        raise ValueError("trust_radius must be positive")
    delta_l = np.asarray(delta_l, dtype=float).reshape(-1)
    if delta_l.size != nlp.n_g:
        raise ValueError(f"delta_l has length {delta_l.size}, expected {nlp.n_g}")
    w_hat = snapshot.linearization_point
    eq_matrix = nlp.C + snapshot.G_t
    eq_rhs = snapshot.G_t @ w_hat - snapshot.g_at_point - delta_l
    lower = np.full(nlp.n_w, -np.inf)
    upper = np.full(nlp.n_w, np.inf)
    lower[nlp.py_indices] = w_hat[nlp.py_indices] - trust_radius
    upper[nlp.py_indices] = w_hat[nlp.py_indices] + trust_radius
    return BoxedLp(
        cost=nlp.c,
        eq_matrix=eq_matrix,
        eq_rhs=eq_rhs,
        ineq_matrix=nlp.A,
        ineq_rhs=-nlp.b,
        lower=lower,
        upper=upper,
    )


def _reference_values(vstat: np.ndarray, lower: Vector, upper: Vector) -> Vector:
    ref = np.zeros(vstat.size)
    at_lo = vstat == _AT_LO
    at_up = vstat == _AT_UP
    ref[at_lo] = lower[at_lo]
    ref[at_up] = upper[at_up]
    return ref


class _Simplex:
    """Working state for one bounded-variable simplex run."""

    def __init__(self, lp: BoxedLp, pivot_limit: int):
        n = lp.n
        m_eq = lp.eq_rhs.size
        m_in = lp.ineq_rhs.size
        self.n_struct = n
        self.m = m_eq + m_in
        self.pivot_limit = pivot_limit
        self.pivots = 0
        self.bland = False
        self.deg_streak = 0
        self.deg_threshold = 3 * (n + m_eq)

        slack_cols = np.zeros((self.m, m_in))
        slack_cols[m_eq:, :] = np.eye(m_in)
        body = np.vstack([lp.eq_matrix, lp.ineq_matrix]) if self.m else np.zeros((0, n))
        self.A = np.hstack([body, slack_cols])
        self.b = np.concatenate([lp.eq_rhs, lp.ineq_rhs])
        self.lower = np.concatenate([lp.lower, np.zeros(m_in)])
        self.upper = np.concatenate([lp.upper, np.full(m_in, np.inf)])
        self.cost = np.concatenate([lp.cost, np.zeros(m_in)])
        self.m_eq = m_eq
        self.row_ids = np.arange(self.m)

        # Nonbasic start: structurals at a finite bound (lower preferred),
        # free ones parked at zero.
        vstat = np.full(n + m_in, _FREE, dtype=np.int8)
        vstat[np.isfinite(self.upper)] = _AT_UP
        vstat[np.isfinite(self.lower)] = _AT_LO
        self.vstat = vstat
        self.barred = self.upper - self.lower <= 0.0
        self.art_start = n + m_in

    def install_artificials(self):
        """Give every row a nonnegative basic variable; equality rows (and
        inequality rows whose slack would start negative) get artificials."""
        ref = _reference_values(self.vstat, self.lower, self.upper)
        resid = self.b - self.A @ ref
        basis = np.full(self.m, -1, dtype=int)
        art_cols = []
        scale = np.ones(self.m)
        for i in range(self.m):
            if i >= self.m_eq and resid[i] >= 0.0:
                basis[i] = self.n_struct + (i - self.m_eq)  # slack stays basic
                self.vstat[basis[i]] = _BASIC
                continue
            sigma = -1.0 if resid[i] < 0.0 else 1.0
            col = np.zeros(self.m)
            col[i] = sigma
            art_cols.append(col)
            basis[i] = self.art_start + len(art_cols) - 1
            scale[i] = sigma
        if art_cols:
            self.A = np.hstack([self.A, np.column_stack(art_cols)])
        self.n_art = len(art_cols)
        self.lower = np.concatenate([self.lower, np.zeros(self.n_art)])
        self.upper = np.concatenate([self.upper, np.full(self.n_art, np.inf)])
        self.cost = np.concatenate([self.cost, np.zeros(self.n_art)])
        self.vstat = np.concatenate([self.vstat, np.full(self.n_art, _AT_LO, dtype=np.int8)])
        self.barred = np.concatenate([self.barred, np.zeros(self.n_art, dtype=bool)])
        self.vstat[basis[basis >= self.art_start]] = _BASIC
        self.basis = basis

        # Row-scale so basis columns form an identity; then basic values are
        # the scaled residuals, nonnegative by construction.
        self.T = self.A * scale[:, None]
        self.xB = np.maximum(scale * resid, 0.0)

    def _price(self, costs: Vector):
        if self.m:
            d = costs - self.T.T @ costs[self.basis]
        else:
            d = costs.copy()
        enter_dir = np.zeros(d.size, dtype=np.int8)
        nonbasic = self.vstat != _BASIC
        ok = nonbasic & ~self.barred
        lo_mask = ok & ((self.vstat == _AT_LO) | (self.vstat == _FREE)) & (d < -_PRICE_TOL)
        up_mask = ok & ((self.vstat == _AT_UP) | (self.vstat == _FREE)) & (d > _PRICE_TOL)
        enter_dir[lo_mask] = 1
        enter_dir[up_mask & (enter_dir == 0)] = -1
        return d, enter_dir

    def _choose_entering(self, d: Vector, enter_dir: np.ndarray) -> int:
        eligible = np.flatnonzero(enter_dir != 0)
        if eligible.size == 0:
            return -1
        if self.bland:
            return int(eligible[0])
        scores = np.abs(d[eligible])
        return int(eligible[int(np.argmax(scores))])

    def _ratio_test(self, j: int, sigma: float):
        """Return (t, row, leaving_state, flip). Row is -1 for a bound flip."""
        col = self.T[:, j] if self.m else np.zeros(0)
        alpha = sigma * col
        lo_B = self.lower[self.basis] if self.m else np.zeros(0)
        up_B = self.upper[self.basis] if self.m else np.zeros(0)
        t_rows = np.full(self.m, np.inf)
        hit_up = np.zeros(self.m, dtype=bool)
        dec = alpha > _PIV_TOL
        inc = alpha < -_PIV_TOL
        with np.errstate(invalid="ignore"):
            dec &= np.isfinite(lo_B)
            inc &= np.isfinite(up_B)
            t_rows[dec] = (self.xB[dec] - lo_B[dec]) / alpha[dec]
            t_rows[inc] = (up_B[inc] - self.xB[inc]) / (-alpha[inc])
        t_rows = np.maximum(t_rows, 0.0)
        hit_up[inc] = True

        t_flip = self.upper[j] - self.lower[j]
        t_row_min = float(np.min(t_rows)) if self.m else np.inf
        if not np.isfinite(t_row_min) and not np.isfinite(t_flip):
            return np.inf, -1, False, False
        if t_flip < t_row_min * (1.0 - 1e-12):
            return float(t_flip), -1, False, True
        cut = t_row_min + 1e-12 * (1.0 + abs(t_row_min))
        cands = np.flatnonzero(t_rows <= cut)
        r = int(cands[int(np.argmin(self.basis[cands]))])
        return t_row_min, r, bool(hit_up[r]), False

    def _pivot(self, j: int, sigma: float, t: float, r: int, leaving_hits_up: bool):
        col = self.T[:, j]
        self.xB -= (sigma * t) * col
        ref_j = 0.0
        if self.vstat[j] == _AT_LO:
            ref_j = self.lower[j]
        elif self.vstat[j] == _AT_UP:
            ref_j = self.upper[j]
        leaving = self.basis[r]
        self.vstat[leaving] = _AT_UP if leaving_hits_up else _AT_LO
        piv = self.T[r, j]
        self.T[r, :] /= piv
        colv = self.T[:, j].copy()
        colv[r] = 0.0
        self.T -= np.outer(colv, self.T[r, :])
        self.T[:, j] = 0.0
        self.T[r, j] = 1.0
        self.xB[r] = ref_j + sigma * t
        self.basis[r] = j
        self.vstat[j] = _BASIC

    def run(self, costs: Vector) -> str:
        while True:
            if self.pivots >= self.pivot_limit:
                return LpStatus.ITERATION_LIMIT
            d, enter_dir = self._price(costs)
            j = self._choose_entering(d, enter_dir)
            if j < 0:
                return LpStatus.OPTIMAL
            sigma = float(enter_dir[j])
            t, r, hits_up, flip = self._ratio_test(j, sigma)
            if not np.isfinite(t):
                return LpStatus.UNBOUNDED
            self.pivots += 1
            if flip:
                self.xB -= (sigma * t) * self.T[:, j]
                self.vstat[j] = _AT_UP if self.vstat[j] == _AT_LO else _AT_LO
            else:
                self._pivot(j, sigma, t, r, hits_up)
            if t <= _DEG_TOL:
                self.deg_streak += 1
                if self.deg_streak >= self.deg_threshold:
                    self.bland = True
            else:
                self.deg_streak = 0

    def drop_artificials(self) -> None:
        """Pivot basic artificials out; drop rows that prove redundant."""
        drop_rows = []
        for r in range(self.m):
            if self.basis[r] < self.art_start:
                continue
            row = np.abs(self.T[r, : self.art_start])
            row[self.vstat[: self.art_start] == _BASIC] = 0.0
            row[self.barred[: self.art_start]] = 0.0
            j = int(np.argmax(row))
            if row[j] > 1e-7:
                self._pivot(j, 1.0, 0.0, r, False)
            else:
                drop_rows.append(r)
        if drop_rows:
            keep = np.setdiff1d(np.arange(self.m), drop_rows)
            self.T = self.T[keep]
            self.xB = self.xB[keep]
            self.basis = self.basis[keep]
            self.row_ids = self.row_ids[keep]
            self.m = keep.size
        # Artificials are frozen at zero from here on.
        self.lower[self.art_start:] = 0.0
        self.upper[self.art_start:] = 0.0
        self.barred[self.art_start:] = True

    def extract(self) -> Vector:
        x = _reference_values(self.vstat, self.lower, self.upper)
        x[self.basis] = self.xB
        if self.m:
            # One sharpening solve against the original rows for tight residuals.
            A_rows = self.A[self.row_ids]
            b_rows = self.b[self.row_ids]
            nonbasic = x.copy()
            nonbasic[self.basis] = 0.0
            rhs = b_rows - A_rows @ nonbasic
            B = A_rows[:, self.basis]
            try:
                x[self.basis] = np.linalg.solve(B, rhs)
            except np.linalg.LinAlgError:
                x[self.basis] = np.linalg.lstsq(B, rhs, rcond=None)[0]
        return x


def solve_lp(lp: BoxedLp, pivot_limit: Optional[int] = None) -> LpOutcome:
    """Two-phase primal simplex with explicit variable bounds.

    Dantzig pricing with a Bland fallback after a run of degenerate pivots;
    smallest-index tie-breaking in the ratio test. Deterministic for
    identical input data.
    """
    m_eq = lp.eq_rhs.size
    m_in = lp.ineq_rhs.size
    if pivot_limit is None:
        pivot_limit = 50 * (lp.n + m_eq + m_in)

    state = _Simplex(lp, pivot_limit)
    state.install_artificials()

    if state.n_art:
        phase1 = np.zeros(state.A.shape[1])
        phase1[state.art_start:] = 1.0
        status = state.run(phase1)
        if status == LpStatus.ITERATION_LIMIT:
            return LpOutcome(LpStatus.ITERATION_LIMIT, pivot_count=state.pivots)
        if status == LpStatus.UNBOUNDED:
            # Cannot happen in exact arithmetic (phase-1 objective >= 0).
            return LpOutcome(LpStatus.ITERATION_LIMIT, pivot_count=state.pivots)
        art_mask = state.basis >= state.art_start
        phase1_obj = float(np.sum(state.xB[art_mask])) if art_mask.any() else 0.0
        rhs_scale = float(np.max(np.abs(state.b))) if state.b.size else 0.0
        feas_tol = 1e-9 * (1.0 + rhs_scale)
        if phase1_obj > feas_tol:
            return LpOutcome(LpStatus.INFEASIBLE, pivot_count=state.pivots)
        state.drop_artificials()

    status = state.run(state.cost)
    if status != LpStatus.OPTIMAL:
        return LpOutcome(status, pivot_count=state.pivots)
    x = state.extract()
    sol = x[: lp.n]
    return LpOutcome(
        LpStatus.OPTIMAL,
        solution=sol,
        objective=float(lp.cost @ sol),
        pivot_count=state.pivots,
    )


def _hexline(values) -> str:
    return " ".join(float(v).hex() for v in np.asarray(values, dtype=float).reshape(-1))


def dump_boxed_lp(lp: BoxedLp, path) -> None:
    """Full-precision text dump (hexadecimal floats, fixed section order)."""
    lines = [f"boxed-lp 1 {lp.n} {lp.eq_rhs.size} {lp.ineq_rhs.size}"]
    lines.append("cost " + _hexline(lp.cost))
    for row in lp.eq_matrix:
        lines.append("eqrow " + _hexline(row))
    lines.append("eqrhs " + _hexline(lp.eq_rhs))
    for row in lp.ineq_matrix:
        lines.append("inrow " + _hexline(row))
    lines.append("inrhs " + _hexline(lp.ineq_rhs))
    lines.append("lower " + _hexline(lp.lower))
    lines.append("upper " + _hexline(lp.upper))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_boxed_lp(path) -> BoxedLp:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    head = lines[0].split()
    if head[0] != "boxed-lp":
        raise ValueError("not a boxed-lp dump")
    n, m_eq, m_in = int(head[2]), int(head[3]), int(head[4])

    def parse(tag: str, line: str) -> np.ndarray:
        key, _, rest = line.partition(" ")
        if key != tag:
            raise ValueError(f"expected section {tag}, found {key}")
        return np.array([float.fromhex(tok) for tok in rest.split()]) if rest else np.zeros(0)

    pos = 1
    cost = parse("cost", lines[pos]); pos += 1
    eq_rows = [parse("eqrow", lines[pos + i]) for i in range(m_eq)]; pos += m_eq
    eq_rhs = parse("eqrhs", lines[pos]); pos += 1
    in_rows = [parse("inrow", lines[pos + i]) for i in range(m_in)]; pos += m_in
    in_rhs = parse("inrhs", lines[pos]); pos += 1
    lower = parse("lower", lines[pos]); pos += 1
    upper = parse("upper", lines[pos]); pos += 1
    eq_matrix = np.vstack(eq_rows) if eq_rows else np.zeros((0, n))
    ineq_matrix = np.vstack(in_rows) if in_rows else np.zeros((0, n))
    return BoxedLp(cost, eq_matrix, eq_rhs, ineq_matrix, in_rhs, lower, upper)
