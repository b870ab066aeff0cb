"""Independent reference computations for pinning expected values.

Everything here is deliberately written from first principles (scalar
recursions, brute-force enumeration, finite differences) so the tests
never share a code path with the implementation they check.
"""

import itertools
import math

import numpy as np

from fslp.lp import BoxedLp


# ---------------------------------------------------------------------------
# Circle fixture: the feasibility loop at w_hat=(0,1) collapses to a scalar
# recursion. The parametric subproblem pins w1 at the trust bound and the
# single equality row yields w2+ = 1 - (delta^2 + (w2-1)^2)/2.


def circle_plain_iterates(delta, sigma_inner=1e-6, max_iter=80):
    """Iterates z_l of the plain loop (test-first), last one is accepted."""
    zs = [1.0]
    converged = False
    for _ in range(max_iter):
        z = zs[-1]
        h = abs(delta * delta + z * z - 1.0)
        ratio = abs(1.0 - z) / delta
        if h <= sigma_inner and ratio < 0.5:
            converged = True
            break
        zs.append(1.0 - (delta * delta + (z - 1.0) ** 2) / 2.0)
    return zs, converged


def circle_plain_ratio(delta, sigma_inner=1e-6):
    zs, converged = circle_plain_iterates(delta, sigma_inner)
    assert converged
    return abs(1.0 - zs[-1]) / delta


def circle_aa1_iterates(delta, sigma_inner=1e-6, max_iter=80):
    """Depth-1 accelerated loop on the same fixture, full 2-vector arithmetic."""

    def plp(w):
        mismatch = w[0] * w[0] + (w[1] - 1.0) ** 2
        return np.array([delta, 1.0 - mismatch / 2.0])

    def clip(w):
        return np.array([
            min(max(w[0], -delta), delta),
            min(max(w[1], 1.0 - delta), 1.0 + delta),
        ])

    w_hat = np.array([0.0, 1.0])
    w_bar = np.array([delta, 1.0])
    w_prev, w_cur = w_hat, w_bar
    r_prev = w_bar - w_hat
    ws = [w_cur.copy()]
    converged = False
    for _ in range(max_iter):
        h = abs(w_cur[0] ** 2 + w_cur[1] ** 2 - 1.0)
        ratio = np.linalg.norm(w_bar - w_cur) / np.linalg.norm(w_bar - w_hat)
        if h <= sigma_inner and ratio < 0.5:
            converged = True
            break
        r_next = plp(w_cur) - w_cur
        f_col = r_next - r_prev
        denom = float(f_col @ f_col)
        gamma = 0.0 if denom <= 1e-28 else float(r_next @ f_col) / denom
        combo = gamma * ((w_cur - w_prev) + f_col)
        w_new = clip(w_cur + r_next - combo)
        w_prev, w_cur, r_prev = w_cur, w_new, r_next
        ws.append(w_cur.copy())
    return ws, converged


# ---------------------------------------------------------------------------
# Brute-force LP oracle: enumerate all basic points of a finitely-boxed LP.


def enumerate_lp(lp: BoxedLp, feas_tol=1e-9):
    """(best_objective, best_point) over all basic feasible points, or None."""
    n = lp.n
    m_eq = lp.eq_rhs.size
    rows = [(lp.eq_matrix[i], lp.eq_rhs[i]) for i in range(m_eq)]
    cands = []
    for i in range(lp.ineq_rhs.size):
        cands.append((lp.ineq_matrix[i], lp.ineq_rhs[i]))
    eye = np.eye(n)
    for j in range(n):
        if np.isfinite(lp.lower[j]):
            cands.append((eye[j], lp.lower[j]))
        if np.isfinite(lp.upper[j]):
            cands.append((eye[j], lp.upper[j]))
    need = n - m_eq
    if need < 0:
        return None
    best = None
    for chosen in itertools.combinations(range(len(cands)), need):
        mat = np.vstack([r for r, _ in rows] + [cands[i][0] for i in chosen]) if rows or chosen else np.zeros((0, n))
        rhs = np.array([v for _, v in rows] + [cands[i][1] for i in chosen])
        if mat.shape[0] != n:
            continue
        try:
            x = np.linalg.solve(mat, rhs)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(x)):
            continue
        if m_eq and np.max(np.abs(lp.eq_matrix @ x - lp.eq_rhs)) > feas_tol:
            continue
        if lp.ineq_rhs.size and np.max(lp.ineq_matrix @ x - lp.ineq_rhs) > feas_tol:
            continue
        if np.any(x < lp.lower - feas_tol) or np.any(x > lp.upper + feas_tol):
            continue
        obj = float(lp.cost @ x)
        if best is None or obj < best[0]:
            best = (obj, x)
    return best


def random_boxed_lp(rng: np.random.Generator) -> BoxedLp:
    """Feasible-by-construction LP with finite bounds (bounded polytope)."""
    n = int(rng.integers(2, 7))
    m_eq = int(rng.integers(0, min(3, n)))
    m_in = int(rng.integers(1, 7))
    x0 = rng.uniform(-1.0, 1.0, n)
    lower = x0 - rng.uniform(0.2, 2.0, n)
    upper = x0 + rng.uniform(0.2, 2.0, n)
    eq_matrix = rng.normal(size=(m_eq, n))
    eq_rhs = eq_matrix @ x0
    ineq_matrix = rng.normal(size=(m_in, n))
    ineq_rhs = ineq_matrix @ x0 + rng.uniform(0.1, 2.0, m_in)
    cost = rng.normal(size=n)
    return BoxedLp(cost, eq_matrix, eq_rhs, ineq_matrix, ineq_rhs, lower, upper)


# ---------------------------------------------------------------------------
# Finite differences


def fd_jacobian(fun, y, eps=1e-6):
    y = np.asarray(y, dtype=float)
    f0 = np.asarray(fun(y))
    jac = np.zeros((f0.size, y.size))
    for j in range(y.size):
        step = np.zeros_like(y)
        step[j] = eps
        jac[:, j] = (np.asarray(fun(y + step)) - np.asarray(fun(y - step))) / (2.0 * eps)
    return jac
