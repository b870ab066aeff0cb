"""Benchmark problem builders.

Analytic toy fixtures plus desk-scale time-optimal point-to-point optimal
control problems transcribed by multiple shooting with a free horizon.
The dynamics are integrator chains (1D double integrator and a planar
point mass), discretized with the classical 4th-order Runge-Kutta scheme;
for these linear systems the RK4 map is the exact flow, which gives every
fixture a checkable oracle.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .model import StructuredNlp, Vector

DOUBLE_INTEGRATOR_1D = "DoubleIntegrator1D"
POINT_MASS_2D = "PointMass2D"

_SYSTEM_DIMS = {DOUBLE_INTEGRATOR_1D: (2, 1), POINT_MASS_2D: (4, 2)}


class ProblemError(ValueError):
    """Invalid or inconsistent benchmark problem description."""


class Lcg64:
    """Fixed 64-bit linear congruential generator.

    state <- (6364136223846793005 * state + 1442695040888963407) mod 2^64,
    uniforms from the top 53 bits. Used instead of a library generator so
    the perturbed test sets are bit-reproducible anywhere.
    """

    MULT = 6364136223846793005
    INC = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next_u64(self) -> int:
        self.state = (self.MULT * self.state + self.INC) & self.MASK
        return self.state

    def uniform(self, lo: float, hi: float) -> float:
        frac = (self.next_u64() >> 11) / float(1 << 53)
        return lo + (hi - lo) * frac


# ---------------------------------------------------------------------------
# Toy fixtures


def circle_problem(with_inequality: bool = False):
    """Unit-circle equality fixture.

    Base variant: min -w1 on the circle, started from the top. The
    inequality variant adds w2 - w1 <= 0 and tilts the cost so the optimum
    sits where both constraints are active; its feasible start is (1, 0).
    Returns (nlp, feasible_start, known_optimum).
    """

    def g(y):
        return np.array([y[0] * y[0] + y[1] * y[1] - 1.0])

    def g_jac(y):
        return np.array([[2.0 * y[0], 2.0 * y[1]]])

    if with_inequality:
        nlp = StructuredNlp(
            c=np.array([-1.0, -1.0]),
            C=np.zeros((1, 2)),
            A=np.array([[-1.0, 1.0]]),
            b=np.zeros(1),
            py_indices=np.array([0, 1]),
            g=g,
            g_jacobian=g_jac,
            name="circle-ineq",
        )
        s = math.sqrt(0.5)
        return nlp, np.array([1.0, 0.0]), np.array([s, s])

    nlp = StructuredNlp(
        c=np.array([-1.0, 0.0]),
        C=np.zeros((1, 2)),
        A=np.zeros((0, 2)),
        b=np.zeros(0),
        py_indices=np.array([0, 1]),
        g=g,
        g_jacobian=g_jac,
        name="circle",
    )
    return nlp, np.array([0.0, 1.0]), np.array([1.0, 0.0])


# ---------------------------------------------------------------------------
# Optimal-control problem description


@dataclass(frozen=True)
class Obstacle:
    vertices: np.ndarray  # (n_vertices, 2)
    r_safe: float

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float).reshape(-1, 2))
        if self.vertices.shape[0] < 3:
            raise ProblemError("obstacle needs at least 3 vertices")
        if self.r_safe < 0.0:
            raise ProblemError("r_safe must be nonnegative")


@dataclass(frozen=True)
class OcpSpec:
    """Time-optimal point-to-point problem description in desk units."""

    N: int
    system: str
    x_start: np.ndarray
    x_end: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray
    x_min: np.ndarray
    x_max: np.ndarray
    mu0: np.ndarray
    muN: np.ndarray
    v_max: Optional[float] = None
    u_ball: Optional[float] = None
    obstacle: Optional[Obstacle] = None
    T_bounds: Tuple[float, float] = (0.2, 6.0)

    def __post_init__(self):
        if self.system not in _SYSTEM_DIMS:
            raise ProblemError(f"unknown system {self.system!r}")
        n_x, n_u = _SYSTEM_DIMS[self.system]
        for name in ("x_start", "x_end", "x_min", "x_max", "mu0", "muN"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        for name in ("u_min", "u_max"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        if self.N < 2:
            raise ProblemError("N must be at least 2")
        for name in ("x_start", "x_end", "x_min", "x_max", "mu0", "muN"):
            if getattr(self, name).size != n_x:
                raise ProblemError(f"{name} must have length {n_x}")
        if self.u_min.size != n_u or self.u_max.size != n_u:
            raise ProblemError(f"control bounds must have length {n_u}")
        if np.any(self.mu0 <= 0.0) or np.any(self.muN <= 0.0):
            raise ProblemError("penalty weights must be strictly positive")
        if not (0.0 < self.T_bounds[0] <= self.T_bounds[1]):
            raise ProblemError("need 0 < T_min <= T_max")
        if self.system == DOUBLE_INTEGRATOR_1D:
            if self.v_max is not None:
                raise ProblemError(
                    "v_max on DoubleIntegrator1D is a linear bound; "
                    "encode it through the velocity entry of the state box"
                )
            if self.obstacle is not None:
                raise ProblemError("obstacles need a planar system")

    @property
    def n_x(self) -> int:
        return _SYSTEM_DIMS[self.system][0]

    @property
    def n_u(self) -> int:
        return _SYSTEM_DIMS[self.system][1]

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "system": self.system,
            "x_start": self.x_start.tolist(),
            "x_end": self.x_end.tolist(),
            "u_min": self.u_min.tolist(),
            "u_max": self.u_max.tolist(),
            "x_min": self.x_min.tolist(),
            "x_max": self.x_max.tolist(),
            "mu0": self.mu0.tolist(),
            "muN": self.muN.tolist(),
            "v_max": self.v_max,
            "u_ball": self.u_ball,
            "obstacle": None
            if self.obstacle is None
            else {"vertices": self.obstacle.vertices.tolist(), "r_safe": self.obstacle.r_safe},
            "T_bounds": list(self.T_bounds),
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @staticmethod
    def from_dict(data: dict) -> "OcpSpec":
        obstacle = data.get("obstacle")
        return OcpSpec(
            N=int(data["N"]),
            system=data["system"],
            x_start=np.array(data["x_start"], dtype=float),
            x_end=np.array(data["x_end"], dtype=float),
            u_min=np.array(data["u_min"], dtype=float),
            u_max=np.array(data["u_max"], dtype=float),
            x_min=np.array(data["x_min"], dtype=float),
            x_max=np.array(data["x_max"], dtype=float),
            mu0=np.array(data["mu0"], dtype=float),
            muN=np.array(data["muN"], dtype=float),
            v_max=data.get("v_max"),
            u_ball=data.get("u_ball"),
            obstacle=None
            if obstacle is None
            else Obstacle(np.array(obstacle["vertices"], dtype=float), float(obstacle["r_safe"])),
            T_bounds=tuple(data.get("T_bounds", (0.2, 6.0))),
        )

    @staticmethod
    def from_json(text: str) -> "OcpSpec":
        return OcpSpec.from_dict(json.loads(text))


def _system_matrices(system: str):
    n_x, n_u = _SYSTEM_DIMS[system]
    half = n_x // 2
    A = np.zeros((n_x, n_x))
    A[:half, half:] = np.eye(half)
    B = np.zeros((n_x, n_u))
    B[half:, :] = np.eye(n_u)
    return A, B


def rk4_discrete_pair(A: np.ndarray, B: np.ndarray, h: float):
    """State/input maps of one RK4 step for LTI dynamics, with d/dh.

    RK4 applied to xdot = A x + B u over a step h reproduces the degree-4
    Taylor expansion of the matrix exponential; for nilpotent A (integrator
    chains) the series is the exact flow.
    """
    n_x = A.shape[0]
    eye = np.eye(n_x)
    A2 = A @ A
    A3 = A2 @ A
    A4 = A3 @ A
    Ad = eye + h * A + (h**2 / 2.0) * A2 + (h**3 / 6.0) * A3 + (h**4 / 24.0) * A4
    Bd = (h * eye + (h**2 / 2.0) * A + (h**3 / 6.0) * A2 + (h**4 / 24.0) * A3) @ B
    dAd = A + h * A2 + (h**2 / 2.0) * A3 + (h**3 / 6.0) * A4
    dBd = (eye + h * A + (h**2 / 2.0) * A2 + (h**3 / 6.0) * A3) @ B
    return Ad, Bd, dAd, dBd


@dataclass(frozen=True)
class OcpLayout:
    """Index bookkeeping for the stacked decision vector."""

    spec: OcpSpec
    n_w: int = 0
    n_g: int = 0
    off_u: int = 0
    off_s0: int = 0
    off_sN: int = 0
    idx_T: int = 0
    off_svel: int = -1
    off_suball: int = -1
    off_hyper: int = -1
    off_sobs: int = -1

    @staticmethod
    def build(spec: OcpSpec) -> "OcpLayout":
        n_x, n_u, N = spec.n_x, spec.n_u, spec.N
        off_u = n_x * (N + 1)
        off_s0 = off_u + n_u * N
        off_sN = off_s0 + n_x
        idx_T = off_sN + n_x
        pos = idx_T + 1
        has_vel = spec.v_max is not None
        has_uball = spec.u_ball is not None
        has_obs = spec.obstacle is not None
        off_svel = -1
        if has_vel:
            off_svel = pos
            pos += N
        off_suball = -1
        if has_uball:
            off_suball = pos
            pos += N
        off_hyper = -1
        off_sobs = -1
        if has_obs:
            off_hyper = pos
            pos += 3 * N
            off_sobs = pos
            pos += N
        n_g = n_x * N + (N if has_vel else 0) + (N if has_uball else 0) + (N if has_obs else 0)
        return OcpLayout(
            spec=spec,
            n_w=pos,
            n_g=n_g,
            off_u=off_u,
            off_s0=off_s0,
            off_sN=off_sN,
            idx_T=idx_T,
            off_svel=off_svel,
            off_suball=off_suball,
            off_hyper=off_hyper,
            off_sobs=off_sobs,
        )

    def x_slice(self, k: int) -> slice:
        n_x = self.spec.n_x
        return slice(k * n_x, (k + 1) * n_x)

    def u_slice(self, k: int) -> slice:
        n_u = self.spec.n_u
        return slice(self.off_u + k * n_u, self.off_u + (k + 1) * n_u)

    def hyper_slice(self, k: int) -> slice:
        return slice(self.off_hyper + 3 * k, self.off_hyper + 3 * (k + 1))

    def py_indices(self) -> np.ndarray:
        spec = self.spec
        idx = list(range(spec.n_x * spec.N))  # shooting states x_0 .. x_{N-1}
        idx += list(range(self.off_u, self.off_u + spec.n_u * spec.N))
        idx.append(self.idx_T)
        if self.off_hyper >= 0:
            for k in range(spec.N):
                idx += [self.off_hyper + 3 * k, self.off_hyper + 3 * k + 1]
        return np.array(sorted(idx), dtype=int)


def _make_g_callbacks(layout: OcpLayout):
    spec = layout.spec
    n_x, n_u, N = spec.n_x, spec.n_u, spec.N
    A, B = _system_matrices(spec.system)
    half = n_x // 2
    n_states_y = n_x * N
    n_controls_y = n_u * N
    t_pos = n_states_y + n_controls_y
    has_vel = spec.v_max is not None
    has_uball = spec.u_ball is not None
    has_obs = spec.obstacle is not None
    vel_row0 = n_x * N
    uball_row0 = vel_row0 + (N if has_vel else 0)
    obs_row0 = uball_row0 + (N if has_uball else 0)
    r_safe = spec.obstacle.r_safe if has_obs else 0.0

    def g_fun(y: Vector) -> Vector:
        xs = y[:n_states_y].reshape(N, n_x)
        us = y[n_states_y:t_pos].reshape(N, n_u)
        T = y[t_pos]
        Ad, Bd, _, _ = rk4_discrete_pair(A, B, T / N)
        out = np.empty(layout.n_g)
        out[: n_x * N] = -(xs @ Ad.T + us @ Bd.T).ravel()
        if has_vel:
            vs = xs[:, half:]
            out[vel_row0 : vel_row0 + N] = np.sum(vs * vs, axis=1) - spec.v_max**2
        if has_uball:
            out[uball_row0 : uball_row0 + N] = np.sum(us * us, axis=1) - spec.u_ball**2
        if has_obs:
            nas = y[t_pos + 1 :].reshape(N, 2)
            ps = xs[:, :2]
            out[obs_row0 : obs_row0 + N] = np.sum(nas * ps, axis=1) + r_safe
        return out

    def g_jac(y: Vector) -> np.ndarray:
        xs = y[:n_states_y].reshape(N, n_x)
        us = y[n_states_y:t_pos].reshape(N, n_u)
        T = y[t_pos]
        Ad, Bd, dAd, dBd = rk4_discrete_pair(A, B, T / N)
        J = np.zeros((layout.n_g, y.size))
        for k in range(N):
            rows = slice(k * n_x, (k + 1) * n_x)
            J[rows, k * n_x : (k + 1) * n_x] = -Ad
            J[rows, n_states_y + k * n_u : n_states_y + (k + 1) * n_u] = -Bd
            J[rows, t_pos] = -(dAd @ xs[k] + dBd @ us[k]) / N
        if has_vel:
            for k in range(N):
                J[vel_row0 + k, k * n_x + half : (k + 1) * n_x] = 2.0 * xs[k, half:]
        if has_uball:
            for k in range(N):
                J[uball_row0 + k, n_states_y + k * n_u : n_states_y + (k + 1) * n_u] = 2.0 * us[k]
        if has_obs:
            nas = y[t_pos + 1 :].reshape(N, 2)
            for k in range(N):
                J[obs_row0 + k, k * n_x : k * n_x + 2] = nas[k]
                J[obs_row0 + k, t_pos + 1 + 2 * k : t_pos + 3 + 2 * k] = xs[k, :2]
        return J

    return g_fun, g_jac


def build_p2p_ocp_with_layout(spec: OcpSpec) -> Tuple[StructuredNlp, OcpLayout]:
    """Transcribe the point-to-point problem; also return the index layout."""
    layout = OcpLayout.build(spec)
    n_x, n_u, N = spec.n_x, spec.n_u, spec.N
    n_w, n_g = layout.n_w, layout.n_g
    has_vel = spec.v_max is not None
    has_uball = spec.u_ball is not None
    has_obs = spec.obstacle is not None

    # Objective: horizon length plus endpoint-slack penalties.
    c = np.zeros(n_w)
    c[layout.idx_T] = 1.0
    c[layout.off_s0 : layout.off_s0 + n_x] = spec.mu0
    c[layout.off_sN : layout.off_sN + n_x] = spec.muN

    # Linear part of the equality block: the new state enters each shooting
    # defect with identity, slack variables close the converted inequalities.
    C = np.zeros((n_g, n_w))
    for k in range(N):
        rows = slice(k * n_x, (k + 1) * n_x)
        C[rows, (k + 1) * n_x : (k + 2) * n_x] = np.eye(n_x)
    row = n_x * N
    if has_vel:
        for k in range(N):
            C[row + k, layout.off_svel + k] = 1.0
        row += N
    if has_uball:
        for k in range(N):
            C[row + k, layout.off_suball + k] = 1.0
        row += N
    if has_obs:
        for k in range(N):
            C[row + k, layout.off_hyper + 3 * k + 2] = 1.0  # offset parameter
            C[row + k, layout.off_sobs + k] = 1.0
        row += N

    # Inequalities A w + b <= 0, assembled in a fixed documented order.
    rows_A: List[np.ndarray] = []
    rhs_b: List[float] = []

    def add_row(cols: dict, offset: float):
        r = np.zeros(n_w)
        for j, v in cols.items():
            r[j] = v
        rows_A.append(r)
        rhs_b.append(offset)

    for i in range(n_x):  # |x_0 - start| <= s0
        add_row({i: 1.0, layout.off_s0 + i: -1.0}, -spec.x_start[i])
        add_row({i: -1.0, layout.off_s0 + i: -1.0}, spec.x_start[i])
    for i in range(n_x):  # |x_N - end| <= sN
        j = N * n_x + i
        add_row({j: 1.0, layout.off_sN + i: -1.0}, -spec.x_end[i])
        add_row({j: -1.0, layout.off_sN + i: -1.0}, spec.x_end[i])
    for k in range(N + 1):  # state boxes
        for i in range(n_x):
            j = k * n_x + i
            if np.isfinite(spec.x_max[i]):
                add_row({j: 1.0}, -spec.x_max[i])
            if np.isfinite(spec.x_min[i]):
                add_row({j: -1.0}, spec.x_min[i])
    for k in range(N):  # control boxes
        for i in range(n_u):
            j = layout.off_u + k * n_u + i
            if np.isfinite(spec.u_max[i]):
                add_row({j: 1.0}, -spec.u_max[i])
            if np.isfinite(spec.u_min[i]):
                add_row({j: -1.0}, spec.u_min[i])
    if has_vel:
        for k in range(N):
            add_row({layout.off_svel + k: -1.0}, 0.0)
    if has_uball:
        for k in range(N):
            add_row({layout.off_suball + k: -1.0}, 0.0)
    if has_obs:
        verts = spec.obstacle.vertices
        for k in range(N):
            base = layout.off_hyper + 3 * k
            for v in verts:  # obstacle stays on the positive side
                add_row({base: -v[0], base + 1: -v[1], base + 2: -1.0}, 0.0)
            for j in range(3):  # |n|_inf <= 1
                add_row({base + j: 1.0}, -1.0)
                add_row({base + j: -1.0}, -1.0)
        for k in range(N):
            add_row({layout.off_sobs + k: -1.0}, 0.0)
    add_row({layout.idx_T: 1.0}, -spec.T_bounds[1])
    add_row({layout.idx_T: -1.0}, spec.T_bounds[0])

    g_fun, g_jac = _make_g_callbacks(layout)
    nlp = StructuredNlp(
        c=c,
        C=C,
        A=np.vstack(rows_A),
        b=np.array(rhs_b),
        py_indices=layout.py_indices(),
        g=g_fun,
        g_jacobian=g_jac,
        name=f"{spec.system.lower()}-N{N}",
        require_full_rank_A=False,  # two-sided boxes make +/- row pairs
    )
    return nlp, layout


def build_p2p_ocp(spec: OcpSpec) -> StructuredNlp:
    return build_p2p_ocp_with_layout(spec)[0]


def separating_hyperplane(p: np.ndarray, obstacle: Obstacle) -> np.ndarray:
    """A valid (n_a, n_b) with inf-norm at most 1 separating p from the obstacle.

    The plane is tight on the obstacle and must clear the point by more than
    r_safe after normalization; raises when no such plane exists.
    """
    verts = obstacle.vertices
    center = verts.mean(axis=0)
    direction = center - p
    nrm = float(np.linalg.norm(direction))
    if nrm < 1e-12:
        raise ProblemError("point coincides with the obstacle center")
    na = direction / nrm
    lo_v = float(np.min(verts @ na))
    gap = lo_v - float(na @ p)
    nb = -lo_v
    scale = max(1.0, abs(na[0]), abs(na[1]), abs(nb))
    if gap / scale <= obstacle.r_safe + 1e-12:
        raise ProblemError("no separating hyperplane with the required margin")
    return np.array([na[0], na[1], nb]) / scale


def rollout(spec: OcpSpec, u_const: np.ndarray, T0: float) -> np.ndarray:
    """States x_0..x_N under a constant control over horizon T0."""
    A, B = _system_matrices(spec.system)
    Ad, Bd, _, _ = rk4_discrete_pair(A, B, T0 / spec.N)
    xs = np.zeros((spec.N + 1, spec.n_x))
    xs[0] = spec.x_start
    for k in range(spec.N):
        xs[k + 1] = Ad @ xs[k] + Bd @ u_const
    return xs


def init_feasible(spec: OcpSpec, u_const, T0: float) -> np.ndarray:
    """Exactly feasible decision vector from a constant-control rollout.

    Endpoint mismatch is absorbed by the terminal slack, converted
    inequalities get their exact residual as slack value, and hyperplane
    parameters are chosen from the rollout geometry. Raises when the
    rollout breaks a hard constraint.
    """
    u_const = np.asarray(u_const, dtype=float).reshape(-1)
    if u_const.size != spec.n_u:
        raise ProblemError(f"u_const must have length {spec.n_u}")
    if np.any(u_const < spec.u_min - 1e-12) or np.any(u_const > spec.u_max + 1e-12):
        raise ProblemError("u_const violates the control box")
    if not (spec.T_bounds[0] <= T0 <= spec.T_bounds[1]):
        raise ProblemError("T0 outside the horizon bounds")

    layout = OcpLayout.build(spec)
    xs = rollout(spec, u_const, T0)
    if np.any(xs < spec.x_min - 1e-9) or np.any(xs > spec.x_max + 1e-9):
        raise ProblemError("constant-control rollout leaves the state box")

    w = np.zeros(layout.n_w)
    w[: spec.n_x * (spec.N + 1)] = xs.ravel()
    for k in range(spec.N):
        w[layout.u_slice(k)] = u_const
    w[layout.off_s0 : layout.off_s0 + spec.n_x] = 0.0
    w[layout.off_sN : layout.off_sN + spec.n_x] = np.abs(xs[spec.N] - spec.x_end)
    w[layout.idx_T] = T0

    half = spec.n_x // 2
    if spec.v_max is not None:
        for k in range(spec.N):
            slack = spec.v_max**2 - float(np.sum(xs[k, half:] ** 2))
            if slack < 0.0:
                raise ProblemError("rollout violates the speed bound")
            w[layout.off_svel + k] = slack
    if spec.u_ball is not None:
        slack = spec.u_ball**2 - float(np.sum(u_const**2))
        if slack < 0.0:
            raise ProblemError("u_const violates the control-norm bound")
        for k in range(spec.N):
            w[layout.off_suball + k] = slack
    if spec.obstacle is not None:
        for k in range(spec.N):
            plane = separating_hyperplane(xs[k, :2], spec.obstacle)
            w[layout.hyper_slice(k)] = plane
            resid = float(plane[:2] @ xs[k, :2]) + plane[2] + spec.obstacle.r_safe
            if resid > 0.0:
                raise ProblemError("rollout point too close to the obstacle")
            w[layout.off_sobs + k] = -resid
    return w


def perturbed_test_set(
    spec: OcpSpec, count: int, magnitude: float, seed: int
) -> List[OcpSpec]:
    """Copies of ``spec`` with endpoint positions perturbed uniformly.

    Draws come from the documented LCG in a fixed order, so a seed pins the
    whole set. Perturbed endpoints must stay inside the state box.
    """
    if count < 1:
        raise ProblemError("count must be positive")
    if magnitude < 0.0:
        raise ProblemError("magnitude must be nonnegative")
    rng = Lcg64(seed)
    half = spec.n_x // 2
    out = []
    for _ in range(count):
        x_start = spec.x_start.copy()
        x_end = spec.x_end.copy()
        for i in range(half):
            x_start[i] += rng.uniform(-magnitude, magnitude)
        for i in range(half):
            x_end[i] += rng.uniform(-magnitude, magnitude)
        for vec, name in ((x_start, "x_start"), (x_end, "x_end")):
            if np.any(vec < spec.x_min) or np.any(vec > spec.x_max):
                raise ProblemError(f"perturbed {name} leaves the state box")
        out.append(dataclasses.replace(spec, x_start=x_start, x_end=x_end))
    return out


def analytic_min_time(spec: OcpSpec) -> float:
    """Continuous-time minimum horizon for rest-to-rest straight-line motion.

    Bang-bang when the peak speed stays under the cap, otherwise
    accelerate-cruise-decelerate. Only shapes with a well-defined scalar
    acceleration bound are supported.
    """
    half = spec.n_x // 2
    if np.any(spec.x_start[half:] != 0.0) or np.any(spec.x_end[half:] != 0.0):
        raise ProblemError("analytic horizon needs rest-to-rest endpoints")
    if spec.obstacle is not None:
        raise ProblemError("analytic horizon does not cover obstacles")
    delta = spec.x_end[:half] - spec.x_start[:half]
    d = float(np.linalg.norm(delta))
    if d == 0.0:
        return 0.0

    if spec.system == DOUBLE_INTEGRATOR_1D:
        a = float(min(spec.u_max[0], -spec.u_min[0]))
        caps = [v for v in (spec.x_max[1], -spec.x_min[1]) if np.isfinite(v)]
        v_cap = min(caps) if caps else None
    else:
        if spec.u_ball is not None:
            a = float(spec.u_ball)
        else:
            moving = np.flatnonzero(np.abs(delta) > 1e-14)
            if moving.size != 1:
                raise ProblemError("box-limited 2D motion must be axis-aligned")
            i = int(moving[0])
            a = float(min(spec.u_max[i], -spec.u_min[i]))
        v_cap = spec.v_max
    if a <= 0.0:
        raise ProblemError("acceleration bound must be positive")
    peak = math.sqrt(d * a)
    if v_cap is None or peak <= v_cap:
        return 2.0 * math.sqrt(d / a)
    return d / v_cap + v_cap / a


# ---------------------------------------------------------------------------
# Named fixtures used by the command line and the benchmark suites


def default_pointmass2d_spec(N: int = 6) -> OcpSpec:
    """Planar point mass with an active speed ball along most of the cruise."""
    return OcpSpec(
        N=N,
        system=POINT_MASS_2D,
        x_start=np.array([0.0, 0.0, 0.0, 0.0]),
        x_end=np.array([0.36, 0.16, 0.0, 0.0]),
        u_min=np.array([-1.0, -1.0]),
        u_max=np.array([1.0, 1.0]),
        x_min=np.array([-2.0, -2.0, -2.0, -2.0]),
        x_max=np.array([2.0, 2.0, 2.0, 2.0]),
        mu0=np.full(4, 100.0),
        muN=np.full(4, 100.0),
        v_max=0.25,
        T_bounds=(0.2, 6.0),
    )


def default_doubleint1d_spec(N: int = 15, v_cap: Optional[float] = None) -> OcpSpec:
    """1D double integrator; odd N keeps the optimal switch off the grid."""
    vel = 3.0 if v_cap is None else float(v_cap)
    return OcpSpec(
        N=N,
        system=DOUBLE_INTEGRATOR_1D,
        x_start=np.array([0.0, 0.0]),
        x_end=np.array([0.9, 0.0]),
        u_min=np.array([-1.0]),
        u_max=np.array([1.0]),
        x_min=np.array([-2.0, -vel]),
        x_max=np.array([2.0, vel]),
        mu0=np.full(2, 100.0),
        muN=np.full(2, 100.0),
        T_bounds=(0.2, 6.0),
    )


def time_optimal_1d_spec(N: int = 40, v_cap: Optional[float] = None) -> OcpSpec:
    """Unit-distance rest-to-rest fixture with a known analytic horizon."""
    base = default_doubleint1d_spec(N=N, v_cap=v_cap)
    return dataclasses.replace(base, x_end=np.array([1.0, 0.0]))


# Benchmark suite protocols. ``cfg`` carries per-suite solver settings:
# the fully determined 1D suite caps the radius at its initial value, which
# keeps the free horizon from being driven across its nonlinearity range in
# a single step (both variants then converge in a handful of outer steps).
SUITE_DEFAULTS = {
    "pointmass2d": dict(
        spec_fn=default_pointmass2d_spec, u_const=[0.0, 0.0], T0=1.8, magnitude=0.01, cfg={}
    ),
    "doubleint1d": dict(
        spec_fn=default_doubleint1d_spec, u_const=[0.0], T0=2.0, magnitude=0.01,
        cfg={"delta_max": 0.25},
    ),
}


def named_problem(name: str):
    """(nlp, feasible_start) for the fixtures reachable from the CLI."""
    if name == "circle":
        nlp, start, _ = circle_problem(False)
        return nlp, start
    if name == "circle-ineq":
        nlp, start, _ = circle_problem(True)
        return nlp, start
    if name == "doubleint1d":
        spec = default_doubleint1d_spec()
        return build_p2p_ocp(spec), init_feasible(spec, [0.0], 2.0)
    if name == "doubleint1d-vmax":
        spec = time_optimal_1d_spec(N=40, v_cap=0.5)
        return build_p2p_ocp(spec), init_feasible(spec, [0.0], 2.5)
    if name == "pointmass2d":
        spec = default_pointmass2d_spec()
        return build_p2p_ocp(spec), init_feasible(spec, [0.0, 0.0], 1.8)
    raise ProblemError(f"unknown problem {name!r}")
