"""Tests for the benchmark problem builders and initializers."""

import dataclasses
import json
import math

import numpy as np
import pytest

import fslp
from fslp import model, outer, problems
from fslp.model import Classification, EvalCounters
from fslp.problems import (
    Lcg64,
    Obstacle,
    OcpSpec,
    ProblemError,
    analytic_min_time,
    build_p2p_ocp,
    build_p2p_ocp_with_layout,
    circle_problem,
    default_doubleint1d_spec,
    default_pointmass2d_spec,
    init_feasible,
    perturbed_test_set,
    rollout,
    separating_hyperplane,
    time_optimal_1d_spec,
)

from oracles import fd_jacobian


def small_2d_spec(N=3, **overrides):
    base = default_pointmass2d_spec(N=N)
    return dataclasses.replace(base, **overrides) if overrides else base


class TestCircleFixture:
    def test_feasible_starts(self):
        for flag in (False, True):
            nlp, start, _ = circle_problem(flag)
            assert fslp.infeasibility(nlp, start, EvalCounters()) == 0.0

    def test_classifications_at_known_optima(self):
        nlp, _, opt = circle_problem(False)
        assert model.classify_solution(nlp, opt, 1e-8, EvalCounters()) == \
            Classification.UNDER_DETERMINED
        nlp2, _, opt2 = circle_problem(True)
        assert model.classify_solution(nlp2, opt2, 1e-8, EvalCounters()) == \
            Classification.FULLY_DETERMINED


class TestSpecValidation:
    def test_v_max_rejected_for_1d(self):
        with pytest.raises(ProblemError, match="state box"):
            dataclasses.replace(default_doubleint1d_spec(), v_max=0.5)

    def test_obstacle_rejected_for_1d(self):
        obs = Obstacle(np.array([[0.4, 0.1], [0.5, 0.1], [0.5, 0.2], [0.4, 0.2]]), 0.02)
        with pytest.raises(ProblemError):
            dataclasses.replace(default_doubleint1d_spec(), obstacle=obs)

    def test_horizon_and_penalties(self):
        with pytest.raises(ProblemError):
            dataclasses.replace(default_doubleint1d_spec(), N=1)
        with pytest.raises(ProblemError):
            dataclasses.replace(default_doubleint1d_spec(), mu0=np.zeros(2))
        with pytest.raises(ProblemError):
            dataclasses.replace(default_doubleint1d_spec(), T_bounds=(0.0, 1.0))

    def test_json_round_trip(self):
        obs = Obstacle(np.array([[0.1, 0.1], [0.2, 0.1], [0.2, 0.2], [0.1, 0.2]]), 0.02)
        spec = small_2d_spec(obstacle=obs, u_ball=0.9)
        back = OcpSpec.from_json(spec.to_json())
        assert back.N == spec.N and back.system == spec.system
        assert np.array_equal(back.x_end, spec.x_end)
        assert back.v_max == spec.v_max and back.u_ball == spec.u_ball
        assert np.array_equal(back.obstacle.vertices, spec.obstacle.vertices)
        assert back.T_bounds == spec.T_bounds


class TestTranscriptionShape:
    def test_equality_row_count_pointmass(self):
        # defects + velocity-ball rows (+ control-ball rows when present)
        spec = small_2d_spec(N=3)
        nlp = build_p2p_ocp(spec)
        assert nlp.n_g == 4 * 3 + 3
        spec_b = small_2d_spec(N=3, u_ball=0.9)
        assert build_p2p_ocp(spec_b).n_g == 4 * 3 + 3 + 3

    def test_decision_vector_layout(self):
        spec = small_2d_spec(N=3)
        nlp, layout = build_p2p_ocp_with_layout(spec)
        # states 16, controls 6, s0+sN 8, T 1, ball slacks 3
        assert nlp.n_w == 16 + 6 + 8 + 1 + 3
        # trust region covers shooting states, controls and the horizon
        assert nlp.n_y == 4 * 3 + 2 * 3 + 1
        assert layout.idx_T in nlp.py_indices
        assert layout.off_svel not in nlp.py_indices

    def test_obstacle_rows_per_stage(self):
        obs = Obstacle(np.array([[0.1, 0.1], [0.2, 0.1], [0.2, 0.2], [0.1, 0.2]]), 0.02)
        plain = small_2d_spec(N=3)
        with_obs = small_2d_spec(N=3, obstacle=obs)
        a0 = build_p2p_ocp(plain).n_b
        a1 = build_p2p_ocp(with_obs).n_b
        # per stage: 4 vertex rows + 6 norm-box rows + 1 slack row
        assert a1 - a0 == 3 * (4 + 6 + 1)
        # hyperplane normals (not offsets) join the nonlinear selection
        nlp, layout = build_p2p_ocp_with_layout(with_obs)
        py = set(nlp.py_indices.tolist())
        for k in range(3):
            base = layout.off_hyper + 3 * k
            assert base in py and base + 1 in py
            assert base + 2 not in py

    def test_defects_vanish_on_exact_rollout(self):
        spec = default_doubleint1d_spec(N=5)
        nlp = build_p2p_ocp(spec)
        w = init_feasible(spec, [0.4], 1.0)
        resid = model.eval_equality_residual(nlp, w, EvalCounters())
        assert np.max(np.abs(resid[: 2 * 5])) <= 1e-12

    def test_jacobian_matches_finite_differences(self):
        obs = Obstacle(np.array([[0.6, 0.6], [0.8, 0.6], [0.8, 0.8], [0.6, 0.8]]), 0.02)
        spec = small_2d_spec(N=3, u_ball=0.9, obstacle=obs)
        nlp = build_p2p_ocp(spec)
        rng = np.random.default_rng(0)
        w0 = init_feasible(spec, [0.0, 0.0], 1.8)
        y0 = nlp.select_y(w0)
        for _ in range(100):
            y = y0 + rng.uniform(-0.3, 0.3, nlp.n_y)
            jac = nlp.g_jacobian(y)
            ref = fd_jacobian(nlp.g, y)
            scale = 1.0 + np.max(np.abs(ref))
            assert np.max(np.abs(jac - ref)) / scale <= 1e-5


class TestInitFeasible:
    def test_stationary_rollout(self):
        spec = default_doubleint1d_spec()
        w = init_feasible(spec, [0.0], 1.0)
        nlp, layout = build_p2p_ocp_with_layout(spec)
        sN = w[layout.off_sN: layout.off_sN + 2]
        assert sN == pytest.approx(np.abs(spec.x_start - spec.x_end))
        assert fslp.infeasibility(nlp, w, EvalCounters()) <= 1e-10

    @pytest.mark.parametrize("name,spec,u0,T0", [
        ("1d", default_doubleint1d_spec(), [0.0], 2.0),
        ("2d", default_pointmass2d_spec(), [0.0, 0.0], 1.8),
        ("2d-ball", small_2d_spec(N=4, u_ball=0.9), [0.0, 0.0], 1.8),
    ])
    def test_exactly_feasible(self, name, spec, u0, T0):
        nlp = build_p2p_ocp(spec)
        w = init_feasible(spec, u0, T0)
        assert fslp.infeasibility(nlp, w, EvalCounters()) <= 1e-10

    def test_obstacle_initialization(self):
        obs = Obstacle(np.array([[0.6, 0.6], [0.8, 0.6], [0.8, 0.8], [0.6, 0.8]]), 0.02)
        spec = small_2d_spec(N=4, obstacle=obs)
        nlp = build_p2p_ocp(spec)
        w = init_feasible(spec, [0.0, 0.0], 1.8)
        assert fslp.infeasibility(nlp, w, EvalCounters()) <= 1e-10

    def test_point_inside_obstacle_rejected(self):
        obs = Obstacle(np.array([[-0.1, -0.1], [0.1, -0.1], [0.1, 0.1], [-0.1, 0.1]]), 0.02)
        spec = small_2d_spec(N=4, obstacle=obs)  # start (0,0) sits inside
        with pytest.raises(ProblemError):
            init_feasible(spec, [0.0, 0.0], 1.8)

    def test_rollout_leaving_box_rejected(self):
        spec = default_doubleint1d_spec()
        with pytest.raises(ProblemError, match="state box"):
            init_feasible(spec, [1.0], 6.0)

    def test_control_bound_checked(self):
        spec = default_doubleint1d_spec()
        with pytest.raises(ProblemError):
            init_feasible(spec, [2.0], 1.0)
        with pytest.raises(ProblemError):
            init_feasible(spec, [0.0], 0.05)


class TestHyperplane:
    def test_separates_with_margin(self):
        obs = Obstacle(np.array([[0.5, 0.5], [0.7, 0.5], [0.7, 0.7], [0.5, 0.7]]), 0.05)
        p = np.array([0.0, 0.0])
        plane = separating_hyperplane(p, obs)
        assert np.max(np.abs(plane)) <= 1.0 + 1e-12
        assert plane[:2] @ p + plane[2] + obs.r_safe <= 0.0
        for v in obs.vertices:
            assert plane[:2] @ v + plane[2] >= -1e-12


class TestPerturbedSet:
    def test_zero_magnitude_copies(self):
        spec = default_pointmass2d_spec()
        out = perturbed_test_set(spec, 5, 0.0, 7)
        for s in out:
            assert np.array_equal(s.x_start, spec.x_start)
            assert np.array_equal(s.x_end, spec.x_end)

    def test_seed_determinism(self):
        spec = default_pointmass2d_spec()
        a = perturbed_test_set(spec, 10, 0.01, 42)
        b = perturbed_test_set(spec, 10, 0.01, 42)
        for sa, sb in zip(a, b):
            assert np.array_equal(sa.x_start, sb.x_start)
            assert np.array_equal(sa.x_end, sb.x_end)

    def test_whole_set_initializes_feasibly(self):
        spec = default_pointmass2d_spec()
        for s in perturbed_test_set(spec, 100, 0.01, 42):
            nlp = build_p2p_ocp(s)
            w = init_feasible(s, [0.0, 0.0], 1.8)
            assert fslp.infeasibility(nlp, w, EvalCounters()) <= 1e-10

    def test_box_violation_rejected(self):
        spec = default_pointmass2d_spec()
        with pytest.raises(ProblemError):
            perturbed_test_set(spec, 3, 10.0, 1)

    def test_only_positions_perturbed(self):
        spec = default_pointmass2d_spec()
        for s in perturbed_test_set(spec, 5, 0.01, 3):
            assert np.array_equal(s.x_start[2:], spec.x_start[2:])
            assert np.array_equal(s.x_end[2:], spec.x_end[2:])
            assert np.any(s.x_start[:2] != spec.x_start[:2])


class TestLcg:
    def test_documented_recurrence(self):
        gen = Lcg64(42)
        state = 42
        for _ in range(5):
            state = (6364136223846793005 * state + 1442695040888963407) % (1 << 64)
            assert gen.next_u64() == state

    def test_uniform_range_and_determinism(self):
        a = Lcg64(7)
        b = Lcg64(7)
        for _ in range(100):
            ua, ub = a.uniform(-0.5, 0.5), b.uniform(-0.5, 0.5)
            assert ua == ub
            assert -0.5 <= ua < 0.5


class TestAnalyticMinTime:
    def test_unit_bang_bang(self):
        spec = time_optimal_1d_spec(N=40)
        assert analytic_min_time(spec) == pytest.approx(2.0)

    def test_cruise_arc(self):
        spec = time_optimal_1d_spec(N=40, v_cap=0.5)
        assert analytic_min_time(spec) == pytest.approx(2.5)

    def test_degenerate_distance(self):
        spec = dataclasses.replace(time_optimal_1d_spec(N=10), x_end=np.zeros(2))
        assert analytic_min_time(spec) == 0.0

    def test_ball_limited_2d(self):
        spec = small_2d_spec(N=4, u_ball=1.0, v_max=None,
                             x_end=np.array([0.6, 0.8, 0.0, 0.0]))
        assert analytic_min_time(spec) == pytest.approx(2.0)

    def test_unsupported_shapes(self):
        moving = dataclasses.replace(
            default_doubleint1d_spec(), x_end=np.array([0.9, 0.5]))
        with pytest.raises(ProblemError):
            analytic_min_time(moving)
        diag = small_2d_spec(N=4, v_max=None, x_end=np.array([0.5, 0.5, 0.0, 0.0]))
        with pytest.raises(ProblemError):
            analytic_min_time(diag)


class TestRk4Discretization:
    def test_exact_for_double_integrator(self):
        A, B = problems._system_matrices(problems.DOUBLE_INTEGRATOR_1D)
        Ad, Bd, dAd, dBd = problems.rk4_discrete_pair(A, B, 0.3)
        x = np.array([1.0, -2.0])
        u = np.array([0.5])
        ref = np.array([1.0 - 2.0 * 0.3 + 0.5 * 0.3 ** 2 / 2, -2.0 + 0.5 * 0.3])
        assert Ad @ x + Bd @ u == pytest.approx(ref, abs=1e-15)
        eps = 1e-7
        Ad2, Bd2, _, _ = problems.rk4_discrete_pair(A, B, 0.3 + eps)
        assert (Ad2 - Ad) / eps == pytest.approx(dAd, abs=1e-6)
        assert (Bd2 - Bd) / eps == pytest.approx(dBd, abs=1e-6)


class TestSolverFacingClassification:
    def test_pointmass_optimum_with_speed_ball_is_underdetermined(self):
        spec = default_pointmass2d_spec()
        nlp, layout = build_p2p_ocp_with_layout(spec)
        w0 = init_feasible(spec, [0.0, 0.0], 1.8)
        rep = outer.solve(nlp, w0, outer.make_config(None, record_iterates=False,
                                                     model_tol=1e-6))
        assert rep.status == "Optimal"
        svel = rep.w_star[layout.off_svel: layout.off_svel + spec.N]
        assert np.min(np.abs(svel)) <= 1e-8  # the ball is active somewhere
        out = model.classify_solution(nlp, rep.w_star, 1e-8, EvalCounters())
        assert out == Classification.UNDER_DETERMINED

    def test_doubleint_optimum_is_fully_determined(self):
        spec = default_doubleint1d_spec()
        nlp, _ = build_p2p_ocp_with_layout(spec)
        w0 = init_feasible(spec, [0.0], 2.0)
        rep = outer.solve(nlp, w0, outer.make_config(None, record_iterates=False,
                                                     model_tol=1e-6, delta_max=0.25))
        assert rep.status == "Optimal"
        out = model.classify_solution(nlp, rep.w_star, 1e-8, EvalCounters())
        assert out == Classification.FULLY_DETERMINED


def test_named_problem_registry():
    names = ("circle", "circle-ineq", "doubleint1d", "doubleint1d-vmax", "pointmass2d")
    for name in names:
        nlp, start = problems.named_problem(name)
        assert fslp.infeasibility(nlp, start, EvalCounters()) <= 1e-10
    with pytest.raises(ProblemError):
        problems.named_problem("nope")
