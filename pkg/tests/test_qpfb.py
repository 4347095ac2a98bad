import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from icpbalance.geom import ConvexPolygon
from icpbalance.lip import RobotParams
from icpbalance.qpfb import (
    FeedbackGains,
    FeedbackInfeasibleError,
    FeedbackSolver,
    build_problem,
    momentum_rate,
    solve_feedback,
    vertical_force,
)

FOOT = ConvexPolygon.rectangle((0.0, 0.0), 0.22, 0.11)
ZERO = (np.zeros(2), np.zeros(2))


def random_instance(rng):
    """Random support polygon, reference CoP inside it, error and gains."""
    n = int(rng.integers(3, 12))
    ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    rad = rng.uniform(0.05, 0.2, n)
    support = ConvexPolygon(np.column_stack((rad * np.cos(ang), rad * np.sin(ang))) + rng.normal(0, 0.5, 2))
    lo, hi = support.vertices.min(0), support.vertices.max(0)
    while True:
        cop = lo + (hi - lo) * rng.random(2)
        if support.contains(cop):
            break
    gains = FeedbackGains(
        k_p=np.diag(rng.uniform(1.0, 4.0, 2)),
        Q_e=rng.uniform(0.5, 2.0),
        Q_perp=rng.uniform(0.0, 20.0),
        R_delta=rng.uniform(1e-4, 1e-2),
        R_kappa=rng.uniform(1e-4, 1e-2),
        R_p=rng.uniform(0.0, 1e-1),
        kappa_min=-rng.uniform(0.0, 0.08, 2),
        kappa_max=rng.uniform(0.0, 0.08, 2),
    )
    error = rng.normal(0, 0.15, 2)
    previous = (rng.normal(0, 0.05, 2), rng.normal(0, 0.02, 2))
    kappa_ref = rng.uniform(gains.kappa_min, gains.kappa_max) * 0.5
    return error, cop, kappa_ref, support, gains, previous


def feasible_samples(rng, support, cop, gains, n):
    lo, hi = support.vertices.min(0), support.vertices.max(0)
    out = []
    while sum(len(o) for o in out) < n:
        c = lo + (hi - lo) * rng.random((4 * n, 2))
        c = c[support.contains_points(c, 0.0)]
        out.append(c - cop)
    d = np.concatenate(out)[:n]
    k = gains.kappa_min + (gains.kappa_max - gains.kappa_min) * rng.random((n, 2))
    return np.hstack((d, k))


def test_zero_error_zero_feedback():
    c = solve_feedback((0, 0), ((0.01, 0.0), (0, 0)), FOOT, FeedbackGains(), ZERO)
    assert np.allclose(c.delta, 0) and np.allclose(c.kappa, 0)
    assert np.allclose(c.cop_desired, (0.01, 0.0))


def test_unconstrained_reduces_to_proportional_feedback():
    g = FeedbackGains(R_delta=0.0, R_kappa=0.0, R_p=0.0)
    e = np.array([0.01, -0.005])
    c = solve_feedback(e, ((0, 0), (0, 0)), FOOT, g, ZERO)
    assert np.allclose(c.delta + c.kappa, g.k_p @ e, atol=1e-9)


def test_saturated_feedback_stays_parallel():
    # [DERIVED] dense grid over feasible (delta, kappa) gives delta + kappa =
    # (0.16, 0.0525), 0.27 deg off k_p e; the exact optimum is (0.16, 0.0535)
    g = FeedbackGains(Q_perp=1000.0)
    e = np.array([0.3, 0.1])
    c = solve_feedback(e, ((0, 0), (0, 0)), FOOT, g, ZERO)
    v, a = c.delta + c.kappa, g.k_p @ e
    ang = math.degrees(abs(math.atan2(v[1], v[0]) - math.atan2(a[1], a[0])))
    assert ang < 1.0
    assert np.allclose(v, (0.16, 0.0525), atol=2e-3)
    assert FOOT.contains(c.cop_desired, 1e-7)


def test_command_consistency():
    rng = np.random.default_rng(2)
    for _ in range(50):
        e, cop, kr, S, g, prev = random_instance(rng)
        c = solve_feedback(e, (cop, kr), S, g, prev)
        assert np.allclose(c.cop_desired, cop + c.delta)
        assert np.allclose(c.ecmp_desired, c.cop_desired + c.kappa)
        assert S.contains(c.cop_desired, 1e-7)
        assert np.all(c.kappa >= g.kappa_min) and np.all(c.kappa <= g.kappa_max)
        assert c.kkt_residual < 1e-8


@pytest.mark.parametrize("seed", range(20))
def test_beats_random_feasible_samples(seed):
    rng = np.random.default_rng(seed)
    e, cop, kr, S, g, prev = random_instance(rng)
    c = solve_feedback(e, (cop, kr), S, g, prev)
    prob = build_problem(e, cop, kr, S, g, prev)
    best = prob.objective(feasible_samples(rng, S, cop, g, 2000)).min()
    assert prob.objective(np.concatenate([c.delta, c.kappa])) <= best + 1e-12


def test_degenerate_support_rejected():
    with pytest.raises(FeedbackInfeasibleError):
        solve_feedback((0.1, 0), ((0, 0), (0, 0)), ConvexPolygon([(0, 0), (1, 0)]), FeedbackGains())


@pytest.mark.parametrize(
    "kw", [dict(Q_e=0.0), dict(R_p=-1.0), dict(kappa_min=0.01), dict(kappa_max=-0.01), dict(k_p=np.ones(3))]
)
def test_gain_validation(kw):
    with pytest.raises(ValueError):
        FeedbackGains(**kw)


def test_scalar_gain_broadcast_and_equality():
    g = FeedbackGains(k_p=3.0, kappa_min=-0.1, kappa_max=0.1)
    assert np.allclose(g.k_p, 3 * np.eye(2))
    assert g == FeedbackGains(k_p=3 * np.eye(2), kappa_min=[-0.1, -0.1], kappa_max=[0.1, 0.1])
    assert g != FeedbackGains()


def test_direction_term_dropped_at_zero_error():
    p = build_problem((0, 0), (0, 0), (0, 0), FOOT, FeedbackGains(Q_perp=50.0))
    q = build_problem((0, 0), (0, 0), (0, 0), FOOT, FeedbackGains(Q_perp=0.0))
    assert np.allclose(p.H, q.H)


def test_solver_warm_start_matches_cold():
    rng = np.random.default_rng(9)
    solver = FeedbackSolver()
    cold_prev = ZERO
    for e in rng.normal(0, 0.2, (40, 2)):
        warm = solver.solve(e, (0.0, 0.0), (0.0, 0.0), FOOT)
        cold = solve_feedback(e, ((0, 0), (0, 0)), FOOT, solver.gains, cold_prev)
        cold_prev = (cold.delta, cold.kappa)
        assert np.allclose(warm.delta, cold.delta, atol=1e-9)
        assert np.allclose(warm.kappa, cold.kappa, atol=1e-9)


@given(st.integers(0, 10_000), st.floats(1e-6, 1e-3))
def test_continuity_through_previous_solution(seed, eps):
    rng = np.random.default_rng(seed)
    e, cop, kr, S, g, prev = random_instance(rng)
    if g.R_p <= 1e-3:
        g = FeedbackGains(g.k_p, g.Q_e, g.Q_perp, g.R_delta, g.R_kappa, 0.05, g.kappa_min, g.kappa_max)
    a = solve_feedback(e, (cop, kr), S, g, prev)
    d = rng.normal(size=2)
    b = solve_feedback(e + eps * d / np.linalg.norm(d), (cop, kr), S, g, prev)
    jump = np.linalg.norm(np.concatenate([a.delta - b.delta, a.kappa - b.kappa]))
    bound = np.linalg.norm(g.k_p, 2) * eps * g.Q_e / g.R_p + eps
    assert jump <= bound


@given(st.integers(0, 10_000))
def test_deterministic(seed):
    rng = np.random.default_rng(seed)
    e, cop, kr, S, g, prev = random_instance(rng)
    a = solve_feedback(e, (cop, kr), S, g, prev)
    b = solve_feedback(e, (cop, kr), S, g, prev)
    assert np.array_equal(a.delta, b.delta) and np.array_equal(a.kappa, b.kappa)


def test_momentum_rate():
    p = RobotParams(mass=1.0, gravity=1.0, com_height=1.0)
    assert np.allclose(momentum_rate((1, 0), (0, 0), p), (1, 0))
    assert np.allclose(momentum_rate((0.3, 0.2), (0.3, 0.2), p), 0)
    q = RobotParams()
    x, r = np.array([0.1, -0.2]), np.array([0.05, 0.01])
    assert np.allclose(momentum_rate(r + 2 * (x - r), r, q), 2 * momentum_rate(x, r, q))
    assert vertical_force(q) == pytest.approx(q.mass * q.gravity)
