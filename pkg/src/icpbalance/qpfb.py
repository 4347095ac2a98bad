"""ICP feedback as a small QP over CoP and eCMP offsets.

Decision variables are ``z = (delta, kappa)``: the CoP shift from the
reference CoP and the eCMP-CoP offset.  The objective is

    Q_e |delta + kappa - k_p e|^2 + Q_perp |P (delta + kappa)|^2
    + R_delta |delta|^2 + R_kappa |kappa - kappa_r|^2 + R_p |z - z_prev|^2

where ``e`` is the ICP error and ``P`` removes the component along
``k_p e``.  The CoP must stay in the support polygon and ``kappa`` in a box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .geom import ConvexPolygon, as_point, project_point
from .lip import RobotParams

DIRECTION_EPS = 1e-9
SINGULAR_REG = 1e-12
FEAS_TOL = 1e-12


class FeedbackInfeasibleError(ValueError):
    """The support polygon admits no CoP (empty or degenerate)."""


@dataclass(frozen=True, eq=False)
class FeedbackGains:
    k_p: np.ndarray = field(default_factory=lambda: 2.0 * np.eye(2))
    Q_e: float = 1.0
    Q_perp: float = 10.0
    R_delta: float = 1e-3
    R_kappa: float = 1e-3
    R_p: float = 1e-2
    kappa_min: np.ndarray = field(default_factory=lambda: np.full(2, -0.05))
    kappa_max: np.ndarray = field(default_factory=lambda: np.full(2, 0.05))

    def __post_init__(self):
        kp = np.asarray(self.k_p, dtype=float)
        if kp.ndim == 0:
            kp = float(kp) * np.eye(2)
        object.__setattr__(self, "k_p", kp)
        object.__setattr__(self, "kappa_min", np.broadcast_to(np.asarray(self.kappa_min, float), (2,)).copy())
        object.__setattr__(self, "kappa_max", np.broadcast_to(np.asarray(self.kappa_max, float), (2,)).copy())
        if kp.shape != (2, 2) or not np.all(np.isfinite(kp)):
            raise ValueError("k_p must be a finite 2x2 matrix")
        if not self.Q_e > 0:
            raise ValueError("Q_e must be positive")
        for name in ("Q_perp", "R_delta", "R_kappa", "R_p"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")
        if np.any(self.kappa_min > 0) or np.any(self.kappa_max < 0):
            raise ValueError("kappa bounds must bracket zero")

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeedbackGains):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in self.__dataclass_fields__)


@dataclass(frozen=True)
class FeedbackCommand:
    delta: np.ndarray
    kappa: np.ndarray
    cop_desired: np.ndarray
    ecmp_desired: np.ndarray
    momentum_rate: Optional[np.ndarray] = None
    kkt_residual: float = 0.0
    iterations: int = 0
    active: Tuple[int, ...] = ()


@dataclass
class QPProblem:
    """``min 1/2 z'Hz + f'z  s.t.  G z <= h``."""

    H: np.ndarray
    f: np.ndarray
    G: np.ndarray
    h: np.ndarray

    def objective(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            return 0.5 * z @ self.H @ z + self.f @ z
        return 0.5 * np.einsum("ij,jk,ik->i", z, self.H, z) + z @ self.f

    def kkt_residual(self, z, lam) -> float:
        stat = np.abs(self.H @ z + self.f + self.G.T @ lam).max()
        slack = self.G @ z - self.h
        primal = max(float(slack.max()), 0.0)
        dual = max(float(-lam.min()), 0.0) if lam.size else 0.0
        comp = float(np.abs(lam * slack).max()) if lam.size else 0.0
        return float(max(stat, primal, dual, comp))


def build_problem(error, cop_ref, kappa_ref, support: ConvexPolygon, gains: FeedbackGains, previous=None) -> QPProblem:
    error, cop_ref, kappa_ref = as_point(error), as_point(cop_ref), as_point(kappa_ref)
    if previous is None:
        dp = kp = np.zeros(2)
    else:
        dp, kp = as_point(previous[0]), as_point(previous[1])
    a = gains.k_p @ error
    # every term acting on v = delta + kappa collapses into v'Wv - 2 Q_e a'v
    W = gains.Q_e * np.eye(2)
    na = math.hypot(a[0], a[1])
    if na >= DIRECTION_EPS and gains.Q_perp > 0:
        u = a / na
        W = W + gains.Q_perp * (np.eye(2) - np.outer(u, u))
    H = np.empty((4, 4))
    H[:2, :2] = W + (gains.R_delta + gains.R_p) * np.eye(2)
    H[2:, 2:] = W + (gains.R_kappa + gains.R_p) * np.eye(2)
    H[:2, 2:] = W
    H[2:, :2] = W
    H *= 2.0
    f = -2.0 * np.concatenate([gains.Q_e * a + gains.R_p * dp, gains.Q_e * a + gains.R_kappa * kappa_ref + gains.R_p * kp])

    A, b = support.halfspaces()
    m = len(A)
    G = np.zeros((m + 4, 4))
    h = np.empty(m + 4)
    G[:m, :2] = A
    h[:m] = b - A @ cop_ref
    G[m, 2] = G[m + 1, 3] = 1.0
    G[m + 2, 2] = G[m + 3, 3] = -1.0
    h[m : m + 2] = gains.kappa_max
    h[m + 2 :] = -gains.kappa_min
    return QPProblem(H, f, G, h)


def active_set_qp(prob: QPProblem, z0: np.ndarray, working=(), max_iter: int = 200):
    """Primal active-set method from a feasible start.

    Returns ``(z, lam, active, iterations)``; ``lam`` covers all rows of G.
    """
    f, G, h = prob.f, prob.G, prob.h
    # a tiny ridge keeps the KKT matrix nonsingular when weights vanish
    H = prob.H + SINGULAR_REG * np.eye(prob.H.shape[0])
    n = H.shape[0]
    z = np.array(z0, dtype=float)
    W = [i for i in working if i < len(h) and abs(G[i] @ z - h[i]) <= 1e-10]
    lam = np.zeros(len(h))
    it = 0
    for it in range(1, max_iter + 1):
        # solve the equality-constrained subproblem for the iterate itself so
        # the final point is exactly stationary on its working set
        k = len(W)
        if k:
            Gw = G[W]
            K = np.zeros((n + k, n + k))
            K[:n, :n] = H
            K[:n, n:] = Gw.T
            K[n:, :n] = Gw
            rhs = np.concatenate([-f, h[W]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            target, mu = sol[:n], sol[n:]
        else:
            target, mu = np.linalg.solve(H, -f), np.zeros(0)
        p = target - z
        if np.max(np.abs(p)) <= 1e-10 * (1.0 + np.max(np.abs(z))):
            z = target
            if k == 0 or mu.min() >= -1e-12:
                lam[:] = 0.0
                lam[W] = np.maximum(mu, 0.0)
                return z, lam, tuple(sorted(W)), it
            W.pop(int(np.argmin(mu)))
            continue
        Gp = G @ p
        cand = Gp > 1e-15
        cand[W] = False
        alpha, block = 1.0, None
        if cand.any():
            idx = np.flatnonzero(cand)
            steps = (h[idx] - G[idx] @ z) / Gp[idx]
            j = int(np.argmin(steps))
            if steps[j] < 1.0:
                alpha, block = max(float(steps[j]), 0.0), int(idx[j])
        z = z + alpha * p
        if block is not None:
            W.append(block)
    raise RuntimeError("active-set QP did not converge")


class FeedbackSolver:
    """Stateful wrapper that warm starts from the previous solution."""

    def __init__(self, gains: Optional[FeedbackGains] = None):
        self.gains = gains if gains is not None else FeedbackGains()
        self.previous = (np.zeros(2), np.zeros(2))
        self._active: Tuple[int, ...] = ()

    def reset(self):
        self.previous = (np.zeros(2), np.zeros(2))
        self._active = ()

    def solve(self, error, cop_ref, kappa_ref, support: ConvexPolygon) -> FeedbackCommand:
        cmd = solve_feedback(error, (cop_ref, kappa_ref), support, self.gains, self.previous, self._active)
        self.previous = (cmd.delta, cmd.kappa)
        self._active = cmd.active
        return cmd


def _feasible_start(prob: QPProblem, support: ConvexPolygon, cop_ref, gains: FeedbackGains, guess: np.ndarray):
    if np.all(prob.G @ guess <= prob.h + FEAS_TOL):
        return guess
    delta = project_point(support, cop_ref) - cop_ref
    kappa = np.clip(guess[2:], gains.kappa_min, gains.kappa_max)
    z = np.concatenate([delta, kappa])
    # pull the CoP onto the polygon if projection rounding left it outside
    A, b = prob.G[:-4, :2], prob.h[:-4]
    if np.any(A @ delta > b):
        c = support.centroid - cop_ref
        for s in (1.0 - 1e-12, 1.0 - 1e-9, 1.0 - 1e-6, 0.0):
            d = c + s * (delta - c)
            if np.all(A @ d <= b):
                z[:2] = d
                break
    return z


def solve_feedback(error, refs, support: ConvexPolygon, gains: FeedbackGains, previous=None, warm_active=()) -> FeedbackCommand:
    """Optimal CoP/eCMP feedback for ICP error ``error``.

    ``refs`` is ``(cop_ref, kappa_ref)``; ``previous`` is ``(delta, kappa)``
    from the last tick (zeros when omitted).
    """
    if support.is_degenerate or support.area <= 0.0:
        raise FeedbackInfeasibleError("support polygon has no area")
    cop_ref, kappa_ref = as_point(refs[0]), as_point(refs[1])
    if previous is None:
        previous = (np.zeros(2), np.zeros(2))
    prob = build_problem(error, cop_ref, kappa_ref, support, gains, previous)
    # most ticks the unconstrained optimum is already feasible
    z = np.linalg.solve(prob.H + SINGULAR_REG * np.eye(4), -prob.f)
    if np.all(prob.G @ z <= prob.h):
        lam, active, iters = np.zeros(len(prob.h)), (), 1
    else:
        guess = np.concatenate([as_point(previous[0]), as_point(previous[1])])
        z0 = _feasible_start(prob, support, cop_ref, gains, guess)
        z, lam, active, iters = active_set_qp(prob, z0, warm_active)
    # enforce box bounds exactly
    z[2:] = np.clip(z[2:], gains.kappa_min, gains.kappa_max)
    delta, kappa = z[:2].copy(), z[2:].copy()
    cop = cop_ref + delta
    return FeedbackCommand(
        delta, kappa, cop, cop + kappa, None, prob.kkt_residual(z, lam), iters, active
    )


def momentum_rate(com, ecmp_desired, params: RobotParams) -> np.ndarray:
    """Horizontal linear momentum rate ``m w^2 (x - r_ecmp)``."""
    return params.mass * params.omega ** 2 * (as_point(com) - as_point(ecmp_desired))


def vertical_force(params: RobotParams) -> float:
    """Vertical component ``m g`` of the momentum-rate objective."""
    return params.mass * params.gravity
