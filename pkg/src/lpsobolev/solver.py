"""Discrete L_p Minkowski problem.

Given atoms ``(u_j, alpha_j)`` not contained in a closed hemisphere, find the
polytope ``P`` with facet normals ``u_j`` and ``S_p(P, .) = sum alpha_j delta_{u_j}``
(or ``S_n(P, .) / |P|`` for the volume-normalized variant).

The solution is the minimizer of the scale invariant quotient

    J(h) = sum_j alpha_j h_j^p / (n V(h))^(p/n)

over support vectors ``h``, where ``V(h)`` is the volume of the Wulff shape
``{x : x . u_j <= h_j}``.  Since ``dV/dh_j`` is the facet area, a critical point
satisfies ``|F_j| h_j^(1-p) = c alpha_j``; a final dilation removes ``c``.
We minimize ``log J`` in the coordinates ``s = log h`` with a damped Newton
method (exact Hessian of the volume) and Armijo backtracking.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import linprog

from .errors import (
    DimensionMismatch,
    EmptyInterior,
    EmptyMeasure,
    HemisphereViolation,
    NotConverged,
    UnboundedBody,
)
from .geometry import (
    canonicalize,
    lp_surface_measure,
    volume_hessian_sparse,
    wulff_data,
)

log = logging.getLogger(__name__)

_TRIAL_ERRORS = (UnboundedBody, EmptyInterior, np.linalg.LinAlgError, FloatingPointError)


@dataclass(frozen=True)
class SolverConfig:
    p: float
    max_iters: int = 5000
    grad_tol: float = 1e-10
    residual_tol: float = 1e-8
    step_init: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if min(self.grad_tol, self.residual_tol, self.step_init) <= 0:
            raise ValueError("tolerances and initial step must be positive")
        if not 0 < self.backtrack < 1 or not 0 < self.armijo < 1:
            raise ValueError("line search factors must lie in (0, 1)")


@dataclass
class SolverTrace:
    iterations: int = 0
    objective: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    final_residual: float = float("inf")
    terminated_by: str = "max_iters"

    def rows(self):
        """``(iter, objective, residual, step)`` tuples for CSV export."""
        return [
            (k, self.objective[k], self.residuals[k], self.steps[k])
            for k in range(len(self.objective))
        ]


def hemisphere_check(mu):
    """True iff the atoms of ``mu`` are *not* contained in a closed hemisphere."""
    if len(mu) == 0:
        raise EmptyMeasure("measure has no atoms")
    U = mu.directions
    if mu.dim == 2:
        ang = np.sort(np.arctan2(U[:, 1], U[:, 0]))
        gaps = np.diff(np.concatenate([ang, ang[:1] + 2 * np.pi]))
        return bool(gaps.max() < np.pi - 1e-12)
    # Gordan: no v with U v >= 0 (v != 0) iff 0 = sum lam_j u_j with all lam_j > 0
    # and the u_j span R^n.
    if np.linalg.matrix_rank(U, tol=1e-12) < mu.dim:
        return False
    m = len(U)
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_eq = np.zeros((mu.dim + 1, m + 1))
    a_eq[: mu.dim, :m] = U.T
    a_eq[mu.dim, :m] = 1.0
    b_eq = np.zeros(mu.dim + 1)
    b_eq[-1] = 1.0
    a_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
    res = linprog(
        c, A_ub=a_ub, b_ub=np.zeros(m), A_eq=a_eq, b_eq=b_eq,
        bounds=[(0, None)] * m + [(None, None)], method="highs",
    )
    return bool(res.status == 0 and -res.fun > 1e-12)


class _Objective:
    """log J and its derivatives in log-support coordinates."""

    def __init__(self, normals, alpha, p):
        self.U = normals
        self.alpha = alpha
        self.p = p
        self.n = normals.shape[1]

    def value(self, s):
        h = np.exp(s)
        data = wulff_data(self.U, h)
        S = float(np.dot(self.alpha, h**self.p))
        return np.log(S) - self.p / self.n * np.log(self.n * data.volume), data

    def derivatives(self, s, data):
        p, n = self.p, self.n
        h = np.exp(s)
        hp = self.alpha * h**p
        w = hp / hp.sum()
        V = data.volume
        a = data.areas * h / (n * V)
        grad = p * (w - a)
        # sparse part p^2 diag(w) - (p/n)(h Hv h + diag(A h))/V plus the
        # low-rank part -p^2 w w^T + p n a a^T
        hv = volume_hessian_sparse(self.U, data)
        dh = sp.diags(h)
        sparse = (
            sp.diags(p * p * w - (p / n) * data.areas * h / V)
            - (p / (n * V)) * (dh @ hv @ dh)
        ).tocsc()
        hess = _Hessian(sparse, np.column_stack([w, a]), np.array([-p * p, p * n]))
        residual = float(np.max(np.abs(a / w - 1.0)))
        c = n * V / hp.sum()
        return grad, hess, residual, c


class _Hessian:
    """``S + U diag(c) U^T`` with sparse ``S``."""

    def __init__(self, sparse, U, c):
        self.sparse, self.U, self.c = sparse, U, c

    def dense(self):
        return self.sparse.toarray() + (self.U * self.c) @ self.U.T


_DENSE_LIMIT = 400


def _newton_direction(grad, hess):
    m = len(grad)
    if m > _DENSE_LIMIT:
        d = _newton_direction_sparse(grad, hess)
        if d is not None:
            return _cap(d)
    H = hess.dense()
    scale = max(1.0, float(np.abs(np.diag(H)).max()))
    # J is invariant along s -> s + t(1,...,1); lift that null direction
    hmod = H + scale * np.ones((m, m)) / m
    evals, Q = np.linalg.eigh(hmod)
    floor = 1e-10 * np.abs(evals).max()
    evals = np.maximum(np.abs(evals), floor)
    return _cap(-Q @ ((Q.T @ grad) / evals))


def _newton_direction_sparse(grad, hess):
    """Unmodified Newton step through a sparse LU and the Woodbury identity.

    Returns None if the factorization fails or the step is not a descent
    direction, in which case the caller uses the dense modified step.
    """
    m = len(grad)
    scale = max(1.0, float(np.abs(hess.sparse.diagonal()).max()))
    U = np.column_stack([hess.U, np.ones(m)])
    c = np.concatenate([hess.c, [scale / m]])
    try:
        lu = spla.splu(hess.sparse)
        Sg = lu.solve(grad)
        SU = lu.solve(U)
        small = np.diag(1.0 / c) + U.T @ SU
        d = -(Sg - SU @ np.linalg.solve(small, U.T @ Sg))
    except (RuntimeError, np.linalg.LinAlgError):
        return None
    if not np.all(np.isfinite(d)) or grad @ (d - d.mean()) >= 0:
        return None
    return d


def _cap(d):
    d = d - d.mean()
    big = np.abs(d).max()
    if big > 2.0:
        d *= 2.0 / big
    return d


def _minimize(normals, alpha, p, cfg, h0=None):
    obj = _Objective(normals, alpha, p)
    m = len(alpha)
    s = np.zeros(m) if h0 is None else np.log(np.asarray(h0, dtype=float))
    s = s - s.mean()
    trace = SolverTrace()
    target = 1e-2 * cfg.residual_tol
    F, data = obj.value(s)
    step = 0.0
    for it in range(cfg.max_iters):
        grad, hess, resid, c = obj.derivatives(s, data)
        trace.objective.append(float(np.exp(F)))
        trace.residuals.append(resid)
        trace.steps.append(step)
        trace.iterations = it
        if resid <= target:
            trace.terminated_by = "residual"
            break
        if np.abs(grad).max() <= cfg.grad_tol and resid <= cfg.residual_tol:
            trace.terminated_by = "gradient"
            break
        d = _newton_direction(grad, hess)
        slope = float(grad @ d)
        if slope >= 0:
            d, slope = -grad, -float(grad @ grad)
        t = cfg.step_init
        accepted = False
        if -slope < 1e-11 * (1.0 + abs(F)):
            # objective decrease is below rounding resolution: judge steps by
            # the gradient norm instead (pure Newton converges quadratically)
            gnorm = np.linalg.norm(grad)
            for _ in range(8):
                trial = s + t * d
                try:
                    F_new, data_new = obj.value(trial)
                    g_new = obj.derivatives(trial, data_new)[0]
                except _TRIAL_ERRORS:
                    t *= cfg.backtrack
                    continue
                if np.linalg.norm(g_new) < gnorm:
                    accepted = True
                    break
                t *= cfg.backtrack
            if not accepted:
                trace.terminated_by = "gradient"
                break
            s = trial - trial.mean()
            F, data = F_new, data_new
            step = t
            continue
        while t > 1e-14:
            trial = s + t * d
            try:
                F_new, data_new = obj.value(trial)
            except _TRIAL_ERRORS:  # degenerate trial shape; shrink the step
                F_new = np.inf
            if F_new <= F + cfg.armijo * t * slope:
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            trace.terminated_by = "gradient"
            break
        s = trial - trial.mean()
        F, data = F_new, data_new
        step = t
    else:
        trace.terminated_by = "max_iters"
    grad, hess, resid, c = obj.derivatives(s, data)
    trace.final_residual = resid
    log.debug("solver stopped after %d iterations (%s), residual %.3e",
              trace.iterations, trace.terminated_by, resid)
    return np.exp(s), data, c, trace


def _prepare(mu, cfg):
    if len(mu) == 0:
        raise EmptyMeasure("measure has no atoms")
    if not hemisphere_check(mu):
        raise HemisphereViolation("atoms are contained in a closed hemisphere")
    mass = mu.total_mass
    return mu.directions, mu.weights / mass, mass


def _finish(normals, h, trace, cfg):
    if trace.final_residual > cfg.residual_tol:
        raise NotConverged(
            f"residual {trace.final_residual:.3e} above {cfg.residual_tol:.1e} "
            f"after {trace.iterations} iterations",
            trace,
        )
    return canonicalize(normals, h, area_tol=0.0)


def solve(mu, cfg, h0=None):
    """Polytope ``P`` with ``S_p(P, .) = mu`` for ``p != n``.

    Returns ``(P, trace)``.  ``h0`` optionally sets the initial support
    numbers (default: all ones).
    """
    if not isinstance(cfg, SolverConfig):
        cfg = SolverConfig(p=float(cfg))
    n = mu.dim
    if abs(cfg.p - n) < 1e-12:
        raise DimensionMismatch("p equals the dimension; use solve_normalized")
    U, alpha, mass = _prepare(mu, cfg)
    h, data, c, trace = _minimize(U, alpha, cfg.p, cfg, h0)
    # S_p(tW) = t^(n-p) c alpha  must equal  mass * alpha
    t = (mass / c) ** (1.0 / (n - cfg.p))
    return _finish(U, t * h, trace, cfg), trace


def solve_normalized(mu, dim=None, cfg=None, h0=None):
    """Polytope ``P`` with ``S_n(P, .) / |P| = mu``."""
    n = mu.dim if dim is None else dim
    if n != mu.dim:
        raise DimensionMismatch("measure dimension differs from the requested one")
    if cfg is None:
        cfg = SolverConfig(p=float(n))
    elif abs(cfg.p - n) > 1e-12:
        raise DimensionMismatch("normalized problem requires p = n")
    U, alpha, mass = _prepare(mu, cfg)
    h, data, c, trace = _minimize(U, alpha, float(n), cfg, h0)
    # S_n(tW)/|tW| = c alpha / (t^n V)  must equal  mass * alpha
    t = (c / (mass * data.volume)) ** (1.0 / n)
    return _finish(U, t * h, trace, cfg), trace


def measure_residual(P, mu, p, normalized=False):
    """Largest relative per-atom deviation of ``S_p(P)`` (or ``S_n(P)/|P|``) from ``mu``."""
    surf = lp_surface_measure(P, p)
    if normalized:
        surf = surf.scaled(1.0 / P.volume)
    worst = 0.0
    for u, w in zip(mu.directions, mu.weights):
        k = np.argmax(surf.directions @ u)
        if np.linalg.norm(surf.directions[k] - u) > 1e-9:
            return 1.0
        worst = max(worst, abs(surf.weights[k] - w) / w)
    return worst if len(surf) == len(mu) else 1.0


def blaschke_sum(K, L, p, cfg=None):
    """Polytope whose ``S_p`` measure is ``S_p(K) + S_p(L)``."""
    if K.dim != L.dim:
        raise DimensionMismatch("summands differ in dimension")
    cfg = cfg or SolverConfig(p=p)
    return solve(lp_surface_measure(K, p) + lp_surface_measure(L, p), cfg)[0]
