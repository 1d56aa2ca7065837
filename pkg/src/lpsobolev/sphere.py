"""Spherical quadrature, L_p projection bodies and the affine L_p energy."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gamma, pi

import numpy as np

from .errors import DegenerateDirection, DimensionMismatch, HemisphereViolation
from .geometry import SupportBody, _check_dim, lp_surface_measure, polar_volume
from .pwa import PwaFunction, directional_energy
from .solver import hemisphere_check

__all__ = [
    "SphericalQuadrature",
    "build_quadrature",
    "cosine_transform_plus",
    "projection_body",
    "normalized_projection_body",
    "polar_volume",
    "EnergyValue",
    "affine_energy",
    "ball_volume",
    "sphere_area",
    "positive_moment",
    "energy_constant",
]


def ball_volume(n):
    """``omega_n``, volume of the unit ball (any real ``n >= 0``)."""
    return pi ** (n / 2) / gamma(n / 2 + 1)


def sphere_area(n):
    """``n omega_n``, surface area of the unit sphere in ``R^n``."""
    return n * ball_volume(n)


def positive_moment(n, p):
    """``int_{S^{n-1}} (u . v)_+^p du`` for a unit vector ``v``."""
    return pi ** ((n - 1) / 2) * gamma((p + 1) / 2) / gamma((n + p) / 2)


def energy_constant(n, p, mode="calibrated"):
    """Normalizing constant of the affine energy.

    ``calibrated``
        Chosen so that the energy of a radial function equals its gradient
        norm ``||grad f||_p``: ``(n w_n)^(1/n) (n w_n / I)^(1/p)`` with ``I``
        from :func:`positive_moment`.
    ``closed-form``
        ``(n w_n)^(1/n) (n w_n w_{p-1} / w_{n+p-2})^(1/p)`` written with ball
        volumes ``w_k``; algebraically the same number.
    ``raw``
        1, i.e. the bare quadrature functional.
    """
    if mode == "calibrated":
        return sphere_area(n) ** (1 / n) * (sphere_area(n) / positive_moment(n, p)) ** (1 / p)
    if mode == "closed-form":
        w = ball_volume
        return sphere_area(n) ** (1 / n) * (n * w(n) * w(p - 1) / w(n + p - 2)) ** (1 / p)
    if mode == "raw":
        return 1.0
    raise ValueError(f"unknown constant mode {mode!r}")


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SphericalQuadrature:
    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    level: int

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        return float(np.sum(np.asarray(values) * self.weights))


def _icosahedron():
    t = (1 + 5**0.5) / 2
    v = np.array(
        [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
         [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
         [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]],
        dtype=float,
    )
    f = np.array(
        [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def _subdivide(verts, faces):
    verts = list(verts)
    cache = {}

    def mid(a, b):
        key = (min(a, b), max(a, b))
        if key not in cache:
            m = verts[a] + verts[b]
            verts.append(m / np.linalg.norm(m))
            cache[key] = len(verts) - 1
        return cache[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        out += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
    return np.array(verts), np.array(out)


def _spherical_triangle_area(a, b, c):
    # Van Oosterom-Strackee solid angle
    num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    den = 1 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2 * np.arctan2(num, den)


@lru_cache(maxsize=16)
def _build(dim, level):
    if dim == 2:
        m = 2 ** (level + 8)
        t = 2 * pi * np.arange(m) / m
        nodes = np.stack([np.cos(t), np.sin(t)], axis=1)
        weights = np.full(m, 2 * pi / m)
    else:
        v, f = _icosahedron()
        for _ in range(level):
            v, f = _subdivide(v, f)
        a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
        cen = a + b + c
        nodes = cen / np.linalg.norm(cen, axis=1, keepdims=True)
        weights = _spherical_triangle_area(a, b, c)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return SphericalQuadrature(dim, nodes, weights, level)


def build_quadrature(dim, level):
    """Deterministic rule on ``S^{dim-1}``.

    In the plane: ``2^(level+8)`` equally spaced angles.  In space: the
    icosahedron refined ``level`` times, one node per spherical triangle
    (normalized centroid) weighted by the triangle's area.
    """
    _check_dim(dim)
    if level < 0 or int(level) != level:
        raise ValueError("level must be a nonnegative integer")
    return _build(dim, int(level))


# ---------------------------------------------------------------------------
# projection bodies
# ---------------------------------------------------------------------------


def cosine_transform_plus(mu, p, v):
    """``sum_j (v . u_j)_+^p w_j`` for one direction or an array of them."""
    d = np.asarray(v, dtype=float)
    dots = np.atleast_2d(d) @ mu.directions.T
    out = np.maximum(dots, 0.0) ** p @ mu.weights
    return out if d.ndim == 2 else float(out[0])


def _projection_evaluator(mu, p, lam):
    mu_neg = mu.reflected()

    def evaluator(v):
        val = (1 - lam) * cosine_transform_plus(mu, p, v) + lam * cosine_transform_plus(mu_neg, p, v)
        return val ** (1.0 / p)

    return evaluator


def projection_body(mu, p, lam):
    """``Phi_{lam,p}``: support function ``((1-lam) C+mu + lam C+mu^)^(1/p)``.

    ``mu^`` is ``mu`` with its directions negated.
    """
    if not 0 <= lam <= 1:
        raise ValueError("lambda must lie in [0, 1]")
    if p < 1:
        raise ValueError("p must be at least 1")
    if not hemisphere_check(mu):
        raise HemisphereViolation("measure lies in a closed hemisphere")
    return SupportBody(
        mu.dim, _projection_evaluator(mu, p, lam), descriptor=f"projection(p={p!r}, lambda={lam!r})"
    )


def normalized_projection_body(K, lam):
    """``Phi~_{lam,n}(K)``: the projection body of ``S_n(K, .) / |K|`` at ``p = n``."""
    if not 0 <= lam <= 1:
        raise ValueError("lambda must lie in [0, 1]")
    n = K.dim
    mu = lp_surface_measure(K, n).scaled(1.0 / K.volume)
    return SupportBody(
        n, _projection_evaluator(mu, float(n), lam), descriptor=f"normalized_projection(lambda={lam!r})"
    )


# ---------------------------------------------------------------------------
# affine energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyValue:
    value: float
    p: float
    lam: float
    dim: int
    level: int
    constant: float
    constant_mode: str

    def __float__(self):
        return self.value


def _energies(f, nodes, lam, p):
    if isinstance(f, PwaFunction):
        return directional_energy(f, nodes, lam, p)
    return np.asarray(f.directional_energy(nodes, lam, p), dtype=float)


def affine_energy(f, lam, p, quad, mode="calibrated"):
    """``c (int_S E(v)^(-n/p) dv)^(-1/n)`` with ``E`` the directional energy.

    ``f`` is a :class:`PwaFunction` or any object with a vectorized
    ``directional_energy(directions, lam, p)`` method (the radial class).
    """
    if not 0 <= lam <= 1:
        raise ValueError("lambda must lie in [0, 1]")
    if p <= 1:
        raise ValueError("p must exceed 1")
    n = f.dim
    if quad.dim != n:
        raise DimensionMismatch("quadrature dimension does not match the function")
    E = _energies(f, quad.nodes, lam, p)
    zero = E <= 0
    if zero.any():
        raise DegenerateDirection(
            f"directional energy vanishes at {int(zero.sum())} quadrature nodes"
        )
    integral = float(np.sum(E ** (-n / p) * quad.weights))
    c = energy_constant(n, p, mode)
    return EnergyValue(
        value=c * integral ** (-1.0 / n),
        p=float(p), lam=float(lam), dim=n, level=quad.level, constant=c, constant_mode=mode,
    )
