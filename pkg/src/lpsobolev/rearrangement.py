"""Distribution functions, rearrangements and convex symmetrization.

For a piecewise-affine ``f`` the distribution function
``mu_f(t) = |{|f| > t}|`` is computed exactly: on a simplex the volume
fraction where an affine function exceeds ``t`` depends only on its sorted
vertex values.  The decreasing rearrangement ``f*`` is stored as a piecewise
linear profile in ``s``; radial functions ``x -> f*(w_n g(x)^n)`` with ``g``
the gauge of a body of volume ``w_n`` are then handled in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionMismatch, DivergentIntegral, InputError
from .geometry import Polytope, _check_dim, lp_surface_measure
from .sphere import ball_volume, positive_moment, sphere_area

BALL = "ball"


# ---------------------------------------------------------------------------
# distribution function
# ---------------------------------------------------------------------------


def _tet_volume(a, b, c, d):
    return np.abs(np.einsum("ij,ij->i", b - a, np.cross(c - a, d - a))) / 6.0


def _fraction_above(vals, t):
    """Volume fraction of each simplex where the affine interpolant exceeds ``t``.

    ``vals`` holds sorted vertex values, one row per simplex.
    """
    m, k = vals.shape
    out = np.zeros(m)
    top = vals[:, -1]
    out[vals[:, 0] > t] = 1.0
    if k == 3:
        a, b, c = vals.T
        lo = (a <= t) & (t < b)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(lo, 1 - (t - a) ** 2 / ((b - a) * (c - a)), out)
            hi = (b <= t) & (t < c)
            out = np.where(hi, (c - t) ** 2 / ((c - a) * (c - b)), out)
        return out
    a, b, c, d = vals.T
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = (a <= t) & (t < b)
        out = np.where(lo, 1 - (t - a) ** 3 / ((b - a) * (c - a) * (d - a)), out)
        hi = (c <= t) & (t < d)
        out = np.where(hi, (d - t) ** 3 / ((d - a) * (d - b) * (d - c)), out)
    mid = np.flatnonzero((b <= t) & (t < c))
    if len(mid):
        # two vertices on each side: {phi > t} is a prism; use the reference tet
        e = np.eye(4)[:, 1:]  # A=0, B=e1, C=e2, D=e3 in R^3
        A, B, C, D = e
        va, vb, vc, vd = a[mid], b[mid], c[mid], d[mid]

        def cross(P, Q, vp, vq):
            lam = ((t - vp) / (vq - vp))[:, None]
            return P + lam * (Q - P)

        pac, pbc = cross(A, C, va, vc), cross(B, C, vb, vc)
        pad, pbd = cross(A, D, va, vd), cross(B, D, vb, vd)
        Cm, Dm = np.broadcast_to(C, pac.shape), np.broadcast_to(D, pac.shape)
        vol = (
            _tet_volume(Cm, pac, pbc, pbd)
            + _tet_volume(Cm, pac, pad, pbd)
            + _tet_volume(Cm, Dm, pad, pbd)
        )
        out[mid] = vol * 6.0
    out[top <= t] = 0.0
    return out


def distribution_function(f, t):
    """``mu_f(t) = |{x : |f(x)| > t}|`` (exact)."""
    t = float(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    sv = np.sort(f.simplex_values(), axis=1)
    above = _fraction_above(sv, t)
    below = _fraction_above(np.sort(-sv, axis=1), t)
    return float(np.dot(f.measures, above + below))


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Piecewise linear ``f*`` on an increasing ``s`` grid ending at ``|sprt f|``."""

    grid: np.ndarray
    values: np.ndarray
    derivative: np.ndarray

    @classmethod
    def from_samples(cls, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or len(grid) < 2:
            raise InputError("profile needs matching 1D grids with at least two points")
        if np.any(np.diff(grid) < 0) or grid[0] < 0:
            raise InputError("profile grid must be nonnegative and increasing")
        if np.any(np.diff(values) > 0) or values[-1] != 0 or values.min() < 0:
            raise InputError("profile values must be nonnegative, non-increasing and end at 0")
        ds = np.diff(grid)
        dv = np.diff(values)
        if np.any((ds == 0) & (dv != 0)):
            raise DivergentIntegral("profile jumps (infinite slope)")
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.where(ds > 0, dv / ds, 0.0)
        for arr in (grid, values, slope):
            arr.flags.writeable = False
        return cls(grid, values, slope)

    @property
    def support(self):
        return float(self.grid[-1])

    @property
    def maximum(self):
        return float(self.values[0])

    def __call__(self, s):
        return np.interp(s, self.grid, self.values, right=0.0)

    def level_measure(self, t):
        """``sup{s : f*(s) > t}``: measure of the superlevel set of any rearrangement."""
        t = np.asarray(t, dtype=float)
        v = self.values
        k = np.searchsorted(-v, -t, side="left")
        k = np.clip(k, 1, len(v) - 1)
        v0, v1 = v[k - 1], v[k]
        s0, s1 = self.grid[k - 1], self.grid[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(v0 > v1, (v0 - t) / (v0 - v1), 0.0)
        out = s0 + np.clip(frac, 0, 1) * (s1 - s0)
        out = np.where(t >= v[0], 0.0, out)
        return out if out.ndim else float(out)

    def power_integral(self, q):
        """``int_0^inf f*(s)^q ds`` of the piecewise linear profile (exact)."""
        v0, v1 = self.values[:-1], self.values[1:]
        ds = np.diff(self.grid)
        with np.errstate(divide="ignore", invalid="ignore"):
            lin = (v0 ** (q + 1) - v1 ** (q + 1)) / ((q + 1) * (v0 - v1))
        seg = np.where(np.abs(v0 - v1) > 1e-14 * max(self.maximum, 1e-300), lin, v0**q)
        return float(np.sum(seg * ds))

    def rows(self):
        """``(s, f*(s), slope)`` rows; the last slope is 0."""
        slope = np.append(self.derivative, 0.0)
        return list(zip(self.grid.tolist(), self.values.tolist(), slope.tolist()))


def decreasing_rearrangement(f, grid_size=1024):
    """Profile of ``f*`` built by inverting ``mu_f``.

    The ``t`` grid consists of ``grid_size`` uniform levels together with all
    vertex values of ``|f|``, so the profile is exact at every critical level.
    Levels on which ``|f|`` is constant over a set of positive measure yield
    flat pieces of ``f*``.
    """
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    top = f.sup_norm
    if top == 0:
        raise InputError("function vanishes identically")
    crit = np.unique(np.abs(f.values))
    levels = np.unique(np.concatenate([np.linspace(0, top, grid_size + 1), crit]))
    levels = levels[levels <= top]
    s = np.array([distribution_function(f, t) for t in levels])

    # plateaus: |f| constant on a simplex adds measure below the level
    sv = f.simplex_values()
    flat = np.all(sv == sv[:, :1], axis=1) & (sv[:, 0] != 0)
    plateau = {}
    for i in np.flatnonzero(flat):
        key = abs(float(sv[i, 0]))
        plateau[key] = plateau.get(key, 0.0) + float(f.measures[i])

    grid, vals = [], []
    for t, si in zip(levels[::-1], s[::-1]):
        grid.append(si)
        vals.append(t)
        if t in plateau:
            grid.append(si + plateau[t])
            vals.append(t)
    grid = np.maximum.accumulate(np.array(grid))
    return RadialProfile.from_samples(grid, np.array(vals))


# ---------------------------------------------------------------------------
# radial functions
# ---------------------------------------------------------------------------


def _profile_gradient_integral(profile, n, p):
    """``int_0^inf r^(n-1) |phi'(r)|^p dr`` with ``phi(r) = f*(w_n r^n)``.

    Integrated in ``s = w_n r^n``, where the profile is piecewise linear:
    the integrand becomes ``(n w_n)^(p-1) (s / w_n)^(p(n-1)/n) |slope|^p``.
    """
    w = ball_volume(n)
    beta = p * (n - 1) / n
    s0, s1 = profile.grid[:-1], profile.grid[1:]
    seg = (s1 ** (beta + 1) - s0 ** (beta + 1)) / (beta + 1)
    total = (n * w) ** (p - 1) * w ** (-beta) * np.sum(np.abs(profile.derivative) ** p * seg)
    if not np.isfinite(total):
        raise DivergentIntegral("gradient integral of the profile diverges")
    return float(total)


@dataclass(frozen=True, eq=False)
class RadialConvexFunction:
    """``x -> f*(w_n g(x)^n)`` for the gauge ``g`` of ``shape`` (``|shape| = w_n``).

    ``shape`` is a :class:`Polytope` or the string ``"ball"``.
    """

    dim: int
    shape: Union[Polytope, str]
    profile: RadialProfile

    def __post_init__(self):
        _check_dim(self.dim)
        if isinstance(self.shape, str):
            if self.shape != BALL:
                raise InputError(f"unknown shape tag {self.shape!r}")
        else:
            if self.shape.dim != self.dim:
                raise DimensionMismatch("shape dimension differs")
            w = ball_volume(self.dim)
            if abs(self.shape.volume - w) > 1e-9 * w:
                raise InputError("shape must have the volume of the unit ball")

    @property
    def is_ball(self):
        return isinstance(self.shape, str)

    def gauge(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.is_ball:
            return np.linalg.norm(x, axis=1)
        return np.maximum(self.shape.gauge(x), 0.0)

    def __call__(self, x):
        s = ball_volume(self.dim) * self.gauge(x) ** self.dim
        out = self.profile(s)
        return out if np.ndim(x) == 2 else float(out[0])

    def distribution(self, t):
        """``|{f > t}|`` (equals ``mu_f(t)`` of the rearranged function)."""
        return self.profile.level_measure(t)

    def lq_norm(self, q):
        return self.profile.power_integral(q) ** (1.0 / q)

    def _shape_measure(self, p):
        return lp_surface_measure(self.shape, p)

    def gradient_norm(self, p):
        """``||grad f||_p``."""
        phi = _profile_gradient_integral(self.profile, self.dim, p)
        if self.is_ball:
            return (sphere_area(self.dim) * phi) ** (1.0 / p)
        return (phi * self._shape_measure(p).total_mass) ** (1.0 / p)

    def gradient_measure(self, p):
        """``n sum |M||g|^p delta_{-g/|g|}`` analogue: ``xi_f S_p(shape, .)``."""
        if self.is_ball:
            raise InputError("the gradient measure of a ball-shaped function is not discrete")
        phi = _profile_gradient_integral(self.profile, self.dim, p)
        return self._shape_measure(p).scaled(self.dim * phi)

    def directional_energy(self, v, lam, p):
        """``int (1-lam)(D_v f)_+^p + lam (D_v f)_-^p dx`` in closed form."""
        d = np.asarray(v, dtype=float)
        dirs = np.atleast_2d(d)
        phi = _profile_gradient_integral(self.profile, self.dim, p)
        if self.is_ball:
            out = np.full(len(dirs), phi * positive_moment(self.dim, p))
        else:
            mu = self._shape_measure(p)
            dots = dirs @ mu.directions.T
            # f decreases along the outer normal, so D_v f has the sign of -(u . v)
            out = phi * (
                ((1 - lam) * np.maximum(-dots, 0) ** p + lam * np.maximum(dots, 0) ** p)
                @ mu.weights
            )
        return out if d.ndim == 2 else float(out[0])


def convex_symmetrization(f, K=BALL, grid_size=1024):
    """``f^K``: the rearrangement whose level sets are dilates of ``K``.

    ``K = "ball"`` gives the symmetric rearrangement ``f^star``.
    """
    profile = decreasing_rearrangement(f, grid_size)
    if isinstance(K, str):
        return RadialConvexFunction(f.dim, K, profile)
    if K.dim != f.dim:
        raise DimensionMismatch("body and function differ in dimension")
    t = (ball_volume(K.dim) / K.volume) ** (1.0 / K.dim)
    return RadialConvexFunction(f.dim, K.scaled(t), profile)


def symmetric_rearrangement(f, grid_size=1024):
    return convex_symmetrization(f, BALL, grid_size)


@dataclass(frozen=True)
class XiFactor:
    """Both readings of the scale factor of the symmetrized Sobolev body.

    ``measure`` multiplies ``S_p`` of the shape; ``dilation = measure^(1/(n-p))``
    is the corresponding homothety factor of the body.
    """

    measure: float
    dilation: float


def xi_factor(profile, n, p):
    """``n (n w_n)^p int_0^inf t^(np+n-p-1) ((-f*)'(w_n t^n))^p dt`` and its ``1/(n-p)`` power."""
    if abs(n - p) < 1e-12:
        raise ValueError("p must differ from n")
    measure = n * _profile_gradient_integral(profile, n, p)
    return XiFactor(measure=measure, dilation=measure ** (1.0 / (n - p)))


def radial_gradient_norm(g, p, nodes=8):
    """``||grad g||_p`` of a ball-shaped radial function, integrated in ``r``.

    Uses Gauss-Legendre on each profile interval mapped to the radius, as an
    independent check on the closed form in ``s``.
    """
    if not g.is_ball:
        raise InputError("radial_gradient_norm needs a ball-shaped function")
    n = g.dim
    w = ball_volume(n)
    x, wt = np.polynomial.legendre.leggauss(nodes)
    r = (g.profile.grid / w) ** (1.0 / n)
    r0, r1 = r[:-1, None], r[1:, None]
    rr = (r1 + r0) / 2 + (r1 - r0) / 2 * x[None, :]
    dgdr = np.abs(g.profile.derivative)[:, None] * n * w * rr ** (n - 1)
    integral = np.sum(((r1 - r0) / 2) * (rr ** (n - 1) * dgdr**p) @ wt[:, None])
    return float((sphere_area(n) * integral) ** (1.0 / p))
