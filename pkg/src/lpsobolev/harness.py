"""Batch verification of the affine Sobolev-type inequalities.

Each ``check_*`` function evaluates one inequality or identity on concrete
inputs and returns a :class:`CheckResult`.  :func:`run_suite` draws inputs
from a seeded corpus and collects the results in canonical order.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from math import gamma

import numpy as np
from scipy.spatial import Delaunay

from .errors import LpSobolevError
from .geometry import (
    DiscreteSphereMeasure,
    from_vertices,
    lp_mixed_volume,
    lp_surface_measure,
    match_measures,
    polar_volume,
    probe_directions,
    regular_polygon,
    support_distance,
)
from .pwa import (
    PwaFunction,
    compose_linear,
    cone_function,
    gradient_measure,
    integrate_values,
    lattice_pair,
    lp_star_norm,
    scale_values,
    sobolev_body,
    translate,
)
from .rearrangement import (
    convex_symmetrization,
    radial_gradient_norm,
    symmetric_rearrangement,
    xi_factor,
)
from .solver import SolverConfig, measure_residual, solve
from .sphere import (
    affine_energy,
    ball_volume,
    build_quadrature,
    normalized_projection_body,
    positive_moment,
    projection_body,
)

log = logging.getLogger(__name__)

GENERATORS = ("random-polytope", "random-pwa", "cone-family", "radial-family")


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    check: str
    digest: str
    lhs: float | None
    rhs: float | None
    ratio: float | None
    passed: bool
    tolerance: float
    runtime_ms: float = 0.0
    theorem_backed: bool = True
    equality: bool = False
    error: str | None = None
    message: str | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self, timings=False):
        d = asdict(self)
        if not timings:
            d.pop("runtime_ms")
        return d

    @property
    def violation(self):
        return self.theorem_backed and not self.passed


def digest(*parts):
    """Short SHA-256 of the canonical JSON of the inputs."""
    from .io import to_dict

    def enc(x):
        if isinstance(x, (int, float, str)) or x is None:
            return x
        if isinstance(x, np.ndarray):
            return x.tolist()
        if isinstance(x, (list, tuple)):
            return [enc(y) for y in x]
        return to_dict(x)

    text = json.dumps([enc(p) for p in parts], sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _result(name, inputs, lhs, rhs, ratio, passed, tol, t0, **kw):
    return CheckResult(
        check=name, digest=digest(*inputs), lhs=_f(lhs), rhs=_f(rhs), ratio=_f(ratio),
        passed=bool(passed), tolerance=tol, runtime_ms=1e3 * (time.perf_counter() - t0), **kw,
    )


def _f(x):
    return None if x is None else float(x)


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------


def sobolev_constant(n, p):
    """Sharp Euclidean Sobolev constant for ``1 < p < n``."""
    w = ball_volume(n)
    return (
        n ** (-1 / p)
        * ((p - 1) / (n - p)) ** (1 - 1 / p)
        * (gamma(n) / (w * gamma(n / p) * gamma(n + 1 - n / p))) ** (1 / n)
    )


def morrey_constant(n, p):
    """Sharp constant of the Morrey-type sup bound for ``p > n``."""
    return n ** (-1 / p) * ball_volume(n) ** (-1 / n) * ((p - 1) / (p - n)) ** ((p - 1) / p)


def star_exponent(n, p):
    return n * p / (n - p)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def check_minkowski_ineq(K, L, p):
    """``V_p(K, L) >= |K|^(1-p/n) |L|^(p/n)``; equality iff ``L`` is a dilate of ``K``."""
    t0 = time.perf_counter()
    n = K.dim
    lhs = lp_mixed_volume(K, L, p)
    rhs = K.volume ** (1 - p / n) * L.volume ** (p / n)
    ratio = lhs / rhs
    t = (L.volume / K.volume) ** (1 / n)
    dirs = np.vstack([K.normals, L.normals, probe_directions(n, 256)])
    homothetic = support_distance(L, K.scaled(t), dirs) <= 1e-9 * L.diameter
    return _result(
        "minkowski", (K, L, p), lhs, rhs, ratio, lhs >= rhs * (1 - 1e-9), 1e-9, t0,
        equality=bool(homothetic and abs(ratio - 1) <= 1e-9),
    )


def check_minkowski_problem(mu, p, reference=None):
    """Solve the discrete problem and compare with a known solution if given."""
    t0 = time.perf_counter()
    P, trace = solve(mu, SolverConfig(p=p))
    resid = measure_residual(P, mu, p)
    ok = resid <= 1e-8
    extras = {"iterations": trace.iterations}
    if reference is not None:
        err = support_distance(P, reference, probe_directions(P.dim, 512, [reference.normals]))
        extras["support_error"] = err / reference.diameter
        ok = ok and err <= 1e-6 * reference.diameter
    return _result("minkowski-problem", (mu, p), resid, 1e-8, resid / 1e-8, ok, 1e-8, t0, extras=extras)


def ball_petty_value(n, p):
    """``|B|^(n/p-1) |Phi_{lam,p}(B)°|``, independent of ``lam``."""
    return (ball_volume(n) / positive_moment(n, p)) ** (n / p)


def check_petty(K, p, lam, quad):
    """``|K|^(n/p-1) |Phi_{lam,p}(K)°| <= |B|^(n/p-1) |Phi_{lam,p}(B)°|``."""
    t0 = time.perf_counter()
    n = K.dim
    body = projection_body(lp_surface_measure(K, p), p, lam)
    lhs = K.volume ** (n / p - 1) * polar_volume(body, quad)
    rhs = ball_petty_value(n, p)
    ratio = lhs / rhs
    return _result(
        "petty", (K, p, lam, quad.level), lhs, rhs, ratio, ratio <= 1 + 2e-2, 2e-2, t0,
        equality=abs(ratio - 1) <= 1e-2,
    )


def check_normalized_petty(K, lam, quad):
    """``|Phi~_{lam,n}(K)°| / |K| <= |Phi~_{lam,n}(B)°| / |B|``."""
    t0 = time.perf_counter()
    n = K.dim
    lhs = polar_volume(normalized_projection_body(K, lam), quad) / K.volume
    rhs = ball_volume(n) / positive_moment(n, n)
    ratio = lhs / rhs
    return _result(
        "normalized-petty", (K, lam, quad.level), lhs, rhs, ratio, ratio <= 1 + 2e-2, 2e-2, t0,
        equality=abs(ratio - 1) <= 1e-2,
    )


def check_sobolev_body_ineq(f, p):
    """``w_n^(1/n) a_{n,p} |<f>_p|^((n-p)/(np)) >= ||f||_{p*}`` for ``1 < p < n``."""
    t0 = time.perf_counter()
    n = f.dim
    if not 1 < p < n:
        raise ValueError("the Sobolev body inequality needs 1 < p < n")
    P = sobolev_body(f, p)
    lhs = ball_volume(n) ** (1 / n) * sobolev_constant(n, p) * P.volume ** ((n - p) / (n * p))
    rhs = lp_star_norm(f, star_exponent(n, p))
    ratio = lhs / rhs
    return _result("sobolev-body", (f, p), lhs, rhs, ratio, ratio >= 1 - 1e-6, 1e-6, t0)


def check_general_affine_sobolev(f, p, lam, quad):
    """``a_{n,p} Omega_{lam,p}(f) >= ||f||_{p*}`` with the calibrated energy.

    The extras report the same ratio with the closed-form constant and with
    the bare quadrature functional times ``2^(1/p) a_{n,p}``.
    """
    t0 = time.perf_counter()
    n = f.dim
    if not 1 < p < n:
        raise ValueError("the affine Sobolev inequality needs 1 < p < n")
    a = sobolev_constant(n, p)
    energy = affine_energy(f, lam, p, quad)
    raw = energy.value / energy.constant
    rhs = lp_star_norm(f, star_exponent(n, p))
    lhs = a * energy.value
    ratio = lhs / rhs
    extras = {
        "ratio_closed_form_constant": a * affine_energy(f, lam, p, quad, mode="closed-form").value / rhs,
        "ratio_literal_prefactor": 2 ** (1 / p) * a * raw / rhs,
    }
    return _result(
        "affine-sobolev", (f, p, lam, quad.level), lhs, rhs, ratio, ratio >= 1 - 1e-4, 1e-4, t0,
        extras=extras,
    )


def check_polya_szego(f, p, lam, quad, grid_size=1024):
    """``Omega_{lam,p}(f) >= Omega_{lam,p}(f*) = ||grad f*||_p``."""
    t0 = time.perf_counter()
    lhs = affine_energy(f, lam, p, quad).value
    rhs = radial_gradient_norm(symmetric_rearrangement(f, grid_size), p)
    ratio = lhs / rhs
    return _result(
        "polya-szego", (f, p, lam, quad.level), lhs, rhs, ratio, ratio >= 1 - 1e-4, 1e-4, t0,
        equality=abs(ratio - 1) <= 1e-3,
    )


def check_valuation(f, g, p):
    """``S_p(f) + S_p(g) = S_p(f v g) + S_p(f ^ g)`` atom by atom.

    For ``p != n`` the Blaschke sums of the corresponding bodies are compared
    as well.
    """
    t0 = time.perf_counter()
    join, meet = lattice_pair(f, g)
    left = gradient_measure(f, p) + gradient_measure(g, p)
    right = gradient_measure(join, p) + gradient_measure(meet, p)
    disc = match_measures(left, right)
    ok = disc <= 1e-9
    extras = {"atom_discrepancy": disc}
    if abs(p - f.dim) > 1e-12:
        A = solve(left, p)[0]
        B = solve(right, p)[0]
        err = support_distance(A, B, probe_directions(f.dim, 512, [A.normals])) / A.diameter
        extras["body_discrepancy"] = err
        ok = ok and err <= 1e-6
    return _result(
        "valuation", (f, g, p), left.total_mass, right.total_mass,
        left.total_mass / right.total_mass, ok, 1e-9, t0, extras=extras,
    )


def check_morrey(f, p, lam, quad):
    """``||f||_inf <= a_{n,p} |sprt f|^((p-n)/(np)) Omega_{lam,p}(f)`` for ``p > n``."""
    t0 = time.perf_counter()
    n = f.dim
    if not p > n:
        raise ValueError("the Morrey bound needs p > n")
    lhs = f.sup_norm
    energy = affine_energy(f, lam, p, quad).value
    rhs = morrey_constant(n, p) * f.support_measure ** ((p - n) / (n * p)) * energy
    ratio = lhs / rhs
    return _result("morrey", (f, p, lam, quad.level), lhs, rhs, ratio, ratio <= 1 + 1e-4, 1e-4, t0)


def check_moser_trudinger(f, lam, quad):
    """Mean of ``exp((n w_n^(1/n) |f| / Omega_{lam,n}(f))^(n/(n-1)))`` over the support.

    Reported only: the bounding constant is not available in closed form.
    """
    t0 = time.perf_counter()
    n = f.dim
    energy = affine_energy(f, lam, n, quad).value
    c = n * ball_volume(n) ** (1 / n) / energy
    supp = f.support_measure
    excess = integrate_values(f, lambda v: np.expm1((c * np.abs(v)) ** (n / (n - 1))))
    lhs = (excess + supp) / supp
    return _result(
        "moser-trudinger", (f, lam, quad.level), lhs, None, None, True, 0.0, t0,
        theorem_backed=False,
    )


def check_symmetrization_structure(f, K, p, grid_size=1024):
    """``<f^K>_p`` is the dilate ``xi^(1/(n-p)) K~`` of the normalized body."""
    t0 = time.perf_counter()
    n = f.dim
    fK = convex_symmetrization(f, K, grid_size)
    xi = xi_factor(fK.profile, n, p)
    mu = fK.gradient_measure(p)
    body = solve(mu, p)[0]
    target = fK.shape.scaled(xi.dilation)
    dirs = probe_directions(n, 512, [target.normals])
    shape_err = support_distance(body, target, dirs) / target.diameter
    measure_err = match_measures(lp_surface_measure(body, p), lp_surface_measure(fK.shape, p).scaled(xi.measure))
    star = radial_gradient_norm(symmetric_rearrangement(f, grid_size), p)
    xi_err = abs(star**p / ball_volume(n) - xi.measure) / xi.measure
    ok = shape_err <= 1e-4 and measure_err <= 1e-4 and xi_err <= 1e-4
    return _result(
        "symmetrization-structure", (f, K, p), body.volume, target.volume,
        body.volume / target.volume, ok, 1e-4, t0,
        extras={"shape_error": shape_err, "measure_error": measure_err, "xi_error": xi_err,
                "xi_measure": xi.measure, "xi_dilation": xi.dilation},
    )


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def random_polytope(dim, rng, m=None):
    """Hull of ``m`` uniform sphere points (5 to 12), centroid moved to the origin."""
    for _ in range(100):
        k = int(rng.integers(5, 13)) if m is None else m
        x = rng.normal(size=(k, dim))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        try:
            P = from_vertices(x - x.mean(axis=0))
        except LpSobolevError:
            continue
        shift = P.vertices.mean(axis=0)
        try:
            P = from_vertices(P.vertices - shift)
        except LpSobolevError:
            continue
        if P.volume > 1e-3:
            return P
    raise RuntimeError("could not generate a nondegenerate polytope")


def random_sl(dim, rng, max_cond=10.0):
    """Random matrix of determinant 1 with bounded condition number."""
    while True:
        A = np.eye(dim) + 0.6 * rng.normal(size=(dim, dim))
        d = np.linalg.det(A)
        if d <= 0 or np.linalg.cond(A) > max_cond:
            continue
        return A / d ** (1 / dim)


def random_pwa(dim, rng, interior=None):
    """Delaunay mesh of random points in a box with zero boundary values."""
    k = int(rng.integers(6, 14)) if interior is None else interior
    corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * dim)).reshape(dim, -1).T
    half = rng.uniform(0.6, 1.4, size=dim)
    pts = np.vstack([corners, rng.uniform(-0.85, 0.85, size=(k, dim))]) * half
    tri = Delaunay(pts)
    simp = tri.simplices
    e = pts[simp[:, 1:]] - pts[simp[:, :1]]
    vol = np.abs(np.linalg.det(e))
    simp = simp[vol > 1e-9 * vol.max()]
    boundary = np.unique(tri.convex_hull)
    values = rng.uniform(0.1, 1.0, size=len(pts))
    values[boundary] = 0.0
    return PwaFunction.from_mesh(pts, simp, values)


def _sphere_mesh(dim, count):
    """Points on the unit sphere and the boundary cells of their hull."""
    if dim == 2:
        t = 2 * np.pi * np.arange(count) / count
        pts = np.stack([np.cos(t), np.sin(t)], axis=1)
        cells = np.stack([np.arange(count), (np.arange(count) + 1) % count], axis=1)
        return pts, cells
    from .sphere import _icosahedron, _subdivide

    v, f = _icosahedron()
    while len(v) < count:
        v, f = _subdivide(v, f)
    return v, f


def ball_proxy(dim, resolution=None):
    """Polytope approximating the unit ball (regular 64-gon / refined icosahedron)."""
    if dim == 2:
        return regular_polygon(resolution or 64)
    return from_vertices(_sphere_mesh(3, resolution or 642)[0])


def radial_pwa(dim, radii, levels, resolution=None):
    """Piecewise-affine radial function with value ``levels[j]`` on shell ``j``.

    Shell 0 is the origin, shell ``j >= 1`` the inscribed sphere polytope
    scaled by ``radii[j-1]``; ``levels`` must end with 0.  Cells are the cone
    over the innermost shell and prisms between shells, split by global
    vertex order so that neighbouring prisms agree on shared faces.
    """
    ring, cells = _sphere_mesh(dim, resolution or (96 if dim == 2 else 2562))
    k = len(ring)
    pts = np.vstack([np.zeros((1, dim))] + [r * ring for r in radii])
    vals = np.concatenate([[levels[0]]] + [np.full(k, v) for v in levels[1:]])
    cells = np.sort(cells, axis=1)

    def shell(j, ids):
        return 1 + (j - 1) * k + ids

    simplices = [np.column_stack([np.zeros(len(cells), dtype=int), shell(1, cells)])]
    for j in range(1, len(radii)):
        lo, hi = shell(j, cells), shell(j + 1, cells)
        if dim == 2:
            a0, b0 = lo.T
            a1, b1 = hi.T
            simplices += [np.column_stack([a0, b0, b1]), np.column_stack([a0, a1, b1])]
        else:
            a0, b0, c0 = lo.T
            a1, b1, c1 = hi.T
            simplices += [
                np.column_stack([a0, b0, c0, c1]),
                np.column_stack([a0, b0, b1, c1]),
                np.column_stack([a0, a1, b1, c1]),
            ]
    return PwaFunction.from_mesh(pts, np.vstack(simplices), vals)


def random_radial(dim, rng):
    k = int(rng.integers(1, 4))
    radii = np.sort(rng.uniform(0.2, 1.0, size=k))
    radii[-1] = 1.0
    radii *= rng.uniform(0.5, 2.0)
    levels = np.concatenate([[1.0], np.sort(rng.uniform(0.05, 0.95, size=k - 1))[::-1], [0.0]])
    levels *= rng.uniform(0.5, 2.0)
    return radial_pwa(dim, radii, levels)


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusSpec:
    dim: int
    count: int
    seed: int
    generator: str
    p_range: tuple = (1.2, 4.0)
    lam_range: tuple = (0.0, 1.0)
    level: int = 3
    checks: tuple = ()
    include_adversarial: bool = False
    name: str = ""

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.dim not in (2, 3) or self.count < 0:
            raise ValueError("invalid corpus dimensions or count")
        object.__setattr__(self, "p_range", tuple(self.p_range))
        object.__setattr__(self, "lam_range", tuple(self.lam_range))
        object.__setattr__(self, "checks", tuple(self.checks))

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown corpus fields: {sorted(extra)}")
        return cls(**d)


def _rng(spec, index, salt=""):
    return np.random.default_rng([spec.seed, index, zlib.crc32(salt.encode())])


def _base(spec, index):
    """The polytope ``K`` and function ``f`` of corpus item ``index``."""
    rng = _rng(spec, index)
    n = spec.dim
    if spec.generator == "random-polytope":
        K = random_polytope(n, rng)
        return K, cone_function(K)
    if spec.generator == "cone-family":
        K = random_polytope(n, rng)
        f = scale_values(cone_function(K), rng.uniform(0.5, 2.0))
        return K, compose_linear(f, random_sl(n, rng))
    if spec.generator == "random-pwa":
        return random_polytope(n, rng), random_pwa(n, rng)
    return ball_proxy(n), random_radial(n, rng)


def _draw_p(rng, lo, hi, n, avoid_n=True):
    for _ in range(100):
        p = float(rng.uniform(lo, hi))
        if not avoid_n or abs(p - n) > 0.05:
            return p
    raise ValueError(f"no admissible p in [{lo}, {hi}]")


def _partner(f, rng):
    """Second function overlapping ``f`` for the valuation check."""
    if f.dim == 2:
        g = cone_function(random_polytope(2, rng))
        g = scale_values(g, rng.uniform(0.3, 1.5) * max(f.sup_norm, 1e-3))
        lo, hi = f.vertices.min(0), f.vertices.max(0)
        return translate(g, rng.uniform(lo, hi) * 0.5)
    # 3D overlays need a shared mesh: new values on the interior vertices
    values = np.where(f.values != 0, rng.uniform(0.1, 1.0, size=len(f.values)), 0.0)
    values = values * max(f.sup_norm, 1e-3)
    return PwaFunction.from_mesh(f.vertices, f.simplices, values)


def _run_check(spec, name, index, quad):
    rng = _rng(spec, index, name)
    n = spec.dim
    lo, hi = spec.p_range
    lam = float(rng.uniform(*spec.lam_range))
    K, f = _base(spec, index)
    if name == "minkowski":
        p = _draw_p(rng, lo, hi, n, avoid_n=False)
        L = K.scaled(rng.uniform(0.3, 3.0)) if rng.uniform() < 0.2 else random_polytope(n, rng)
        return check_minkowski_ineq(K, L, p)
    if name == "minkowski-problem":
        p = _draw_p(rng, lo, hi, n)
        return check_minkowski_problem(lp_surface_measure(K, p), p, reference=K)
    if name == "petty":
        return check_petty(K, _draw_p(rng, lo, hi, n, avoid_n=False), lam, quad)
    if name == "normalized-petty":
        return check_normalized_petty(K, lam, quad)
    if name == "sobolev-body":
        return check_sobolev_body_ineq(f, _draw_p(rng, 1.1, n - 0.1, n))
    if name == "affine-sobolev":
        return check_general_affine_sobolev(f, _draw_p(rng, 1.1, n - 0.1, n), lam, quad)
    if name == "polya-szego":
        p = float(n) if index % 4 == 0 else _draw_p(rng, lo, hi, n, avoid_n=False)
        return check_polya_szego(f, p, lam, quad)
    if name == "valuation":
        return check_valuation(f, _partner(f, rng), _draw_p(rng, lo, hi, n))
    if name == "morrey":
        return check_morrey(f, _draw_p(rng, n + 0.2, n + 3.0, n), lam, quad)
    if name == "moser-trudinger":
        return check_moser_trudinger(f, lam, quad)
    if name == "symmetrization-structure":
        return check_symmetrization_structure(f, random_polytope(n, rng), _draw_p(rng, lo, hi, n))
    raise ValueError(f"unknown check {name!r}")


CHECKS = (
    "minkowski", "minkowski-problem", "petty", "normalized-petty", "sobolev-body",
    "affine-sobolev", "polya-szego", "valuation", "morrey", "moser-trudinger",
    "symmetrization-structure",
)


def _adversarial(spec):
    """A measure confined to a closed hemisphere; solving it must fail cleanly."""
    t0 = time.perf_counter()
    rng = _rng(spec, spec.count, "adversarial")
    u = rng.normal(size=(6, spec.dim))
    u[:, 0] = np.abs(u[:, 0])
    mu = DiscreteSphereMeasure.from_atoms(u, rng.uniform(0.5, 2.0, 6))
    try:
        check_minkowski_problem(mu, 1.5)
    except LpSobolevError as exc:
        return _result(
            "minkowski-problem", (mu, 1.5), None, None, None, exc.kind == "hemisphere", 0.0, t0,
            error=exc.kind, message=str(exc), extras={"expected_error": "hemisphere"},
        )
    return _result(
        "minkowski-problem", (mu, 1.5), None, None, None, False, 0.0, t0,
        message="hemisphere measure was accepted", extras={"expected_error": "hemisphere"},
    )


def _task(args):
    spec, name, index = args
    quad = build_quadrature(spec.dim, spec.level)
    t0 = time.perf_counter()
    try:
        return _run_check(spec, name, index, quad)
    except (LpSobolevError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        kind = getattr(exc, "kind", type(exc).__name__)
        log.warning("%s[%d] raised %s: %s", name, index, kind, exc)
        return CheckResult(
            check=name, digest=digest(spec.name or spec.generator, spec.seed, index),
            lhs=None, rhs=None, ratio=None, passed=False, tolerance=0.0,
            runtime_ms=1e3 * (time.perf_counter() - t0), error=kind, message=str(exc),
        )


def run_suite(spec, checks=None, jobs=1):
    """Run ``checks`` (default: the corpus list, or all checks) over every item.

    Results are sorted by check name and input digest, independent of the
    execution order.
    """
    checks = tuple(checks if checks is not None else (spec.checks or CHECKS))
    unknown = set(checks) - set(CHECKS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    tasks = [(spec, name, i) for name in checks for i in range(spec.count)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_task(t) for t in tasks]
    if spec.include_adversarial:
        results.append(_adversarial(spec))
    for r in results:
        log.info("%-24s %s %s ratio=%s", r.check, r.digest, "pass" if r.passed else "FAIL", r.ratio)
    return sorted(results, key=lambda r: (r.check, r.digest))


def summarize(results):
    by = {}
    for r in results:
        s = by.setdefault(r.check, {"count": 0, "passed": 0, "errors": 0, "min_ratio": None, "max_ratio": None})
        s["count"] += 1
        s["passed"] += int(r.passed)
        s["errors"] += int(r.error is not None)
        if r.ratio is not None:
            s["min_ratio"] = r.ratio if s["min_ratio"] is None else min(s["min_ratio"], r.ratio)
            s["max_ratio"] = r.ratio if s["max_ratio"] is None else max(s["max_ratio"], r.ratio)
    return {
        "total": len(results),
        "passed": sum(r.passed for r in results),
        "violations": sum(r.violation for r in results),
        "by_check": dict(sorted(by.items())),
    }


def report_json(results, timings=False):
    body = {"results": [r.to_dict(timings) for r in results], "summary": summarize(results)}
    return json.dumps(body, sort_keys=True, indent=1, allow_nan=False) + "\n"


def report_rows(results):
    return [
        (r.check, r.digest, "" if r.lhs is None else r.lhs, "" if r.rhs is None else r.rhs,
         "" if r.ratio is None else r.ratio, int(r.passed))
        for r in results
    ]


REPORT_HEADER = ("check", "digest", "lhs", "rhs", "ratio", "pass")
