"""Compactly supported piecewise-affine functions on simplicial meshes."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree
from scipy.special import roots_jacobi

from .errors import (
    DimensionMismatch,
    InputError,
    MeshOverlayFailure,
    SingularMatrix,
    TrivialFunction,
)
from .geometry import DiscreteSphereMeasure, _check_dim, _merge_groups_points
from .solver import SolverConfig, solve, solve_normalized


@dataclass(frozen=True, eq=False)
class PwaFunction:
    """Continuous function, affine on each simplex and zero off the mesh.

    ``gradients`` and ``measures`` are per-simplex caches.  Build instances
    through :meth:`from_mesh`, which orients the simplices, rejects degenerate
    ones and (by default) checks that boundary vertices carry the value 0.
    """

    dim: int
    vertices: np.ndarray
    simplices: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    measures: np.ndarray

    @classmethod
    def from_mesh(cls, vertices, simplices, values, gradients=None, check_boundary=True):
        vertices = np.asarray(vertices, dtype=float)
        simplices = np.array(simplices, dtype=int)
        values = np.asarray(values, dtype=float).ravel()
        if vertices.ndim != 2:
            raise InputError("vertices must be an (N, n) array")
        n = vertices.shape[1]
        _check_dim(n)
        if simplices.ndim != 2 or simplices.shape[1] != n + 1:
            raise InputError(f"simplices must have {n + 1} vertex indices each")
        if len(values) != len(vertices):
            raise InputError("one value per vertex is required")
        if simplices.min(initial=0) < 0 or simplices.max(initial=0) >= len(vertices):
            raise InputError("simplex refers to a missing vertex")

        edges = vertices[simplices[:, 1:]] - vertices[simplices[:, :1]]
        det = np.linalg.det(edges)
        scale = np.abs(vertices).max() if len(vertices) else 1.0
        if np.any(np.abs(det) <= 1e-14 * max(scale, 1e-300) ** n):
            bad = int(np.argmin(np.abs(det)))
            raise InputError(f"simplex {bad} is degenerate (zero volume)")
        flip = det < 0
        if flip.any():
            simplices[flip, 0], simplices[flip, 1] = (
                simplices[flip, 1].copy(), simplices[flip, 0].copy()
            )
            edges = vertices[simplices[:, 1:]] - vertices[simplices[:, :1]]
            det = np.linalg.det(edges)  # recomputed so that reloading is bitwise stable
        measures = np.abs(det) / factorial(n)

        dv = values[simplices[:, 1:]] - values[simplices[:, :1]]
        if gradients is None:
            gradients = np.linalg.solve(edges, dv[..., None])[..., 0]
        else:
            gradients = np.asarray(gradients, dtype=float).reshape(len(simplices), n)
            pred = np.einsum("kij,kj->ki", edges, gradients)
            vscale = max(1.0, float(np.abs(values).max(initial=0.0)))
            if np.abs(pred - dv).max(initial=0.0) > 1e-8 * vscale:
                raise InputError("given gradients disagree with the vertex values")

        f = cls(n, vertices, simplices, values, gradients, measures)
        for arr in (vertices, simplices, values, gradients, measures):
            arr.flags.writeable = False
        if check_boundary:
            f._check_boundary()
        return f

    def _check_boundary(self):
        n = self.dim
        faces = np.concatenate(
            [np.delete(self.simplices, k, axis=1) for k in range(n + 1)]
        )
        faces.sort(axis=1)
        uniq, counts = np.unique(faces, axis=0, return_counts=True)
        boundary = np.unique(uniq[counts == 1])
        vscale = max(1.0, float(np.abs(self.values).max(initial=0.0)))
        bad = boundary[np.abs(self.values[boundary]) > 1e-12 * vscale]
        if len(bad):
            k = int(bad[0])
            raise InputError(
                f"boundary vertex {k} at {self.vertices[k].tolist()} has nonzero "
                f"value {self.values[k]!r}"
            )

    def __len__(self):
        return len(self.simplices)

    @property
    def sup_norm(self):
        return float(np.abs(self.values).max(initial=0.0))

    @property
    def support_measure(self):
        """``|sprt f|``: total measure of simplices where ``f`` is not identically 0."""
        live = np.any(self.values[self.simplices] != 0, axis=1)
        return float(self.measures[live].sum())

    def simplex_values(self):
        return self.values[self.simplices]

    def __call__(self, points):
        """Evaluate at points (zero off the mesh)."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(x))
        found = np.zeros(len(x), dtype=bool)
        base = self.vertices[self.simplices[:, 0]]
        edges = self.vertices[self.simplices[:, 1:]] - base[:, None, :]
        inv = np.linalg.inv(np.transpose(edges, (0, 2, 1)))
        for k in range(len(self.simplices)):
            lam = (x - base[k]) @ inv[k].T
            inside = (lam.min(axis=1) >= -1e-12) & (lam.sum(axis=1) <= 1 + 1e-12) & ~found
            if inside.any():
                v0 = self.values[self.simplices[k, 0]]
                out[inside] = v0 + (x[inside] - base[k]) @ self.gradients[k]
                found |= inside
        return out if np.ndim(points) == 2 else float(out[0])


def gradient_measure(f, p):
    """``S_p(f, .) = n sum_i |M_i| |g_i|^p delta_{-g_i/|g_i|}``.

    Zero-gradient simplices contribute nothing; parallel atoms are merged.
    """
    return _gradient_atoms(f, p, factor=f.dim)


def _gradient_atoms(f, p, factor):
    norms = np.linalg.norm(f.gradients, axis=1)
    live = norms > 0
    if not live.any():
        raise TrivialFunction("all gradients vanish")
    g = f.gradients[live]
    return DiscreteSphereMeasure.from_atoms(
        -g / norms[live, None], factor * f.measures[live] * norms[live] ** p, dim=f.dim
    )


def sobolev_body(f, p, cfg=None):
    """The polytope ``<f>_p`` whose ``S_p`` measure is ``gradient_measure(f, p)``."""
    cfg = cfg or SolverConfig(p=p)
    return solve(gradient_measure(f, p), cfg)[0]


def sobolev_body_normalized(f, cfg=None):
    """``<f>_n``: ``S_n(P, .) / |P|`` equals ``sum |M_i| |g_i|^n delta_{-u_i}``.

    Note the missing factor ``n`` compared to :func:`gradient_measure`.
    """
    mu = _gradient_atoms(f, f.dim, factor=1.0)
    return solve_normalized(mu, f.dim, cfg)[0]


def cone_function(P):
    """``l_P``: 1 at the origin, 0 on the boundary of ``P``, affine on the facet cones."""
    n = P.dim
    verts = np.vstack([np.zeros(n), P.vertices])
    simplices, grads = [], []
    for i, cycle in enumerate(P.facet_vertices):
        g = -P.normals[i] / P.offsets[i]
        ids = [c + 1 for c in cycle]
        if n == 2:
            simplices.append([0, ids[0], ids[1]])
            grads.append(g)
        else:
            for k in range(1, len(ids) - 1):
                simplices.append([0, ids[0], ids[k], ids[k + 1]])
                grads.append(g)
    values = np.zeros(len(verts))
    values[0] = 1.0
    return PwaFunction.from_mesh(verts, simplices, values, gradients=np.array(grads))


def translate(f, shift):
    """``x -> f(x - shift)`` on the translated mesh (caches carried over)."""
    shift = np.asarray(shift, dtype=float)
    g = PwaFunction(f.dim, f.vertices + shift, f.simplices, f.values, f.gradients, f.measures)
    return g


def compose_linear(f, phi):
    """``f o phi^{-1}``: vertices mapped by ``phi``, values carried."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (f.dim, f.dim):
        raise DimensionMismatch("matrix shape does not match the function")
    det = np.linalg.det(phi)
    if not np.isfinite(det) or abs(det) <= 1e-12 * np.linalg.norm(phi) ** f.dim:
        raise SingularMatrix("phi is singular")
    grads = f.gradients @ np.linalg.inv(phi)
    return PwaFunction.from_mesh(
        f.vertices @ phi.T, f.simplices, f.values, gradients=grads, check_boundary=False
    )


# ---------------------------------------------------------------------------
# integrals
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def simplex_rule(n, k=6):
    """Conical-product Gauss rule on the reference ``n``-simplex.

    Returns barycentric points ``(Q, n + 1)`` and weights summing to 1; exact
    for polynomials of degree ``2k - 1``.
    """
    if n == 2:
        xa, wa = roots_jacobi(k, 1.0, 0.0)
        xb, wb = roots_jacobi(k, 0.0, 0.0)
        a, b = (1 + xa) / 2, (1 + xb) / 2
        A, B = np.meshgrid(a, b, indexing="ij")
        W = np.outer(wa, wb)
        r, s = A, B * (1 - A)
        lam = np.stack([1 - r - s, r, s], axis=-1).reshape(-1, 3)
    else:
        xa, wa = roots_jacobi(k, 2.0, 0.0)
        xb, wb = roots_jacobi(k, 1.0, 0.0)
        xc, wc = roots_jacobi(k, 0.0, 0.0)
        a, b, c = (1 + xa) / 2, (1 + xb) / 2, (1 + xc) / 2
        A, B, C = np.meshgrid(a, b, c, indexing="ij")
        W = wa[:, None, None] * wb[None, :, None] * wc[None, None, :]
        r = A
        s = B * (1 - A)
        t = C * (1 - A) * (1 - B)
        lam = np.stack([1 - r - s - t, r, s, t], axis=-1).reshape(-1, 4)
    w = W.ravel()
    return lam, w / w.sum()


def _split_points(points, dvals):
    """Vertices of the two parts of a simplex cut by an affine function.

    ``dvals`` are the function's values at the simplex vertices; returns the
    point sets of ``{d >= 0}`` and ``{d <= 0}``.
    """
    pos = [points[k] for k in range(len(points)) if dvals[k] >= 0]
    neg = [points[k] for k in range(len(points)) if dvals[k] <= 0]
    for a in range(len(points)):
        for b in range(a + 1, len(points)):
            if dvals[a] * dvals[b] < 0:
                t = dvals[a] / (dvals[a] - dvals[b])
                x = points[a] + t * (points[b] - points[a])
                pos.append(x)
                neg.append(x)
    return np.array(pos), np.array(neg)


def _triangulate_convex(points, n):
    """Simplices (as point arrays) covering the convex hull of ``points``."""
    if len(points) < n + 1:
        return []
    if n == 2:
        c = points.mean(axis=0)
        ang = np.arctan2(points[:, 1] - c[1], points[:, 0] - c[0])
        poly = points[np.argsort(ang)]
        return [np.array([poly[0], poly[k], poly[k + 1]]) for k in range(1, len(poly) - 1)]
    try:
        tri = Delaunay(points)
    except (QhullError, ValueError):
        return []
    return [points[s] for s in tri.simplices]


def _simplex_volume(pts):
    e = pts[1:] - pts[:1]
    return abs(np.linalg.det(e)) / factorial(len(pts) - 1)


def integrate_values(f, fn, k=6):
    """``int fn(f(x)) dx`` over the mesh for ``fn`` with ``fn(0) = 0``.

    Simplices on which ``f`` changes sign are split at the zero level first,
    so that the quadrature only sees one-signed affine integrands.
    """
    n = f.dim
    lam, w = simplex_rule(n, k)
    sv = f.simplex_values()
    mixed = (sv.min(axis=1) < 0) & (sv.max(axis=1) > 0)
    total = float(np.dot(f.measures[~mixed], fn(sv[~mixed] @ lam.T) @ w))
    for i in np.flatnonzero(mixed):
        pts = f.vertices[f.simplices[i]]
        v0 = sv[i, 0]
        x0 = pts[0]
        for part in _split_points(pts, sv[i]):
            for sub in _triangulate_convex(part, n):
                vals = v0 + (sub - x0) @ f.gradients[i]
                total += _simplex_volume(sub) * float(fn(lam @ vals) @ w)
    return total


def lp_star_norm(f, q):
    """``(int |f|^q dx)^(1/q)``."""
    if q < 1:
        raise ValueError("q must be at least 1")
    return integrate_values(f, lambda v: np.abs(v) ** q) ** (1.0 / q)


def directional_energy(f, v, lam, p):
    """``int (1-lam)(D_v f)_+^p + lam (D_v f)_-^p dx`` (exact per simplex).

    ``v`` may be one direction or an array of them.
    """
    if not 0 <= lam <= 1:
        raise ValueError("lambda must lie in [0, 1]")
    d = np.asarray(v, dtype=float)
    dirs = np.atleast_2d(d)
    out = np.empty(len(dirs))
    step = max(1, 2**22 // max(len(f), 1))  # bound the (directions x simplices) block
    for start in range(0, len(dirs), step):
        dv = dirs[start:start + step] @ f.gradients.T
        pos = np.maximum(dv, 0.0) ** p
        neg = np.maximum(-dv, 0.0) ** p
        out[start:start + step] = ((1 - lam) * pos + lam * neg) @ f.measures
    return out if d.ndim == 2 else float(out[0])


# ---------------------------------------------------------------------------
# lattice operations
# ---------------------------------------------------------------------------

_ZERO_FORM = None


def _clip_polygon(poly, a, b):
    """Part of a convex polygon where ``a . x + b >= 0`` (Sutherland-Hodgman)."""
    if len(poly) == 0:
        return poly
    d = poly @ a + b
    out = []
    k = len(poly)
    for i in range(k):
        j = (i + 1) % k
        if d[i] >= 0:
            out.append(poly[i])
        if d[i] * d[j] < 0:
            t = d[i] / (d[i] - d[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out) if out else np.zeros((0, 2))


def _polygon_area(poly):
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _triangle_halfplanes(tri):
    """Inward halfplanes ``(a, b)`` with ``a . x + b >= 0`` inside a ccw triangle."""
    out = []
    for i in range(3):
        p, q = tri[i], tri[(i + 1) % 3]
        a = np.array([-(q[1] - p[1]), q[0] - p[0]])
        out.append((a, -float(a @ p)))
    return out


def _ccw(tri):
    e = tri[1:] - tri[:1]
    return tri if np.linalg.det(e) > 0 else tri[[0, 2, 1]]


def _forms(f):
    """Affine form ``(g, c)`` with ``f = g . x + c`` on each simplex."""
    base = f.vertices[f.simplices[:, 0]]
    c = f.values[f.simplices[:, 0]] - np.einsum("ij,ij->i", f.gradients, base)
    return [(f.gradients[i], float(c[i])) for i in range(len(f))]


def _eval_form(form, x):
    if form is _ZERO_FORM:
        return np.zeros(len(x))
    return x @ form[0] + form[1]


def _form_grad(form, n):
    return np.zeros(n) if form is _ZERO_FORM else form[0]


def _overlay_cells_2d(f, g, area_tol):
    tf = [_ccw(f.vertices[s]) for s in f.simplices]
    tg = [_ccw(g.vertices[s]) for s in g.simplices]
    ff, fg = _forms(f), _forms(g)
    planes_f = [_triangle_halfplanes(t) for t in tf]
    planes_g = [_triangle_halfplanes(t) for t in tg]
    lo_f = np.array([t.min(0) for t in tf])
    hi_f = np.array([t.max(0) for t in tf])
    lo_g = np.array([t.min(0) for t in tg])
    hi_g = np.array([t.max(0) for t in tg])

    cells = []
    for a, ta in enumerate(tf):
        hits = np.flatnonzero(np.all(lo_g <= hi_f[a], axis=1) & np.all(lo_f[a] <= hi_g, axis=1))
        remainder = [ta]
        for b in hits:
            inter = ta
            for pa, pb in planes_g[b]:
                inter = _clip_polygon(inter, pa, pb)
            if _polygon_area(inter) > area_tol:
                cells.append((inter, ff[a], fg[b]))
                remainder = _subtract(remainder, planes_g[b], lo_g[b], hi_g[b], area_tol)
        cells.extend((q, ff[a], _ZERO_FORM) for q in remainder)
    for b, tb in enumerate(tg):
        hits = np.flatnonzero(np.all(lo_f <= hi_g[b], axis=1) & np.all(lo_g[b] <= hi_f, axis=1))
        remainder = [tb]
        for a in hits:
            remainder = _subtract(remainder, planes_f[a], lo_f[a], hi_f[a], area_tol)
        cells.extend((q, _ZERO_FORM, fg[b]) for q in remainder)
    return cells


def _subtract(polys, planes, lo, hi, area_tol):
    """Convex pieces of ``union(polys)`` minus the triangle given by ``planes``.

    ``lo`` and ``hi`` bound the triangle; pieces outside that box pass through.
    """
    out = []
    for q in polys:
        if np.any(q.min(0) > hi) or np.any(q.max(0) < lo):
            out.append(q)
            continue
        rest = q
        for pa, pb in planes:
            outside = _clip_polygon(rest, -pa, -pb)
            if _polygon_area(outside) > area_tol:
                out.append(outside)
            rest = _clip_polygon(rest, pa, pb)
            if _polygon_area(rest) <= area_tol:
                break
    return out


def _overlay_cells_3d(f, g):
    same = (
        f.vertices.shape == g.vertices.shape
        and np.array_equal(f.vertices, g.vertices)
        and np.array_equal(np.sort(f.simplices, axis=1), np.sort(g.simplices, axis=1))
    )
    ff, fg = _forms(f), _forms(g)
    if same:
        key = {tuple(sorted(s)): i for i, s in enumerate(g.simplices)}
        return [
            (f.vertices[s], ff[i], fg[key[tuple(sorted(s))]])
            for i, s in enumerate(f.simplices)
        ]
    lo_f, hi_f = f.vertices.min(0), f.vertices.max(0)
    lo_g, hi_g = g.vertices.min(0), g.vertices.max(0)
    if np.any(hi_f < lo_g) or np.any(hi_g < lo_f):
        return [(f.vertices[s], ff[i], _ZERO_FORM) for i, s in enumerate(f.simplices)] + [
            (g.vertices[s], _ZERO_FORM, fg[i]) for i, s in enumerate(g.simplices)
        ]
    raise MeshOverlayFailure(
        "3D join/meet needs identical meshes or separated supports"
    )


def _overlay(f, g):
    if f.dim != g.dim:
        raise DimensionMismatch("functions live in different dimensions")
    n = f.dim
    scale = max(np.abs(f.vertices).max(), np.abs(g.vertices).max(), 1e-300)
    area_tol = 1e-12 * scale**n
    cells = _overlay_cells_2d(f, g, area_tol) if n == 2 else _overlay_cells_3d(f, g)
    return cells, scale, area_tol


def _lattice(f, g, take_max, overlay=None):
    n = f.dim
    cells, scale, area_tol = overlay or _overlay(f, g)

    pts_all, vals_all, simplices, grads = [], [], [], []
    for poly, F, G in cells:
        upper, lower = (F, G) if take_max else (G, F)
        if n == 2:
            parts = (
                (_clip_polygon(poly, *_diff_plane(F, G, n)), upper),
                (_clip_polygon(poly, *_diff_plane(G, F, n)), lower),
            )
            tris = [
                (t, form) for part, form in parts
                if _polygon_area(part) > area_tol
                for t in _triangulate_convex(part, 2)
            ]
        else:
            pos, neg = _split_points(poly, _eval_form(F, poly) - _eval_form(G, poly))
            tris = [(t, upper) for t in _triangulate_convex(pos, 3)]
            tris += [(t, lower) for t in _triangulate_convex(neg, 3)]
        for t, form in tris:
            if _simplex_volume(t) <= area_tol:
                continue
            base = len(pts_all)
            pts_all.extend(t)
            vals_all.extend(_eval_form(form, t))
            simplices.append(list(range(base, base + n + 1)))
            grads.append(_form_grad(form, n))
    if not simplices:
        raise MeshOverlayFailure("overlay produced no cells")

    pts_all = np.array(pts_all)
    vals_all = np.array(vals_all)
    first, group = _merge_groups_points(cKDTree(pts_all), pts_all, 1e-12 * scale)
    simplices = group[np.array(simplices)]
    keep = np.array([len(set(s)) == n + 1 for s in simplices])
    return PwaFunction.from_mesh(
        pts_all[first], simplices[keep], vals_all[first],
        gradients=np.array(grads)[keep], check_boundary=False,
    )


def _diff_plane(F, G, n):
    """Halfplane coefficients of ``{F - G >= 0}``."""
    gF, cF = (np.zeros(n), 0.0) if F is _ZERO_FORM else F
    gG, cG = (np.zeros(n), 0.0) if G is _ZERO_FORM else G
    return gF - gG, cF - cG


def lattice_join(f, g):
    """Pointwise maximum ``f v g`` on a common refinement of the two meshes."""
    return _lattice(f, g, take_max=True)


def lattice_meet(f, g):
    """Pointwise minimum ``f ^ g`` on a common refinement of the two meshes."""
    return _lattice(f, g, take_max=False)


def lattice_pair(f, g):
    """``(f v g, f ^ g)`` sharing one mesh overlay."""
    overlay = _overlay(f, g)
    return _lattice(f, g, True, overlay), _lattice(f, g, False, overlay)


def scale_values(f, t):
    """``t f`` on the same mesh."""
    t = float(t)
    return PwaFunction(f.dim, f.vertices, f.simplices, f.values * t, f.gradients * t, f.measures)
