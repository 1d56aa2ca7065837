"""Exact polytope kernel for dimensions 2 and 3.

Polytopes are stored by their halfspace representation
``{x : x . u_j <= h_j}`` with unit normals ``u_j`` and positive support
numbers ``h_j``; vertices and facet data are derived once at construction.
Vertex enumeration goes through the dual point set ``u_j / h_j``: the facets
of its convex hull are in bijection with the vertices of the polytope.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import (
    DimensionMismatch,
    EmptyInterior,
    EmptyMeasure,
    NonpositiveSupport,
    QuadratureMissing,
    SingularMatrix,
    UnboundedBody,
)

MERGE_TOL = 1e-9
AREA_TOL = 1e-12


def unit_vectors(x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero vector cannot be normalized")
    return x / norms[:, None]


def _check_dim(dim):
    if dim not in (2, 3):
        raise DimensionMismatch(f"only dimensions 2 and 3 are supported, got {dim}")


def _merge_groups(directions, tol):
    """Group indices of directions closer than ``tol`` (chordal distance)."""
    m = len(directions)
    parent = np.arange(m)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if m > 1:
        for i, j in sorted(cKDTree(directions).query_pairs(tol)):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(m)], dtype=int)
    # groups ordered by first appearance; representative is the first member
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return np.sort(first), rank[inverse]


# ---------------------------------------------------------------------------
# measures on the sphere
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteSphereMeasure:
    """Finite positive combination of Dirac masses on the unit sphere.

    Use :meth:`from_atoms` to build one; it normalizes the directions, drops
    zero weights and merges atoms that are parallel within ``MERGE_TOL``.
    """

    dim: int
    directions: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_atoms(cls, directions, weights, dim=None, merge_tol=MERGE_TOL):
        weights = np.asarray(weights, dtype=float).ravel()
        directions = np.asarray(directions, dtype=float)
        if dim is None:
            if directions.ndim != 2:
                raise EmptyMeasure("cannot infer dimension of an empty measure")
            dim = directions.shape[1]
        _check_dim(dim)
        directions = directions.reshape(-1, dim)
        if len(directions) != len(weights):
            raise ValueError("directions and weights differ in length")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("measure weights must be finite and nonnegative")
        keep = weights > 0
        directions = directions[keep]
        weights = weights[keep]
        if len(weights) == 0:
            return cls(dim, np.zeros((0, dim)), np.zeros(0))
        directions = unit_vectors(directions)
        first, group = _merge_groups(directions, merge_tol)
        merged = np.zeros(len(first))
        np.add.at(merged, group, weights)
        out_dirs = directions[first].copy()
        out_dirs.flags.writeable = False
        merged.flags.writeable = False
        return cls(dim, out_dirs, merged)

    def __len__(self):
        return len(self.weights)

    @property
    def total_mass(self):
        return float(self.weights.sum())

    def __add__(self, other):
        if other.dim != self.dim:
            raise DimensionMismatch("cannot add measures of different dimension")
        return DiscreteSphereMeasure.from_atoms(
            np.vstack([self.directions, other.directions]),
            np.concatenate([self.weights, other.weights]),
            dim=self.dim,
        )

    def scaled(self, c):
        return DiscreteSphereMeasure(self.dim, self.directions, self.weights * float(c))

    def reflected(self):
        """The measure pushed forward by ``u -> -u``."""
        return DiscreteSphereMeasure(self.dim, -self.directions, self.weights)

    def integrate(self, fn):
        """Integrate ``fn`` (vectorized over rows of directions)."""
        return float(np.dot(fn(self.directions), self.weights))


def match_measures(mu, nu, tol=MERGE_TOL):
    """Largest relative atom discrepancy between two measures.

    Atoms are paired by direction; an atom present in only one of the measures
    counts as a discrepancy of 1.
    """
    if mu.dim != nu.dim:
        raise DimensionMismatch("measures live on different spheres")
    if len(mu) == 0 and len(nu) == 0:
        return 0.0
    if len(mu) == 0 or len(nu) == 0:
        return 1.0
    tree = cKDTree(nu.directions)
    dist, idx = tree.query(mu.directions)
    worst = 0.0
    hit = np.zeros(len(nu), dtype=bool)
    for k in range(len(mu)):
        if dist[k] > tol:
            return 1.0
        hit[idx[k]] = True
        a, b = mu.weights[k], nu.weights[idx[k]]
        worst = max(worst, abs(a - b) / max(a, b))
    if not hit.all():
        return 1.0
    return worst


# ---------------------------------------------------------------------------
# Wulff shape data for an arbitrary halfspace family
# ---------------------------------------------------------------------------


class WulffData(NamedTuple):
    vertices: np.ndarray  # (k, n)
    vertex_facets: np.ndarray  # (k, n) halfspace indices meeting at each vertex
    areas: np.ndarray  # (m,), zero for halfspaces not touching in a facet
    ridge_i: np.ndarray
    ridge_j: np.ndarray
    ridge_measure: np.ndarray  # (n-2)-measure of F_i cap F_j (1 in the plane)
    ridge_vertices: np.ndarray  # (r, 2) vertex ids bounding the ridge (3D only)
    volume: float


def wulff_data(normals, offsets):
    """Vertices, facet measures and ridge structure of ``{x . u_j <= h_j}``.

    All halfspaces are kept; redundant ones simply get zero facet measure.
    """
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    m, n = normals.shape
    if np.any(offsets <= 0):
        raise EmptyInterior("support numbers must be positive")
    dual = normals / offsets[:, None]
    try:
        hull = ConvexHull(dual)
    except (QhullError, ValueError) as exc:
        raise UnboundedBody("normals lie in a closed hemisphere") from exc
    scale = np.abs(dual).max()
    if np.any(hull.equations[:, -1] >= -1e-13 * scale):
        raise UnboundedBody("normals lie in a closed hemisphere")

    simplices = hull.simplices
    lhs = normals[simplices]  # (k, n, n)
    rhs = offsets[simplices]
    vertices = np.linalg.solve(lhs, rhs[..., None])[..., 0]

    if n == 2:
        ri, rj = simplices[:, 0], simplices[:, 1]
        ell = np.ones(len(simplices))
        ridge_vertices = np.stack([np.arange(len(simplices))] * 2, axis=1)
    else:
        tri = np.arange(len(simplices))
        edges = np.concatenate(
            [simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [0, 2]]]
        )
        owner = np.concatenate([tri, tri, tri])
        edges.sort(axis=1)
        keys = edges[:, 0] * m + edges[:, 1]
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        if len(keys) % 2 or np.any(keys[0::2] != keys[1::2]):
            raise UnboundedBody("dual hull is not a closed surface")
        e = edges[order][0::2]
        t1, t2 = owner[order][0::2], owner[order][1::2]
        ri, rj = e[:, 0], e[:, 1]
        ell = np.linalg.norm(vertices[t1] - vertices[t2], axis=1)
        ridge_vertices = np.stack([t1, t2], axis=1)

    cos = np.einsum("ij,ij->i", normals[ri], normals[rj])
    sin = np.sqrt(np.clip(1.0 - cos * cos, 0.0, None))
    sin = np.maximum(sin, 1e-300)
    dist_i = (offsets[rj] - offsets[ri] * cos) / sin
    dist_j = (offsets[ri] - offsets[rj] * cos) / sin
    areas = np.zeros(m)
    np.add.at(areas, ri, dist_i * ell)
    np.add.at(areas, rj, dist_j * ell)
    areas /= n - 1
    areas = np.maximum(areas, 0.0)
    volume = float(np.dot(offsets, areas) / n)
    return WulffData(vertices, simplices, areas, ri, rj, ell, ridge_vertices, volume)


def volume_hessian(normals, data):
    """Second derivatives of volume with respect to the support numbers."""
    m = len(normals)
    ri, rj, ell = data.ridge_i, data.ridge_j, data.ridge_measure
    cos = np.einsum("ij,ij->i", normals[ri], normals[rj])
    sin = np.maximum(np.sqrt(np.clip(1.0 - cos * cos, 0.0, None)), 1e-300)
    off = ell / sin
    hess = np.zeros((m, m))
    np.add.at(hess, (ri, rj), off)
    np.add.at(hess, (rj, ri), off)
    diag = np.zeros(m)
    np.add.at(diag, ri, -cos * off)
    np.add.at(diag, rj, -cos * off)
    hess[np.diag_indices(m)] = diag
    return hess


def volume_hessian_sparse(normals, data):
    """:func:`volume_hessian` as a sparse CSR matrix."""
    m = len(normals)
    ri, rj, ell = data.ridge_i, data.ridge_j, data.ridge_measure
    cos = np.einsum("ij,ij->i", normals[ri], normals[rj])
    sin = np.maximum(np.sqrt(np.clip(1.0 - cos * cos, 0.0, None)), 1e-300)
    off = ell / sin
    diag = np.zeros(m)
    np.add.at(diag, ri, -cos * off)
    np.add.at(diag, rj, -cos * off)
    rows = np.concatenate([ri, rj, np.arange(m)])
    cols = np.concatenate([rj, ri, np.arange(m)])
    vals = np.concatenate([off, off, diag])
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, m))


# ---------------------------------------------------------------------------
# polytopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Polytope:
    """Convex polytope with the origin in its interior.

    Build instances with :func:`canonicalize` or :func:`from_vertices`;
    every stored halfspace supports a facet of positive measure.
    """

    dim: int
    normals: np.ndarray
    offsets: np.ndarray
    vertices: np.ndarray
    facet_areas: np.ndarray
    facet_vertices: tuple = field(repr=False)
    volume: float

    def support(self, directions):
        """Support function ``h(K, u)`` for a direction or an array of them."""
        d = np.asarray(directions, dtype=float)
        vals = np.max(np.atleast_2d(d) @ self.vertices.T, axis=1)
        return vals if d.ndim == 2 else float(vals[0])

    def gauge(self, points):
        """Minkowski functional ``min{t >= 0 : x in tK}``."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        return np.max(x @ self.normals.T / self.offsets, axis=1)

    @property
    def diameter(self):
        v = self.vertices
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d * d).sum(-1)).max())

    def scaled(self, t):
        return canonicalize(self.normals, self.offsets * float(t))

    def __len__(self):
        return len(self.offsets)


def _order_cycle(points, normal):
    center = points.mean(axis=0)
    a = np.eye(len(normal))[np.argmin(np.abs(normal))]
    e1 = a - normal * np.dot(a, normal)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    rel = points - center
    return np.argsort(np.arctan2(rel @ e2, rel @ e1))


def canonicalize(normals, offsets, area_tol=AREA_TOL, merge_tol=MERGE_TOL):
    """Clean a halfspace representation into a :class:`Polytope`.

    Normals are normalized, parallel normals merged (keeping the tighter
    halfspace) and halfspaces whose facet measure is below
    ``area_tol * |K|^((n-1)/n)`` dropped.
    """
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float).ravel()
    if normals.ndim != 2 or len(normals) != len(offsets):
        raise ValueError("normals must be an (m, n) array matching offsets")
    _check_dim(normals.shape[1])
    lengths = np.linalg.norm(normals, axis=1)
    if np.any(lengths == 0):
        raise ValueError("zero normal")
    # leave already-unit rows untouched so canonicalization is idempotent
    lengths = np.where(np.abs(lengths - 1.0) <= 1e-15, 1.0, lengths)
    normals = normals / lengths[:, None]
    offsets = offsets / lengths
    if np.any(offsets <= 0) or not np.all(np.isfinite(offsets)):
        raise EmptyInterior("every offset must be positive (origin in the interior)")

    first, group = _merge_groups(normals, merge_tol)
    tight = np.full(len(first), np.inf)
    np.minimum.at(tight, group, offsets)
    normals, offsets = normals[first], tight

    n = normals.shape[1]
    data = wulff_data(normals, offsets)
    keep = data.areas > area_tol * data.volume ** ((n - 1) / n)
    if not keep.all():
        normals, offsets = normals[keep], offsets[keep]
        data = wulff_data(normals, offsets)
    return _build(normals, offsets, data)


def _build(normals, offsets, data):
    m, n = normals.shape
    raw = data.vertices
    scale = float(np.abs(raw).max())
    tree = cKDTree(raw)
    first, group = _merge_groups_points(tree, raw, 1e-10 * scale)
    vertices = raw[first]

    facets = []
    if n == 2:
        incident = [[] for _ in range(m)]
        for k, (a, b) in enumerate(data.vertex_facets):
            incident[a].append(group[k])
            incident[b].append(group[k])
        for i in range(m):
            ids = np.unique(incident[i])
            pts = vertices[ids]
            # counterclockwise around the outward normal
            t = np.array([-normals[i, 1], normals[i, 0]])
            facets.append(tuple(int(v) for v in ids[np.argsort(pts @ t)]))
    else:
        incident = [[] for _ in range(m)]
        for k, tri in enumerate(data.vertex_facets):
            for a in tri:
                incident[a].append(group[k])
        for i in range(m):
            ids = np.unique(incident[i])
            order = _order_cycle(vertices[ids], normals[i])
            facets.append(tuple(int(v) for v in ids[order]))

    for arr in (normals, offsets, vertices, data.areas):
        arr.flags.writeable = False
    return Polytope(
        dim=n,
        normals=normals,
        offsets=offsets,
        vertices=vertices,
        facet_areas=data.areas,
        facet_vertices=tuple(facets),
        volume=data.volume,
    )


def _merge_groups_points(tree, points, tol):
    m = len(points)
    parent = np.arange(m)
    for i, j in sorted(tree.query_pairs(tol)):
        a, b = parent[i], parent[j]
        while parent[a] != a:
            a = parent[a]
        while parent[b] != b:
            b = parent[b]
        if a != b:
            parent[max(a, b)] = min(a, b)
    roots = np.empty(m, dtype=int)
    for i in range(m):
        r = i
        while parent[r] != r:
            r = parent[r]
        roots[i] = r
    uniq, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    return first, inverse


def from_vertices(points):
    """Convex hull of a point set as a :class:`Polytope`.

    The origin must lie in the interior of the hull.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be an (k, n) array")
    _check_dim(points.shape[1])
    try:
        hull = ConvexHull(points)
    except (QhullError, ValueError) as exc:
        raise EmptyInterior("point set has empty interior") from exc
    normals = hull.equations[:, :-1]
    offsets = -hull.equations[:, -1]
    if np.any(offsets <= 1e-12 * np.abs(points).max()):
        raise EmptyInterior("origin is not interior to the convex hull")
    return canonicalize(normals, offsets)


def box(half_widths):
    """Axis-parallel box ``prod [-a_i, a_i]``."""
    a = np.asarray(half_widths, dtype=float)
    n = len(a)
    eye = np.eye(n)
    return canonicalize(np.vstack([eye, -eye]), np.concatenate([a, a]))


def regular_polygon(k, radius=1.0, phase=0.0):
    """Regular ``k``-gon circumscribed about the circle of given radius."""
    ang = phase + 2 * np.pi * np.arange(k) / k
    return canonicalize(np.stack([np.cos(ang), np.sin(ang)], axis=1), np.full(k, radius))


def volume(K):
    return K.volume


def lp_surface_measure(K, p):
    """``S_p(K, .)``: one atom per facet with weight ``|F_j| h_j^(1-p)``."""
    if p < 1:
        raise ValueError("p must be at least 1")
    return DiscreteSphereMeasure.from_atoms(
        K.normals, K.facet_areas * K.offsets ** (1.0 - p), dim=K.dim
    )


# ---------------------------------------------------------------------------
# bodies known through their support function
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SupportBody:
    """Convex body given by a vectorized support function on unit vectors."""

    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    descriptor: str = "body"

    def __call__(self, directions):
        d = np.asarray(directions, dtype=float)
        vals = np.asarray(self.evaluator(np.atleast_2d(d)), dtype=float)
        return vals if d.ndim == 2 else float(vals[0])

    support = __call__


def as_support_body(K):
    if isinstance(K, SupportBody):
        return K
    if isinstance(K, Polytope):
        return SupportBody(K.dim, K.support, descriptor="polytope")
    raise TypeError(f"cannot view {type(K).__name__} as a support body")


def ball(dim, radius=1.0):
    _check_dim(dim)
    r = float(radius)
    return SupportBody(dim, lambda u: np.full(len(u), r), descriptor=f"ball(r={r!r})")


def lp_mixed_volume(K, L, p):
    """``V_p(K, L) = (1/n) sum_j h(L, u_j)^p S_p(K, {u_j})``."""
    body = as_support_body(L)
    if body.dim != K.dim:
        raise DimensionMismatch("bodies of different dimension")
    mu = lp_surface_measure(K, p)
    hl = body(mu.directions)
    if np.any(hl <= 0):
        raise NonpositiveSupport("L must contain the origin in its interior")
    return float(np.dot(hl**p, mu.weights) / K.dim)


def lp_combination(alpha, K, beta, L, p):
    """Firey combination: ``h^p = alpha h(K)^p + beta h(L)^p``."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if alpha <= 0 or beta <= 0:
        raise ValueError("coefficients must be positive")
    hk, hl = as_support_body(K), as_support_body(L)
    if hk.dim != hl.dim:
        raise DimensionMismatch("bodies of different dimension")

    def evaluator(u):
        return (alpha * hk(u) ** p + beta * hl(u) ** p) ** (1.0 / p)

    return SupportBody(
        hk.dim, evaluator, descriptor=f"lp_combination(p={p!r}, {hk.descriptor}, {hl.descriptor})"
    )


def polar_volume(body, quad):
    """``|K°| = (1/n) int h(K, u)^(-n) du`` on a spherical quadrature."""
    hb = as_support_body(body)
    if quad is None or quad.dim != hb.dim:
        raise QuadratureMissing("quadrature dimension does not match the body")
    vals = hb(quad.nodes)
    if np.any(vals <= 0):
        raise NonpositiveSupport("support function must be positive on the sphere")
    terms = vals ** (-float(hb.dim)) * quad.weights
    return float(np.sum(np.sort(terms)) / hb.dim)


def polar_volume_polytope(K, quad):
    return polar_volume(K, quad)


def polar_polytope(K):
    """Exact polar body ``conv{u_j / h_j}``."""
    return from_vertices(K.normals / K.offsets[:, None])


def transform(K, M):
    """Image ``{M x : x in K}``, rebuilt from the transformed vertices."""
    M = np.asarray(M, dtype=float)
    if M.shape != (K.dim, K.dim):
        raise DimensionMismatch("matrix shape does not match the polytope")
    det = np.linalg.det(M)
    if not np.isfinite(det) or abs(det) < 1e-12 * np.linalg.norm(M) ** K.dim:
        raise SingularMatrix("transform matrix is singular")
    return from_vertices(K.vertices @ M.T)


def support_distance(K, L, directions):
    """``max |h(K, u) - h(L, u)|`` over the given directions."""
    hk, hl = as_support_body(K), as_support_body(L)
    return float(np.max(np.abs(hk(directions) - hl(directions))))


def probe_directions(dim, count=2000, extra=()):
    """Deterministic, nearly uniform probe directions plus any extra ones."""
    _check_dim(dim)
    if dim == 2:
        t = 2 * np.pi * (np.arange(count) + 0.5) / count
        base = np.stack([np.cos(t), np.sin(t)], axis=1)
    else:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        phi = np.pi * (1 + 5**0.5) * k
        r = np.sqrt(1 - z * z)
        base = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    parts = [base] + [unit_vectors(e) for e in extra if len(e)]
    return np.vstack(parts)
