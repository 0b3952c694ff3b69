"""Simplicial complexes with circumcentric metric data.

Simplices of every degree are stored as sorted vertex tuples, so orientation is
fixed by the vertex numbering and the incidence sign of face ``i`` (the face
obtained by dropping the ``i``-th vertex) is ``(-1)**i``.

Boundary matrices are kept sparse (scipy CSR, integer entries) since larger
icospheres do not fit densely; everything downstream that needs dense algebra
converts on demand.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _json
from .errors import CapExceededError, DegreeError, DimensionTooSmallError, MismatchError
from .report import CheckResult, Report

__all__ = [
    "SimplicialComplex",
    "from_top_simplices",
    "make_torus_lattice",
    "make_icosphere",
    "make_circle",
    "validate",
    "save_complex",
    "load_complex",
    "complex_to_dict",
    "complex_from_dict",
]

MAX_ICOSPHERE_SUBDIVISIONS = 5


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Immutable oriented complex with primal and dual volumes per degree.

    ``boundary[k]`` is the (n_{k-1}, n_k) incidence matrix; ``boundary[0]`` is
    an empty (0, n_0) matrix so that indices line up with degrees.
    """

    dim: int
    vertices: np.ndarray
    simplices: tuple
    boundary: tuple
    primal_volume: tuple
    dual_volume: tuple
    meta: dict = field(default_factory=dict)
    # per-instance memo for derived dense matrices (Laplacians etc.)
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for arrs in (self.simplices, self.primal_volume, self.dual_volume):
            for a in arrs:
                if isinstance(a, np.ndarray):
                    a.setflags(write=False)
        self.vertices.setflags(write=False)

    def n(self, k: int) -> int:
        """Number of k-simplices."""
        self.check_degree(k)
        return len(self.simplices[k])

    @property
    def counts(self) -> tuple:
        return tuple(len(s) for s in self.simplices)

    @property
    def euler_characteristic(self) -> int:
        return int(sum((-1) ** k * n for k, n in enumerate(self.counts)))

    def check_degree(self, k: int):
        if not (0 <= k <= self.dim):
            raise DegreeError(f"degree {k} outside 0..{self.dim}")

    def coboundary(self, k: int) -> sp.csr_matrix:
        """d_k as a sparse float matrix of shape (n_{k+1}, n_k)."""
        self.check_degree(k)
        if k == self.dim:
            raise DegreeError(f"no coboundary out of top degree {k}")
        return self._coboundaries[k]

    @cached_property
    def _coboundaries(self):
        return tuple(
            sp.csr_matrix(self.boundary[k + 1].T.astype(np.float64)) for k in range(self.dim)
        )

    def star(self, k: int) -> np.ndarray:
        """Diagonal of the Hodge star on k-cochains: dual / primal volume."""
        self.check_degree(k)
        return self._stars[k]

    @cached_property
    def _stars(self):
        out = []
        for p, d in zip(self.primal_volume, self.dual_volume):
            s = np.asarray(d, dtype=float) / np.asarray(p, dtype=float)
            s.setflags(write=False)
            out.append(s)
        return tuple(out)

    @cached_property
    def hash(self) -> str:
        """sha256 of the canonical JSON serialisation."""
        return hashlib.sha256(_json.dumps(complex_to_dict(self)).encode()).hexdigest()

    def __repr__(self):
        return f"SimplicialComplex(dim={self.dim}, counts={self.counts}, meta={self.meta})"


# ---------------------------------------------------------------------------
# combinatorics


def _faces(top: np.ndarray, dim: int) -> list:
    """All sub-simplices of the (sorted-row) top simplices, lexicographically sorted."""
    top = np.sort(np.asarray(top, dtype=np.int64), axis=1)
    out = [None] * (dim + 1)
    out[dim] = np.unique(top, axis=0)
    for k in range(dim - 1, -1, -1):
        cols = list(combinations(range(dim + 1), k + 1))
        f = np.concatenate([top[:, list(c)] for c in cols], axis=0)
        out[k] = np.unique(f, axis=0)
    return out


def _boundary(high: np.ndarray, low: np.ndarray) -> sp.csr_matrix:
    """Signed incidence (n_low, n_high) between consecutive degrees."""
    nh, kp1 = high.shape
    index = {tuple(r): i for i, r in enumerate(low.tolist())}
    rows, cols, vals = [], [], []
    for j, s in enumerate(high.tolist()):
        for i in range(kp1):
            face = tuple(s[:i] + s[i + 1:])
            try:
                rows.append(index[face])
            except KeyError:
                raise MismatchError(f"face {face} of simplex {tuple(s)} missing") from None
            cols.append(j)
            vals.append(1 if i % 2 == 0 else -1)
    return sp.csr_matrix(
        (np.asarray(vals, dtype=np.int64), (rows, cols)), shape=(len(low), nh)
    )


def _boundaries(simplices) -> tuple:
    b = [sp.csr_matrix((0, len(simplices[0])), dtype=np.int64)]
    for k in range(1, len(simplices)):
        b.append(_boundary(simplices[k], simplices[k - 1]))
    return tuple(b)


def from_top_simplices(top, vertices, primal_volume, dual_volume, meta=None, dim=None):
    """Assemble a complex from its top simplices and externally computed volumes.

    ``primal_volume`` / ``dual_volume`` must be given in the canonical simplex
    order produced here (lexicographic by sorted vertex tuple); callers that
    compute geometry from the simplex lists should use :func:`_faces` first.
    """
    top = np.asarray(top)
    dim = top.shape[1] - 1 if dim is None else dim
    simplices = _faces(top, dim)
    return _assemble(dim, vertices, simplices, primal_volume, dual_volume, meta or {})


def _assemble(dim, vertices, simplices, primal, dual, meta):
    simplices = tuple(np.ascontiguousarray(s, dtype=np.int64) for s in simplices)
    primal = tuple(np.array(p, dtype=float) for p in primal)
    dual = tuple(np.array(d, dtype=float) for d in dual)
    for k in range(dim + 1):
        if len(primal[k]) != len(simplices[k]) or len(dual[k]) != len(simplices[k]):
            raise MismatchError(f"volume count mismatch in degree {k}")
    return SimplicialComplex(
        dim=dim,
        vertices=np.array(vertices, dtype=float),
        simplices=simplices,
        boundary=_boundaries(simplices),
        primal_volume=primal,
        dual_volume=dual,
        meta=dict(meta),
    )


# ---------------------------------------------------------------------------
# 2D circumcentric geometry


def _circumcenter_barycentric(p):
    """Barycentric circumcenter coordinates for triangles p of shape (F, 3, D)."""
    a2 = np.sum((p[:, 1] - p[:, 2]) ** 2, axis=1)
    b2 = np.sum((p[:, 2] - p[:, 0]) ** 2, axis=1)
    c2 = np.sum((p[:, 0] - p[:, 1]) ** 2, axis=1)
    w = np.stack([a2 * (b2 + c2 - a2), b2 * (c2 + a2 - b2), c2 * (a2 + b2 - c2)], axis=1)
    return w / w.sum(axis=1, keepdims=True)


def _tri_geometry(tris, local_pts, n_vertices, edges):
    """Primal/dual volumes for a surface triangulation.

    ``local_pts`` holds per-triangle coordinates (F, 3, D) in the same vertex
    order as the sorted rows of ``tris``; using per-triangle coordinates lets
    periodic meshes supply unwrapped positions.

    The dual of an edge is the sum over adjacent triangles of the signed
    distance from the edge midpoint to the triangle circumcenter; the dual of a
    vertex is the sum of the signed kite areas |e| * h_e / 4 over incident
    edges in every incident triangle.
    """
    eidx = {tuple(e): i for i, e in enumerate(edges.tolist())}
    F = len(tris)
    p = local_pts
    bc = _circumcenter_barycentric(p)
    cc = np.einsum("fi,fid->fd", bc, p)

    e0 = p[:, 1] - p[:, 0]
    e1 = p[:, 2] - p[:, 0]
    if p.shape[2] == 2:
        area = 0.5 * np.abs(e0[:, 0] * e1[:, 1] - e0[:, 1] * e1[:, 0])
    else:
        area = 0.5 * np.linalg.norm(np.cross(e0, e1), axis=1)

    edge_len = np.zeros(len(edges))
    edge_dual = np.zeros(len(edges))
    vert_dual = np.zeros(n_vertices)
    for f in range(F):
        t = tris[f]
        for (i, j), opp in (((0, 1), 2), ((0, 2), 1), ((1, 2), 0)):
            pi, pj = p[f, i], p[f, j]
            L = np.linalg.norm(pj - pi)
            mid = 0.5 * (pi + pj)
            h = np.linalg.norm(cc[f] - mid)
            # sign: positive when circumcenter lies on the same side as the opposite vertex
            if bc[f, opp] < 0:
                h = -h
            e = eidx[(t[i], t[j])]
            edge_len[e] = L
            edge_dual[e] += h
            vert_dual[t[i]] += 0.25 * L * h
            vert_dual[t[j]] += 0.25 * L * h
    return area, edge_len, edge_dual, vert_dual


# ---------------------------------------------------------------------------
# generators


def make_torus_lattice(nx: int, ny: int, lx: float, ly: float) -> SimplicialComplex:
    """Flat 2-torus of size lx x ly, nx*ny vertices, two triangles per cell.

    The lattice is sheared by half a cell per row, so every triangle is
    isosceles with base lx/nx and height ly/ny. That keeps the mesh
    well-centered (all dual volumes positive) whenever ly/ny > lx/(2 nx); a
    rectangular split would produce right triangles with vanishing dual edges.
    """
    if nx < 3 or ny < 3:
        raise DimensionTooSmallError(f"torus lattice needs nx, ny >= 3, got ({nx}, {ny})")
    if lx <= 0 or ly <= 0:
        raise ValueError("torus side lengths must be positive")
    hx, hy = lx / nx, ly / ny
    shear = hx / 2

    def vid(i, j):
        return (i % nx) + nx * (j % ny)

    def pos(a, b):
        return (a * hx + b * shear, b * hy)

    top, local = [], []
    for j in range(ny):
        for i in range(nx):
            for cell in (((0, 0), (1, 0), (0, 1)), ((1, 0), (1, 1), (0, 1))):
                ids = [vid(i + a, j + b) for a, b in cell]
                pts = [pos(i + a, j + b) for a, b in cell]
                order = np.argsort(ids)
                top.append([ids[o] for o in order])
                local.append([pts[o] for o in order])
    top = np.asarray(top, dtype=np.int64)
    local = np.asarray(local, dtype=float)

    simplices = _faces(top, 2)
    # reorder per-triangle coordinates to the canonical triangle order
    key = {tuple(r): i for i, r in enumerate(top.tolist())}
    perm = [key[tuple(r)] for r in simplices[2].tolist()]
    tris, local = simplices[2], local[perm]

    area, elen, edual, vdual = _tri_geometry(tris, local, nx * ny, simplices[1])
    verts = np.array(
        [[(i * hx + j * shear) % lx, j * hy, 0.0] for j in range(ny) for i in range(nx)]
    )
    return _assemble(
        2,
        verts,
        simplices,
        (np.ones(nx * ny), elen, area),
        (vdual, edual, np.ones(len(tris))),
        {"generator": "torus_lattice", "nx": nx, "ny": ny, "lx": float(lx), "ly": float(ly)},
    )


def _icosahedron():
    t = (1.0 + 5 ** 0.5) / 2.0
    v = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def make_icosphere(subdivisions: int, radius: float = 1.0) -> SimplicialComplex:
    """Icosahedron refined ``subdivisions`` times by edge midpoints, projected to the sphere."""
    if subdivisions < 0:
        raise ValueError("subdivisions must be non-negative")
    if subdivisions > MAX_ICOSPHERE_SUBDIVISIONS:
        raise CapExceededError(
            f"icosphere subdivisions capped at {MAX_ICOSPHERE_SUBDIVISIONS}, got {subdivisions}"
        )
    if radius <= 0:
        raise ValueError("radius must be positive")
    verts, faces = _icosahedron()
    verts = list(verts)
    for _ in range(subdivisions):
        mid = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in mid:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                mid[key] = len(verts) - 1
            return mid[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.asarray(new)
    verts = np.asarray(verts) * radius

    simplices = _faces(faces, 2)
    tris = simplices[2]
    area, elen, edual, vdual = _tri_geometry(tris, verts[tris], len(verts), simplices[1])
    return _assemble(
        2,
        verts,
        simplices,
        (np.ones(len(verts)), elen, area),
        (vdual, edual, np.ones(len(tris))),
        {"generator": "icosphere", "subdivisions": subdivisions, "radius": float(radius)},
    )


def make_circle(n: int, length: float) -> SimplicialComplex:
    """Cycle of n vertices and n edges, each of length length/n."""
    if n < 3:
        raise DimensionTooSmallError(f"circle needs n >= 3, got {n}")
    if length <= 0:
        raise ValueError("length must be positive")
    h = length / n
    r = length / (2 * np.pi)
    th = 2 * np.pi * np.arange(n) / n
    verts = np.stack([r * np.cos(th), r * np.sin(th), np.zeros(n)], axis=1)
    top = np.array([[i, (i + 1) % n] for i in range(n)])
    simplices = _faces(top, 1)
    return _assemble(
        1,
        verts,
        simplices,
        (np.ones(n), np.full(n, h)),
        (np.full(n, h), np.ones(n)),
        {"generator": "circle", "n": n, "length": float(length)},
    )


# ---------------------------------------------------------------------------
# validation


def validate(c: SimplicialComplex) -> Report:
    """Check the structural invariants; every check carries its worst violation.

    Checks: ``boundary_squared_zero`` (max |∂_k ∂_{k+1}|, integer),
    ``incidence_values`` (entries outside {-1, 0, 1}), ``faces_per_simplex``,
    ``positive_primal_volume`` / ``positive_dual_volume`` (negated minimum
    volume, must be < 0), ``connected`` (components - 1).
    """
    rep = Report()
    worst_dd = 0
    worst_vals = 0
    worst_faces = 0
    for k in range(1, c.dim + 1):
        b = sp.csr_matrix(c.boundary[k])
        data = b.data
        if data.size:
            bad = data[(data != 1) & (data != -1) & (data != 0)]
            if bad.size:
                worst_vals = max(worst_vals, int(np.max(np.abs(bad))))
        nnz_per_col = np.diff(sp.csc_matrix(b).indptr)
        worst_faces = max(worst_faces, int(np.max(np.abs(nnz_per_col - (k + 1)), initial=0)))
        if k + 1 <= c.dim:
            prod = (b @ sp.csr_matrix(c.boundary[k + 1])).tocoo()
            if prod.nnz:
                worst_dd = max(worst_dd, int(np.max(np.abs(prod.data))))
    rep.add("boundary_squared_zero", worst_dd, 0)
    rep.add("incidence_values", worst_vals, 0)
    rep.add("faces_per_simplex", worst_faces, 0)
    minp = min(float(np.min(v)) if len(v) else np.inf for v in c.primal_volume)
    mind = min(float(np.min(v)) if len(v) else np.inf for v in c.dual_volume)
    rep.checks.append(_strict_positive("positive_primal_volume", minp))
    rep.checks.append(_strict_positive("positive_dual_volume", mind))
    n0 = c.n(0)
    if c.dim >= 1 and c.n(1):
        e = c.simplices[1]
        g = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n0, n0))
        ncomp = connected_components(g, directed=False)[0]
    else:
        ncomp = n0
    rep.add("connected", ncomp - 1, 0)
    return rep


def _strict_positive(name, minimum):
    # statistic is the minimum volume, must be > 0; a "ge" check against the
    # smallest positive float encodes strict positivity
    return CheckResult(name, float(minimum), float(np.finfo(float).tiny), "ge")


# ---------------------------------------------------------------------------
# serialisation


def complex_to_dict(c: SimplicialComplex) -> dict:
    return {
        "dim": c.dim,
        "vertices": c.vertices,
        "simplices": [s for s in c.simplices],
        "primal_volume": [v for v in c.primal_volume],
        "dual_volume": [v for v in c.dual_volume],
        "meta": c.meta,
    }


def complex_from_dict(doc: dict) -> SimplicialComplex:
    try:
        dim = int(doc["dim"])
        verts = np.asarray(doc["vertices"], dtype=float).reshape(-1, 3)
        simplices = []
        for k, s in enumerate(doc["simplices"]):
            a = np.asarray(s, dtype=np.int64).reshape(-1, k + 1)
            simplices.append(a)
        primal = doc["primal_volume"]
        dual = doc["dual_volume"]
        meta = doc.get("meta", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise MismatchError(f"malformed mesh document: {exc}") from None
    if len(simplices) != dim + 1:
        raise MismatchError("simplices list length must be dim + 1")
    for k, s in enumerate(simplices):
        if len(s) and np.any(np.diff(s, axis=1) <= 0):
            raise MismatchError(f"degree-{k} simplices must be sorted vertex tuples")
    return _assemble(dim, verts, simplices, primal, dual, meta)


def save_complex(c: SimplicialComplex, path):
    _json.dump(complex_to_dict(c), path)


def load_complex(path) -> SimplicialComplex:
    with open(path) as fh:
        doc = json.load(fh)
    return complex_from_dict(doc)
