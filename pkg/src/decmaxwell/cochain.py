"""Complex-valued cochains and the first-order calculus on them."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from ._json import _fmt_float
from .complex import SimplicialComplex
from .errors import DegreeError, MismatchError, MissingCacheError
from .rng import complex_normal

__all__ = [
    "Cochain",
    "MassMatrix",
    "mass_matrix",
    "zeros",
    "constant",
    "indicator",
    "random_cochain",
    "d",
    "delta",
    "inner_l2",
    "norm_l2",
    "inner_sobolev",
    "norm_sobolev",
    "mollify",
    "cochain_to_csv",
    "cochain_from_csv",
    "save_cochain",
    "load_cochain",
]


@dataclass(frozen=True, eq=False)
class Cochain:
    """A discrete k-form: one complex number per oriented k-simplex."""

    degree: int
    values: np.ndarray
    mesh: SimplicialComplex

    def __post_init__(self):
        self.mesh.check_degree(self.degree)
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.mesh.n(self.degree),):
            raise MismatchError(
                f"degree-{self.degree} cochain needs {self.mesh.n(self.degree)} values, got shape {v.shape}"
            )
        object.__setattr__(self, "values", v)

    def _like(self, other):
        if not isinstance(other, Cochain):
            return NotImplemented
        if other.mesh is not self.mesh:
            raise MismatchError("cochains live on different complexes")
        if other.degree != self.degree:
            raise MismatchError(f"degree mismatch: {self.degree} vs {other.degree}")
        return other

    def __add__(self, other):
        o = self._like(other)
        if o is NotImplemented:
            return o
        return Cochain(self.degree, self.values + o.values, self.mesh)

    def __sub__(self, other):
        o = self._like(other)
        if o is NotImplemented:
            return o
        return Cochain(self.degree, self.values - o.values, self.mesh)

    def __neg__(self):
        return Cochain(self.degree, -self.values, self.mesh)

    def __mul__(self, a):
        if not np.isscalar(a):
            return NotImplemented
        return Cochain(self.degree, a * self.values, self.mesh)

    __rmul__ = __mul__

    def __truediv__(self, a):
        return self * (1.0 / a)

    def copy_with(self, values):
        return Cochain(self.degree, values, self.mesh)

    def __repr__(self):
        return f"Cochain(degree={self.degree}, n={len(self.values)})"


class MassMatrix:
    """Diagonal Hodge stars M_0..M_dim of a complex."""

    def __init__(self, mesh: SimplicialComplex):
        self.mesh = mesh
        self.diagonals = tuple(mesh.star(k) for k in range(mesh.dim + 1))

    def __getitem__(self, k):
        self.mesh.check_degree(k)
        return self.diagonals[k]

    def dense(self, k):
        return np.diag(self[k])


def mass_matrix(mesh: SimplicialComplex) -> MassMatrix:
    return MassMatrix(mesh)


# constructors


def zeros(mesh, k) -> Cochain:
    return Cochain(k, np.zeros(mesh.n(k), dtype=complex), mesh)


def constant(mesh, k, value=1.0) -> Cochain:
    return Cochain(k, np.full(mesh.n(k), value, dtype=complex), mesh)


def indicator(mesh, k, i) -> Cochain:
    v = np.zeros(mesh.n(k), dtype=complex)
    v[i] = 1.0
    return Cochain(k, v, mesh)


def random_cochain(mesh, k, rng) -> Cochain:
    """Standard complex Gaussian in the simplex basis."""
    return Cochain(k, complex_normal(rng, mesh.n(k)), mesh)


# calculus


def d(omega: Cochain) -> Cochain:
    """Exterior derivative, the transpose of the boundary matrix."""
    k, mesh = omega.degree, omega.mesh
    if k >= mesh.dim:
        raise DegreeError(f"d is zero out of top degree {k}; no (k+1)-simplices")
    return Cochain(k + 1, mesh.coboundary(k) @ omega.values, mesh)


def delta(omega: Cochain) -> Cochain:
    """Codifferential M_{k-1}^{-1} d_{k-1}^T M_k."""
    k, mesh = omega.degree, omega.mesh
    if k == 0:
        raise DegreeError("codifferential of a 0-cochain is undefined")
    v = mesh.coboundary(k - 1).T @ (mesh.star(k) * omega.values)
    return Cochain(k - 1, v / mesh.star(k - 1), mesh)


def _check_pair(a: Cochain, b: Cochain):
    if a.mesh is not b.mesh:
        raise MismatchError("cochains live on different complexes")
    if a.degree != b.degree:
        raise MismatchError(f"degree mismatch: {a.degree} vs {b.degree}")


def inner_l2(alpha: Cochain, beta: Cochain) -> complex:
    """conj(alpha)^T M_k beta."""
    _check_pair(alpha, beta)
    m = alpha.mesh.star(alpha.degree)
    return complex(np.vdot(alpha.values, m * beta.values))


def norm_l2(omega: Cochain) -> float:
    m = omega.mesh.star(omega.degree)
    return float(np.sqrt(np.sum(m * np.abs(omega.values) ** 2)))


def _need_cache(cache, omega):
    if cache is None:
        raise MissingCacheError(f"spectral cache for degree {omega.degree} required")
    if cache.mesh is not omega.mesh or cache.degree != omega.degree:
        raise MissingCacheError(
            f"spectral cache is for degree {cache.degree}, cochain has degree {omega.degree}"
        )


def inner_sobolev(alpha: Cochain, beta: Cochain, s: float, cache) -> complex:
    """<E^{s/2} alpha, E^{s/2} beta>_{L2} with E = 1 + Delta_k, applied spectrally.

    Since E is self-adjoint, this equals sum_i (1 + lambda_i)^s conj(a_i) b_i in
    the M-orthonormal eigenbasis.
    """
    _check_pair(alpha, beta)
    _need_cache(cache, alpha)
    if s < 0:
        raise ValueError("Sobolev index must be non-negative")
    if s == 0:
        return inner_l2(alpha, beta)
    w = (1.0 + cache.eigenvalues_clipped) ** (s / 2.0)
    a = w * cache.coefficients(alpha.values)
    b = w * cache.coefficients(beta.values)
    return complex(np.vdot(a, b))


def norm_sobolev(omega: Cochain, s: float, cache) -> float:
    """H^s norm; negative s is allowed here (used for energies)."""
    _need_cache(cache, omega)
    if s == 0:
        return norm_l2(omega)
    c = cache.coefficients(omega.values)
    w = (1.0 + cache.eigenvalues_clipped) ** s
    return float(np.sqrt(np.sum(w * np.abs(c) ** 2)))


def mollify(omega: Cochain, eps: float, cache) -> Cochain:
    """J_eps = exp(-eps (1 + Delta)), applied spectrally."""
    _need_cache(cache, omega)
    if eps <= 0:
        raise ValueError("mollifier parameter must be positive")
    f = np.exp(-eps * (1.0 + cache.eigenvalues_clipped))
    return Cochain(omega.degree, cache.apply(f, omega.values), omega.mesh)


# file format


def cochain_to_csv(omega: Cochain) -> str:
    buf = io.StringIO()
    head = json.dumps({"degree": omega.degree, "complex_hash": omega.mesh.hash}, separators=(",", ":"))
    buf.write("# " + head + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["simplex_index", "re", "im"])
    for i, z in enumerate(omega.values):
        w.writerow([i, _fmt_float(z.real), _fmt_float(z.imag)])
    return buf.getvalue()


def cochain_from_csv(text: str, mesh: SimplicialComplex) -> Cochain:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise MismatchError("cochain file must start with a '#' JSON header line")
    head = json.loads(lines[0][1:])
    if head.get("complex_hash") != mesh.hash:
        raise MismatchError("cochain was written for a different complex")
    k = int(head["degree"])
    rows = list(csv.reader(lines[1:]))
    if not rows or rows[0] != ["simplex_index", "re", "im"]:
        raise MismatchError("missing 'simplex_index,re,im' header")
    vals = np.zeros(mesh.n(k), dtype=complex)
    seen = np.zeros(mesh.n(k), dtype=bool)
    for r in rows[1:]:
        if not r:
            continue
        i = int(r[0])
        vals[i] = float(r[1]) + 1j * float(r[2])
        seen[i] = True
    if not seen.all():
        raise MismatchError("cochain file does not cover every simplex")
    return Cochain(k, vals, mesh)


def save_cochain(omega: Cochain, path):
    with open(path, "w") as fh:
        fh.write(cochain_to_csv(omega))


def load_cochain(path, mesh) -> Cochain:
    with open(path) as fh:
        return cochain_from_csv(fh.read(), mesh)
