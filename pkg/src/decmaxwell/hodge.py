"""Hodge Laplacians, their spectral calculus and the Hodge decomposition.

Everything is dense: a :class:`SpectralCache` holds the complete
eigendecomposition of Delta_k, which is self-adjoint for the mass-weighted
inner product. With M = diag(star_k) the generalized problem
``(M Delta) e = lambda M e`` is reduced to an ordinary symmetric one by the
congruence M^{-1/2}, so eigenvectors come out M-orthonormal.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from . import _json
from .cochain import Cochain, d, delta
from .complex import SimplicialComplex
from .errors import (
    DegreeError,
    MismatchError,
    MissingCacheError,
    SingularFunctionError,
    UnknownFunctionError,
)

__all__ = [
    "assemble_laplacian",
    "coboundary_matrix",
    "codifferential_matrix",
    "SpectralCache",
    "build_caches",
    "spectral_values",
    "spectral_fn",
    "spectral_matrix",
    "HodgeSplit",
    "hodge_decompose",
    "solve_poisson",
    "coulomb_projector",
    "betti_numbers",
    "DEFAULT_REL_TOL",
]

DEFAULT_REL_TOL = 1e-8
# relative size of a kernel component that counts as "present" for power(s<0)
SINGULAR_TOL = 1e-10


def _memo(mesh, key, build):
    m = mesh._memo
    if key not in m:
        a = build()
        a.setflags(write=False)
        m[key] = a
    return m[key]


def coboundary_matrix(mesh: SimplicialComplex, k: int) -> np.ndarray:
    """Dense d_k, shape (n_{k+1}, n_k)."""
    return _memo(mesh, ("d", k), lambda: mesh.coboundary(k).toarray())


def codifferential_matrix(mesh: SimplicialComplex, k: int) -> np.ndarray:
    """Dense delta_k = M_{k-1}^{-1} d_{k-1}^T M_k, shape (n_{k-1}, n_k)."""
    if k == 0:
        raise DegreeError("no codifferential out of degree 0")
    mesh.check_degree(k)

    def build():
        dk = coboundary_matrix(mesh, k - 1)
        return (dk.T * mesh.star(k)[None, :]) / mesh.star(k - 1)[:, None]

    return _memo(mesh, ("delta", k), build)


def assemble_laplacian(mesh: SimplicialComplex, k: int) -> np.ndarray:
    """Dense Delta_k = delta_{k+1} d_k + d_{k-1} delta_k; absent terms drop."""
    mesh.check_degree(k)

    def build():
        n = mesh.n(k)
        L = np.zeros((n, n))
        if k < mesh.dim:
            L += codifferential_matrix(mesh, k + 1) @ coboundary_matrix(mesh, k)
        if k > 0:
            L += coboundary_matrix(mesh, k - 1) @ codifferential_matrix(mesh, k)
        return L

    return _memo(mesh, ("laplacian", k), build)


def _weighted_laplacian(mesh, k):
    """M_k Delta_k, symmetric by construction."""
    n = mesh.n(k)
    A = np.zeros((n, n))
    if k < mesh.dim:
        dk = coboundary_matrix(mesh, k)
        A += dk.T @ (mesh.star(k + 1)[:, None] * dk)
    if k > 0:
        dkm = coboundary_matrix(mesh, k - 1)
        B = dkm * (1.0 / np.sqrt(mesh.star(k - 1)))[None, :]
        B = mesh.star(k)[:, None] * B
        A += B @ B.T
    return 0.5 * (A + A.T)


@dataclass(frozen=True, eq=False)
class SpectralCache:
    """Complete eigendecomposition of Delta_k.

    ``eigenvectors[:, i]`` is the i-th eigen-cochain; columns are orthonormal
    for inner_l2. Eigenvalues below ``harmonic_tol`` are treated as exactly
    zero by every spectral function.
    """

    mesh: SimplicialComplex
    degree: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    harmonic_tol: float
    _extra: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, mesh: SimplicialComplex, k: int, harmonic_tol=None, rel_tol=DEFAULT_REL_TOL):
        mesh.check_degree(k)
        A = _weighted_laplacian(mesh, k)
        r = 1.0 / np.sqrt(mesh.star(k))
        S = r[:, None] * A * r[None, :]
        w, U = sla.eigh(S)
        E = r[:, None] * U
        lam_max = float(max(abs(w[-1]), 0.0)) if len(w) else 0.0
        if harmonic_tol is None:
            harmonic_tol = rel_tol * lam_max if lam_max > 0 else rel_tol
        if harmonic_tol <= 0:
            raise ValueError("harmonic_tol must be positive")
        w.setflags(write=False)
        E.setflags(write=False)
        return cls(mesh, k, w, E, float(harmonic_tol))

    @cached_property
    def harmonic_mask(self) -> np.ndarray:
        return self.eigenvalues < self.harmonic_tol

    @property
    def n_harmonic(self) -> int:
        return int(np.count_nonzero(self.harmonic_mask))

    @cached_property
    def eigenvalues_clipped(self) -> np.ndarray:
        """Eigenvalues with the kernel set exactly to zero."""
        lam = np.where(self.harmonic_mask, 0.0, np.maximum(self.eigenvalues, 0.0))
        lam.setflags(write=False)
        return lam

    @property
    def smallest_nonzero(self) -> float:
        nz = self.eigenvalues[~self.harmonic_mask]
        return float(nz[0]) if len(nz) else float("nan")

    @property
    def harmonic_basis(self) -> np.ndarray:
        return self.eigenvectors[:, self.harmonic_mask]

    def coefficients(self, values) -> np.ndarray:
        """Expansion coefficients c = E^T M v (E is real)."""
        m = self.mesh.star(self.degree)
        if np.ndim(values) == 2:
            m = m[:, None]
        return self.eigenvectors.T @ (m * values)

    def synthesize(self, coeffs) -> np.ndarray:
        return self.eigenvectors @ coeffs

    def apply(self, fvals, values) -> np.ndarray:
        c = self.coefficients(values)
        if np.ndim(c) == 2:
            return self.synthesize(fvals[:, None] * c)
        return self.synthesize(fvals * c)

    def operator(self, fvals) -> np.ndarray:
        """Dense matrix of f(Delta): E diag(f) E^T M."""
        E = self.eigenvectors
        return (E * fvals[None, :]) @ (E.T * self.mesh.star(self.degree)[None, :])

    def harmonic_projector(self) -> np.ndarray:
        return self.operator(self.harmonic_mask.astype(float))

    def check(self, k=None):
        if k is not None and k != self.degree:
            raise MissingCacheError(f"cache has degree {self.degree}, need {k}")

    # persistence

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "complex_hash": self.mesh.hash,
            "harmonic_tol": self.harmonic_tol,
            "eigenvalues": self.eigenvalues,
            "eigenvectors": self.eigenvectors,
        }

    @classmethod
    def from_dict(cls, doc: dict, mesh: SimplicialComplex):
        if doc.get("complex_hash") != mesh.hash:
            raise MismatchError("spectral cache was built for a different complex")
        w = np.asarray(doc["eigenvalues"], dtype=float)
        E = np.asarray(doc["eigenvectors"], dtype=float).reshape(len(w), len(w))
        w.setflags(write=False)
        E.setflags(write=False)
        return cls(mesh, int(doc["degree"]), w, E, float(doc["harmonic_tol"]))

    def save(self, path):
        _json.dump(self.to_dict(), path)

    @classmethod
    def load(cls, path, mesh):
        with open(path) as fh:
            return cls.from_dict(json.load(fh), mesh)


def build_caches(mesh: SimplicialComplex, harmonic_tol=None, rel_tol=DEFAULT_REL_TOL) -> dict:
    """Spectral caches for every degree, keyed by degree."""
    return {
        k: SpectralCache.build(mesh, k, harmonic_tol=harmonic_tol, rel_tol=rel_tol)
        for k in range(mesh.dim + 1)
    }


def betti_numbers(mesh: SimplicialComplex, caches=None, rel_tol=DEFAULT_REL_TOL) -> tuple:
    caches = caches or build_caches(mesh, rel_tol=rel_tol)
    return tuple(caches[k].n_harmonic for k in range(mesh.dim + 1))


# ---------------------------------------------------------------------------
# spectral calculus

_FUNCTIONS = {
    # name: (required parameters, f(lambda_clipped, harmonic_mask, **p))
    "power": (("s",), lambda lam, h, s: np.where(h, 1.0 if s == 0 else 0.0,
                                                  np.power(np.where(h, 1.0, lam), s))),
    "sobolev": (("s",), lambda lam, h, s: (1.0 + lam) ** s),
    "exp_neg": (("eps",), lambda lam, h, eps: np.exp(-eps * (1.0 + lam))),
    "sqrt_shifted": (("mu",), lambda lam, h, mu: np.sqrt(lam + mu * mu * h)),
    "inv_sqrt_shifted": (("mu",), lambda lam, h, mu: 1.0 / np.sqrt(lam + mu * mu * h)),
    "pinv": ((), lambda lam, h: np.where(h, 0.0, 1.0 / np.where(h, 1.0, lam))),
    "heat": (("t",), lambda lam, h, t: np.exp(-t * lam)),
}

FUNCTION_NAMES = tuple(_FUNCTIONS)


def spectral_values(cache: SpectralCache, name: str, **params) -> np.ndarray:
    """f(lambda_i) for each eigenvalue, with the documented kernel conventions.

    power(s): lambda^s; on the kernel 0 (s > 0), 1 (s = 0), and 0 for s < 0
    (callers applying it to cochains get a SingularFunctionError instead).
    sobolev(s): (1 + lambda)^s. exp_neg(eps): exp(-eps (1 + lambda)).
    sqrt_shifted(mu): sqrt(lambda + mu^2 [kernel]); inv_sqrt_shifted its inverse.
    pinv: 1/lambda off the kernel, 0 on it. heat(t): exp(-t lambda).
    """
    try:
        required, f = _FUNCTIONS[name]
    except KeyError:
        raise UnknownFunctionError(
            f"unknown spectral function {name!r}; expected one of {', '.join(_FUNCTIONS)}"
        ) from None
    if set(params) != set(required):
        raise UnknownFunctionError(
            f"{name} takes parameters {required}, got {tuple(sorted(params))}"
        )
    if name == "exp_neg" and not params["eps"] > 0:
        raise ValueError("exp_neg needs eps > 0")
    if name in ("sqrt_shifted", "inv_sqrt_shifted") and not params["mu"] > 0:
        raise ValueError(f"{name} needs mu > 0")
    return f(cache.eigenvalues_clipped, cache.harmonic_mask, **params)


def spectral_fn(cache: SpectralCache, name: str, omega: Cochain, **params) -> Cochain:
    """Apply f(Delta_k) to a cochain."""
    if omega.mesh is not cache.mesh or omega.degree != cache.degree:
        raise MissingCacheError(
            f"cache for degree {cache.degree} cannot act on a degree-{omega.degree} cochain"
        )
    fv = spectral_values(cache, name, **params)
    c = cache.coefficients(omega.values)
    if name == "power" and params["s"] < 0:
        h = np.linalg.norm(c[cache.harmonic_mask])
        if h > SINGULAR_TOL * max(np.linalg.norm(c), np.finfo(float).tiny):
            raise SingularFunctionError(
                f"power({params['s']}) is singular on ker Delta_{cache.degree}; "
                f"input has harmonic component of size {h:.3g}"
            )
    return Cochain(omega.degree, cache.synthesize(fv * c), omega.mesh)


def spectral_matrix(cache: SpectralCache, name: str, **params) -> np.ndarray:
    return cache.operator(spectral_values(cache, name, **params))


# ---------------------------------------------------------------------------
# decomposition


@dataclass(frozen=True)
class HodgeSplit:
    exact: Cochain
    coexact: Cochain
    harmonic: Cochain
    potential: Cochain | None = None
    copotential: Cochain | None = None

    def reconstruct(self) -> Cochain:
        return self.exact + self.coexact + self.harmonic


def _cache_for(caches, mesh, k):
    try:
        c = caches[k]
    except (KeyError, IndexError, TypeError):
        raise MissingCacheError(f"no spectral cache for degree {k}") from None
    if c.mesh is not mesh or c.degree != k:
        raise MissingCacheError(f"cache supplied for degree {k} does not match")
    return c


def hodge_decompose(omega: Cochain, caches) -> HodgeSplit:
    """Split omega = exact + coexact + harmonic.

    exact = d Delta_{k-1}^+ delta omega and coexact = delta Delta_{k+1}^+ d omega,
    with minimum-norm potentials; the harmonic part is the spectral projection
    onto ker Delta_k.
    """
    k, mesh = omega.degree, omega.mesh
    ck = _cache_for(caches, mesh, k)
    zero = Cochain(k, np.zeros_like(omega.values), mesh)
    exact, coexact, pot, copot = zero, zero, None, None
    if k > 0:
        cm = _cache_for(caches, mesh, k - 1)
        pot = Cochain(k - 1, cm.apply(spectral_values(cm, "pinv"), delta(omega).values), mesh)
        exact = d(pot)
    if k < mesh.dim:
        cp = _cache_for(caches, mesh, k + 1)
        copot = Cochain(k + 1, cp.apply(spectral_values(cp, "pinv"), d(omega).values), mesh)
        coexact = delta(copot)
    harm = Cochain(k, ck.apply(ck.harmonic_mask.astype(float), omega.values), mesh)
    return HodgeSplit(exact, coexact, harm, pot, copot)


def solve_poisson(omega: Cochain, cache0: SpectralCache) -> Cochain:
    """Mean-zero a with Delta_0 a = delta omega, for a 1-cochain omega."""
    if omega.degree != 1:
        raise DegreeError("solve_poisson takes a 1-cochain")
    if cache0.mesh is not omega.mesh or cache0.degree != 0:
        raise MissingCacheError("solve_poisson needs the degree-0 cache of the same complex")
    rhs = delta(omega).values
    return Cochain(0, cache0.apply(spectral_values(cache0, "pinv"), rhs), omega.mesh)


def coulomb_projector(cache0: SpectralCache, cache1: SpectralCache | None = None) -> np.ndarray:
    """Pi = I - d_0 Delta_0^+ delta_1 on 1-cochains (L2-orthogonal projector onto ker delta)."""
    mesh = cache0.mesh
    if cache0.degree != 0:
        raise MissingCacheError("coulomb_projector needs the degree-0 cache first")
    if cache1 is not None and (cache1.mesh is not mesh or cache1.degree != 1):
        raise MissingCacheError("degree-1 cache does not match")
    d0 = coboundary_matrix(mesh, 0)
    P = spectral_matrix(cache0, "pinv")
    Pi = np.eye(mesh.n(1)) - d0 @ P @ codifferential_matrix(mesh, 1)
    Pi.setflags(write=False)
    return Pi
