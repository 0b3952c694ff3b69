"""Maxwell Cauchy data, constraint operators and gauge fixing.

Cauchy data for the vector potential is the quadruple (a0, pi0, aS, piS): the
time component and its rescaled normal derivative (0-cochains), and the
spatial 1-form with its rescaled normal derivative (1-cochains). Gauge
parameters are pairs (a, pi) of 0-cochains.

All blocks are paired with the mass-weighted L2 product, so the phase space
inner product weight is W = diag(M0, M0, M1, M1).
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .cochain import Cochain, cochain_from_csv, cochain_to_csv, d, delta, inner_l2, norm_l2
from .complex import SimplicialComplex
from .errors import ConstraintViolationError, MismatchError, MissingCacheError
from .hodge import (
    SpectralCache,
    coboundary_matrix,
    codifferential_matrix,
    assemble_laplacian,
    solve_poisson,
    spectral_values,
)
from .report import Report
from .rng import complex_normal

__all__ = [
    "MaxwellData",
    "GaugeData",
    "ConstraintReport",
    "k_sigma",
    "k_sigma_dagger",
    "q1_sigma",
    "q0_sigma",
    "r_sigma",
    "t_sigma",
    "rk_inverse",
    "gauge_fix",
    "check_constraints",
    "random_constrained",
    "random_gauge",
    "random_data",
    "GaugeRange",
    "k_sigma_matrix",
    "k_sigma_dagger_matrix",
    "g1_matrix",
    "g0_matrix",
    "q1_matrix",
    "q0_matrix",
    "t_sigma_matrix",
    "phase_weights",
    "save_maxwell",
    "load_maxwell",
    "maxwell_to_text",
    "maxwell_from_text",
]

SECTIONS = ("a0", "pi0", "aS", "piS")
CONSTRAINT_TOL = 1e-8


def _same_mesh(*cs):
    m = cs[0].mesh
    for c in cs[1:]:
        if c.mesh is not m:
            raise MismatchError("components live on different complexes")
    return m


@dataclass(frozen=True, eq=False)
class MaxwellData:
    a0: Cochain
    pi0: Cochain
    aS: Cochain
    piS: Cochain

    def __post_init__(self):
        _same_mesh(self.a0, self.pi0, self.aS, self.piS)
        for name, k in zip(SECTIONS, (0, 0, 1, 1)):
            if getattr(self, name).degree != k:
                raise MismatchError(f"{name} must be a {k}-cochain")

    @property
    def mesh(self) -> SimplicialComplex:
        return self.a0.mesh

    @property
    def components(self):
        return (self.a0, self.pi0, self.aS, self.piS)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([c.values for c in self.components])

    @classmethod
    def from_vector(cls, mesh, v) -> "MaxwellData":
        n0, n1 = mesh.n(0), mesh.n(1)
        v = np.asarray(v)
        if v.shape != (2 * n0 + 2 * n1,):
            raise MismatchError(f"expected vector of length {2 * n0 + 2 * n1}")
        cuts = np.cumsum([0, n0, n0, n1, n1])
        return cls(*(Cochain(k, v[cuts[i]:cuts[i + 1]], mesh)
                     for i, k in enumerate((0, 0, 1, 1))))

    @classmethod
    def zeros(cls, mesh) -> "MaxwellData":
        return cls.from_vector(mesh, np.zeros(2 * mesh.n(0) + 2 * mesh.n(1), dtype=complex))

    def _binary(self, other, op):
        if not isinstance(other, MaxwellData):
            return NotImplemented
        return MaxwellData(*(op(a, b) for a, b in zip(self.components, other.components)))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __neg__(self):
        return MaxwellData(*(-c for c in self.components))

    def __mul__(self, s):
        if not np.isscalar(s):
            return NotImplemented
        return MaxwellData(*(s * c for c in self.components))

    __rmul__ = __mul__

    def inner(self, other) -> complex:
        """(f, g)_{V_rho1}: sum of the four L2 products."""
        return sum(inner_l2(a, b) for a, b in zip(self.components, other.components))

    def norm(self) -> float:
        return float(np.sqrt(sum(norm_l2(c) ** 2 for c in self.components)))


@dataclass(frozen=True, eq=False)
class GaugeData:
    a: Cochain
    pi: Cochain

    def __post_init__(self):
        _same_mesh(self.a, self.pi)
        if self.a.degree != 0 or self.pi.degree != 0:
            raise MismatchError("gauge data are 0-cochains")

    @property
    def mesh(self):
        return self.a.mesh

    def to_vector(self):
        return np.concatenate([self.a.values, self.pi.values])

    @classmethod
    def from_vector(cls, mesh, v):
        n0 = mesh.n(0)
        return cls(Cochain(0, v[:n0], mesh), Cochain(0, v[n0:], mesh))

    def __add__(self, other):
        return GaugeData(self.a + other.a, self.pi + other.pi)

    def __sub__(self, other):
        return GaugeData(self.a - other.a, self.pi - other.pi)

    def __mul__(self, s):
        return GaugeData(s * self.a, s * self.pi)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.hypot(norm_l2(self.a), norm_l2(self.pi)))


def _lap0(a: Cochain) -> Cochain:
    return delta(d(a))


# ---------------------------------------------------------------------------
# operators


def k_sigma(g: GaugeData) -> MaxwellData:
    """Gauge directions: (a, pi) -> (i pi, i Delta_0 a, d a, d pi)."""
    return MaxwellData(1j * g.pi, 1j * _lap0(g.a), d(g.a), d(g.pi))


def k_sigma_dagger(f: MaxwellData) -> GaugeData:
    """Constraints: (delta aS + i pi0, i Delta_0 a0 + delta piS)."""
    return GaugeData(delta(f.aS) + 1j * f.pi0, 1j * _lap0(f.a0) + delta(f.piS))


def q1_sigma(f: MaxwellData, g: MaxwellData) -> complex:
    """Hermitian form i (f, G1 g) = -<a0,pi0'> - <pi0,a0'> + <aS,piS'> + <piS,aS'>."""
    _same_mesh(f.a0, g.a0)
    return (
        -inner_l2(f.a0, g.pi0)
        - inner_l2(f.pi0, g.a0)
        + inner_l2(f.aS, g.piS)
        + inner_l2(f.piS, g.aS)
    )


def q0_sigma(x: GaugeData, y: GaugeData) -> complex:
    """Hermitian form i (x, G0 y) = <a, pi'> + <pi, a'> on gauge data."""
    _same_mesh(x.a, y.a)
    return inner_l2(x.a, y.pi) + inner_l2(x.pi, y.a)


def r_sigma(f: MaxwellData) -> GaugeData:
    """Temporal components (a0, pi0)."""
    return GaugeData(f.a0, f.pi0)


def t_sigma(f: MaxwellData, Pi: np.ndarray) -> MaxwellData:
    """Radiation-gauge projection (0, 0, Pi aS, Pi piS)."""
    mesh = f.mesh
    if Pi.shape != (mesh.n(1), mesh.n(1)):
        raise MismatchError("projector does not match the complex")
    z = Cochain(0, np.zeros(mesh.n(0), dtype=complex), mesh)
    return MaxwellData(z, z, f.aS.copy_with(Pi @ f.aS.values), f.piS.copy_with(Pi @ f.piS.values))


def _check_cache0(cache0, mesh):
    if not isinstance(cache0, SpectralCache) or cache0.mesh is not mesh or cache0.degree != 0:
        raise MissingCacheError("degree-0 spectral cache of the same complex required")


def rk_inverse(g: GaugeData, cache0: SpectralCache) -> GaugeData:
    """Inverse of R K on mean-zero gauge data: (x, y) -> (-i Delta_0^+ y, -i x)."""
    _check_cache0(cache0, g.mesh)
    p = spectral_values(cache0, "pinv")
    return GaugeData(g.a.copy_with(-1j * cache0.apply(p, g.pi.values)), -1j * g.a)


def _constraint_scale(f: MaxwellData) -> float:
    return max(f.norm(), 1.0)


def gauge_fix(f: MaxwellData, cache0: SpectralCache, tol: float = CONSTRAINT_TOL):
    """Move constrained data into the radiation gauge.

    Returns ``(fixed, gauge)`` with gauge = (a, pi), a the mean-zero solution of
    Delta_0 a = delta aS and pi = -i a0, and fixed = f - k_sigma(gauge).
    Raises ConstraintViolationError when ||K^dagger f|| > tol * max(||f||, 1).
    """
    _check_cache0(cache0, f.mesh)
    viol = k_sigma_dagger(f).norm()
    if viol > tol * _constraint_scale(f):
        raise ConstraintViolationError(
            f"data violates the constraints: ||K^dagger f|| = {viol:.3e} "
            f"> {tol:g} * max(||f||, 1)"
        )
    gauge = GaugeData(solve_poisson(f.aS, cache0), -1j * f.a0)
    return f - k_sigma(gauge), gauge


@dataclass(frozen=True)
class ConstraintReport:
    lorenz_residual: float
    temporal_residual: float
    coulomb_residual: float
    radiation_ok: bool
    tol: float
    scale: float
    parts: dict

    def to_report(self) -> Report:
        rep = Report()
        th = self.tol * self.scale
        rep.add("lorenz_residual", self.lorenz_residual, th)
        rep.add("temporal_residual", self.temporal_residual, th)
        rep.add("coulomb_residual", self.coulomb_residual, th)
        return rep


def check_constraints(f: MaxwellData, tol: float = CONSTRAINT_TOL, relative: bool = True) -> ConstraintReport:
    """Residual norms of the gauge conditions.

    Lorenz: ||(delta aS + i pi0, i Delta_0 a0 + delta piS)||; temporal:
    ||(a0, pi0)||; Coulomb: ||(delta aS, delta piS)||. Each is compared with
    tol * max(||f||, 1) (or plain tol when ``relative`` is false).
    """
    kd = k_sigma_dagger(f)
    parts = {
        "lorenz_0": norm_l2(kd.a),
        "lorenz_1": norm_l2(kd.pi),
        "a0": norm_l2(f.a0),
        "pi0": norm_l2(f.pi0),
        "delta_aS": norm_l2(delta(f.aS)),
        "delta_piS": norm_l2(delta(f.piS)),
    }
    lor = float(np.hypot(parts["lorenz_0"], parts["lorenz_1"]))
    tem = float(np.hypot(parts["a0"], parts["pi0"]))
    cou = float(np.hypot(parts["delta_aS"], parts["delta_piS"]))
    scale = _constraint_scale(f) if relative else 1.0
    ok = max(lor, tem, cou) <= tol * scale
    return ConstraintReport(lor, tem, cou, bool(ok), tol, scale, parts)


# ---------------------------------------------------------------------------
# random data


def random_gauge(mesh, rng) -> GaugeData:
    n0 = mesh.n(0)
    return GaugeData(Cochain(0, complex_normal(rng, n0), mesh),
                     Cochain(0, complex_normal(rng, n0), mesh))


def random_data(mesh, rng) -> MaxwellData:
    """Unconstrained Gaussian Cauchy data."""
    return MaxwellData.from_vector(mesh, complex_normal(rng, 2 * mesh.n(0) + 2 * mesh.n(1)))


def random_constrained(mesh, rng, Pi: np.ndarray) -> MaxwellData:
    """Gaussian sample of ker K^dagger.

    Uses the parametrisation f = (a0, i delta aS, aS, Pi r - i d a0), which
    satisfies both constraints identically and covers the whole kernel.
    """
    a0 = Cochain(0, complex_normal(rng, mesh.n(0)), mesh)
    aS = Cochain(1, complex_normal(rng, mesh.n(1)), mesh)
    r = complex_normal(rng, mesh.n(1))
    piS = Cochain(1, Pi @ r, mesh) - 1j * d(a0)
    return MaxwellData(a0, 1j * delta(aS), aS, piS)


# ---------------------------------------------------------------------------
# assembled matrices (phase-space vectors ordered a0, pi0, aS, piS)


def phase_weights(mesh) -> np.ndarray:
    return np.concatenate([mesh.star(0), mesh.star(0), mesh.star(1), mesh.star(1)])


def k_sigma_matrix(mesh) -> np.ndarray:
    n0, n1 = mesh.n(0), mesh.n(1)
    d0 = coboundary_matrix(mesh, 0)
    L0 = assemble_laplacian(mesh, 0)
    K = np.zeros((2 * n0 + 2 * n1, 2 * n0), dtype=complex)
    K[:n0, n0:] = 1j * np.eye(n0)
    K[n0:2 * n0, :n0] = 1j * L0
    K[2 * n0:2 * n0 + n1, :n0] = d0
    K[2 * n0 + n1:, n0:] = d0
    return K


def k_sigma_dagger_matrix(mesh) -> np.ndarray:
    n0, n1 = mesh.n(0), mesh.n(1)
    de = codifferential_matrix(mesh, 1)
    L0 = assemble_laplacian(mesh, 0)
    Kd = np.zeros((2 * n0, 2 * n0 + 2 * n1), dtype=complex)
    Kd[:n0, n0:2 * n0] = 1j * np.eye(n0)
    Kd[:n0, 2 * n0:2 * n0 + n1] = de
    Kd[n0:, :n0] = 1j * L0
    Kd[n0:, 2 * n0 + n1:] = de
    return Kd


def g1_matrix(mesh) -> np.ndarray:
    """G1 = (1/i) [[0,-1,0,0],[-1,0,0,0],[0,0,0,1],[0,0,1,0]] blockwise."""
    n0, n1 = mesh.n(0), mesh.n(1)
    G = np.zeros((2 * n0 + 2 * n1,) * 2, dtype=complex)
    I0, I1 = np.eye(n0), np.eye(n1)
    G[:n0, n0:2 * n0] = -I0
    G[n0:2 * n0, :n0] = -I0
    G[2 * n0:2 * n0 + n1, 2 * n0 + n1:] = I1
    G[2 * n0 + n1:, 2 * n0:2 * n0 + n1] = I1
    return G / 1j


def g0_matrix(mesh) -> np.ndarray:
    n0 = mesh.n(0)
    G = np.zeros((2 * n0, 2 * n0), dtype=complex)
    G[:n0, n0:] = np.eye(n0)
    G[n0:, :n0] = np.eye(n0)
    return G / 1j


def q1_matrix(mesh) -> np.ndarray:
    """Hermitian Q1 with q1(f, g) = f^H Q1 g."""
    return 1j * phase_weights(mesh)[:, None] * g1_matrix(mesh)


def q0_matrix(mesh) -> np.ndarray:
    w = np.concatenate([mesh.star(0), mesh.star(0)])
    return 1j * w[:, None] * g0_matrix(mesh)


def t_sigma_matrix(Pi: np.ndarray, n0: int) -> np.ndarray:
    n1 = Pi.shape[0]
    T = np.zeros((2 * n0 + 2 * n1,) * 2, dtype=complex)
    T[2 * n0:2 * n0 + n1, 2 * n0:2 * n0 + n1] = Pi
    T[2 * n0 + n1:, 2 * n0 + n1:] = Pi
    return T


class GaugeRange:
    """Least-squares membership test for ran(K_Sigma) in the V_rho1 norm.

    Holds an orthonormal basis of W^{1/2} ran K (via SVD), so the distance of
    any vector from the range is one projection away.
    """

    def __init__(self, mesh, rank_tol: float = 1e-10):
        self.mesh = mesh
        self.sqrt_w = np.sqrt(phase_weights(mesh))
        Kw = self.sqrt_w[:, None] * k_sigma_matrix(mesh)
        U, s, _ = sla.svd(Kw, full_matrices=False)
        r = int(np.sum(s > rank_tol * s[0]))
        self.rank = r
        self.basis = U[:, :r]

    def residual(self, v) -> float:
        """min_x ||v - K x||_{V_rho1} for a phase-space vector or MaxwellData."""
        if isinstance(v, MaxwellData):
            v = v.to_vector()
        y = self.sqrt_w * v
        return float(np.linalg.norm(y - self.basis @ (self.basis.conj().T @ y)))

    def relative_residual(self, v, reference=None) -> float:
        if isinstance(v, MaxwellData):
            v = v.to_vector()
        ref = v if reference is None else reference
        if isinstance(ref, MaxwellData):
            ref = ref.to_vector()
        nref = float(np.linalg.norm(self.sqrt_w * ref))
        res = self.residual(v)
        return res / nref if nref > 0 else res


# ---------------------------------------------------------------------------
# file format


def maxwell_to_text(f: MaxwellData) -> str:
    buf = io.StringIO()
    for name, c in zip(SECTIONS, f.components):
        buf.write(f"[{name}]\n")
        buf.write(cochain_to_csv(c))
    return buf.getvalue()


def maxwell_from_text(text: str, mesh) -> MaxwellData:
    blocks, cur = {}, None
    for line in text.splitlines(keepends=True):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            cur = s[1:-1]
            if cur not in SECTIONS or cur in blocks:
                raise MismatchError(f"unexpected section [{cur}]")
            blocks[cur] = []
        elif cur is not None:
            blocks[cur].append(line)
        elif s:
            raise MismatchError("content before the first section header")
    missing = [s for s in SECTIONS if s not in blocks]
    if missing:
        raise MismatchError(f"missing sections {missing}")
    comps = [cochain_from_csv("".join(blocks[s]), mesh) for s in SECTIONS]
    return MaxwellData(*comps)


def save_maxwell(f: MaxwellData, path):
    with open(path, "w") as fh:
        fh.write(maxwell_to_text(f))


def load_maxwell(path, mesh) -> MaxwellData:
    with open(path) as fh:
        return maxwell_from_text(fh.read(), mesh)
