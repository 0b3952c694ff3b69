"""Spectral Cauchy evolution for the wave operator d_t^2 + Delta_k.

Time is never discretised for the evolution itself: each eigenmode is an
oscillator with frequency omega = sqrt(lambda) and is advanced in closed
form. Data are pairs (A, pi) with pi = -i dA/dt, matching the Cauchy data
convention of :mod:`decmaxwell.maxwell`.

Finite differences only show up in the residual checks (Green operators,
Maxwell residual), where they are second order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cochain import Cochain, norm_sobolev
from .errors import MismatchError, MissingCacheError, NonUniformGridError, TooFewSamplesError
from .hodge import SpectralCache, assemble_laplacian, coboundary_matrix, codifferential_matrix
from .maxwell import MaxwellData

__all__ = [
    "TimeSeries",
    "EnergyRecord",
    "evolve",
    "evolve_maxwell",
    "evolve_series",
    "propagator_matrix",
    "diagonalized_propagator",
    "green",
    "causal_propagator",
    "wave_residual",
    "maxwell_residual",
    "energy",
    "modified_energy",
    "gronwall_constant",
    "uniform_step",
]


@dataclass(frozen=True)
class TimeSeries:
    """Samples on strictly increasing times.

    Samples may be Cochains, (A, pi) Cochain pairs, MaxwellData, or plain
    tuples of floats (residual norms).
    """

    times: np.ndarray
    samples: list

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) != len(self.samples):
            raise MismatchError("times and samples must have equal length")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise MismatchError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "samples", list(self.samples))

    def __len__(self):
        return len(self.times)

    def stack(self) -> np.ndarray:
        """(T, n) array for a series of Cochains."""
        return np.stack([s.values for s in self.samples])

    @classmethod
    def from_stack(cls, times, values, degree, mesh):
        return cls(times, [Cochain(degree, v, mesh) for v in values])


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    energies: dict  # s -> E_s
    field_terms: dict  # s -> ||A||^2_{H^s}
    velocity_terms: dict  # s -> ||dA/dt||^2_{H^{s-1}}
    etilde: float


def _need(cache, k, mesh):
    if not isinstance(cache, SpectralCache) or cache.degree != k or cache.mesh is not mesh:
        raise MissingCacheError(f"spectral cache for degree {k} required")


def _trig(cache, t):
    """cos(omega t), sin(omega t)/omega and omega sin(omega t), with the omega -> 0 limits."""
    lam = cache.eigenvalues_clipped
    w = np.sqrt(lam)
    h = cache.harmonic_mask
    t = np.asarray(t, dtype=float)[..., None]
    cos = np.cos(w * t)
    sin = np.sin(w * t)
    sinc = np.where(h, t, sin / np.where(h, 1.0, w))
    wsin = w * sin
    return cos, sinc, wsin


def evolve(data, t: float, cache: SpectralCache):
    """Advance Cauchy data (A(0), pi(0)) to time t.

    A(t) = cos(Omega t) A0 + sinc_Omega(t) (i pi0) and
    pi(t) = i Omega sin(Omega t) A0 + cos(Omega t) pi0, with Omega = sqrt(Delta);
    on the kernel cos -> 1 and sinc -> t.
    """
    A, P = data
    if A.degree != P.degree or A.mesh is not P.mesh:
        raise MismatchError("Cauchy data must be two cochains of one degree")
    _need(cache, A.degree, A.mesh)
    a = cache.coefficients(A.values)
    p = cache.coefficients(P.values)
    cos, sinc, wsin = _trig(cache, t)
    at = cos * a + sinc * (1j * p)
    pt = 1j * wsin * a + cos * p
    return A.copy_with(cache.synthesize(at)), P.copy_with(cache.synthesize(pt))


def evolve_series(data, times, cache) -> TimeSeries:
    """Evolve to every time in ``times`` (vectorised over modes and times)."""
    A, P = data
    _need(cache, A.degree, A.mesh)
    a = cache.coefficients(A.values)
    p = cache.coefficients(P.values)
    cos, sinc, wsin = _trig(cache, np.asarray(times, dtype=float))
    at = (cos * a + sinc * (1j * p)) @ cache.eigenvectors.T
    pt = (1j * wsin * a + cos * p) @ cache.eigenvectors.T
    return TimeSeries(times, [(A.copy_with(x), P.copy_with(y)) for x, y in zip(at, pt)])


def evolve_maxwell(f: MaxwellData, t: float, caches) -> MaxwellData:
    """Componentwise evolution: (a0, pi0) with Delta_0, (aS, piS) with Delta_1."""
    a0, pi0 = evolve((f.a0, f.pi0), t, caches[0])
    aS, piS = evolve((f.aS, f.piS), t, caches[1])
    return MaxwellData(a0, pi0, aS, piS)


def propagator_matrix(cache: SpectralCache, t: float) -> np.ndarray:
    """U_t on stacked (A, pi) vectors, shape (2n, 2n)."""
    cos, sinc, wsin = _trig(cache, t)
    op = cache.operator
    return np.block([[op(cos), 1j * op(sinc)], [1j * op(wsin), op(cos)]])


def diagonalized_propagator(cache: SpectralCache, eps: np.ndarray, t: float) -> np.ndarray:
    """S_eps diag(e^{i eps t}, e^{-i eps t}) S_eps^{-1} for a spectral square root.

    ``eps`` holds the eigenvalues of the square root (one per mode). Per mode
    S = -i (2 eps)^{-1/2} [[1, -1], [eps, eps]] and
    S^{-1} = i (2 eps)^{-1/2} [[eps, 1], [-eps, 1]], so the first column is the
    e^{+i eps t} branch: data (b, eps b).
    """
    eps = np.asarray(eps, dtype=float)
    one = np.ones_like(eps)
    r = 1.0 / np.sqrt(2.0 * eps)
    S = -1j * r[:, None, None] * np.stack(
        [np.stack([one, -one], -1), np.stack([eps, eps], -1)], -2)
    Sinv = 1j * r[:, None, None] * np.stack(
        [np.stack([eps, one], -1), np.stack([-eps, one], -1)], -2)
    D = np.zeros((len(eps), 2, 2), dtype=complex)
    D[:, 0, 0] = np.exp(1j * eps * t)
    D[:, 1, 1] = np.exp(-1j * eps * t)
    M = S @ D @ Sinv  # (n, 2, 2) per-mode blocks
    op = cache.operator
    return np.block([[op(M[:, 0, 0]), op(M[:, 0, 1])], [op(M[:, 1, 0]), op(M[:, 1, 1])]])


# ---------------------------------------------------------------------------
# Green operators


def uniform_step(times, rtol=1e-9) -> float:
    t = np.asarray(times, dtype=float)
    if len(t) < 2:
        raise TooFewSamplesError("need at least two time samples")
    dt = np.diff(t)
    h = (t[-1] - t[0]) / (len(t) - 1)
    if np.max(np.abs(dt - h)) > rtol * abs(h):
        raise NonUniformGridError("time grid must be uniform")
    return float(h)


def _source_coeffs(f: TimeSeries, cache):
    first = f.samples[0]
    _need(cache, first.degree, first.mesh)
    return cache.coefficients(f.stack().T).T  # (T, n)


def _duhamel(c, times, cache, sign):
    """sign=+1: int_{t0}^{t} S(t-s) f ds; sign=-1: -int_{t}^{T} S(t-s) f ds.

    Trapezoid rule with uniform weights; the endpoint at s = t carries
    S(0) = 0 so cumulative sums over j <= i (resp. j >= i) suffice.
    """
    dt = uniform_step(times)
    lam = cache.eigenvalues_clipped
    w = np.sqrt(lam)
    h = cache.harmonic_mask
    t = times[:, None]
    wts = np.ones(len(times))
    # the only outer endpoint that contributes is t0 (retarded) or T (advanced)
    if sign > 0:
        wts[0] = 0.5
    else:
        wts[-1] = 0.5
    cw = c * wts[:, None]
    safe_w = np.where(h, 1.0, w)
    cos_s, sin_s = np.cos(w * t), np.sin(w * t)

    def csum(x):
        return np.cumsum(x, axis=0) if sign > 0 else np.cumsum(x[::-1], axis=0)[::-1]

    # sin(w(t-s)) = sin(wt)cos(ws) - cos(wt)sin(ws)
    Cc = csum(cos_s * cw)
    Cs = csum(sin_s * cw)
    osc = (sin_s * Cc - cos_s * Cs) / safe_w
    # zero modes: kernel is (t - s)
    Z1 = csum(cw)
    Zs = csum(t * cw)
    zero = t * Z1 - Zs
    u = np.where(h, zero, osc) * dt
    return u if sign > 0 else -u


def green(f: TimeSeries, kind: str, cache: SpectralCache) -> TimeSeries:
    """Retarded ("retarded") or advanced ("advanced") solution of the driven wave equation.

    The retarded output at t_i uses only sources at s_j <= t_i, so it is
    exactly zero before the source support begins.
    """
    if kind not in ("retarded", "advanced"):
        raise ValueError(f"kind must be 'retarded' or 'advanced', got {kind!r}")
    c = _source_coeffs(f, cache)
    u = _duhamel(c, f.times, cache, +1 if kind == "retarded" else -1)
    first = f.samples[0]
    vals = cache.synthesize(u.T).T
    return TimeSeries.from_stack(f.times, vals, first.degree, first.mesh)


def causal_propagator(f: TimeSeries, cache: SpectralCache) -> TimeSeries:
    """G = G_ret - G_adv."""
    r = green(f, "retarded", cache).stack()
    a = green(f, "advanced", cache).stack()
    first = f.samples[0]
    return TimeSeries.from_stack(f.times, r - a, first.degree, first.mesh)


def wave_residual(u: TimeSeries, f: TimeSeries | None = None) -> TimeSeries:
    """Central-difference (d_t^2 + Delta) u - f at interior times, as cochains."""
    if len(u) < 3:
        raise TooFewSamplesError("need at least three samples for second differences")
    dt = uniform_step(u.times)
    U = u.stack()
    first = u.samples[0]
    L = assemble_laplacian(first.mesh, first.degree)
    r = (U[2:] - 2 * U[1:-1] + U[:-2]) / dt**2 + U[1:-1] @ L.T
    if f is not None:
        r = r - f.stack()[1:-1]
    return TimeSeries.from_stack(u.times[1:-1], r, first.degree, first.mesh)


def maxwell_residual(A: TimeSeries) -> TimeSeries:
    """Norms of the Maxwell operator applied to sampled potentials.

    Samples are MaxwellData (only a0 and aS are used: they are A_0 and
    A_Sigma at that time). At each interior time returns
    (||(PA)_0||, ||(PA)_Sigma||) with
    (PA)_0 = Delta_0 A_0 - d_t delta A_Sigma and
    (PA)_Sigma = d_t^2 A_Sigma + Delta_1 A_Sigma - d(delta A_Sigma + d_t A_0),
    time derivatives by central differences.
    """
    if len(A) < 3:
        raise TooFewSamplesError("maxwell_residual needs at least three samples")
    dt = uniform_step(A.times)
    mesh = A.samples[0].mesh
    A0 = np.stack([s.a0.values for s in A.samples])
    AS = np.stack([s.aS.values for s in A.samples])
    L0 = assemble_laplacian(mesh, 0)
    L1 = assemble_laplacian(mesh, 1)
    d0 = coboundary_matrix(mesh, 0)
    de = codifferential_matrix(mesh, 1)
    dA0 = (A0[2:] - A0[:-2]) / (2 * dt)
    dAS = (AS[2:] - AS[:-2]) / (2 * dt)
    ddAS = (AS[2:] - 2 * AS[1:-1] + AS[:-2]) / dt**2
    r0 = A0[1:-1] @ L0.T - dAS @ de.T
    rS = ddAS + AS[1:-1] @ L1.T - (AS[1:-1] @ de.T + dA0) @ d0.T
    m0, m1 = mesh.star(0), mesh.star(1)
    n0 = np.sqrt(np.sum(m0 * np.abs(r0) ** 2, axis=1))
    n1 = np.sqrt(np.sum(m1 * np.abs(rS) ** 2, axis=1))
    return TimeSeries(A.times[1:-1], list(zip(n0.tolist(), n1.tolist())))


# ---------------------------------------------------------------------------
# energies


def modified_energy(A: Cochain, P: Cochain, cache: SpectralCache) -> float:
    """||dA/dt||^2 + <A, Delta A>, evaluated spectrally (kernel exactly zero)."""
    a = cache.coefficients(A.values)
    p = cache.coefficients(P.values)
    return float(np.sum(np.abs(p) ** 2) + np.sum(cache.eigenvalues_clipped * np.abs(a) ** 2))


def _pair_energy(A, P, cache, s_grid):
    fe, ve = {}, {}
    for s in s_grid:
        fe[s] = norm_sobolev(A, s, cache) ** 2
        # dA/dt = i pi, same norm
        ve[s] = norm_sobolev(P, s - 1, cache) ** 2
    return fe, ve, modified_energy(A, P, cache)


def energy(data: TimeSeries, s_grid, caches) -> list:
    """E_s = ||A||^2_{H^s} + ||dA/dt||^2_{H^{s-1}} per sample, plus the conserved energy.

    Samples may be (A, pi) pairs (``caches`` a single cache or a dict keyed by
    degree) or MaxwellData (contributions of both degrees are summed).
    """
    out = []
    s_grid = [float(s) for s in s_grid]
    for t, smp in zip(data.times, data.samples):
        if isinstance(smp, MaxwellData):
            pieces = [
                _pair_energy(smp.a0, smp.pi0, caches[0], s_grid),
                _pair_energy(smp.aS, smp.piS, caches[1], s_grid),
            ]
        else:
            A, P = smp
            c = caches if isinstance(caches, SpectralCache) else caches[A.degree]
            pieces = [_pair_energy(A, P, c, s_grid)]
        fe = {s: sum(p[0][s] for p in pieces) for s in s_grid}
        ve = {s: sum(p[1][s] for p in pieces) for s in s_grid}
        et = sum(p[2] for p in pieces)
        out.append(EnergyRecord(float(t), {s: fe[s] + ve[s] for s in s_grid}, fe, ve, et))
    return out


def gronwall_constant(records, s: float) -> float:
    """Smallest C >= 0 with E_s(t) <= E_s(t0) e^{C (t - t0)} on the samples."""
    t0, e0 = records[0].t, records[0].energies[s]
    C = 0.0
    for r in records[1:]:
        e = r.energies[s]
        if e <= 0 or r.t <= t0:
            continue
        if e0 <= 0:
            return float("inf")
        C = max(C, np.log(e / e0) / (r.t - t0))
    return float(C)
