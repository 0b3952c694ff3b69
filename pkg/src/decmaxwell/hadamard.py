"""Frequency splitting projectors and the two-point data of the Maxwell state.

Pieces:

* :class:`SqrtOperator` - eps_k = sqrt(Delta_k + mu^2 P_harm), an invertible
  square root of the Laplacian up to a finite-rank shift on the kernel.
* pi_plus / pi_minus - block projectors built from eps_0, eps_1.
* c_plus / c_minus = T pi_pm T and lambda_pm = +-i G1 c_pm.

Sign convention: with pi = -i dA/dt, data of the form (b, eps b) evolve as
e^{+i eps t}; that is the range of pi_plus. The frequency check in
:func:`verify_state` pins this down.

All operators are dense matrices on phase-space vectors ordered
(a0, pi0, aS, piS).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cochain import Cochain
from .errors import ConstraintViolationError, MismatchError
from .evolution import evolve_maxwell
from .hodge import SpectralCache, assemble_laplacian, build_caches, coulomb_projector
from .maxwell import (
    CONSTRAINT_TOL,
    GaugeRange,
    MaxwellData,
    g1_matrix,
    k_sigma_dagger,
    k_sigma_dagger_matrix,
    k_sigma_matrix,
    phase_weights,
    q1_matrix,
    random_constrained,
    t_sigma_matrix,
)
from .report import Report
from .rng import complex_normal, generator

__all__ = [
    "SqrtOperator",
    "build_sqrt",
    "build_pi_pm",
    "build_c_pm",
    "HadamardSuite",
    "build_suite",
    "verify_state",
    "two_point_function",
    "DEFAULT_TOLERANCES",
    "FREQUENCY_TIMES",
]

DEFAULT_TOLERANCES = {
    "self_adjoint": 1e-9,
    "operator": 1e-9,
    "completeness": 1e-8,
    "positivity": -1e-10,
    "ccr": 1e-9,
    "commutator": 1e-9,
    "frequency": 1e-8,
    "mu_independence": 1e-10,
    "closed_form": 1e-9,
    "pi_sum": 1e-12,
    "pi_idempotent": 1e-10,
}

FREQUENCY_TIMES = (0.37, 1.0, 2.9)


@dataclass(frozen=True, eq=False)
class SqrtOperator:
    """eps = sqrt(Delta) off the kernel, mu on it."""

    cache: SpectralCache
    mu: float
    values: np.ndarray = field(repr=False)

    @property
    def degree(self) -> int:
        return self.cache.degree

    @property
    def remainder_rank(self) -> int:
        return self.cache.n_harmonic

    def matrix(self) -> np.ndarray:
        return self.cache.operator(self.values)

    def inv_matrix(self) -> np.ndarray:
        return self.cache.operator(1.0 / self.values)

    def power_matrix(self, p: float) -> np.ndarray:
        return self.cache.operator(self.values ** p)

    def remainder(self) -> np.ndarray:
        """eps^2 - Delta, which is mu^2 times the harmonic projector."""
        return self.cache.operator(self.values ** 2 - self.cache.eigenvalues_clipped)

    def apply(self, omega: Cochain) -> Cochain:
        return omega.copy_with(self.cache.apply(self.values, omega.values))

    def apply_inv(self, omega: Cochain) -> Cochain:
        return omega.copy_with(self.cache.apply(1.0 / self.values, omega.values))


def build_sqrt(cache: SpectralCache, mu: float) -> SqrtOperator:
    if not mu > 0:
        raise ValueError(f"regularisation mass must be positive, got {mu}")
    lam = cache.eigenvalues_clipped
    vals = np.sqrt(lam + mu * mu * cache.harmonic_mask)
    vals.setflags(write=False)
    return SqrtOperator(cache, float(mu), vals)


def _pair_block(eps: SqrtOperator, sign: int) -> np.ndarray:
    n = len(eps.values)
    I = np.eye(n)
    return 0.5 * np.block([[I, sign * eps.inv_matrix()], [sign * eps.matrix(), I]])


def build_pi_pm(eps0: SqrtOperator, eps1: SqrtOperator):
    """pi_pm = 1/2 [[1, +-eps^{-1}], [+-eps, 1]] on (a0, pi0) and on (aS, piS)."""
    if eps0.cache.mesh is not eps1.cache.mesh:
        raise MismatchError("square roots belong to different complexes")
    if eps0.degree != 0 or eps1.degree != 1:
        raise MismatchError("need square roots of Delta_0 and Delta_1")
    out = []
    for s in (+1, -1):
        b0, b1 = _pair_block(eps0, s), _pair_block(eps1, s)
        n0, n1 = b0.shape[0], b1.shape[0]
        P = np.zeros((n0 + n1, n0 + n1), dtype=complex)
        P[:n0, :n0] = b0
        P[n0:, n0:] = b1
        out.append(P)
    return tuple(out)


def build_c_pm(pi_pm, T: np.ndarray):
    """c_pm = T pi_pm T."""
    return tuple(T @ p @ T for p in pi_pm)


@dataclass(eq=False)
class HadamardSuite:
    """Assembled operators for one complex and one regularisation mass."""

    mesh: object
    mu: float
    caches: dict
    eps0: SqrtOperator
    eps1: SqrtOperator
    Pi: np.ndarray
    T: np.ndarray
    K: np.ndarray
    K_dagger: np.ndarray
    G1: np.ndarray
    Q1: np.ndarray
    pi_plus: np.ndarray
    pi_minus: np.ndarray
    c_plus: np.ndarray
    c_minus: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    gauge_range: GaugeRange
    report: Report | None = None

    def apply(self, name: str, f: MaxwellData) -> MaxwellData:
        return MaxwellData.from_vector(self.mesh, getattr(self, name) @ f.to_vector())

    def q(self, f, g) -> complex:
        """q1 on phase-space vectors (or batches as columns)."""
        return f.conj().T @ (self.Q1 @ g)

    def matrices(self) -> dict:
        return {
            "Pi": self.Pi,
            "T_sigma": self.T,
            "K_sigma": self.K,
            "K_sigma_dagger": self.K_dagger,
            "G1_sigma": self.G1,
            "pi_plus": self.pi_plus,
            "pi_minus": self.pi_minus,
            "c_plus": self.c_plus,
            "c_minus": self.c_minus,
            "lambda_plus": self.lambda_plus,
            "lambda_minus": self.lambda_minus,
        }


def build_suite(mesh, mu: float = 1.0, caches=None) -> HadamardSuite:
    caches = caches or build_caches(mesh)
    eps0, eps1 = build_sqrt(caches[0], mu), build_sqrt(caches[1], mu)
    Pi = coulomb_projector(caches[0], caches[1])
    T = t_sigma_matrix(Pi, mesh.n(0))
    pp, pm = build_pi_pm(eps0, eps1)
    cp, cm = build_c_pm((pp, pm), T)
    G1 = g1_matrix(mesh)
    return HadamardSuite(
        mesh=mesh,
        mu=float(mu),
        caches=caches,
        eps0=eps0,
        eps1=eps1,
        Pi=np.asarray(Pi),
        T=T,
        K=k_sigma_matrix(mesh),
        K_dagger=k_sigma_dagger_matrix(mesh),
        G1=G1,
        Q1=q1_matrix(mesh),
        pi_plus=pp,
        pi_minus=pm,
        c_plus=cp,
        c_minus=cm,
        lambda_plus=1j * G1 @ cp,
        lambda_minus=-1j * G1 @ cm,
        gauge_range=GaugeRange(mesh),
    )


# ---------------------------------------------------------------------------
# verification


def _opnorm(A) -> float:
    return float(np.linalg.norm(A, 2)) if A.size else 0.0


def _unit(suite, v):
    n = float(np.sqrt(np.real(np.vdot(v, phase_weights(suite.mesh) * v))))
    return v / n if n > 0 else v


def _constrained_samples(suite, n, rng):
    cols = []
    for _ in range(n):
        f = random_constrained(suite.mesh, rng, suite.Pi)
        cols.append(_unit(suite, f.to_vector()))
    return np.stack(cols, axis=1)


def _radiation_modes(suite, harmonic: bool):
    """Radiation-gauge 1-form modes b = Pi e_j, one per eigenvector surviving Pi."""
    c1 = suite.caches[1]
    mask = c1.harmonic_mask if harmonic else ~c1.harmonic_mask
    out = []
    for j in np.flatnonzero(mask):
        e = c1.eigenvectors[:, j]
        b = suite.Pi @ e
        nb = np.sqrt(np.sum(suite.mesh.star(1) * b * b))
        if nb > 1e-3:  # e has a coexact or harmonic part
            out.append((float(c1.eigenvalues_clipped[j]), b / nb, j))
    return out


def _embed(suite, b, p):
    n0, n1 = suite.mesh.n(0), suite.mesh.n(1)
    v = np.zeros(2 * n0 + 2 * n1, dtype=complex)
    v[2 * n0:2 * n0 + n1] = b
    v[2 * n0 + n1:] = p
    return v


def _frequency_errors(suite, modes, rng, times=FREQUENCY_TIMES):
    """Max relative deviation of U_t c_pm f from e^{+-i sqrt(lambda) t} c_pm f."""
    errs = {"plus": 0.0, "minus": 0.0}
    for lam, b, _ in modes:
        alpha, beta = complex_normal(rng, 2)
        f = _embed(suite, alpha * b, beta * b)
        for name, sign, C in (("plus", 1, suite.c_plus), ("minus", -1, suite.c_minus)):
            g = C @ f
            ng = np.linalg.norm(g)
            if ng == 0:
                continue
            G = MaxwellData.from_vector(suite.mesh, g)
            for t in times:
                ev = evolve_maxwell(G, t, suite.caches).to_vector()
                ref = np.exp(sign * 1j * np.sqrt(lam) * t) * g
                errs[name] = max(errs[name], float(np.linalg.norm(ev - ref) / ng))
    return errs


def _closed_form_error(suite, rng, trials):
    """q(g, c_plus g) vs 1/2 ||eps^{1/2} b + eps^{-1/2} p||^2 for coclosed g = (0,0,b,p)."""
    m1 = suite.mesh.star(1)
    sq, isq = suite.eps1.power_matrix(0.5), suite.eps1.power_matrix(-0.5)
    worst = 0.0
    for _ in range(trials):
        b = suite.Pi @ complex_normal(rng, suite.mesh.n(1))
        p = suite.Pi @ complex_normal(rng, suite.mesh.n(1))
        g = _embed(suite, b, p)
        lhs = np.vdot(g, suite.Q1 @ (suite.c_plus @ g))
        w = sq @ b + isq @ p
        rhs = 0.5 * np.real(np.vdot(w, m1 * w))
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1.0))
    return worst


def verify_state(suite: HadamardSuite, trials: int = 500, seed: int = 0, tolerances=None,
                 mu_alt: float | None = None) -> Report:
    """Run the state checks on ``trials`` random constrained samples.

    Rows (statistic vs threshold):
      self_adjoint_c_plus/minus   max |q(c f, g) - q(f, c g)|           <= tol
      completeness                max dist((c+ + c-) f - f, ran K)/||f|| <= tol
      positivity_plus/minus       min +-Re q(f, c_pm f)                   >= tol
      ccr                         max |L+(f,g) - L-(f,g) - q(f,g)|        <= tol
      commutator                  max |(g,(l+ - l-) f) - (g, i G1 f)|     <= tol
      frequency_plus/minus        single-mode phase error (non-harmonic)  <= tol
      mu_independence             ||(c_pm(mu) - c_pm(mu')) P_nonharm||    <= tol
    plus operator-level identities and informational rows for the
    harmonic sector (kind "info").
    Random samples are normalised to unit V_rho1 norm, so all thresholds are
    absolute.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tol = dict(DEFAULT_TOLERANCES)
    if tolerances:
        unknown = set(tolerances) - set(tol)
        if unknown:
            raise KeyError(f"unknown tolerance names {sorted(unknown)}")
        tol.update(tolerances)
    rep = Report()
    N = suite.T.shape[0]
    I = np.eye(N)
    Q = suite.Q1

    # operator identities
    rep.add("op_pi_sum_identity", _opnorm(suite.pi_plus + suite.pi_minus - I), tol["pi_sum"])
    for nm, P in (("plus", suite.pi_plus), ("minus", suite.pi_minus)):
        rep.add(f"op_pi_{nm}_idempotent", _opnorm(P @ P - P), tol["pi_idempotent"])
        rep.add(f"op_pi_{nm}_q_self_adjoint", _opnorm(P.conj().T @ Q - Q @ P), tol["operator"])
        rep.add(f"op_T_commutes_pi_{nm}", _opnorm(suite.T @ P - P @ suite.T), tol["operator"])
    for nm, C in (("plus", suite.c_plus), ("minus", suite.c_minus)):
        rep.add(f"op_c_{nm}_idempotent", _opnorm(C @ C - C), tol["operator"])
        rep.add(f"op_c_{nm}_q_self_adjoint", _opnorm(C.conj().T @ Q - Q @ C), tol["operator"])
        rep.add(f"op_c_{nm}_kills_gauge", _opnorm(C @ suite.K), tol["operator"])
    rep.add("op_c_sum_equals_T", _opnorm(suite.c_plus + suite.c_minus - suite.T), tol["operator"])
    rep.add("op_T_idempotent", _opnorm(suite.T @ suite.T - suite.T), tol["operator"])
    rep.add("op_T_kills_gauge", _opnorm(suite.T @ suite.K), tol["operator"])
    rep.add("op_Kdagger_K", _opnorm(suite.K_dagger @ suite.K), tol["operator"])
    e1 = suite.eps1.matrix()
    rep.add("op_eps1_commutes_Pi", _opnorm(e1 @ suite.Pi - suite.Pi @ e1), tol["operator"])
    for k, e in ((0, suite.eps0), (1, suite.eps1)):
        c = suite.caches[k]
        Em = e.matrix()
        rem = Em @ Em - assemble_laplacian(suite.mesh, k) - e.mu**2 * c.harmonic_projector()
        rep.add(f"op_eps{k}_square_remainder", _opnorm(rem), tol["operator"])

    # sampled checks
    rng = generator(seed, "verify_state")
    F = _constrained_samples(suite, trials, rng)
    Gs = _constrained_samples(suite, trials, rng)
    for nm, C in (("plus", suite.c_plus), ("minus", suite.c_minus)):
        lhs = np.einsum("ij,ij->j", (C @ F).conj(), Q @ Gs)
        rhs = np.einsum("ij,ij->j", F.conj(), Q @ (C @ Gs))
        rep.add(f"self_adjoint_c_{nm}", np.max(np.abs(lhs - rhs)), tol["self_adjoint"])

    S = (suite.c_plus + suite.c_minus) @ F - F
    dist = max(suite.gauge_range.relative_residual(S[:, j], F[:, j]) for j in range(trials))
    rep.add("completeness", dist, tol["completeness"])

    qp = np.real(np.einsum("ij,ij->j", F.conj(), Q @ (suite.c_plus @ F)))
    qm = -np.real(np.einsum("ij,ij->j", F.conj(), Q @ (suite.c_minus @ F)))
    rep.add("positivity_plus", np.min(qp), tol["positivity"], "ge")
    rep.add("positivity_minus", np.min(qm), tol["positivity"], "ge")

    W = phase_weights(suite.mesh)[:, None]
    TF, TG = suite.T @ F, suite.T @ Gs
    lp = np.einsum("ij,ij->j", TF.conj(), W * (suite.lambda_plus @ TG))
    lm = np.einsum("ij,ij->j", TF.conj(), W * (suite.lambda_minus @ TG))
    qq = np.einsum("ij,ij->j", TF.conj(), Q @ TG)
    rep.add("ccr", np.max(np.abs(lp - lm - qq)), tol["ccr"])

    lhs = np.einsum("ij,ij->j", Gs.conj(), W * ((suite.lambda_plus - suite.lambda_minus) @ F))
    rhs = np.einsum("ij,ij->j", Gs.conj(), W * ((1j * suite.G1) @ F))
    rep.add("commutator", np.max(np.abs(lhs - rhs)), tol["commutator"])

    rep.add("closed_form_positivity", _closed_form_error(suite, rng, min(trials, 50)),
            tol["closed_form"])

    errs = _frequency_errors(suite, _radiation_modes(suite, harmonic=False), rng)
    rep.add("frequency_plus", errs["plus"], tol["frequency"])
    rep.add("frequency_minus", errs["minus"], tol["frequency"])
    herrs = _frequency_errors(suite, _radiation_modes(suite, harmonic=True), rng)
    rep.add("harmonic_frequency_plus", herrs["plus"], np.inf, "info")
    rep.add("harmonic_frequency_minus", herrs["minus"], np.inf, "info")

    # mu-independence off the kernel; the harmonic sector is reported only
    mu2 = mu_alt if mu_alt is not None else 2.0 * suite.mu
    other = build_suite(suite.mesh, mu2, suite.caches)
    c1 = suite.caches[1]
    Pn = c1.operator((~c1.harmonic_mask).astype(float))
    Ph = c1.harmonic_projector()
    n0, n1 = suite.mesh.n(0), suite.mesh.n(1)
    z0 = np.zeros((2 * n0, 2 * n0))
    Rn = np.block([[z0, np.zeros((2 * n0, 2 * n1))],
                   [np.zeros((2 * n1, 2 * n0)), np.kron(np.eye(2), Pn @ suite.Pi)]])
    Rh = np.block([[z0, np.zeros((2 * n0, 2 * n1))],
                   [np.zeros((2 * n1, 2 * n0)), np.kron(np.eye(2), Ph)]])
    dmu = max(_opnorm((suite.c_plus - other.c_plus) @ Rn), _opnorm((suite.c_minus - other.c_minus) @ Rn))
    rep.add("mu_independence", dmu, tol["mu_independence"])
    dh = max(_opnorm((suite.c_plus - other.c_plus) @ Rh), _opnorm((suite.c_minus - other.c_minus) @ Rh))
    rep.add("harmonic_mu_dependence", dh, np.inf, "info")
    return rep


def two_point_function(suite: HadamardSuite, f: MaxwellData, g: MaxwellData,
                       tol: float = CONSTRAINT_TOL):
    """(Lambda_plus, Lambda_minus, ccr_defect) for constrained data f, g.

    Lambda_pm = +-i (f, G1 c_pm g)_{V_rho1} = +-q(f, c_pm g). The defect is
    |Lambda_plus - Lambda_minus - q(f, g)|.
    """
    for name, x in (("f", f), ("g", g)):
        v = k_sigma_dagger(x).norm()
        if v > tol * max(x.norm(), 1.0):
            raise ConstraintViolationError(f"{name} violates the constraints (||K^dagger {name}|| = {v:.3e})")
    fv, gv = f.to_vector(), g.to_vector()
    W = phase_weights(suite.mesh)
    lp = complex(np.vdot(fv, W * (suite.lambda_plus @ gv)))
    lm = complex(np.vdot(fv, W * (suite.lambda_minus @ gv)))
    q = complex(np.vdot(fv, suite.Q1 @ gv))
    return lp, lm, abs(lp - lm - q)
