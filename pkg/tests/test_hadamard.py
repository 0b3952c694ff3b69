import numpy as np
import pytest

from decmaxwell.cochain import Cochain, zeros
from decmaxwell.errors import ConstraintViolationError
from decmaxwell.evolution import evolve_maxwell
from decmaxwell.hadamard import build_c_pm, build_pi_pm, build_sqrt, build_suite, two_point_function, verify_state
from decmaxwell.hodge import assemble_laplacian
from decmaxwell.maxwell import (
    MaxwellData,
    k_sigma,
    q1_sigma,
    random_constrained,
    random_data,
    random_gauge,
    t_sigma_matrix,
)


@pytest.fixture(scope="module")
def torus_suite(torus, torus_caches):
    return build_suite(torus, 1.0, torus_caches)


@pytest.fixture(scope="module")
def sphere_suite(sphere, sphere_caches):
    return build_suite(sphere, 1.0, sphere_caches)


@pytest.fixture(params=["torus", "sphere"])
def suite(request):
    return request.getfixturevalue(f"{request.param}_suite")


def _mode(suite, j):
    c1 = suite.caches[1]
    b = suite.Pi @ c1.eigenvectors[:, j]
    return b / np.sqrt(np.sum(suite.mesh.star(1) * b * b))


def _coexact_modes(suite):
    c1 = suite.caches[1]
    out = []
    for j in np.flatnonzero(~c1.harmonic_mask):
        b = suite.Pi @ c1.eigenvectors[:, j]
        if np.linalg.norm(b) > 1e-3 * np.linalg.norm(c1.eigenvectors[:, j]):
            out.append(j)
    return out


def _rad(suite, b, p):
    m = suite.mesh
    z = zeros(m, 0)
    return MaxwellData(z, z, Cochain(1, b, m), Cochain(1, p, m))


def test_sqrt_examples(torus, torus_caches):
    c = torus_caches[1]
    eps = build_sqrt(c, 0.5)
    j = c.n_harmonic + 3
    e = Cochain(1, c.eigenvectors[:, j], torus)
    assert np.allclose(eps.apply(e).values, np.sqrt(c.eigenvalues[j]) * e.values, atol=1e-12)
    h = Cochain(1, c.harmonic_basis[:, 0], torus)
    assert np.allclose(eps.apply(h).values, 0.5 * h.values, atol=1e-12)
    assert np.allclose(eps.apply_inv(h).values, 2.0 * h.values, atol=1e-12)
    E = eps.matrix()
    rem = E @ E - assemble_laplacian(torus, 1) - 0.25 * c.harmonic_projector()
    assert np.linalg.norm(rem, 2) <= 1e-10
    assert np.allclose(eps.remainder(), 0.25 * c.harmonic_projector(), atol=1e-12)
    assert eps.remainder_rank == 2
    # self-adjoint and positive in the L2 product
    M = torus.star(1)
    assert np.allclose(M[:, None] * E, (M[:, None] * E).T, atol=1e-12)
    assert np.min(eps.values) > 0
    with pytest.raises(ValueError):
        build_sqrt(c, 0.0)


@pytest.mark.parametrize("mu", [0.1, 1.0, 10.0])
def test_pi_identities(torus, torus_caches, mu):
    e0, e1 = build_sqrt(torus_caches[0], mu), build_sqrt(torus_caches[1], mu)
    pp, pm = build_pi_pm(e0, e1)
    I = np.eye(pp.shape[0])
    assert np.linalg.norm(pp + pm - I, 2) <= 1e-12
    for P in (pp, pm):
        assert np.linalg.norm(P @ P - P, 2) <= 1e-10 * max(mu, 1 / mu)


def test_pi_q_self_adjoint(suite, rng):
    for P in (suite.pi_plus, suite.pi_minus):
        for _ in range(10):
            f, g = random_data(suite.mesh, rng), random_data(suite.mesh, rng)
            Pf = MaxwellData.from_vector(suite.mesh, P @ f.to_vector())
            Pg = MaxwellData.from_vector(suite.mesh, P @ g.to_vector())
            assert abs(q1_sigma(Pf, g) - q1_sigma(f, Pg)) <= 1e-9 * f.norm() * g.norm()


def test_c_pm_assembly(suite, rng):
    T = t_sigma_matrix(suite.Pi, suite.mesh.n(0))
    cp, cm = build_c_pm((suite.pi_plus, suite.pi_minus), T)
    assert np.linalg.norm(cp + cm - T, 2) <= 1e-10
    for C in (cp, cm):
        assert np.linalg.norm(C @ C - C, 2) <= 1e-9
    for _ in range(20):
        g = random_gauge(suite.mesh, rng)
        Kg = k_sigma(g)
        for name in ("c_plus", "c_minus"):
            assert suite.apply(name, Kg).norm() <= 1e-10 * Kg.norm()


def test_c_pm_eigen_branches(suite):
    # per coexact mode, c_plus fixes (b, eps b) and kills (b, -eps b)
    for j in _coexact_modes(suite)[:6]:
        b = _mode(suite, j)
        w = np.sqrt(suite.caches[1].eigenvalues[j])
        up, dn = _rad(suite, b, w * b), _rad(suite, b, -w * b)
        n = up.norm()
        assert (suite.apply("c_plus", up) - up).norm() <= 1e-9 * n
        assert suite.apply("c_plus", dn).norm() <= 1e-9 * n
        assert (suite.apply("c_minus", dn) - dn).norm() <= 1e-9 * n
        assert suite.apply("c_minus", up).norm() <= 1e-9 * n
        # (b, i eps b) is not an eigenvector: it splits evenly between the branches
        mixed = _rad(suite, b, 1j * w * b)
        assert suite.apply("c_plus", mixed).norm() == pytest.approx(mixed.norm() / np.sqrt(2), rel=1e-9)


def test_positive_branch_frequency(suite):
    j = _coexact_modes(suite)[0]
    b = _mode(suite, j)
    w = np.sqrt(suite.caches[1].eigenvalues[j])
    f = _rad(suite, b, w * b)
    for t in (0.4, 2.0):
        ft = evolve_maxwell(f, t, suite.caches)
        assert (ft - np.exp(1j * w * t) * f).norm() <= 1e-10


def test_two_point_closed_form(suite, rng):
    eps = suite.eps1
    sq, isq = eps.power_matrix(0.5), eps.power_matrix(-0.5)
    m1 = suite.mesh.star(1)
    for _ in range(10):
        b = suite.Pi @ rng.standard_normal(suite.mesh.n(1))
        p = suite.Pi @ rng.standard_normal(suite.mesh.n(1))
        f = _rad(suite, b, p)
        lp, lm, defect = two_point_function(suite, f, f)
        w = sq @ b + isq @ p
        ref = 0.5 * np.sum(m1 * w * w)
        assert lp.real == pytest.approx(ref, rel=1e-9)
        assert abs(lp.imag) <= 1e-9 * ref
        # both two-point functions are non-negative on the diagonal
        assert lp.real >= 0 and lm.real >= -1e-10
        assert defect <= 1e-9 * f.norm() ** 2


def test_two_point_gauge_invariance(suite, rng):
    for _ in range(10):
        f = random_constrained(suite.mesh, rng, suite.Pi)
        g = random_constrained(suite.mesh, rng, suite.Pi)
        x = random_gauge(suite.mesh, rng)
        base = two_point_function(suite, f, g)
        moved = two_point_function(suite, f + k_sigma(x), g)
        scale = (f.norm() + k_sigma(x).norm()) * g.norm()
        assert abs(moved[0] - base[0]) <= 1e-9 * scale
        assert abs(moved[1] - base[1]) <= 1e-9 * scale
        assert base[2] <= 1e-9 * f.norm() * g.norm()


def test_two_point_disjoint_modes(suite):
    modes = _coexact_modes(suite)
    c1 = suite.caches[1]
    # pick two modes with different eigenvalues
    j1 = modes[0]
    j2 = next(j for j in modes if abs(c1.eigenvalues[j] - c1.eigenvalues[j1]) > 1e-6)
    b1, b2 = _mode(suite, j1), _mode(suite, j2)
    lp, lm, _ = two_point_function(suite, _rad(suite, b1, b1), _rad(suite, b2, 2 * b2))
    assert abs(lp) <= 1e-10 and abs(lm) <= 1e-10


def test_two_point_zero_and_errors(suite, rng):
    z = MaxwellData.zeros(suite.mesh)
    assert two_point_function(suite, z, z) == (0, 0, 0)
    with pytest.raises(ConstraintViolationError):
        two_point_function(suite, random_data(suite.mesh, rng), z)


def test_c_preserves_gauge_range(torus_suite, rng):
    g = random_gauge(torus_suite.mesh, rng)
    Kg = k_sigma(g).to_vector()
    for C in (torus_suite.c_plus, torus_suite.c_minus):
        assert torus_suite.gauge_range.residual(C @ Kg) <= 1e-9 * np.linalg.norm(Kg)


@pytest.mark.parametrize("mu", [0.1, 1.0, 10.0])
def test_verify_state_passes(surface, mu):
    mesh, caches, _ = surface
    s = build_suite(mesh, mu, caches)
    rep = verify_state(s, trials=100, seed=3)
    assert rep.passed, rep.failures()
    names = {c.name for c in rep.checks}
    for n in ("self_adjoint_c_plus", "completeness", "positivity_plus", "positivity_minus", "ccr",
              "commutator", "frequency_plus", "frequency_minus", "mu_independence"):
        assert n in names


def test_verify_state_deterministic(torus_suite):
    a = verify_state(torus_suite, trials=20, seed=9).to_csv()
    b = verify_state(torus_suite, trials=20, seed=9).to_csv()
    assert a == b
    with pytest.raises(ValueError):
        verify_state(torus_suite, trials=0)
    with pytest.raises(KeyError):
        verify_state(torus_suite, trials=1, tolerances={"nonsense": 1.0})


def test_verify_state_detects_broken_projector(torus, torus_caches):
    # swapping the roles of c_plus and c_minus must break positivity
    s = build_suite(torus, 1.0, torus_caches)
    s.c_plus, s.c_minus = s.c_minus, s.c_plus
    rep = verify_state(s, trials=20, seed=1)
    assert not rep["positivity_plus"].passed
    assert not rep["frequency_plus"].passed


def test_harmonic_sector_mu_dependence(torus, torus_caches):
    rep = verify_state(build_suite(torus, 1.0, torus_caches), trials=5, seed=0)
    # b_1 = 2 on the torus: the regulariser is visible in the harmonic rows
    assert rep["harmonic_mu_dependence"].statistic > 1e-3
    assert rep["harmonic_mu_dependence"].kind == "info"


def test_lambda_commutator(suite, rng):
    # lambda_plus - lambda_minus = i G1 T, and i G1 equals i G1 T modulo the gauge on constraints
    d = suite.lambda_plus - suite.lambda_minus - 1j * suite.G1 @ suite.T
    assert np.linalg.norm(d, 2) <= 1e-9
    f = random_constrained(suite.mesh, rng, suite.Pi)
    v = f.to_vector()
    W = np.concatenate([suite.mesh.star(0)] * 2 + [suite.mesh.star(1)] * 2)
    g = random_constrained(suite.mesh, rng, suite.Pi).to_vector()
    lhs = np.vdot(g, W * ((suite.lambda_plus - suite.lambda_minus) @ v))
    rhs = np.vdot(g, W * (1j * suite.G1 @ v))
    assert abs(lhs - rhs) <= 1e-9 * np.linalg.norm(v) * np.linalg.norm(g)


def test_gauge_data_is_null(suite, rng):
    # K x has zero q-product with every constrained f
    f = random_constrained(suite.mesh, rng, suite.Pi)
    Kx = k_sigma(random_gauge(suite.mesh, rng))
    assert abs(q1_sigma(Kx, f)) <= 1e-9 * Kx.norm() * f.norm()
