import numpy as np
import pytest

from decmaxwell.cochain import Cochain, constant, d, delta, inner_l2, norm_l2, random_cochain, zeros
from decmaxwell.errors import ConstraintViolationError, MismatchError, MissingCacheError
from decmaxwell.evolution import evolve_maxwell
from decmaxwell.hodge import assemble_laplacian
from decmaxwell.maxwell import (
    GaugeData,
    GaugeRange,
    MaxwellData,
    check_constraints,
    gauge_fix,
    k_sigma,
    k_sigma_dagger,
    k_sigma_dagger_matrix,
    k_sigma_matrix,
    load_maxwell,
    maxwell_from_text,
    maxwell_to_text,
    phase_weights,
    q0_sigma,
    q1_sigma,
    random_constrained,
    random_data,
    random_gauge,
    rk_inverse,
    save_maxwell,
    t_sigma,
    t_sigma_matrix,
)


def _mean_zero(c):
    m = c.mesh.star(0)
    return c.copy_with(c.values - np.sum(m * c.values) / m.sum())


def _radiation(mesh, caches, Pi, rng):
    z = zeros(mesh, 0)
    aS = random_cochain(mesh, 1, rng)
    piS = random_cochain(mesh, 1, rng)
    return MaxwellData(z, z, aS.copy_with(Pi @ aS.values), piS.copy_with(Pi @ piS.values))


def test_k_sigma_components(torus, rng):
    a = random_cochain(torus, 0, rng)
    f = k_sigma(GaugeData(a, zeros(torus, 0)))
    L = assemble_laplacian(torus, 0)
    assert not np.any(f.a0.values) and not np.any(f.piS.values)
    assert np.allclose(f.pi0.values, 1j * (L @ a.values), atol=1e-12)
    assert np.array_equal(f.aS.values, d(a).values)


def test_k_sigma_constant_is_zero(torus):
    f = k_sigma(GaugeData(constant(torus, 0), zeros(torus, 0)))
    assert f.norm() <= 1e-12


def test_kdagger_k_vanishes(surface, rng):
    mesh, _, _ = surface
    for _ in range(100):
        g = random_gauge(mesh, rng)
        assert k_sigma_dagger(k_sigma(g)).norm() <= 1e-10 * g.norm()
    KdK = k_sigma_dagger_matrix(mesh) @ k_sigma_matrix(mesh)
    assert np.linalg.norm(KdK, 2) <= 1e-10


def test_kdagger_formula(torus, rng):
    # oracle assembled from the raw incidence matrices
    f = random_data(torus, rng)
    B1 = torus.boundary[1].toarray().astype(float)
    m0, m1 = torus.star(0), torus.star(1)
    dlt = lambda v: (B1 @ (m1 * v)) / m0  # noqa: E731
    lap = lambda v: dlt(B1.T @ v)  # noqa: E731
    ref_a = dlt(f.aS.values) + 1j * f.pi0.values
    ref_p = 1j * lap(f.a0.values) + dlt(f.piS.values)
    got = k_sigma_dagger(f)
    assert np.allclose(got.a.values, ref_a, atol=1e-10)
    assert np.allclose(got.pi.values, ref_p, atol=1e-10)


def test_kdagger_zero_examples(torus, torus_caches, torus_Pi, rng):
    g = random_gauge(torus, rng)
    assert k_sigma_dagger(k_sigma(g)).norm() <= 1e-10 * g.norm()
    f = _radiation(torus, torus_caches, torus_Pi, rng)
    h = torus_caches[0].harmonic_basis[:, 0]
    f = MaxwellData(Cochain(0, h, torus), f.pi0, f.aS, f.piS)
    assert k_sigma_dagger(f).norm() <= 1e-10 * f.norm()


def test_q1_hermitian(surface, rng):
    mesh, _, _ = surface
    for _ in range(20):
        f, g = random_data(mesh, rng), random_data(mesh, rng)
        assert q1_sigma(f, g) == pytest.approx(np.conj(q1_sigma(g, f)), rel=1e-12)


def test_q1_adjointness(surface, rng):
    # K^dagger is the adjoint of K between the two Hermitian forms:
    # q1(K x, f) = q0(x, K^dagger f), equivalently q1(f, K x) = q0(K^dagger f, x)
    mesh, _, _ = surface
    for _ in range(50):
        x, f = random_gauge(mesh, rng), random_data(mesh, rng)
        lhs = q1_sigma(k_sigma(x), f)
        rhs = q0_sigma(x, k_sigma_dagger(f))
        scale = k_sigma(x).norm() * f.norm()
        assert abs(lhs - rhs) <= 1e-10 * scale
        assert abs(q1_sigma(f, k_sigma(x)) - q0_sigma(k_sigma_dagger(f), x)) <= 1e-10 * scale


def test_q1_positive_example(torus, rng):
    b = Cochain(1, rng.standard_normal(torus.n(1)), torus)
    z = zeros(torus, 0)
    q = q1_sigma(MaxwellData(z, z, b, b), MaxwellData(z, z, b, b))
    assert q.real == pytest.approx(2 * norm_l2(b) ** 2, rel=1e-12)
    assert abs(q.imag) <= 1e-12 * q.real
    # a quarter-period phase between aS and piS makes the form vanish
    assert abs(q1_sigma(MaxwellData(z, z, b, 1j * b), MaxwellData(z, z, b, 1j * b))) <= 1e-12 * q.real


def test_q1_mismatch(torus, sphere, rng):
    with pytest.raises(MismatchError):
        q1_sigma(random_data(torus, rng), random_data(sphere, rng))


def test_t_sigma_properties(surface, rng):
    mesh, caches, Pi = surface
    n0 = mesh.n(0)
    T = t_sigma_matrix(Pi, n0)
    assert np.linalg.norm(T @ T - T, 2) <= 1e-10
    W = phase_weights(mesh)
    # self-adjoint in the V_rho1 product
    assert np.linalg.norm(W[:, None] * T - (W[:, None] * T).T, 2) <= 1e-10
    for _ in range(20):
        g = random_gauge(mesh, rng)
        assert t_sigma(k_sigma(g), Pi).norm() <= 1e-10 * k_sigma(g).norm()
        f = _radiation(mesh, caches, Pi, rng)
        assert (t_sigma(f, Pi) - f).norm() <= 1e-10 * f.norm()
        f, h = random_data(mesh, rng), random_data(mesh, rng)
        assert abs(q1_sigma(f, t_sigma(h, Pi)) - q1_sigma(t_sigma(f, Pi), h)) <= 1e-10 * f.norm() * h.norm()
    with pytest.raises(MismatchError):
        t_sigma(random_data(mesh, rng), np.eye(3))


def test_t_sigma_differs_by_gauge(surface, rng):
    mesh, _, Pi = surface
    gr = GaugeRange(mesh)
    assert gr.rank == 2 * mesh.n(0) - 1
    for _ in range(20):
        f = random_constrained(mesh, rng, Pi)
        assert gr.relative_residual(t_sigma(f, Pi) - f, f) <= 1e-8
    # a generic vector is far from the gauge range
    assert gr.relative_residual(random_data(mesh, rng)) > 0.1


def test_random_constrained_satisfies_constraints(surface, rng):
    mesh, _, Pi = surface
    for _ in range(20):
        f = random_constrained(mesh, rng, Pi)
        assert k_sigma_dagger(f).norm() <= 1e-10 * f.norm()


def test_gauge_fix_radiation(torus, torus_caches, torus_Pi, rng):
    f = _radiation(torus, torus_caches, torus_Pi, rng)
    fixed, gauge = gauge_fix(f, torus_caches[0])
    assert gauge.norm() <= 1e-10 * f.norm()
    assert (fixed - f).norm() <= 1e-10 * f.norm()


def test_gauge_fix_pure_gauge(surface, rng):
    mesh, caches, _ = surface
    g = GaugeData(_mean_zero(random_cochain(mesh, 0, rng)), random_cochain(mesh, 0, rng))
    fixed, gauge = gauge_fix(k_sigma(g), caches[0])
    assert fixed.norm() <= 1e-9 * g.norm()
    assert (gauge - g).norm() <= 1e-9 * g.norm()
    # rk_inverse undoes R K on mean-zero data
    rk = GaugeData(k_sigma(g).a0, k_sigma(g).pi0)
    assert (rk_inverse(rk, caches[0]) - g).norm() <= 1e-9 * g.norm()


def test_gauge_fix_random(surface, rng):
    mesh, caches, Pi = surface
    for _ in range(10):
        f = random_constrained(mesh, rng, Pi)
        fixed, gauge = gauge_fix(f, caches[0])
        rep = check_constraints(fixed)
        assert rep.radiation_ok
        assert (fixed - t_sigma(f, Pi)).norm() <= 1e-9 * max(f.norm(), 1.0)
        m0 = mesh.star(0)
        assert abs(np.sum(m0 * gauge.a.values)) <= 1e-10 * norm_l2(gauge.a)


def test_gauge_fix_rejects_unconstrained(torus, torus_caches, rng):
    with pytest.raises(ConstraintViolationError) as exc:
        gauge_fix(random_data(torus, rng), torus_caches[0])
    assert exc.value.code == "constraint_violation"
    with pytest.raises(MissingCacheError):
        gauge_fix(MaxwellData.zeros(torus), torus_caches[1])


def test_check_constraints_examples(torus, torus_caches, torus_Pi, rng):
    f = _radiation(torus, torus_caches, torus_Pi, rng)
    rep = check_constraints(f)
    assert max(rep.lorenz_residual, rep.temporal_residual, rep.coulomb_residual) <= 1e-10 * f.norm()
    assert rep.radiation_ok
    a0 = random_cochain(torus, 0, rng)
    z0, z1 = zeros(torus, 0), zeros(torus, 1)
    rep = check_constraints(MaxwellData(a0, z0, z1, z1))
    assert rep.temporal_residual == norm_l2(a0)
    assert not rep.radiation_ok
    assert all(v >= 0 for v in rep.parts.values())
    csv = rep.to_report().to_csv()
    assert csv.splitlines()[0] == "name,statistic,threshold,pass"


def test_gauge_propagates(surface, rng):
    mesh, caches, Pi = surface
    f = _radiation(mesh, caches, Pi, rng)
    for t in (0.3, 1.7, 12.0):
        ft = evolve_maxwell(f, t, caches)
        rep = check_constraints(ft)
        assert rep.temporal_residual <= 1e-8 * f.norm()
        assert rep.coulomb_residual <= 1e-8 * f.norm()


def test_file_roundtrip(tmp_path, torus, rng):
    f = random_data(torus, rng)
    text = maxwell_to_text(f)
    assert [ln for ln in text.splitlines() if ln.startswith("[")] == ["[a0]", "[pi0]", "[aS]", "[piS]"]
    back = maxwell_from_text(text, torus)
    assert np.array_equal(back.to_vector(), f.to_vector())
    p = tmp_path / "f.maxwell"
    save_maxwell(f, p)
    assert np.array_equal(load_maxwell(p, torus).to_vector(), f.to_vector())
    with pytest.raises(MismatchError):
        maxwell_from_text(text.replace("[piS]", "[xx]"), torus)


def test_data_algebra(torus, rng):
    f, g = random_data(torus, rng), random_data(torus, rng)
    assert np.allclose((f + 2.0 * g - g).to_vector(), (f + g).to_vector())
    assert f.inner(g) == pytest.approx(sum(inner_l2(a, b) for a, b in zip(f.components, g.components)))
    assert (-f).norm() == pytest.approx(f.norm())
    with pytest.raises(MismatchError):
        MaxwellData(zeros(torus, 1), zeros(torus, 0), zeros(torus, 1), zeros(torus, 1))
    with pytest.raises(MismatchError):
        MaxwellData.from_vector(torus, np.zeros(5))


def test_delta_of_radiation_data(torus, torus_caches, torus_Pi, rng):
    f = _radiation(torus, torus_caches, torus_Pi, rng)
    assert norm_l2(delta(f.aS)) <= 1e-10 * norm_l2(f.aS)
