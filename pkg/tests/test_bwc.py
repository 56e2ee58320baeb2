import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from centralconfig import bwc
from centralconfig.core import (
    CentralConfiguration,
    DegenerateError,
    DimensionError,
    IntegrityError,
    MassVector,
    PlanarConfiguration,
    SingularDistanceError,
    mass_inner_product,
)

from conftest import random_points


def triangle():
    return PlanarConfiguration([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])


# --- construction ------------------------------------------------------------


def test_two_body_matrix():
    m = MassVector([2.0, 3.0])
    r = 1.7
    z = bwc.build_bwc(m, PlanarConfiguration([[0, 0], [r, 0]])).entries
    expect = np.array([[3.0, -2.0], [-3.0, 2.0]]) / r**3
    assert np.allclose(z, expect, rtol=1e-14)


def test_equilateral_matrix():
    z = bwc.build_bwc(MassVector(np.ones(3)), triangle()).entries
    assert np.allclose(z, [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]], rtol=1e-14)


def test_coincident_points_raise():
    with pytest.raises(SingularDistanceError):
        bwc.build_bwc(MassVector(np.ones(3)), PlanarConfiguration([[0, 0], [0, 0], [1, 1]]))


def test_size_mismatch():
    with pytest.raises(DimensionError):
        bwc.build_bwc(MassVector(np.ones(4)), triangle())


def test_pentagon_column_sums_and_symmetry(pentagon):
    z = bwc.build_bwc(pentagon.masses, pentagon.configuration).entries
    assert np.all(np.abs(np.ones(5) @ z) <= 1e-14 * np.abs(z).max())
    zm = z * pentagon.masses.values[None, :]
    assert np.allclose(zm, zm.T, atol=1e-14 * np.abs(zm).max())


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_structure_random(n, seed):
    rng = np.random.default_rng(seed)
    m = MassVector(rng.uniform(0.1, 10, n))
    c = PlanarConfiguration(random_points(rng, n))
    for build in (bwc.build_bwc, bwc.build_shifted_bwc):
        z = build(m, c).entries
        scale = np.abs(z).max()
        assert np.all(np.abs(z.sum(axis=0)) <= 1e-12 * scale * n)
        zm = z * m.values[None, :]
        assert np.allclose(zm, zm.T, rtol=1e-12, atol=1e-12 * scale * m.values.max())
        # row-mass convention off the diagonal
        coef = c.distances.s if build is bwc.build_bwc else c.distances.s_shifted
        i, j = 0, 1
        assert z[i, j] == pytest.approx(-m.values[i] * coef[i, j], rel=1e-14)
        # action and reaction: Z mu U^t = 0
        assert np.all(np.abs(zm @ np.ones(n)) <= 1e-12 * scale * m.values.max() * n)


def test_shifted_examples(square_center):
    z = bwc.build_shifted_bwc(MassVector(np.ones(3)), triangle()).entries
    assert np.all(np.abs(z) < 1e-14)
    z2 = bwc.build_shifted_bwc(MassVector([1.0, 4.0]), PlanarConfiguration([[0, 0], [1, 0]])).entries
    assert np.all(z2 == 0.0)
    zs = bwc.build_shifted_bwc(square_center.masses, square_center.configuration).entries
    sv = np.linalg.svd(zs, compute_uv=False)
    assert np.sum(sv > 1e-9 * sv[0]) == 2


def test_shifted_equals_plain_minus_translation(solved):
    for res in solved[:30]:
        cc = res.cc
        z = bwc.build_bwc(cc.masses, cc.configuration).entries
        zs = bwc.build_shifted_bwc(cc.masses, cc.configuration).entries
        eye = bwc.TranslationMatrix(cc.masses).dense()
        assert np.allclose(zs, z - cc.masses.total * eye, atol=1e-12 * np.abs(z).max())


def test_translation_matrix_recentres():
    m = MassVector([1.0, 2.0, 3.0, 4.0])
    x = np.array([0.3, -1.0, 2.0, 5.0])
    tm = bwc.TranslationMatrix(m)
    assert m.values @ tm.apply(x) == pytest.approx(0.0, abs=1e-13)
    assert np.allclose(tm.apply(x), x @ tm.dense())


# --- eigen solver ----------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_jacobi_matches_numpy(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    a = a + a.T
    w, v = bwc.jacobi_eigh(a)
    ref = np.linalg.eigvalsh(a)
    scale = max(np.abs(ref).max(), 1.0)
    assert np.allclose(w, ref, atol=1e-12 * scale)
    assert np.allclose(v.T @ v, np.eye(n), atol=1e-12)
    assert np.allclose(a @ v, v * w, atol=1e-11 * scale)


def test_jacobi_repeated_eigenvalues():
    q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(5, 5)))
    a = q @ np.diag([1.0, 1.0, 1.0, 4.0, 4.0]) @ q.T
    w, _ = bwc.jacobi_eigh(a)
    assert np.allclose(w, [1, 1, 1, 4, 4], atol=1e-13)


def test_asymmetric_input_is_an_integrity_error():
    z = bwc.BwcMatrix(np.array([[1.0, -2.0], [-1.0, 2.0]]))
    with pytest.raises(IntegrityError):
        bwc.spectrum(MassVector([1.0, 1.0]), z)


def test_shifted_spectrum_of_non_central_configuration_is_rejected():
    rng = np.random.default_rng(4)
    c = PlanarConfiguration(random_points(rng, 5))
    m = MassVector(np.ones(5))
    with pytest.raises(IntegrityError):
        bwc.spectrum(m, bwc.build_shifted_bwc(m, c))


# --- spectra -----------------------------------------------------------------------


def test_equilateral_spectrum():
    rep = bwc.spectrum(MassVector(np.ones(3)), bwc.build_bwc(MassVector(np.ones(3)), triangle()))
    assert np.allclose(rep.eigenvalues, [0, 3, 3], atol=1e-12)


def test_two_body_spectrum():
    m = MassVector([1.5, 2.5])
    r = 0.8
    rep = bwc.spectrum(m, bwc.build_bwc(m, PlanarConfiguration([[0, 0], [0, r]])))
    assert np.allclose(rep.eigenvalues, [0, 4.0 / r**3], atol=1e-13)


def test_pentagon_spectrum(pentagon):
    rep = bwc.full_spectrum(pentagon)
    z = bwc.build_bwc(pentagon.masses, pentagon.configuration).entries
    ref = np.sort(np.linalg.eigvals(z).real)
    assert np.allclose(rep.eigenvalues, ref, atol=1e-10)
    assert rep.nu1 > 0
    assert rep.nu1 == pytest.approx(rep.nu2, rel=1e-9)
    expect = np.sort([0, 5, 5, 5 + rep.nu1, 5 + rep.nu2])
    assert np.allclose(rep.eigenvalues, expect, atol=1e-9)


def test_eigenvalue_multiset_on_solutions(solved):
    for res in solved:
        cc = res.cc
        rep = bwc.full_spectrum(cc)
        M = cc.masses.total
        expect = np.sort([0.0, M, M, M + rep.nu1, M + rep.nu2])
        assert np.all(np.abs(rep.eigenvalues - expect) <= 1e-8 * M)


def test_rank_two_decomposition(solved):
    for res in solved[:60]:
        cc = res.cc
        m = cc.masses
        z = bwc.build_shifted_bwc(m, cc.configuration)
        rep = bwc.spectrum(m, z)
        zm = z.entries * m.values[None, :]
        rebuilt = rep.nu1 * np.outer(rep.phi, rep.phi) + rep.nu2 * np.outer(rep.psi, rep.psi)
        assert np.linalg.norm(rebuilt - zm) <= 1e-9 * np.linalg.norm(zm)
        assert mass_inner_product(rep.phi, rep.phi, m) == pytest.approx(1.0, abs=1e-10)
        assert mass_inner_product(rep.psi, rep.psi, m) == pytest.approx(1.0, abs=1e-10)
        assert mass_inner_product(rep.phi, rep.psi, m) == pytest.approx(0.0, abs=1e-10)
        scale = cc.configuration.scale
        for cov in (rep.phi, rep.psi):
            assert abs(cov.sum()) <= 1e-9
            assert abs(cov @ cc.configuration.x) <= 1e-9 * scale
            assert abs(cov @ cc.configuration.y) <= 1e-9 * scale


def test_spectrum_is_psd_with_zero_bottom(solved, moulton):
    for res in list(solved[:50]) + list(moulton):
        z = bwc.build_bwc(res.cc.masses, res.cc.configuration)
        w = bwc.spectrum(res.cc.masses, z).eigenvalues
        nrm = z.norm()
        assert w[0] >= -1e-10 * nrm
        assert abs(w[0]) <= 1e-10 * nrm


def test_trace_identity(solved):
    for res in solved[:50]:
        z = bwc.build_bwc(res.cc.masses, res.cc.configuration)
        w = bwc.spectrum(res.cc.masses, z).eigenvalues
        assert w.sum() == pytest.approx(np.trace(z.entries), rel=1e-12)


def test_mass_scaling_covariance(solved):
    for res in solved[:20]:
        cc = res.cc
        c = 3.7
        w = bwc.spectrum(cc.masses, bwc.build_bwc(cc.masses, cc.configuration)).eigenvalues
        m2 = cc.masses.scaled(c)
        w2 = bwc.spectrum(m2, bwc.build_bwc(m2, cc.configuration)).eigenvalues
        assert np.allclose(w2, c * w, atol=1e-12 * c * w.max())


# --- areas from covectors ------------------------------------------------------------


def test_lemma1_on_solutions(solved):
    for res in solved:
        rep = bwc.full_spectrum(res.cc)
        resid, a = bwc.lemma1_check(res.cc, rep)
        assert resid < 1e-8
        assert abs(a) == pytest.approx(bwc.lemma1_factor(res.cc), rel=1e-14)


def test_lemma1_rotation_and_sign_of_covectors(solved):
    res = solved[0]
    rep = bwc.full_spectrum(res.cc)
    base, a = bwc.lemma1_check(res.cc, rep)
    t = 0.7
    rot = bwc.SpectralReport(
        rep.eigenvalues, rep.nu1, rep.nu2,
        np.cos(t) * rep.phi + np.sin(t) * rep.psi,
        -np.sin(t) * rep.phi + np.cos(t) * rep.psi,
    )  # fmt: skip
    r2, a2 = bwc.lemma1_check(res.cc, rot)
    assert abs(r2 - base) < 1e-10 and a2 == a
    flip = bwc.SpectralReport(rep.eigenvalues, rep.nu1, rep.nu2, rep.phi, -rep.psi)
    r3, a3 = bwc.lemma1_check(res.cc, flip)
    assert abs(r3 - base) < 1e-10 and a3 == -a


def test_lemma1_rejects_collinear(moulton):
    cc = next(r.cc for r in moulton if r.cc.n == 5)
    rep = bwc.SpectralReport(np.zeros(5), 1.0, 1.0, np.ones(5), np.ones(5))
    with pytest.raises(DegenerateError):
        bwc.lemma1_check(cc, rep)


# --- eigenvalue inequalities --------------------------------------------------------------


def test_conley_margin_on_collinear(moulton):
    for res in moulton:
        cc = res.cc
        w = bwc.spectrum(cc.masses, bwc.build_bwc(cc.masses, cc.configuration)).eigenvalues
        assert bwc.conley_margin(w, cc.lam) > 1e-8 * cc.lam


def test_pacella_moeckel(solved, moulton):
    for res in list(solved) + list(moulton):
        cc = res.cc
        w = bwc.spectrum(cc.masses, bwc.build_bwc(cc.masses, cc.configuration)).eigenvalues
        assert bwc.pacella_moeckel_margin(w, cc.lam) > 1e-8 * cc.lam


def test_pacella_moeckel_equality_for_equilateral():
    m = MassVector(np.ones(3))
    w = bwc.spectrum(m, bwc.build_bwc(m, triangle())).eigenvalues
    assert abs(bwc.pacella_moeckel_margin(w, 3.0)) <= 1e-12
