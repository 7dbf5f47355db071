import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from restime.respath import (
    ConvergenceWarning,
    QubitSpec,
    check_symmetries,
    phi_exact,
    phi_exact_density,
    phi_fourier,
    phi_fourier_at,
    phi_pathsum,
    phi_pathsum_all,
    u_elements,
    u_matrix,
)
from restime.timegrid import TimeGrid, integrate, moment


def _hq(lam):
    return np.array([[lam, 1.0], [1.0, 0.0]])


def test_spec_validation():
    with pytest.raises(ValueError):
        QubitSpec(i=3)
    with pytest.raises(ValueError):
        QubitSpec(eps=float("inf"))


def test_u_matrix_examples():
    np.testing.assert_allclose(u_matrix(0.0, math.pi).U, -np.eye(2), atol=1e-15)
    u = u_matrix(0.0, math.pi / 2)
    assert abs(u.U[0, 0]) < 1e-15 and u.U[0, 1] == pytest.approx(-1j)
    big = u_matrix(1e3, 1.0)
    assert abs(big.u11) < 1e-2 and abs(big.u22) < 1e-2


@given(st.floats(-50, 50), st.floats(0, 30))
def test_u_matrix_is_the_propagator(lam, T):
    np.testing.assert_allclose(u_matrix(lam, T).U, expm(-1j * T * _hq(lam)), atol=1e-11)


def test_unitarity_random_lambda():
    rng = np.random.default_rng(5)
    for lam in rng.normal(scale=30, size=1000):
        assert u_matrix(lam, 7.3).unitarity_defect() < 1e-12


def test_u_elements_vectorised():
    lam = np.linspace(-5, 5, 11)
    u11, u22, u12 = u_elements(lam, 2.0)
    for k, l in enumerate(lam):
        U = u_matrix(l, 2.0).U
        assert u11[k] == pytest.approx(U[0, 0]) and u22[k] == pytest.approx(U[1, 1]) and u12[k] == pytest.approx(U[0, 1])


def test_pathsum_requires_steps():
    with pytest.raises(ValueError):
        phi_pathsum(QubitSpec(), 1.0, 5)


def test_short_time_limit():
    d = phi_pathsum(QubitSpec(i=1, f=1), 1e-4, 10)
    assert abs(d.weight_at(1e-4) - 1.0) < 1e-7
    assert np.max(np.abs(d.density)) * 1e-4 < 1e-7


def test_offdiagonal_has_no_point_mass():
    w = []
    for M in (1000, 2000, 4000):
        d = phi_pathsum(QubitSpec(i=1, f=2), 5.0, M)
        w.append(max(abs(d.weight_at(0.0)), abs(d.weight_at(5.0))))
    assert w[0] > w[1] > w[2] and w[2] < 1e-3


@pytest.mark.parametrize("T", [1.0, 10.0, 100.0])
def test_sum_rules(T):
    ps = phi_pathsum_all(QubitSpec(i=1), T, 4000)
    assert integrate(ps[1]) == pytest.approx(math.cos(T), abs=1e-2)
    assert integrate(ps[2]) == pytest.approx(-1j * math.sin(T), abs=1e-2)
    assert abs(integrate(ps[1])) ** 2 + abs(integrate(ps[2])) ** 2 == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("f,i", [(1, 1), (2, 1), (1, 2), (2, 2)])
def test_pathsum_against_bessel_closed_form(f, i):
    T, M = 20.0, 4000
    d = phi_pathsum_all(QubitSpec(i=i), T, M)[f]
    ex = phi_exact(QubitSpec(i=i, f=f), TimeGrid(T, M))
    inner = slice(1, M)
    scale = np.max(np.abs(ex.density[inner]))
    assert np.max(np.abs(d.density[inner] - ex.density[inner])) < 2e-3 * scale
    fine = phi_pathsum_all(QubitSpec(i=i), T, 2 * M)[f]
    for loc in (0.0, T):
        err = abs(d.weight_at(loc) - ex.weight_at(loc))
        err2 = abs(fine.weight_at(loc) - ex.weight_at(loc))
        assert err < 2e-3
        assert err2 < err / 3 or err < 1e-5


def test_closed_form_endpoints():
    # phi11 -> -T at tau -> T, phi21 -> -i at both ends
    T = 3.0
    assert phi_exact_density(1, 1, T - 1e-9, T) == pytest.approx(-T, rel=1e-6)
    assert phi_exact_density(2, 1, 1e-12, T) == pytest.approx(-1j, rel=1e-9)


def test_pathsum_second_order_convergence():
    T = 10.0
    errs = []
    for M in (1000, 2000, 4000):
        d = phi_pathsum(QubitSpec(i=1, f=2), T, M)
        k = np.arange(M // 10, M - M // 10 + 1, M // 10)
        errs.append(np.max(np.abs(d.density[k] - phi_exact_density(2, 1, d.tau[k], T))))
    # decreasing at least as 1/M
    assert errs[0] / errs[1] > 1.9 and errs[1] / errs[2] > 1.9


def test_fourier_against_pathsum():
    T, M = 20.0, 4000
    ps = phi_pathsum_all(QubitSpec(i=1), T, M)
    inner = slice(1, M)
    for f in (1, 2):
        fo = phi_fourier(QubitSpec(i=1, f=f), TimeGrid(T, M), lam_max=200.0)
        scale = np.max(np.abs(ps[f].density[inner]))
        assert np.max(np.abs(fo.density[inner] - ps[f].density[inner])) < 0.02 * scale


def test_fourier_point_masses_and_offdiagonal_symmetry():
    g = TimeGrid(8.0, 800)
    assert phi_fourier(QubitSpec(i=1, f=1), g).weight_at(8.0) == 1.0
    assert phi_fourier(QubitSpec(i=2, f=2), g).weight_at(0.0) == 1.0
    a = phi_fourier(QubitSpec(i=1, f=2), g)
    b = phi_fourier(QubitSpec(i=2, f=1), g)
    assert not a.singular
    np.testing.assert_allclose(a.density, b.density, atol=1e-12)


def test_fourier_detuned_point_mass():
    d = phi_fourier(QubitSpec(i=1, f=1, eps=0.4), TimeGrid(3.0, 300))
    assert d.weight_at(3.0) == pytest.approx(np.exp(-1.2j))


def test_fourier_validation_and_convergence_flag():
    g = TimeGrid(5.0, 500)
    with pytest.raises(ValueError):
        phi_fourier(QubitSpec(), g, lam_max=-1)
    with pytest.raises(ValueError):
        phi_fourier(QubitSpec(), g, K=100)
    with pytest.warns(ConvergenceWarning):
        d = phi_fourier(QubitSpec(), g, lam_max=5.0, check=1e-6)
    assert d.meta["converged"] is False
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        d = phi_fourier(QubitSpec(), g, lam_max=200.0, check=0.05)
    assert d.meta["converged"] is True


def test_fourier_pointwise_matches_grid():
    g = TimeGrid(6.0, 60)
    spec = QubitSpec(i=1, f=2, eps=0.3)
    np.testing.assert_allclose(phi_fourier_at(spec, g.tau[1:-1], 6.0), phi_fourier(spec, g).density[1:-1], atol=1e-13)


@pytest.mark.parametrize("eps", [0.7, -1.3])
def test_detuning_cross_method(eps):
    T, M = 10.0, 4000
    for i in (1, 2):
        ps = phi_pathsum_all(QubitSpec(i=i, eps=eps), T, M)
        for f in (1, 2):
            fo = phi_fourier(QubitSpec(i=i, f=f, eps=eps), TimeGrid(T, M))
            inner = slice(1, M)
            scale = np.max(np.abs(ps[f].density[inner]))
            assert np.max(np.abs(ps[f].density[inner] - fo.density[inner])) < 2e-3 * scale
            # the detuned sum rule picks up the full propagator
            assert integrate(ps[f]) == pytest.approx(u_matrix(eps, T).element(f, i), abs=1e-6)


@pytest.mark.parametrize("T", [10.0, 100.0])
def test_symmetries(T):
    rep = check_symmetries(T, 1e-3, 2000)
    assert rep.passed
    # the symmetric split keeps both identities exact on the grid
    assert rep.max_deviation < 1e-12
    assert check_symmetries(T, 1e-3, 4000).max_deviation < 1e-12


def test_symmetries_fourier_route():
    assert check_symmetries(10.0, 1e-3, 1000, method="fourier").passed


def test_symmetries_short_time():
    rep = check_symmetries(1e-6, 1e-12, 10)
    assert rep.passed


@pytest.mark.parametrize("T", [1.0, 3.0, 7.0, 2.0 * math.pi, 12.0])
def test_first_moment_identity(T):
    d = phi_pathsum(QubitSpec(i=1, f=1), T, 4000)
    assert moment(d, 1, normalized=True) == pytest.approx(T / 2 + math.tan(T) / 2, rel=1e-2)
