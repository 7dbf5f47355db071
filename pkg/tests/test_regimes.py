import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import j0

from restime.regimes import (
    RegimeWarning,
    WeakValueDivergence,
    classify,
    phi11_stationary,
    phi12_stationary,
    poisson_pn,
    poisson_table,
    stationary_envelope,
    w_medium,
    w_strong,
    w_zeno,
    weak_ratio,
    weak_value,
    weak_value_closed,
    zeno_pn,
)
from restime.respath import QubitSpec, phi_exact_density, phi_pathsum, phi_pathsum_all
from restime.timegrid import moment


def test_classify():
    T = 100.0
    assert classify(T, 0.005).regime == "weak"
    assert classify(T, 0.05).regime == "medium"
    assert classify(T, 2.0).regime == "strong"
    assert classify(T, 200.0).regime == "zeno"
    lo, hi = classify(T, 0.05).medium_window
    assert lo == 10.0 and hi == 100.0 and classify(T, 0.05).accuracy == 20.0


def test_stationary_at_centre():
    T = 100.0
    c = math.sqrt(2 / (math.pi * T))
    assert phi11_stationary(50.0, T) == pytest.approx(c * math.cos(T + math.pi / 4))
    assert phi12_stationary(50.0, T) == pytest.approx(-1j * c * math.sin(T + math.pi / 4))
    assert phi12_stationary(50.0, T, "sqrt") == pytest.approx(phi12_stationary(50.0, T))


def test_stationary_domain():
    with pytest.raises(ValueError):
        phi11_stationary(1.0, 100.0)
    with pytest.raises(ValueError):
        phi12_stationary(99.0, 100.0)
    with pytest.raises(ValueError):
        phi12_stationary(50.0, 100.0, "other")


def test_sqrt_envelope_suppression():
    T = 100.0
    tau = 0.02 * T
    r = 1 - 4 * 0.48**2
    plain = math.sqrt(2 / (math.pi * T)) * abs(math.sin(math.sqrt(r) * T + math.pi / 4))
    assert abs(phi12_stationary(tau, T, "sqrt")) / plain == pytest.approx(0.28, abs=1e-3)


def test_bessel_envelope_is_the_large_T_limit():
    # the default envelope follows -i J0; the sqrt one drifts away from the centre
    T = 100.0
    tau = np.linspace(0.2, 0.8, 601) * T
    ex = -1j * j0(2 * np.sqrt(tau * (T - tau)))
    env = stationary_envelope(2, 1, tau, T)
    assert np.max(np.abs(phi12_stationary(tau, T) - ex) / env) < 0.01
    assert np.max(np.abs(phi12_stationary(tau, T, "sqrt") - ex) / env) > 0.05


@pytest.mark.parametrize("f", [1, 2])
def test_stationary_against_pathsum_at_centre(f):
    T, M = 100.0, 20000
    d = phi_pathsum_all(QubitSpec(i=1), T, M)[f]
    exact = d.density[M // 2]
    approx = phi11_stationary(50.0, T) if f == 1 else phi12_stationary(50.0, T)
    assert abs(approx - exact) / abs(exact) < 0.10


def test_w_medium():
    T, a = 100.0, 0.1
    assert w_medium(1, 1, 50.0, T, a, warn=False) == pytest.approx(math.sqrt(2 / math.pi) * a * math.cos(T) ** 2)
    total = sum(quad(lambda t: w_medium(f, 1, t, T, a, warn=False), -np.inf, np.inf)[0] for f in (1, 2))
    assert total == pytest.approx(1.0, abs=1e-10)
    with pytest.warns(RegimeWarning):
        w_medium(1, 1, 50.0, T, 2.0)


def test_w_strong_scaling_and_nodes():
    T = 30.0
    phi = phi_pathsum(QubitSpec(i=1, f=2), T, 3000)
    tau = np.linspace(3, 27, 50)
    a = w_strong(2, 1, tau, T, 1.0, phi)
    b = w_strong(2, 1, tau, T, 2.0, phi)
    np.testing.assert_allclose(a, 2 * b)
    vals = np.array([0.0, 0.3j, 1.0])
    assert w_strong(2, 1, tau[:3], T, 1.0, vals)[0] == 0.0
    with pytest.raises(ValueError):
        w_strong(1, 1, tau, T, 1.0, phi)


def test_w_zeno():
    t = np.linspace(-1, 11, 2001)
    for i, c in ((1, 10.0), (2, 0.0)):
        w = w_zeno(i, t, 10.0, 5.0)
        assert t[np.argmax(w)] == pytest.approx(c, abs=0.01)
        assert np.trapezoid(w, t) == pytest.approx(1.0, abs=1e-6)


def test_poisson():
    n, p = poisson_table(2.0, 10.0)
    assert abs(p.sum() - 1) < 1e-10
    assert np.dot(n, p) == pytest.approx(400.0, rel=1e-8)
    assert poisson_pn(3, 0.5, 2.0) == pytest.approx(math.exp(-1) / 6)
    assert zeno_pn(2, 0, 2.0, 10.0) == 1.0 and zeno_pn(2, 5, 2.0, 10.0) == 0.0
    assert zeno_pn(1, 400, 2.0, 10.0) == pytest.approx(poisson_pn(400, 2.0, 10.0))


def test_weak_value_examples():
    assert weak_value(math.pi) == pytest.approx(math.pi / 2, abs=1e-7)
    assert weak_value(2 * math.pi) == pytest.approx(math.pi, abs=1e-7)
    with pytest.raises(WeakValueDivergence):
        weak_value(math.pi / 2)
    T = math.pi / 2 - 0.05
    assert abs(weak_value(T)) > T


@pytest.mark.parametrize("T", [0.7, 2.0, 4.0, 9.0])
def test_weak_value_closed_form(T):
    assert weak_value(T) == pytest.approx(weak_value_closed(T), rel=1e-8)
    assert weak_ratio(1e-3, T) == pytest.approx(1e-6 * weak_value_closed(T) ** 2, rel=1e-8)


@pytest.mark.parametrize("T", [1.0, 3.0, 7.0])
@pytest.mark.parametrize("f,i", [(1, 1), (2, 1), (2, 2)])
def test_weak_value_equals_normalised_first_moment(T, f, i):
    d = phi_pathsum_all(QubitSpec(i=i), T, 4000)[f]
    assert weak_value(T, f, i) == pytest.approx(moment(d, 1, normalized=True), rel=1e-2)


def test_weak_value_detuned_against_moment():
    T, eps = 3.0, 0.6
    d = phi_pathsum_all(QubitSpec(i=1, eps=eps), T, 4000)[1]
    assert weak_value(T, 1, 1, eps) == pytest.approx(moment(d, 1, normalized=True), rel=1e-2)


def test_stationary_envelope_matches_exact_magnitude_trend():
    T = 200.0
    tau = np.linspace(0.1, 0.9, 400) * T
    ex = np.abs(phi_exact_density(1, 1, tau, T))
    env = stationary_envelope(1, 1, tau, T)
    assert np.max(ex / env) == pytest.approx(1.0, abs=0.05)
