import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.linalg import expm

from restime import _kernels as K
from restime.meter import MeterConfig, magnitude_parts

RNG = np.random.default_rng(11)


def _pathsum_args(m=60, dt=0.05):
    h = np.array([[0.3, 1.0], [1.0, 0.0]])
    return expm(-1j * h * dt), expm(-0.5j * h * dt), m


def _fourier_args():
    coef = RNG.normal(size=700) + 1j * RNG.normal(size=700)
    return -3.0, 0.01, coef, np.linspace(0, 40, 130)


def _project_args(method):
    cfg = MeterConfig(10**4, 1.2)
    ns = np.arange(0, 90)
    tau = np.linspace(0, 8.0, 400)
    c = RNG.normal(size=400) + 1j * RNG.normal(size=400)
    return (ns, *magnitude_parts(ns, tau, cfg, method), c)


@pytest.mark.parametrize("i", [0, 1])
def test_pathsum_backends_agree(i):
    v, vh, m = _pathsum_args()
    a = K._pathsum_numpy(v, vh, m, i)
    b = K._pathsum_loop(v, vh, m, i)
    c = K.loop_kernels()["pathsum_bins"](v, vh, m, i)
    np.testing.assert_allclose(a, b, atol=1e-14)
    np.testing.assert_allclose(c, b, atol=1e-14)
    # summing over counts undoes the projections
    full = vh @ np.linalg.matrix_power(v, m - 1) @ vh
    np.testing.assert_allclose(a.sum(axis=1), full[:, i], atol=1e-12)


def test_fourier_backends_agree():
    args = _fourier_args()
    a = K._fourier_numpy(*args)
    b = K.loop_kernels()["fourier_sum"](*args)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("method", ["exact", "asymptotic"])
def test_project_backends_agree(method):
    args = _project_args(method)
    a = K._project_numpy(*args)
    b = K.loop_kernels()["meter_project"](*args)
    c = K._project_loop(*[np.ascontiguousarray(x) for x in args])
    scale = np.max(np.abs(a))
    assert np.max(np.abs(a - b)) < 1e-12 * scale
    assert np.max(np.abs(c - b)) < 1e-12 * scale


def test_project_handles_quarter_turn():
    # theta = pi/2 exactly: only n = N survives
    cfg = MeterConfig(6, 1.0)
    tau = np.array([np.pi / 2 * np.sqrt(6)])
    ns = np.arange(7)
    args = (ns, *magnitude_parts(ns, tau, cfg, "exact"), np.ones(1, dtype=complex))
    for fn in (K._project_numpy, K.loop_kernels()["meter_project"]):
        out = fn(*args)
        assert np.all(np.isfinite(out))
        assert abs(out[6]) == pytest.approx(1.0) and np.max(np.abs(out[:6])) < 1e-12


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, RESTIME_NUMBA="0")
    code = "from restime import _kernels as K; print(K.backend())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["RESTIME_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("numba" if K.NUMBA_AVAILABLE else "numpy")
