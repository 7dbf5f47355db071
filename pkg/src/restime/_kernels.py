"""Hot inner loops, compiled with numba when available.

Every kernel exists twice: a ``@njit`` loop version and a vectorised numpy
version with identical semantics.  The numba path is used unless the
environment variable ``RESTIME_NUMBA`` is set to ``0``/``false``/``off`` or
numba cannot be imported.  Both paths are exercised by the test-suite and
compared in ``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import os

import numpy as np

_OFF = {"0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("RESTIME_NUMBA", "1").lower() not in _OFF

# meter magnitudes below exp(-50) ~ 2e-22 are dropped; |G_n| <= 1 so the
# neglected sum is far below double-precision round-off of the result
_LOG_FLOOR = -50.0


def _maybe_inline(fn):
    # helpers called from compiled loops must be compiled themselves
    return numba.njit(inline="always")(fn) if NUMBA_AVAILABLE else fn


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# restricted path sum (symmetric-split dynamic programme)
# ---------------------------------------------------------------------------


def _pathsum_numpy(v, vh, m, i):
    a1 = np.zeros(m + 2, dtype=np.complex128)
    a2 = np.zeros(m + 2, dtype=np.complex128)
    a1[0] = vh[0, i]
    a2[0] = vh[1, i]
    for j in range(m):
        # project: the state-1 component collects one more residence step
        a1[1 : j + 2] = a1[0 : j + 1]
        a1[0] = 0.0
        w = v if j < m - 1 else vh
        s = slice(0, j + 2)
        n1 = w[0, 0] * a1[s] + w[0, 1] * a2[s]
        n2 = w[1, 0] * a1[s] + w[1, 1] * a2[s]
        a1[s] = n1
        a2[s] = n2
    out = np.empty((2, m + 1), dtype=np.complex128)
    out[0] = a1[: m + 1]
    out[1] = a2[: m + 1]
    return out


def _pathsum_loop(v, vh, m, i):
    a1 = np.zeros(m + 2, dtype=np.complex128)
    a2 = np.zeros(m + 2, dtype=np.complex128)
    a1[0] = vh[0, i]
    a2[0] = vh[1, i]
    for j in range(m):
        for k in range(j + 1, 0, -1):
            a1[k] = a1[k - 1]
        a1[0] = 0.0
        if j < m - 1:
            w00, w01, w10, w11 = v[0, 0], v[0, 1], v[1, 0], v[1, 1]
        else:
            w00, w01, w10, w11 = vh[0, 0], vh[0, 1], vh[1, 0], vh[1, 1]
        for k in range(j + 2):
            x1 = a1[k]
            x2 = a2[k]
            a1[k] = w00 * x1 + w01 * x2
            a2[k] = w10 * x1 + w11 * x2
    out = np.empty((2, m + 1), dtype=np.complex128)
    for k in range(m + 1):
        out[0, k] = a1[k]
        out[1, k] = a2[k]
    return out


def pathsum_bins(v: np.ndarray, vh: np.ndarray, m: int, i: int) -> np.ndarray:
    """Amplitude of every (final state, residence-step count) pair.

    The propagation is ``Vh P V P ... V P Vh`` applied to ``|i>``, where each
    ``P`` is a projection onto the computational basis that increments the
    residence counter when the state is ``1`` (index 0).  Returns an array of
    shape ``(2, m + 1)``: row = final state index, column = count ``k``.
    """
    v = np.ascontiguousarray(v, dtype=np.complex128)
    vh = np.ascontiguousarray(vh, dtype=np.complex128)
    fn = _pathsum_jit if USE_NUMBA else _pathsum_numpy
    return fn(v, vh, int(m), int(i))


# ---------------------------------------------------------------------------
# uniform-grid Fourier sum
# ---------------------------------------------------------------------------


def _fourier_numpy(lam0, dlam, coef, tau):
    out = np.empty(tau.size, dtype=np.complex128)
    k = np.arange(coef.size)
    chunk = max(1, 2_000_000 // max(coef.size, 1))
    for s in range(0, tau.size, chunk):
        t = tau[s : s + chunk]
        ph = np.exp(1j * np.outer(t, lam0 + dlam * k))
        out[s : s + chunk] = ph @ coef
    return out


def _fourier_loop(lam0, dlam, coef, tau):
    out = np.empty(tau.size, dtype=np.complex128)
    for j in range(tau.size):
        t = tau[j]
        # phase recurrence is re-seeded every block to bound drift
        acc = 0.0 + 0.0j
        for s in range(0, coef.size, 1024):
            z = np.exp(1j * (lam0 + dlam * s) * t)
            step = np.exp(1j * dlam * t)
            e = min(s + 1024, coef.size)
            for k in range(s, e):
                acc += coef[k] * z
                z *= step
        out[j] = acc
    return out


def fourier_sum(lam0: float, dlam: float, coef: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """``out[j] = sum_k coef[k] * exp(1j * (lam0 + k*dlam) * tau[j])``."""
    coef = np.ascontiguousarray(coef, dtype=np.complex128)
    tau = np.ascontiguousarray(tau, dtype=np.float64)
    fn = _fourier_jit if USE_NUMBA else _fourier_numpy
    return fn(float(lam0), float(dlam), coef, tau)


# ---------------------------------------------------------------------------
# meter projection: A_n = sum_k G_n(tau_k) * c_k
# ---------------------------------------------------------------------------
#
# |G_n(tau_k)| = exp(lead[n] + n * x[k] + mult[n] * y[k]); the sign of the
# real part comes from per-k sign flags raised to the parities of n and
# mult[n]; the overall (-i)^n phase is applied by the caller.


def _project_numpy(ns, lead, mult, x, y, sx, sy, c):
    out = np.empty(ns.size, dtype=np.complex128)
    chunk = max(1, 4_000_000 // max(x.size, 1))
    xs = np.where(np.isfinite(x), x, 0.0)
    zero_x = ~np.isfinite(x)
    for s in range(0, ns.size, chunk):
        n = ns[s : s + chunk].astype(np.float64)[:, None]
        mu = mult[s : s + chunk][:, None]
        ys = np.where(np.isfinite(y), y, 0.0)
        e = lead[s : s + chunk][:, None] + n * xs[None, :] + mu * ys[None, :]
        e = np.where(~np.isfinite(y)[None, :] & (mu > 0), -np.inf, e)
        # sin(theta)=0 column: only n=0 survives
        e = np.where(zero_x[None, :] & (n > 0), -np.inf, e)
        mag = np.exp(np.maximum(e, _LOG_FLOOR - 1.0))
        mag[e < _LOG_FLOOR] = 0.0
        sign = np.where((ns[s : s + chunk, None] % 2 == 1) & (sx[None, :] < 0), -1.0, 1.0)
        sign = sign * np.where((mu.astype(np.int64) % 2 == 1) & (sy[None, :] < 0), -1.0, 1.0)
        out[s : s + chunk] = (mag * sign) @ c
    return out


@_maybe_inline
def _log_mag(lead_a, n, mu, xk, yk):
    # 0 * log(0) terms are dropped: cos(theta) = 0 leaves only n = N alive
    e = lead_a
    if n > 0:
        if not np.isfinite(xk):
            return -np.inf
        e += n * xk
    if mu > 0:
        e += mu * yk
    return e


def _project_loop(ns, lead, mult, x, y, sx, sy, c):
    out = np.empty(ns.size, dtype=np.complex128)
    K = x.size
    # with no sign flips log|G_n| is concave along the grid, so the terms
    # above the floor form one window around the peak
    concave = True
    for k in range(K):
        if sx[k] < 0 or sy[k] < 0:
            concave = False
    for a in range(ns.size):
        n = ns[a]
        mu = mult[a]
        odd_n = n % 2 == 1
        odd_m = int(mu) % 2 == 1
        lo, hi = 0, K - 1
        if concave and K > 2:
            p, q = 0, K - 1
            while p < q:
                mid = (p + q) // 2
                if _log_mag(lead[a], n, mu, x[mid + 1], y[mid + 1]) > _log_mag(lead[a], n, mu, x[mid], y[mid]):
                    p = mid + 1
                else:
                    q = mid
            lo = p
            while lo > 0 and _log_mag(lead[a], n, mu, x[lo - 1], y[lo - 1]) >= _LOG_FLOOR:
                lo -= 1
            hi = p
            while hi < K - 1 and _log_mag(lead[a], n, mu, x[hi + 1], y[hi + 1]) >= _LOG_FLOOR:
                hi += 1
        acc = 0.0 + 0.0j
        for k in range(lo, hi + 1):
            e = _log_mag(lead[a], n, mu, x[k], y[k])
            if e < _LOG_FLOOR:
                continue
            g = np.exp(e)
            if odd_n and sx[k] < 0:
                g = -g
            if odd_m and sy[k] < 0:
                g = -g
            acc += g * c[k]
        out[a] = acc
    return out


def meter_project(ns, lead, mult, x, y, sx, sy, c) -> np.ndarray:
    """Contract real meter magnitudes (with signs) against complex weights."""
    args = (
        np.ascontiguousarray(ns, dtype=np.int64),
        np.ascontiguousarray(lead, dtype=np.float64),
        np.ascontiguousarray(mult, dtype=np.float64),
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(sx, dtype=np.float64),
        np.ascontiguousarray(sy, dtype=np.float64),
        np.ascontiguousarray(c, dtype=np.complex128),
    )
    fn = _project_jit if USE_NUMBA else _project_numpy
    return fn(*args)


if NUMBA_AVAILABLE:
    _pathsum_jit = numba.njit(cache=True)(_pathsum_loop)
    _fourier_jit = numba.njit(cache=True)(_fourier_loop)
    _project_jit = numba.njit(cache=True)(_project_loop)
else:  # pragma: no cover
    _pathsum_jit = _pathsum_numpy
    _fourier_jit = _fourier_numpy
    _project_jit = _project_numpy


def numpy_kernels():
    """The pure-numpy implementations, keyed by public kernel name."""
    return {
        "pathsum_bins": _pathsum_numpy,
        "fourier_sum": _fourier_numpy,
        "meter_project": _project_numpy,
    }


def loop_kernels():
    """The compiled (or plain-python if numba is absent) loop implementations."""
    return {
        "pathsum_bins": _pathsum_jit,
        "fourier_sum": _fourier_jit,
        "meter_project": _project_jit,
    }
