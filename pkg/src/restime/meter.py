"""BEC meter amplitudes ``G_n(tau)`` for ``n`` atoms tunnelled after exposure ``tau``.

The condensate holds ``N`` non-interacting atoms, all in the left well at
``t = 0``.  While the gate is open the single-atom hopping rate is
``dOmega = alpha / sqrt(N)``; the background rate is zero.  Each atom then
rotates independently, ``|L> -> cos(theta)|L> - i sin(theta)|R>`` with
``theta = dOmega * tau``, so

    G_n(tau) = sqrt(C(N, n)) cos(theta)**(N - n) (-i sin(theta))**n.

The large-N limit at fixed ``alpha`` is
``(-i)**n (alpha tau)**n exp(-alpha**2 tau**2 / 2) / sqrt(n!)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.special import gammaln
from scipy.stats import binom, poisson

#: |G_n| drops to 1/e of its peak this many multiples of 1/alpha from tau_n
QUANTUM_WIDTH_FACTOR = 1.0
#: |G_n|**2 drops to 1/e of its peak this many multiples of 1/alpha from tau_n
CLASSICAL_WIDTH_FACTOR = 1.0 / math.sqrt(2.0)

#: dOmega * T above this leaves the linear single-atom regime
SCALING_WARN_THRESHOLD = 0.1


class MeterScalingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class MeterConfig:
    N: int
    alpha: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def dOmega(self) -> float:
        return self.alpha / math.sqrt(self.N)

    @property
    def Omega(self) -> float:
        return 0.0

    def check_scaling(self, T: float) -> bool:
        """Warn (and return False) if ``dOmega * T`` is not small."""
        if self.dOmega * T > SCALING_WARN_THRESHOLD:
            warnings.warn(
                f"dOmega*T = {self.dOmega * T:.3g} > {SCALING_WARN_THRESHOLD}: "
                "outside the large-N scaling regime",
                MeterScalingWarning,
                stacklevel=2,
            )
            return False
        return True

    @classmethod
    def for_regime(cls, alpha: float, T: float, rotation: float = 0.01, min_N: int = 10**6) -> "MeterConfig":
        """Smallest N (at least ``min_N``) with ``dOmega * T <= rotation``."""
        return cls(max(min_N, math.ceil((alpha * T / rotation) ** 2)), alpha)


def tau_n(n, alpha: float):
    """Exposure after which ``n`` atoms have tunnelled on average."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return np.sqrt(n) / alpha


def quantum_accuracy(alpha: float) -> float:
    return QUANTUM_WIDTH_FACTOR / alpha


def classical_accuracy_width(alpha: float) -> float:
    return CLASSICAL_WIDTH_FACTOR / alpha


def log_binom(N: int, ns) -> np.ndarray:
    """``log C(N, n)`` accurate for ``N`` up to ~1e12 (no gamma-function cancellation)."""
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size == 0:
        return np.zeros(0)
    if ns.min() < 0 or ns.max() > N:
        raise ValueError(f"n must lie in 0..{N}")
    top = int(ns.max())
    s = np.concatenate([[0.0], np.cumsum(np.log1p(-np.arange(top) / N))])
    return ns * math.log(N) - gammaln(ns + 1) + s[ns]


def _phase(ns) -> np.ndarray:
    return np.array([1, -1j, -1, 1j])[np.asarray(ns) % 4]


def magnitude_parts(ns, tau, cfg: MeterConfig, method: str = "exact"):
    """Pieces of ``log|G_n(tau_k)| = lead[n] + n x[k] + mult[n] y[k]`` plus signs.

    Returns ``(lead, mult, x, y, sx, sy)``.  ``sx``/``sy`` are signs raised to
    the parity of ``n``/``mult`` by the consumer; the ``(-i)**n`` phase is not
    included.
    """
    ns = np.asarray(ns, dtype=np.int64)
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(tau < 0):
        raise ValueError("exposure times must be nonnegative")
    if method == "exact":
        if np.any(ns > cfg.N):
            raise ValueError(f"n exceeds N={cfg.N}")
        th = cfg.dOmega * tau
        s = np.sin(th)
        with np.errstate(divide="ignore"):
            x = np.log(np.abs(s))
            y = 0.5 * np.log1p(-(s * s))
        sx = np.where(s < 0, -1.0, 1.0)
        sy = np.where(np.cos(th) < 0, -1.0, 1.0)
        lead = 0.5 * log_binom(cfg.N, ns)
        mult = (cfg.N - ns).astype(np.float64)
    elif method == "asymptotic":
        with np.errstate(divide="ignore"):
            x = np.log(cfg.alpha * tau)
        y = -0.5 * (cfg.alpha * tau) ** 2
        sx = np.ones_like(tau)
        sy = np.ones_like(tau)
        lead = -0.5 * gammaln(ns + 1)
        mult = np.ones(ns.shape)
    else:
        raise ValueError(f"unknown meter method {method!r}")
    return lead, mult, x, y, sx, sy


def _evaluate(ns, tau, cfg, method):
    ns = np.asarray(ns, dtype=np.int64)
    tau = np.asarray(tau, dtype=np.float64)
    lead, mult, x, y, sx, sy = magnitude_parts(np.atleast_1d(ns).ravel(), np.atleast_1d(tau).ravel(), cfg, method)
    nb = np.atleast_1d(ns).ravel()[:, None]
    with np.errstate(invalid="ignore"):
        e = (lead[:, None] + np.where(nb > 0, nb * x[None, :], 0.0)
             + np.where(mult[:, None] > 0, mult[:, None] * y[None, :], 0.0))
    if method == "exact":
        # the pmf is evaluated without the O(N) cancellation of the log split
        s2 = np.sin(cfg.dOmega * np.atleast_1d(tau).ravel()) ** 2
        mag = np.sqrt(binom.pmf(nb, cfg.N, s2[None, :]))
    else:
        mag = np.exp(e)
    sign = np.where((nb % 2 == 1) & (sx[None, :] < 0), -1.0, 1.0)
    sign *= np.where((mult[:, None].astype(np.int64) % 2 == 1) & (sy[None, :] < 0), -1.0, 1.0)
    return mag * sign * _phase(nb)


def g_exact(n, tau, cfg: MeterConfig):
    """Exact finite-N amplitude; broadcasts over ``n`` (rows) and ``tau`` (columns)."""
    out = _evaluate(n, tau, cfg, "exact")
    return _squeeze(out, n, tau)


def g_asymptotic(n, tau, alpha: float, gaussian: bool = False):
    """Large-N amplitude.

    With ``gaussian=True`` the large-n form
    ``(2 pi n)**(-1/4) exp(-alpha**2 (tau - tau_n)**2)`` is returned instead
    (``n >= 1`` only).  Both carry the ``(-i)**n`` phase of :func:`g_exact`.
    """
    cfg = MeterConfig(1, alpha)
    if gaussian:
        nn = np.atleast_1d(np.asarray(n)).ravel()[:, None]
        if np.any(nn < 1):
            raise ValueError("the Gaussian form needs n >= 1")
        tt = np.atleast_1d(np.asarray(tau, dtype=float)).ravel()[None, :]
        out = (2 * np.pi * nn) ** -0.25 * np.exp(-((alpha * tt - np.sqrt(nn)) ** 2)) * _phase(nn)
    else:
        out = _evaluate(n, tau, cfg, "asymptotic")
    return _squeeze(out, n, tau)


def _squeeze(out, n, tau):
    if np.ndim(n) == 0 and np.ndim(tau) == 0:
        return complex(out[0, 0])
    if np.ndim(n) == 0:
        return out[0]
    if np.ndim(tau) == 0:
        return out[:, 0]
    return out


def n_cutoff(cfg: MeterConfig, T: float, method: str = "exact", tail: float = 1e-12) -> int:
    """Largest atom count with non-negligible weight for exposures up to ``T``.

    ``|G_n(tau)|**2`` is a binomial (Poisson in the large-N limit) law in
    ``n`` whose upper tail grows with ``tau``; the tail at ``tau = T``
    bounds all shorter exposures.
    """
    if method == "exact":
        p = math.sin(min(cfg.dOmega * T, math.pi / 2)) ** 2
        return int(min(cfg.N, binom.isf(tail, cfg.N, p) + 2))
    mu = (cfg.alpha * T) ** 2
    return int(poisson.isf(tail, mu) + 2)


def hopping_matrix(N: int) -> sparse.csr_matrix:
    """``c_L^+ c_R + c_R^+ c_L`` on ``N`` bosons, basis ``|n>`` = n atoms on the right."""
    n = np.arange(N)
    off = np.sqrt((n + 1.0) * (N - n))
    return sparse.diags([off, off], [-1, 1], shape=(N + 1, N + 1), format="csr")
