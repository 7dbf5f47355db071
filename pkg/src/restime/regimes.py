"""Closed-form regime formulas for the measured residence-time statistics.

Coupling ``alpha`` sets the meter's quantum accuracy ``1/alpha``.  From coarse
to fine the regimes are

* weak:   ``1/alpha > T``; only the first moments of ``Phi`` are read,
* medium: ``sqrt(T) < 1/alpha <= T``; Gaussian centred at ``T/2``,
* strong: ``1/alpha <= sqrt(T)``; density follows ``|Phi|**2 / alpha``,
* zeno:   ``1/alpha <= 1/T``; the never-switching path dominates.

The zeno boundary is where the Gaussian kernel becomes narrower than the
``~1/T`` region near ``tau = T`` over which the smooth part of ``Phi11``
cancels its point mass.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .respath import u_elements
from .timegrid import AmplitudeDistribution

XI_MAX = 0.48

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class RegimeWarning(UserWarning):
    pass


class WeakValueDivergence(ArithmeticError):
    """The post-selected amplitude vanishes, so the weak value is undefined."""


@dataclass(frozen=True)
class RegimeParams:
    T: float
    alpha: float
    regime: str

    @property
    def accuracy(self) -> float:
        return 1.0 / self.alpha

    @property
    def medium_window(self) -> tuple[float, float]:
        return math.sqrt(self.T), self.T


def classify(T: float, alpha: float) -> RegimeParams:
    acc = 1.0 / alpha
    if acc > T:
        tag = "weak"
    elif acc > math.sqrt(T):
        tag = "medium"
    elif acc > 1.0 / T:
        tag = "strong"
    else:
        tag = "zeno"
    return RegimeParams(T, alpha, tag)


def _warn_regime(T, alpha, expected):
    got = classify(T, alpha).regime
    if got not in expected:
        warnings.warn(f"T={T}, alpha={alpha} is in the {got} regime, not {'/'.join(expected)}",
                      RegimeWarning, stacklevel=3)


def _xi(tau, T):
    xi = np.asarray(tau, dtype=float) / T - 0.5
    if np.any(np.abs(xi) > XI_MAX + 1e-12):
        raise ValueError(f"stationary-phase forms are only exposed for |tau/T - 1/2| <= {XI_MAX}")
    return xi


def phi11_stationary(tau, T: float):
    """Large-T asymptote of the smooth part of ``Phi^{1<-1}``."""
    xi = _xi(tau, T)
    env = math.sqrt(2 / (math.pi * T)) * (1 + 2 * xi) ** 0.25 * (1 - 2 * xi) ** -0.75
    out = env * np.cos(np.sqrt(1 - 4 * xi**2) * T + math.pi / 4)
    return out.astype(np.complex128) if np.ndim(out) else complex(out)


def phi12_stationary(tau, T: float, prefactor: str = "bessel"):
    """Large-T asymptote of ``Phi^{1<-2} = Phi^{2<-1}``.

    ``prefactor="bessel"`` uses the envelope ``(1 - 4 xi**2)**(-1/4)``, which
    is the large-argument limit of ``-i J0(T sqrt(1 - 4 xi**2))``.
    ``prefactor="sqrt"`` uses ``(1 - 4 xi**2)**(1/2)``; the two coincide
    at ``xi = 0`` only.
    """
    xi = _xi(tau, T)
    r = 1 - 4 * xi**2
    if prefactor == "bessel":
        env = r**-0.25
    elif prefactor == "sqrt":
        env = r**0.5
    else:
        raise ValueError(f"unknown prefactor {prefactor!r}")
    out = -1j * math.sqrt(2 / (math.pi * T)) * env * np.sin(np.sqrt(r) * T + math.pi / 4)
    return out if np.ndim(out) else complex(out)


def stationary_envelope(f: int, i: int, tau, T: float):
    """Magnitude envelope of the asymptotic forms (used for relative comparisons)."""
    xi = _xi(tau, T)
    if f == i:
        x = xi if f == 1 else -xi
        return math.sqrt(2 / (math.pi * T)) * (1 + 2 * x) ** 0.25 * (1 - 2 * x) ** -0.75
    return math.sqrt(2 / (math.pi * T)) * (1 - 4 * xi**2) ** -0.25


def w_medium(f: int, i: int, tau, T: float, alpha: float, warn: bool = True):
    """Gaussian measured-time density centred at ``T/2``."""
    if warn:
        _warn_regime(T, alpha, ("medium",))
    weight = math.cos(T) ** 2 if f == i else math.sin(T) ** 2
    tau = np.asarray(tau, dtype=float)
    return SQRT_2_OVER_PI * alpha * weight * np.exp(-2 * alpha**2 * (tau - T / 2) ** 2)


def w_strong(f: int, i: int, tau, T: float, alpha: float, phi) -> np.ndarray:
    """``sqrt(2 pi) / alpha * |Phi(tau)|**2`` for ``0 < tau < T``.

    ``phi`` is an :class:`AmplitudeDistribution` (its smooth part is
    interpolated at ``tau``) or the already-evaluated values.  ``f`` and ``i``
    label the distribution and are only checked against ``phi.meta``.
    """
    tau = np.asarray(tau, dtype=float)
    if isinstance(phi, AmplitudeDistribution):
        for key, val in (("f", f), ("i", i)):
            if key in phi.meta and phi.meta[key] != val:
                raise ValueError(f"distribution has {key}={phi.meta[key]}, expected {val}")
        vals = np.interp(tau, phi.tau, phi.density.real) + 1j * np.interp(tau, phi.tau, phi.density.imag)
    else:
        vals = np.asarray(phi)
    return math.sqrt(2 * math.pi) / alpha * np.abs(vals) ** 2


def w_zeno(i: int, tau, T: float, alpha: float) -> np.ndarray:
    """Narrow Gaussian at ``tau = T`` (``i = 1``) or ``tau = 0`` (``i = 2``)."""
    tau = np.asarray(tau, dtype=float)
    centre = T if i == 1 else 0.0
    return SQRT_2_OVER_PI * alpha * np.exp(-2 * alpha**2 * (tau - centre) ** 2)


def poisson_pn(n, alpha: float, T: float):
    """``(alpha T)**(2n) exp(-(alpha T)**2) / n!``."""
    return poisson.pmf(n, (alpha * T) ** 2)


def poisson_table(alpha: float, T: float, tol: float = 1e-10):
    """``(n, P_n)`` truncated once the missing mass is below ``tol``."""
    mu = (alpha * T) ** 2
    n_hi = int(poisson.isf(tol / 2, mu)) + 1
    n = np.arange(n_hi + 1)
    return n, poisson.pmf(n, mu)


def zeno_pn(i: int, n, alpha: float, T: float):
    """Atom-count law once the qubit is frozen in its initial state."""
    n = np.asarray(n)
    if i == 1:
        return poisson_pn(n, alpha, T)
    return np.where(n == 0, 1.0, 0.0)


def _u_fi(f, i, lam, T):
    u11, u22, u12 = u_elements(lam, T)
    if f == i:
        return u11 if f == 1 else u22
    return u12


def weak_value(T: float, f: int = 1, i: int = 1, eps: float = 0.0, h: float = 1e-5,
               div_tol: float = 1e-8) -> complex:
    """First weak moment ``int tau Phi / int Phi`` via ``i d/dlam log U_fi`` at ``lam = eps``.

    Central differences at steps ``h`` and ``h/2``, Richardson-combined.
    Raises :class:`WeakValueDivergence` when ``|U_fi(T, eps)| < div_tol``.
    """
    u0 = complex(_u_fi(f, i, eps, T))
    if abs(u0) < div_tol:
        raise WeakValueDivergence(f"<{f}|U(T={T})|{i}> = {u0:.2e}: weak value diverges")

    def d(step):
        up = complex(_u_fi(f, i, eps + step, T))
        dn = complex(_u_fi(f, i, eps - step, T))
        return np.log(up / dn) / (2 * step)

    deriv = (4 * d(h / 2) - d(h)) / 3
    return complex(1j * deriv)


def weak_value_closed(T: float) -> float:
    """``T/2 + tan(T)/2`` (symmetric qubit, ``f = i = 1``)."""
    return 0.5 * T + 0.5 * math.tan(T)


def weak_ratio(alpha: float, T: float, f: int = 1, i: int = 1, eps: float = 0.0) -> float:
    """Predicted ``P_1 / P_0`` for vanishing coupling."""
    return alpha**2 * abs(weak_value(T, f, i, eps)) ** 2
