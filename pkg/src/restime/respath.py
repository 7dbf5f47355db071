r"""Residence-time amplitude distributions of a two-level system.

For a qubit prepared in ``|i>`` and post-selected in ``|f>`` at time ``T``,
``Phi^{f<-i}(tau, T)`` sums the Feynman path amplitudes of all paths that
spend a total time ``tau`` in state ``|1>``.  With ``omega = 1`` the qubit
Hamiltonian is ``H_q(eps) = eps |1><1| + (|1><2| + |2><1|)``.

Three independent constructions are provided:

* :func:`phi_pathsum` -- discrete restricted path sum (reference method),
* :func:`phi_fourier` -- inverse Fourier transform of ``<f|U(T, lambda)|i>``
  over the counting field ``lambda`` with an analytic large-lambda tail,
* :func:`phi_exact` -- the closed-form Bessel series, available because
  the path sum over ``2m`` (or ``2m-1``) jumps resums to ``J_1`` (or ``J_0``).

State labels are 1 and 2 throughout the public API; index 0 and 1 internally.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import j0, j1, sici

from . import _kernels
from .timegrid import AmplitudeDistribution, TimeGrid


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class QubitSpec:
    """Detuning ``eps`` of state 1 and the pre/post-selected labels."""

    i: int = 1
    f: int = 1
    eps: float = 0.0

    def __post_init__(self):
        if self.i not in (1, 2) or self.f not in (1, 2):
            raise ValueError(f"state labels must be 1 or 2, got i={self.i!r} f={self.f!r}")
        if not math.isfinite(self.eps):
            raise ValueError("eps must be finite")

    def with_states(self, f: int, i: int) -> "QubitSpec":
        return QubitSpec(i=i, f=f, eps=self.eps)


@dataclass(frozen=True)
class UMatrix:
    """``U(T, lam) = exp(-i T H_q(lam))`` and its smooth remainders."""

    lam: float
    T: float
    U: np.ndarray = field(repr=False)

    @property
    def u11(self) -> complex:
        return complex(self.U[0, 0] - np.exp(-1j * self.lam * self.T))

    @property
    def u22(self) -> complex:
        return complex(self.U[1, 1] - 1.0)

    def element(self, f: int, i: int) -> complex:
        return complex(self.U[f - 1, i - 1])

    def unitarity_defect(self) -> float:
        return float(np.linalg.norm(self.U.conj().T @ self.U - np.eye(2)))


def u_elements(lam, T):
    """Vectorised ``(U11, U22, U12)``; ``U21 == U12``."""
    lam = np.asarray(lam, dtype=float)
    E = np.hypot(lam, 2.0)
    c = np.cos(E * T / 2)
    s = np.sin(E * T / 2)
    ph = np.exp(-0.5j * lam * T)
    u11 = (c - 1j * lam / E * s) * ph
    u22 = (c + 1j * lam / E * s) * ph
    u12 = -2j / E * s * ph
    return u11, u22, u12


def u_matrix(lam: float, T: float) -> UMatrix:
    if T < 0:
        raise ValueError("T must be nonnegative")
    u11, u22, u12 = (complex(z) for z in u_elements(lam, T))
    return UMatrix(float(lam), float(T), np.array([[u11, u12], [u12, u22]]))


# ---------------------------------------------------------------------------
# reference: restricted path sum
# ---------------------------------------------------------------------------


def _bins_to_distribution(bins: np.ndarray, T: float, meta) -> AmplitudeDistribution:
    """Turn per-count amplitudes into density + point masses.

    Interior counts become density ``bins[k] / dt``.  The end counts hold a
    point mass plus half a cell of smooth density; the density there is
    extrapolated from the interior and the half cell is removed from the
    mass, so that the trapezoid rule reproduces ``sum(bins)`` exactly.
    """
    M = bins.size - 1
    grid = TimeGrid(T, M)
    dt = grid.dt
    dens = np.empty(M + 1, dtype=np.complex128)
    dens[1:M] = bins[1:M] / dt
    if M >= 4:
        dens[0] = 3 * dens[1] - 3 * dens[2] + dens[3]
        dens[M] = 3 * dens[M - 1] - 3 * dens[M - 2] + dens[M - 3]
    else:
        dens[0] = dens[1]
        dens[M] = dens[M - 1]
    sing = {0.0: bins[0] - 0.5 * dt * dens[0], T: bins[M] - 0.5 * dt * dens[M]}
    return AmplitudeDistribution(grid, dens, sing, meta)


def pathsum_bins(spec: QubitSpec, T: float, M: int) -> np.ndarray:
    """Raw amplitudes ``[f-1, k]`` for ``k`` of ``M`` steps spent in state 1.

    Symmetric splitting: half a free step, then ``M`` alternations of
    (project and count, free step) with the last free step halved.  This is
    exactly the Strang-split evolution of the qubit coupled to a meter that
    reads the residence time, so contracting the bins against any meter
    function reproduces the split joint evolution.
    """
    if M < 10:
        raise ValueError("phi_pathsum needs M >= 10")
    dt = T / M
    v = u_matrix(spec.eps, dt).U
    vh = u_matrix(spec.eps, 0.5 * dt).U
    return _kernels.pathsum_bins(v, vh, M, spec.i - 1)


def phi_pathsum(spec: QubitSpec, T: float, M: int) -> AmplitudeDistribution:
    """``Phi^{f<-i}`` by dynamic programming over the residence-step count."""
    bins = pathsum_bins(spec, T, M)[spec.f - 1]
    meta = {"method": "pathsum", "i": spec.i, "f": spec.f, "eps": spec.eps}
    return _bins_to_distribution(bins, T, meta)


def phi_pathsum_all(spec: QubitSpec, T: float, M: int) -> dict[int, AmplitudeDistribution]:
    """Both final states from one propagation, keyed by ``f``."""
    bins = pathsum_bins(spec, T, M)
    return {
        f: _bins_to_distribution(
            bins[f - 1], T, {"method": "pathsum", "i": spec.i, "f": f, "eps": spec.eps}
        )
        for f in (1, 2)
    }


# ---------------------------------------------------------------------------
# cross-check: Fourier transform over the counting field
# ---------------------------------------------------------------------------


def _si_tail(s, lam_max):
    """``int_{lam_max}^inf sin(lam s)/lam dlam`` (odd in ``s``, 0 at ``s = 0``)."""
    s = np.asarray(s, dtype=float)
    si, _ = sici(lam_max * np.abs(s))
    return np.sign(s) * (np.pi / 2 - si)


def _c2_tail(s, lam_max):
    """``(2 pi)^-1 int_{|lam|>lam_max} exp(i lam s) / lam**2 dlam``."""
    s = np.abs(np.asarray(s, dtype=float))
    si, _ = sici(lam_max * s)
    return (np.cos(lam_max * s) / lam_max - s * (np.pi / 2 - si)) / np.pi


def _tail(f, i, tau, T, lam_max):
    """Integral over ``|lam| > lam_max`` of the remainder's asymptotic expansion.

    Lowest two orders in ``1/lam``; identical for both signs of ``lam``.
    """
    a = _c2_tail(tau, lam_max)
    b = _c2_tail(tau - T, lam_max)
    q = 0.5 * T * T + 1.0
    if f == i == 1:
        # u11 ~ -i T e^{-i lam T}/lam + (1 - (T^2/2 + 1) e^{-i lam T})/lam^2
        return T / np.pi * _si_tail(tau - T, lam_max) + a - q * b
    if f == i == 2:
        # u22 ~ i T/lam + (e^{-i lam T} - (T^2/2 + 1))/lam^2
        return -T / np.pi * _si_tail(tau, lam_max) + b - q * a
    # U12 ~ -(1 - e^{-i lam T})/lam - i T (1 + e^{-i lam T})/lam^2
    return 1j / np.pi * (-_si_tail(tau, lam_max) + _si_tail(tau - T, lam_max)) - 1j * T * (a + b)


def _remainder(f, i, lam, T):
    u11, u22, u12 = u_elements(lam, T)
    if f == i == 1:
        return u11 - np.exp(-1j * lam * T)
    if f == i == 2:
        return u22 - 1.0
    return u12


def default_quadrature_points(lam_max: float, T: float) -> int:
    """Enough points for ~16 samples per period of ``exp(i lam T)``."""
    k = max(1000, int(math.ceil(16 * lam_max * max(T, 1.0) / math.pi)))
    return k | 1


def _fourier_smooth(spec, tau, T, lam_max, K):
    lam = np.linspace(-lam_max, lam_max, K)
    dlam = lam[1] - lam[0]
    w = np.full(K, dlam)
    w[0] = w[-1] = 0.5 * dlam
    coef = w * _remainder(spec.f, spec.i, lam, T)
    body = _kernels.fourier_sum(-lam_max, dlam, coef, tau) / (2 * np.pi)
    return body + _tail(spec.f, spec.i, tau, T, lam_max)


def phi_fourier_at(spec: QubitSpec, tau, T: float, lam_max: float = 200.0, K: int | None = None):
    """Smooth part of :func:`phi_fourier` at arbitrary ``tau`` (no grid, no point masses)."""
    if K is None:
        K = default_quadrature_points(lam_max, T)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    return np.exp(-1j * spec.eps * tau) * _fourier_smooth(spec, tau, T, lam_max, K)


def phi_fourier(
    spec: QubitSpec,
    grid: TimeGrid,
    lam_max: float = 200.0,
    K: int | None = None,
    check: float | None = None,
) -> AmplitudeDistribution:
    """``Phi^{f<-i}`` from the counting-field representation.

    Point masses come from the ``exp(-i lam T)`` and ``1`` pieces of ``U11`` and
    ``U22``.  The smooth part is a trapezoid integral of the remainder over
    ``[-lam_max, lam_max]`` plus the exact integral of its ``1/lam`` and ``1/lam**2``
    asymptotes outside.  The detuning enters only through ``exp(-i eps tau)``.

    At ``tau = 0`` or ``T`` a remainder with a jump there evaluates to the
    mid-point of the jump.

    If ``check`` is given, the calculation is repeated with ``2 lam_max`` and a
    :class:`ConvergenceWarning` is issued when the interior changes by more
    than ``check`` times the maximal magnitude; ``meta["converged"]`` records
    the outcome.
    """
    if not lam_max > 0:
        raise ValueError("lam_max must be positive")
    T = grid.T
    if K is None:
        K = default_quadrature_points(lam_max, T)
    if K < 1000:
        raise ValueError("phi_fourier needs K >= 1000 quadrature points")
    tau = grid.tau
    smooth = _fourier_smooth(spec, tau, T, lam_max, K)
    meta = {"method": "fourier", "i": spec.i, "f": spec.f, "eps": spec.eps,
            "lam_max": lam_max, "K": K}
    if check is not None:
        fine = _fourier_smooth(spec, tau, T, 2 * lam_max, 2 * K - 1)
        inner = slice(1, grid.M)
        scale = max(np.max(np.abs(fine[inner])), 1e-300)
        change = float(np.max(np.abs(fine[inner] - smooth[inner])) / scale)
        meta["lam_doubling_change"] = change
        meta["converged"] = change <= check
        if change > check:
            warnings.warn(
                f"doubling lam_max changed Phi by {change:.2e} (> {check:.2e})",
                ConvergenceWarning,
                stacklevel=2,
            )
    phase = np.exp(-1j * spec.eps * tau)
    sing = {}
    if spec.f == spec.i == 1:
        sing[T] = np.exp(-1j * spec.eps * T)
    elif spec.f == spec.i == 2:
        sing[0.0] = 1.0
    return AmplitudeDistribution(grid, phase * smooth, sing, meta)


# ---------------------------------------------------------------------------
# closed form
# ---------------------------------------------------------------------------


def phi_exact_density(f: int, i: int, tau, T: float, eps: float = 0.0):
    """Smooth part of ``Phi^{f<-i}`` in closed form.

    Summing ``2m`` jumps gives ``phi11 = -sqrt(tau/(T-tau)) J1(2 sqrt(tau (T-tau)))``;
    ``2m-1`` jumps give ``phi21 = phi12 = -i J0(2 sqrt(tau (T-tau)))``; and
    ``phi22(tau) = phi11(T - tau)``.  The one-sided limits are used at the
    ends.
    """
    tau = np.asarray(tau, dtype=float)
    z = 2.0 * np.sqrt(np.clip(tau * (T - tau), 0.0, None))
    if f != i:
        out = -1j * j0(z)
    else:
        a = tau if f == 1 else T - tau
        b = T - a
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(b > 0, -np.sqrt(a / np.where(b > 0, b, 1.0)) * j1(z), -T + 0.0 * a)
        out = out.astype(np.complex128)
    return out * np.exp(-1j * eps * tau)


def phi_exact(spec: QubitSpec, grid: TimeGrid) -> AmplitudeDistribution:
    sing = {}
    if spec.f == spec.i == 1:
        sing[grid.T] = np.exp(-1j * spec.eps * grid.T)
    elif spec.f == spec.i == 2:
        sing[0.0] = 1.0
    dens = phi_exact_density(spec.f, spec.i, grid.tau, grid.T, spec.eps)
    return AmplitudeDistribution(grid, dens, sing, {"method": "exact", "i": spec.i, "f": spec.f, "eps": spec.eps})


# ---------------------------------------------------------------------------
# symmetry check
# ---------------------------------------------------------------------------


@dataclass
class SymmetryReport:
    T: float
    M: int
    tol: float
    mirror_density: float
    mirror_singular: float
    offdiag_density: float
    offdiag_singular: float

    @property
    def max_deviation(self) -> float:
        return max(self.mirror_density, self.mirror_singular, self.offdiag_density, self.offdiag_singular)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tol


def check_symmetries(T: float, tol: float = 1e-3, M: int = 2000, method: str = "pathsum") -> SymmetryReport:
    """Compare ``Phi11(tau)`` with ``Phi22(T - tau)`` and ``Phi21`` with ``Phi12`` at ``eps = 0``."""
    if method == "pathsum":
        from_1 = phi_pathsum_all(QubitSpec(i=1), T, M)
        from_2 = phi_pathsum_all(QubitSpec(i=2), T, M)
        p11, p21 = from_1[1], from_1[2]
        p12, p22 = from_2[1], from_2[2]
    elif method == "fourier":
        grid = TimeGrid(T, M)
        p11, p21, p12, p22 = (phi_fourier(QubitSpec(i=i, f=f), grid) for f, i in ((1, 1), (2, 1), (1, 2), (2, 2)))
    else:
        raise ValueError(f"unknown method {method!r}")
    m22 = p22.mirrored()
    inner = slice(1, p11.grid.M)

    def sing_dev(a, b):
        return max(abs(a.weight_at(loc) - b.weight_at(loc)) for loc in (0.0, T))

    return SymmetryReport(
        T=T,
        M=M,
        tol=tol,
        mirror_density=float(np.max(np.abs(p11.density[inner] - m22.density[inner]))),
        mirror_singular=sing_dev(p11, m22),
        offdiag_density=float(np.max(np.abs(p21.density[inner] - p12.density[inner]))),
        offdiag_singular=sing_dev(p21, p12),
    )
