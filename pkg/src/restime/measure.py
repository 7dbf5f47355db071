"""Meter read-out statistics for a pre- and post-selected qubit.

The amplitude to find ``n`` tunnelled atoms is the overlap of the meter
amplitude ``G_n(tau)`` with the residence-time distribution ``Phi(tau)``;
squaring gives ``P_n``.  Reading ``n`` as the time ``tau_n = sqrt(n)/alpha``
turns the table into a measured-time density, either through the Jacobian
``2 alpha sqrt(n) P_n`` or by histogramming.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import _kernels
from .meter import MeterConfig, g_asymptotic, g_exact, magnitude_parts, n_cutoff
from .respath import QubitSpec, phi_pathsum_all
from .timegrid import AmplitudeDistribution, ResolutionError, gauss_convolve, provenance_lines

#: cumulative probability defining n_max
CUMULATIVE_CUT = 1.0 - 1e-8


@dataclass
class MeasurementOutcome:
    n: np.ndarray
    P: np.ndarray
    meta: dict = field(default_factory=dict)
    amplitudes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=np.int64)
        self.P = np.asarray(self.P, dtype=float)
        if np.any(self.P < 0):
            raise ValueError("probabilities must be nonnegative")

    @property
    def alpha(self) -> float:
        return float(self.meta["alpha"])

    @property
    def T(self) -> float:
        return float(self.meta["T"])

    @property
    def tau_n(self) -> np.ndarray:
        return np.sqrt(self.n) / self.alpha

    @property
    def total(self) -> float:
        return float(self.P.sum())

    @property
    def n_max(self) -> int:
        """Smallest n at which the cumulative probability reaches (1 - 1e-8) of the total."""
        c = np.cumsum(self.P)
        if c[-1] == 0:
            return int(self.n[0])
        return int(self.n[np.searchsorted(c, CUMULATIVE_CUT * c[-1])])

    def prob(self, n: int) -> float:
        idx = np.searchsorted(self.n, n)
        if idx < self.n.size and self.n[idx] == n:
            return float(self.P[idx])
        return 0.0


def default_steps(T: float, alpha: float) -> int:
    """Path-sum steps for a pipeline run; a multiple of 100."""
    m = max(4000, math.ceil(T * max(40.0, 100.0 * alpha)))
    return int(math.ceil(m / 100) * 100)


def _check_resolution(phi: AmplitudeDistribution, alpha: float):
    if phi.grid.dt > 1.0 / (4.0 * alpha):
        raise ResolutionError(
            f"grid spacing {phi.grid.dt:.3g} does not resolve the meter width 1/alpha={1 / alpha:.3g}"
        )


def amplitude_n(n: int, phi: AmplitudeDistribution, G: Callable, alpha: float | None = None) -> complex:
    """``int G(n, tau) Phi(tau) dtau`` for a generic vectorised meter ``G(n, tau)``."""
    if alpha is not None:
        _check_resolution(phi, alpha)
    vals = np.asarray(G(n, phi.tau))
    out = np.dot(phi.grid.weights(), vals * phi.density)
    for loc, w in phi.singular.items():
        out += complex(G(n, loc)) * w
    return complex(out)


def _meter_at(ns, loc, cfg, method):
    if method == "exact":
        return np.asarray(g_exact(ns, loc, cfg))
    return np.asarray(g_asymptotic(ns, loc, cfg.alpha))


def amplitude_table(phi: AmplitudeDistribution, cfg: MeterConfig, ns, method: str = "exact") -> np.ndarray:
    """Vector of ``A_n`` for every ``n`` in ``ns`` (compiled kernel)."""
    _check_resolution(phi, cfg.alpha)
    ns = np.asarray(ns, dtype=np.int64)
    lead, mult, x, y, sx, sy = magnitude_parts(ns, phi.tau, cfg, method)
    c = phi.grid.weights() * phi.density
    amp = _kernels.meter_project(ns, lead, mult, x, y, sx, sy, c)
    amp = amp * np.array([1, -1j, -1, 1j])[ns % 4]
    for loc, w in phi.singular.items():
        if w != 0:
            amp = amp + _meter_at(ns, loc, cfg, method) * w
    return amp


def _outcome(phi, cfg, T, method, ns, spec, M):
    amp = amplitude_table(phi, cfg, ns, method)
    meta = {"T": T, "alpha": cfg.alpha, "N": cfg.N, "eps": spec.eps, "i": spec.i,
            "f": phi.meta.get("f", spec.f), "method": method, "M": M,
            "phi_method": phi.meta.get("method", "?")}
    return MeasurementOutcome(ns, np.abs(amp) ** 2, meta, amp)


def probability_table(
    spec: QubitSpec,
    cfg: MeterConfig,
    T: float,
    method: str = "exact",
    M: int | None = None,
    phi: AmplitudeDistribution | None = None,
    n_cut: int | None = None,
) -> MeasurementOutcome:
    """``P_n^{f<-i}`` for ``n = 0..n_cut``."""
    if method not in ("exact", "asymptotic"):
        raise ValueError(f"unknown meter method {method!r}")
    if phi is None:
        M = M or default_steps(T, cfg.alpha)
        phi = phi_pathsum_all(spec, T, M)[spec.f]
    else:
        M = phi.grid.M
    if n_cut is None:
        n_cut = n_cutoff(cfg, T, method)
    return _outcome(phi, cfg, T, method, np.arange(n_cut + 1), spec, M)


def outcome_tables(
    i: int,
    cfg: MeterConfig,
    T: float,
    eps: float = 0.0,
    method: str = "exact",
    M: int | None = None,
    n_cut: int | None = None,
) -> dict[int, MeasurementOutcome]:
    """Both post-selections from one path-sum propagation, keyed by ``f``."""
    spec = QubitSpec(i=i, f=1, eps=eps)
    M = M or default_steps(T, cfg.alpha)
    phis = phi_pathsum_all(spec, T, M)
    if n_cut is None:
        n_cut = n_cutoff(cfg, T, method)
    ns = np.arange(n_cut + 1)
    return {f: _outcome(phis[f], cfg, T, method, ns, spec.with_states(f, i), M) for f in (1, 2)}


def density_w(outcome: MeasurementOutcome):
    """``(tau_n, 2 alpha sqrt(n) P_n)`` for ``n >= 1``."""
    a, T = outcome.alpha, outcome.T
    if (a * T) ** 2 < 10:
        warnings.warn(f"alpha^2 T^2 = {(a * T) ** 2:.3g} < 10: only a handful of atoms tunnel",
                      RuntimeWarning, stacklevel=2)
    sel = outcome.n >= 1
    n = outcome.n[sel]
    return np.sqrt(n) / a, 2 * a * np.sqrt(n) * outcome.P[sel]


def density_convolution(phi: AmplitudeDistribution, alpha: float):
    """``(tau, sqrt(2/pi) alpha |int exp(-alpha^2 (tau-t)^2) Phi(t) dt|^2)`` on ``phi``'s grid."""
    conv = gauss_convolve(phi, alpha)
    return phi.tau, math.sqrt(2 / math.pi) * alpha * np.abs(conv.density) ** 2


@dataclass
class Histogram:
    edges: np.ndarray
    density: np.ndarray
    outside: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def centres(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    def value_at(self, tau: float) -> float:
        """Piecewise-linear reading through the bin centres."""
        return float(np.interp(tau, self.centres, self.density))


def bin_density(outcome: MeasurementOutcome, N_bin: int = 100, T: float | None = None) -> Histogram:
    """Sum ``P_n`` over ``tau_n`` in each of ``N_bin`` equal slices of ``[0, T]``, divide by the width.

    Bins are left-closed; the last one also holds ``tau_n == T``.  Mass with
    ``tau_n > T`` is reported in ``outside``.
    """
    if N_bin < 2:
        raise ValueError("N_bin must be >= 2")
    T = outcome.T if T is None else T
    dt = T / N_bin
    edges = np.linspace(0.0, T, N_bin + 1)
    tn = outcome.tau_n
    idx = np.floor(tn / dt).astype(np.int64)
    idx[np.isclose(tn, T, rtol=1e-13, atol=0)] = N_bin - 1
    inside = idx < N_bin
    sums = np.bincount(idx[inside], weights=outcome.P[inside], minlength=N_bin)
    meta = dict(outcome.meta)
    meta["N_bin"] = N_bin
    return Histogram(edges, sums / dt, float(outcome.P[~inside].sum()), meta)


def bin_average(func: Callable, edges: np.ndarray, samples: int = 64) -> np.ndarray:
    """Average of a vectorised ``func`` over each bin (midpoint rule on ``samples`` nodes)."""
    lo = edges[:-1, None]
    w = (edges[1:] - edges[:-1])[:, None]
    t = lo + w * (np.arange(samples) + 0.5)[None, :] / samples
    return np.asarray(func(t.ravel())).reshape(t.shape).mean(axis=1)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def outcome_csv(outcome: MeasurementOutcome, path=None, extra: Mapping[str, object] | None = None) -> str:
    buf = io.StringIO()
    for line in provenance_lines({**outcome.meta, **(extra or {}), "n_max": outcome.n_max}):
        buf.write(line + "\n")
    buf.write("n,tau_n,P,w\n")
    a = outcome.alpha
    for n, p in zip(outcome.n, outcome.P):
        w = repr(float(2 * a * math.sqrt(n) * p)) if n > 0 else "nan"
        buf.write(f"{n},{float(math.sqrt(n) / a)!r},{float(p)!r},{w}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def histogram_csv(hist: Histogram, path=None, extra: Mapping[str, object] | None = None) -> str:
    buf = io.StringIO()
    for line in provenance_lines({**hist.meta, **(extra or {}), "outside": hist.outside}):
        buf.write(line + "\n")
    buf.write("bin_left,bin_right,density\n")
    for lo, hi, d in zip(hist.edges[:-1], hist.edges[1:], hist.density):
        buf.write(f"{float(lo)!r},{float(hi)!r},{float(d)!r}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_table_csv(source) -> tuple[dict, dict[str, np.ndarray]]:
    """Parse any of the CSV files written here into ``(provenance, columns)``."""
    text = Path(source).read_text() if "\n" not in str(source) else str(source)
    meta, header, rows = {}, None, []
    for line in text.splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body and not body.startswith("singular:"):
                k, v = body.split("=", 1)
                meta[k.strip()] = v.strip()
        elif line.strip():
            if header is None:
                header = line.strip().split(",")
            else:
                rows.append([float(x) for x in line.split(",")])
    arr = np.asarray(rows, dtype=float).reshape(-1, len(header))
    return meta, {h: arr[:, k] for k, h in enumerate(header)}
