"""Uniform time grids and complex distributions with point masses at the ends.

An :class:`AmplitudeDistribution` is a smooth complex density sampled on a
:class:`TimeGrid` plus symbolic point masses located at ``tau = 0`` and/or
``tau = T``.  The point masses never touch the grid; integration, moments and
Gaussian smoothing treat them analytically.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.signal import fftconvolve


class ResolutionError(ValueError):
    """The grid is too coarse for the Gaussian kernel being applied."""


class NormalizationError(ZeroDivisionError):
    """A normalising integral vanishes (e.g. at a Rabi node)."""


@dataclass(frozen=True)
class TimeGrid:
    """``M + 1`` equispaced samples covering ``[0, T]`` inclusive."""

    T: float
    M: int

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive and finite, got {self.T!r}")
        if int(self.M) != self.M or self.M < 2:
            raise ValueError(f"M must be an integer >= 2, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def size(self) -> int:
        return self.M + 1

    @property
    def tau(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.M + 1)

    def weights(self) -> np.ndarray:
        """Trapezoid weights."""
        w = np.full(self.M + 1, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w


@dataclass(frozen=True)
class AmplitudeDistribution:
    """Smooth density on ``grid`` plus point masses at 0 and/or T.

    ``singular`` maps a location (exactly ``0.0`` or ``grid.T``) to its complex
    weight.  ``meta`` carries free-form provenance (method, parameters).
    """

    grid: TimeGrid
    density: np.ndarray
    singular: Mapping[float, complex] = field(default_factory=dict)
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.density, dtype=np.complex128)
        if d.shape != (self.grid.size,):
            raise ValueError(f"density has shape {d.shape}, expected ({self.grid.size},)")
        if not np.all(np.isfinite(d)):
            raise ValueError("density contains non-finite values")
        sing = {}
        for loc, w in dict(self.singular).items():
            if loc == 0 or math.isclose(loc, 0.0, abs_tol=1e-12 * self.grid.T):
                key = 0.0
            elif math.isclose(loc, self.grid.T, rel_tol=1e-12):
                key = float(self.grid.T)
            else:
                raise ValueError(f"singular point {loc!r} is not 0 or T={self.grid.T}")
            w = complex(w)
            if not (math.isfinite(w.real) and math.isfinite(w.imag)):
                raise ValueError(f"singular weight at {loc} is not finite")
            sing[key] = sing.get(key, 0j) + w
        d.setflags(write=False)
        object.__setattr__(self, "density", d)
        object.__setattr__(self, "singular", sing)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def tau(self) -> np.ndarray:
        return self.grid.tau

    @property
    def T(self) -> float:
        return self.grid.T

    def weight_at(self, loc: float) -> complex:
        key = 0.0 if loc == 0 else float(self.grid.T)
        return self.singular.get(key, 0j)

    def __add__(self, other: "AmplitudeDistribution") -> "AmplitudeDistribution":
        if other.grid != self.grid:
            raise ValueError("distributions live on different grids")
        sing = dict(self.singular)
        for k, w in other.singular.items():
            sing[k] = sing.get(k, 0j) + w
        return AmplitudeDistribution(self.grid, self.density + other.density, sing)

    def scaled(self, c: complex) -> "AmplitudeDistribution":
        return AmplitudeDistribution(
            self.grid, c * self.density, {k: c * w for k, w in self.singular.items()}, self.meta
        )

    def mirrored(self) -> "AmplitudeDistribution":
        """The distribution of ``T - tau``."""
        sing = {self.grid.T - k: w for k, w in self.singular.items()}
        return AmplitudeDistribution(self.grid, self.density[::-1].copy(), sing, self.meta)


def integrate(d: AmplitudeDistribution) -> complex:
    """Trapezoid rule over the density plus every point mass."""
    return complex(np.dot(d.grid.weights(), d.density) + sum(d.singular.values()))


def moment(d: AmplitudeDistribution, k: int, normalized: bool = False, atol: float = 1e-10) -> complex:
    """``int tau**k d(tau) dtau``, optionally divided by ``integrate(d)``.

    Raises :class:`NormalizationError` when normalising by an integral whose
    magnitude is below ``atol``.
    """
    if int(k) != k or k < 0:
        raise ValueError(f"moment order must be a nonnegative integer, got {k!r}")
    k = int(k)
    tau = d.tau
    raw = np.dot(d.grid.weights(), tau**k * d.density)
    raw += sum(w * (loc**k if k else 1.0) for loc, w in d.singular.items())
    raw = complex(raw)
    if not normalized:
        return raw
    z = integrate(d)
    if abs(z) < atol:
        raise NormalizationError(f"integral {z:.3e} is too small to normalise by")
    return raw / z


def gauss_convolve(d: AmplitudeDistribution, alpha: float) -> AmplitudeDistribution:
    """Smooth ``d`` with the unnormalised kernel ``exp(-alpha**2 (tau - tau')**2)``.

    The output lives on the same grid and has no point masses; each point mass
    contributes ``w * exp(-alpha**2 (tau - t_s)**2)`` exactly.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    g = d.grid
    if g.dt > 1.0 / (4.0 * alpha):
        raise ResolutionError(
            f"grid spacing {g.dt:.3g} exceeds 1/(4 alpha) = {1 / (4 * alpha):.3g}"
        )
    lags = g.dt * np.arange(-g.M, g.M + 1)
    kern = np.exp(-((alpha * lags) ** 2))
    f = d.grid.weights() * d.density
    # full convolution; output index j + M corresponds to tau_j
    full = fftconvolve(f.real, kern) + 1j * fftconvolve(f.imag, kern)
    out = full[g.M : 2 * g.M + 1].copy()
    tau = g.tau
    for loc, w in d.singular.items():
        out += w * np.exp(-((alpha * (tau - loc)) ** 2))
    return AmplitudeDistribution(g, out, {}, {"op": "gauss_convolve", "alpha": alpha})


# ---------------------------------------------------------------------------
# CSV schema: tau, re_density, im_density; point masses in header comments
# ---------------------------------------------------------------------------

_SING_RE = re.compile(r"#\s*singular:\s*t=(\S+)\s+re=(\S+)\s+im=(\S+)")


def _fmt(x: float) -> str:
    return repr(float(x))


def provenance_lines(meta: Mapping[str, object]) -> list[str]:
    return [f"# {k}={v}" for k, v in sorted(meta.items())]


def to_csv(d: AmplitudeDistribution, path=None, extra_meta: Mapping[str, object] | None = None) -> str:
    """Serialise ``d``; returns the text and writes it when ``path`` is given."""
    meta = dict(d.meta)
    meta.update(extra_meta or {})
    buf = io.StringIO()
    for line in provenance_lines({"T": d.grid.T, "M": d.grid.M, **meta}):
        buf.write(line + "\n")
    for loc in sorted(d.singular):
        w = d.singular[loc]
        buf.write(f"# singular: t={_fmt(loc)} re={_fmt(w.real)} im={_fmt(w.imag)}\n")
    buf.write("tau,re_density,im_density\n")
    for t, v in zip(d.tau, d.density):
        buf.write(f"{_fmt(t)},{_fmt(v.real)},{_fmt(v.imag)}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def from_csv(source) -> AmplitudeDistribution:
    """Inverse of :func:`to_csv`; ``source`` is a path or the CSV text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    else:
        text = source
    sing = {}
    rows = []
    header_seen = False
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            m = _SING_RE.match(line)
            if m:
                sing[float(m.group(1))] = complex(float(m.group(2)), float(m.group(3)))
            continue
        if not header_seen:
            if line.strip() != "tau,re_density,im_density":
                raise ValueError(f"unexpected header {line!r}")
            header_seen = True
            continue
        rows.append([float(x) for x in line.split(",")])
    arr = np.asarray(rows)
    tau = arr[:, 0]
    grid = TimeGrid(float(tau[-1]), len(tau) - 1)
    if not np.allclose(tau, grid.tau, rtol=0, atol=1e-9 * grid.T):
        raise ValueError("CSV tau column is not a uniform grid starting at 0")
    return AmplitudeDistribution(grid, arr[:, 1] + 1j * arr[:, 2], sing)
