"""Classical two-state fluctuator monitored by the same condensate meter.

The fluctuator is a continuous-time Markov telegraph process on {0, 1} with
rates ``k01`` (0 -> 1) and ``k10`` (1 -> 0).  A path contributes its time in
state 1, ``tau``, and the meter reads it incoherently:

    P_n(T) = E[ |G_n(tau)|**2 ].

Paths are drawn in fixed-size chunks, each with its own child of one
``SeedSequence``, so results depend on ``(seed, n_paths)`` only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .measure import MeasurementOutcome
from .meter import MeterConfig, g_exact, n_cutoff

CHUNK = 1 << 16


@dataclass(frozen=True)
class FluctuatorSpec:
    k01: float = 1.0
    k10: float = 1.0
    p1_init: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not (self.k01 >= 0 and self.k10 >= 0):
            raise ValueError("switching rates must be nonnegative")
        if not 0.0 <= self.p1_init <= 1.0:
            raise ValueError("p1_init must lie in [0, 1]")

    @property
    def kappa(self) -> float:
        return self.k01 + self.k10


@dataclass
class ResidenceSample:
    """Residence times of ``n_paths`` sampled paths.

    ``tau`` holds every path, including the never-switching ones that sit
    exactly at 0 or ``T``.  ``atom0``/``atomT`` are the analytic
    probabilities of those two events.
    """

    T: float
    tau: np.ndarray
    atom0: float
    atomT: float

    @property
    def n_paths(self) -> int:
        return int(self.tau.size)

    @property
    def frac0(self) -> float:
        return float(np.count_nonzero(self.tau == 0.0)) / self.n_paths

    @property
    def fracT(self) -> float:
        return float(np.count_nonzero(self.tau == self.T)) / self.n_paths


def _waits(rng, rate, size):
    with np.errstate(divide="ignore"):
        return rng.standard_exponential(size) / rate


def _sample_chunk(spec: FluctuatorSpec, T: float, size: int, rng) -> np.ndarray:
    state = rng.random(size) < spec.p1_init
    t = np.zeros(size)
    tau = np.zeros(size)
    active = np.arange(size)
    rates = np.array([spec.k01, spec.k10])
    while active.size:
        s = state[active]
        wait = _waits(rng, rates[s.astype(np.int64)], active.size)
        dwell = np.minimum(wait, T - t[active])
        tau[active] += np.where(s, dwell, 0.0)
        t[active] += wait
        state[active] = ~s
        active = active[t[active] < T]
    # frozen-in-1 paths accumulate exactly T
    tau[tau > T] = T
    return tau


def sample_residence(spec: FluctuatorSpec, T: float, n_paths: int) -> ResidenceSample:
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if not T >= 0:
        raise ValueError("T must be nonnegative")
    n_chunks = -(-n_paths // CHUNK)
    children = np.random.SeedSequence(spec.seed).spawn(n_chunks)
    parts = []
    for c, ss in enumerate(children):
        size = min(CHUNK, n_paths - c * CHUNK)
        parts.append(_sample_chunk(spec, T, size, np.random.default_rng(ss)))
    atom0 = (1.0 - spec.p1_init) * math.exp(-spec.k01 * T)
    atomT = spec.p1_init * math.exp(-spec.k10 * T)
    return ResidenceSample(T, np.concatenate(parts), atom0, atomT)


def _meter_prob(ns, tau, cfg):
    # |G_n(tau)|**2 for rows n, columns tau
    return np.abs(g_exact(ns, np.asarray(tau, dtype=float), cfg)) ** 2


def p_n_classical(spec: FluctuatorSpec, cfg: MeterConfig, T: float, n_paths: int = 100_000,
                  n_cut: int | None = None, sample: ResidenceSample | None = None):
    """Monte Carlo ``P_n`` and its standard error for ``n = 0..n_cut``.

    Paths frozen at 0 or ``T`` are grouped and their meter probabilities
    evaluated once, so the frozen limits come out exactly.
    """
    if sample is None:
        sample = sample_residence(spec, T, n_paths)
    if n_cut is None:
        n_cut = n_cutoff(cfg, T, "exact")
    ns = np.arange(n_cut + 1)
    tau = sample.tau
    inner = tau[(tau > 0.0) & (tau < T)]
    total = sample.n_paths
    f0, fT = sample.frac0, sample.fracT
    edge = _meter_prob(ns, np.array([0.0, T]), cfg)
    P = f0 * edge[:, 0] + fT * edge[:, 1]
    s1 = np.zeros(ns.size)
    s2 = np.zeros(ns.size)
    step = max(1, 2_000_000 // ns.size)
    for a in range(0, inner.size, step):
        g = _meter_prob(ns, inner[a : a + step], cfg)
        s1 += g.sum(axis=1)
        s2 += (g * g).sum(axis=1)
    P = P + s1 / total
    # second moment over all paths, frozen ones included
    m2 = (f0 * edge[:, 0] ** 2 + fT * edge[:, 1] ** 2) + s2 / total
    stderr = np.sqrt(np.maximum(m2 - P**2, 0.0) / total)
    meta = {"T": T, "alpha": cfg.alpha, "N": cfg.N, "method": "classical", "k01": spec.k01,
            "k10": spec.k10, "p1_init": spec.p1_init, "seed": spec.seed, "n_paths": total}
    return MeasurementOutcome(ns, P, meta), stderr


def classical_accuracy(n, alpha: float) -> tuple[float, float]:
    """Interval of exposures that most likely produced ``n`` tunnelled atoms."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    c = math.sqrt(n) / alpha
    h = 1.0 / (math.sqrt(2.0) * alpha)
    return c - h, c + h


def telegraph_moments(spec: FluctuatorSpec, T: float) -> tuple[float, float]:
    """Exact ``(<tau>, <tau**2>)`` for the telegraph process."""
    p0, k = spec.p1_init, spec.kappa
    if k == 0:
        return p0 * T, p0 * T * T
    pinf = spec.k01 / k

    def m(t):
        return pinf + (p0 - pinf) * math.exp(-k * t)

    def inner(t):
        # integral over t' in [t, T] of P(1 at t' | 1 at t)
        return pinf * (T - t) + (1 - pinf) * (-math.expm1(-k * (T - t))) / k

    first = pinf * T + (p0 - pinf) * (-math.expm1(-k * T)) / k
    second = 2.0 * quad(lambda t: m(t) * inner(t), 0.0, T, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return first, second


def weak_moments_classical(spec: FluctuatorSpec, alpha: float, T: float, n_paths: int = 1_000_000,
                           cfg: MeterConfig | None = None, max_order: int = 2) -> dict:
    """Sample moments ``<tau**k>`` and the meter's ``P_1/P_0`` from one sample set."""
    sample = sample_residence(spec, T, n_paths)
    cfg = cfg or MeterConfig.for_regime(alpha, T)
    out, err = p_n_classical(spec, cfg, T, n_cut=1, sample=sample)
    moments = {k: float(np.mean(sample.tau**k)) for k in range(1, max_order + 1)}
    ratio = out.P[1] / out.P[0]
    res = {"moments": moments, "P0": float(out.P[0]), "P1": float(out.P[1]),
           "P1_stderr": float(err[1]), "ratio": float(ratio),
           "ratio_over_alpha2_m2": float(ratio / (alpha**2 * moments[2]))}
    res["exact_m1"], res["exact_m2"] = telegraph_moments(spec, T)
    res["m2_stderr"] = float(np.std(sample.tau**2) / math.sqrt(sample.n_paths))
    return res
