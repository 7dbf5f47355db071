"""End-to-end verification checks shared by ``restime verify`` and the test-suite.

Each check returns a :class:`CheckResult` carrying the measured quantities
next to the thresholds it was judged against.  Thresholds are arguments so
callers can state them explicitly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .fluct import FluctuatorSpec, p_n_classical, weak_moments_classical
from .measure import bin_average, bin_density, default_steps, outcome_tables, probability_table
from .meter import MeterConfig, g_asymptotic, g_exact, n_cutoff
from .oracle import joint_evolve
from .regimes import (
    phi11_stationary,
    phi12_stationary,
    poisson_table,
    stationary_envelope,
    w_medium,
    w_strong,
    weak_value_closed,
)
from .respath import QubitSpec, check_symmetries, phi_pathsum_all
from .timegrid import integrate


@dataclass
class CheckResult:
    name: str
    passed: bool
    summary: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.summary} [{self.seconds:.1f}s]"


def _timed(fn):
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _tv(p, q):
    n = max(p.size, q.size)
    a = np.zeros(n)
    b = np.zeros(n)
    a[: p.size] = p
    b[: q.size] = q
    return 0.5 * float(np.abs(a - b).sum())


@_timed
def oracle_equivalence(N=400, alpha=1.0, T=10.0, M=8000, tol=1e-3, max_seconds=120.0) -> CheckResult:
    """Pipeline tables for all four (f, i) against the joint evolution; defect shrinks with M."""
    t0 = time.perf_counter()
    cfg = MeterConfig(N, alpha)
    sups, coarse = {}, {}
    for i in (1, 2):
        joint = joint_evolve(QubitSpec(i=i), cfg, T)
        fine = outcome_tables(i, cfg, T, M=M, n_cut=N)
        half = outcome_tables(i, cfg, T, M=M // 2, n_cut=N)
        for f in (1, 2):
            sups[(f, i)] = float(np.max(np.abs(fine[f].P - joint.table(f))))
            coarse[(f, i)] = float(np.max(np.abs(half[f].P - joint.table(f))))
    elapsed = time.perf_counter() - t0
    worst = max(sups.values())
    ratio = min(coarse[k] / sups[k] for k in sups)
    ok = worst < tol and ratio > 1.9 and elapsed < max_seconds
    return CheckResult(
        "oracle_equivalence", ok,
        f"max sup-norm {worst:.2e} (tol {tol:g}) at M={M}; defect ratio M/2->M {ratio:.2f}; {elapsed:.1f}s",
        {"sup": sups, "sup_half": coarse, "ratio": ratio, "elapsed": elapsed},
    )


@_timed
def probability_conservation(pairs=((0.1, 100.0), (2.0, 10.0), (1.0, 20.0)), M=4000, tol=1e-3) -> CheckResult:
    defects = {}
    for alpha, T in pairs:
        cfg = MeterConfig.for_regime(alpha, T)
        tabs = outcome_tables(1, cfg, T, M=M)
        defects[(alpha, T)] = abs(sum(t.total for t in tabs.values()) - 1.0)
    worst = max(defects.values())
    return CheckResult("probability_conservation", worst < tol,
                       f"max |sum_nf P - 1| = {worst:.2e} (tol {tol:g})", {"defects": defects})


@_timed
def symmetry_suite(Ts=(10.0, 100.0), M=4000, tol=1e-3) -> CheckResult:
    reps = {T: check_symmetries(T, tol, M) for T in Ts}
    worst = max(r.max_deviation for r in reps.values())
    return CheckResult("symmetry_suite", all(r.passed for r in reps.values()),
                       f"max deviation (densities and singular weights) {worst:.2e} (tol {tol:g})",
                       {"reports": reps})


@_timed
def sum_rules(Ts=(10.0, 20.0, 100.0), M=4000, tol=1e-2) -> CheckResult:
    errs = {}
    for T in Ts:
        for i in (1, 2):
            phis = phi_pathsum_all(QubitSpec(i=i), T, M)
            for f in (1, 2):
                want = math.cos(T) if f == i else -1j * math.sin(T)
                errs[(T, f, i)] = abs(integrate(phis[f]) - want)
    worst = max(errs.values())
    return CheckResult("sum_rules", worst < tol, f"max |int Phi - <f|U|i>| = {worst:.2e} (tol {tol:g})",
                       {"errors": errs})


@_timed
def medium_regime_peak(T=100.0, alpha=0.1, N_bin=100, peak_tol=0.15, ratio_tol=0.10) -> CheckResult:
    """Binned density at ``T/2`` against the medium-accuracy Gaussian, and the f=i : f!=i ratio."""
    cfg = MeterConfig.for_regime(alpha, T)
    tabs = outcome_tables(1, cfg, T)
    got, want, rel = {}, {}, {}
    for f in (1, 2):
        h = bin_density(tabs[f], N_bin)
        got[f] = h.value_at(T / 2)
        want[f] = float(w_medium(f, 1, T / 2, T, alpha, warn=False))
        rel[f] = got[f] / want[f] - 1.0
    ratio = got[1] / got[2]
    ratio_want = math.cos(T) ** 2 / math.sin(T) ** 2
    ratio_rel = ratio / ratio_want - 1.0
    ok = all(abs(r) <= peak_tol for r in rel.values()) and abs(ratio_rel) <= ratio_tol
    return CheckResult(
        "medium_regime_peak", ok,
        f"peak rel. error f=i {rel[1]:+.3f}, f!=i {rel[2]:+.3f} (tol {peak_tol:g}); "
        f"ratio {ratio:.3f} vs {ratio_want:.3f} ({ratio_rel:+.3f}, tol {ratio_tol:g})",
        {"binned": got, "formula": want, "rel": rel, "ratio": ratio, "ratio_formula": ratio_want},
    )


def resolved_halfwidth(T: float, N_bin: int, bins_per_period: float = 8.0) -> float:
    """Largest ``|tau/T - 1/2|`` at which ``|Phi|**2`` still spans ``bins_per_period`` bins per oscillation.

    The local angular frequency of ``|Phi|**2`` in ``tau`` is
    ``8|xi| / sqrt(1 - 4 xi**2)``.
    """
    dt = T / N_bin
    k = 2 * math.pi / (bins_per_period * dt)
    # solve 8 xi / sqrt(1 - 4 xi^2) = k
    return k / math.sqrt(64 + 4 * k * k)


@_timed
def strong_regime_tracking(T=100.0, alphas=(1.0, 2.0, 4.0), track_alpha=2.0, N_bin=100,
                           track_tol=0.20, scale_tol=0.20) -> CheckResult:
    """Binned density vs ``sqrt(2 pi)/alpha |Phi|**2`` where bins resolve the oscillation; 1/alpha scaling."""
    xi_max = resolved_halfwidth(T, N_bin)
    track, mass = {}, {}
    for alpha in alphas:
        cfg = MeterConfig.for_regime(alpha, T)
        M = default_steps(T, alpha)
        phis = phi_pathsum_all(QubitSpec(i=1), T, M)
        for f in (1, 2):
            out = probability_table(QubitSpec(i=1, f=f), cfg, T, phi=phis[f])
            h = bin_density(out, N_bin)
            xi_lo, xi_hi = h.edges[:-1] / T - 0.5, h.edges[1:] / T - 0.5
            win = (xi_lo >= -xi_max) & (xi_hi <= xi_max)
            mass[(alpha, f)] = alpha * float(h.density[win].sum() * h.width)
            if alpha == track_alpha:
                form = bin_average(lambda t: w_strong(f, 1, t, T, alpha, phis[f]), h.edges)
                track[f] = float(np.max(np.abs(h.density[win] - form[win])) / np.max(form[win]))
    spread = {f: max(mass[(a, f)] for a in alphas) / min(mass[(a, f)] for a in alphas) - 1.0 for f in (1, 2)}
    ok = all(v <= track_tol for v in track.values()) and all(v <= scale_tol for v in spread.values())
    return CheckResult(
        "strong_regime_tracking", ok,
        f"window |xi|<={xi_max:.3f}; sup dev / max at alpha={track_alpha:g}: "
        f"f=1 {track[1]:.3f}, f=2 {track[2]:.3f} (tol {track_tol:g}); "
        f"alpha*mass spread f=1 {spread[1]:.3f}, f=2 {spread[2]:.3f} (tol {scale_tol:g})",
        {"xi_max": xi_max, "tracking": track, "alpha_mass": mass, "spread": spread},
    )


@_timed
def zeno_limit(alpha=2.0, T=10.0, tv_tol=0.05, p0_min=0.99) -> CheckResult:
    cfg = MeterConfig.for_regime(alpha, T)
    t1 = outcome_tables(1, cfg, T)
    n, pois = poisson_table(alpha, T)
    tv11 = _tv(t1[1].P, pois)
    tv_all = _tv(t1[1].P + t1[2].P, pois)
    t2 = outcome_tables(2, cfg, T)
    p0 = t2[1].prob(0) + t2[2].prob(0)
    ok = tv11 < tv_tol and p0 > p0_min
    return CheckResult(
        "zeno_limit", ok,
        f"TV(P^11, Poisson) = {tv11:.3f} (sum over f {tv_all:.3f}; tol {tv_tol:g}); "
        f"i=2 P_0 = {p0:.4f} (need > {p0_min:g})",
        {"tv11": tv11, "tv_total": tv_all, "p0_i2": p0},
    )


def _pipeline_ratio(alpha, T):
    cfg = MeterConfig.for_regime(alpha, T)
    out = probability_table(QubitSpec(i=1, f=1), cfg, T, n_cut=2)
    return out.P[1] / out.P[0]


@_timed
def weak_value_ratio(alpha=1e-3, Ts=(3.0, 7.0, 10.0), tol=0.10,
                     near=(math.pi / 2 - 0.1, math.pi / 2 - 0.01), blowup=10.0) -> CheckResult:
    rel = {}
    for T in Ts:
        rel[T] = _pipeline_ratio(alpha, T) / (alpha**2 * weak_value_closed(T) ** 2) - 1.0
    growth = {T: _pipeline_ratio(alpha, T) / (alpha**2 * (T / 2) ** 2) for T in near}
    ok = all(abs(v) <= tol for v in rel.values()) and max(growth.values()) > blowup
    rs = ", ".join(f"T={T:g}: {v:+.1e}" for T, v in rel.items())
    gs = ", ".join(f"{v:.0f}x" for v in growth.values())
    return CheckResult("weak_value_ratio", ok, f"rel. error {rs} (tol {tol:g}); near T=pi/2: {gs} baseline",
                       {"rel": rel, "growth": growth})


@_timed
def stationary_phase(T=100.0, fracs=(0.3, 0.5, 0.7), M=20000, tol=0.10, prefactor="bessel") -> CheckResult:
    """Asymptotes vs path-sum density, error measured relative to the asymptotic envelope."""
    phis = phi_pathsum_all(QubitSpec(i=1), T, M)
    errs = {}
    for x in fracs:
        k = int(round(x * M))
        tau = phis[1].tau[k]
        e11 = abs(phi11_stationary(tau, T) - phis[1].density[k]) / stationary_envelope(1, 1, tau, T)
        e21 = abs(phi12_stationary(tau, T, prefactor) - phis[2].density[k]) / stationary_envelope(2, 1, tau, T)
        errs[x] = (float(e11), float(e21))
    worst = max(max(v) for v in errs.values())
    es = ", ".join(f"{x:g}: {a:.3f}/{b:.3f}" for x, (a, b) in errs.items())
    return CheckResult("stationary_phase", worst <= tol, f"rel. error phi11/phi21 at tau/T {es} (tol {tol:g})",
                       {"errors": errs, "prefactor": prefactor})


@_timed
def meter_exactness(Ns=(10, 100, 10_000), norm_tol=1e-12, alpha=1.0, asym_Ns=(100, 10_000, 1_000_000),
                    asym_tol=1e-2) -> CheckResult:
    norm = {}
    for N in Ns:
        cfg = MeterConfig(N, alpha)
        taus = np.linspace(0.0, 0.5 * math.pi * math.sqrt(N) / alpha, 7)
        g = g_exact(np.arange(N + 1), taus, cfg)
        norm[N] = float(np.max(np.abs((np.abs(g) ** 2).sum(axis=0) - 1.0)))
    taus = np.linspace(0.0, 3.0 / alpha, 31)
    ns = np.arange(int(3 * (alpha * taus[-1]) ** 2) + 1)
    asym = {}
    for N in asym_Ns:
        cfg = MeterConfig(N, alpha)
        asym[N] = float(np.max(np.abs(g_exact(ns, taus, cfg) - g_asymptotic(ns, taus, alpha))))
    errs = [asym[N] for N in asym_Ns]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    ok = max(norm.values()) <= norm_tol and decreasing and errs[-1] < asym_tol
    return CheckResult(
        "meter_exactness", ok,
        f"max norm defect {max(norm.values()):.1e} (tol {norm_tol:g}); asymptotic error "
        + ", ".join(f"N={N:g}: {v:.1e}" for N, v in asym.items()) + f" (tol {asym_tol:g} at largest N)",
        {"norm": norm, "asym": asym},
    )


@_timed
def classical_baseline(alpha=1e-3, T=10.0, k=1.0, n_paths=1_000_000, seed=2024, tol=0.02) -> CheckResult:
    cfg = MeterConfig(1000, 1.0)
    Tf = 5.0
    on, _ = p_n_classical(FluctuatorSpec(0.0, 0.0, 1.0, seed), cfg, Tf, n_paths=1000, n_cut=cfg.N)
    frozen1 = float(np.max(np.abs(on.P - np.abs(g_exact(on.n, Tf, cfg)) ** 2)))
    off, _ = p_n_classical(FluctuatorSpec(0.0, 0.0, 0.0, seed), cfg, Tf, n_paths=1000, n_cut=20)
    frozen0 = abs(off.P[0] - 1.0) + float(off.P[1:].sum())
    spec = FluctuatorSpec(k, k, 0.5, seed)
    r1 = weak_moments_classical(spec, alpha, T, n_paths)
    r2 = weak_moments_classical(spec, alpha, T, n_paths)
    reproducible = r1 == r2
    dev_sample = r1["ratio_over_alpha2_m2"] - 1.0
    dev_exact = r1["ratio"] / (alpha**2 * r1["exact_m2"]) - 1.0
    ok = frozen1 == 0.0 and frozen0 == 0.0 and abs(dev_sample) <= tol and abs(dev_exact) <= tol and reproducible
    return CheckResult(
        "classical_baseline", ok,
        f"frozen-1 max|P_n - |G_n(T)|^2| = {frozen1:.1e}, frozen-0 defect {frozen0:.1e}; "
        f"P1/P0 vs alpha^2<tau^2>: sample {dev_sample:+.1e}, exact telegraph {dev_exact:+.1e} "
        f"(tol {tol:g}); reproducible={reproducible}",
        {"frozen1": frozen1, "frozen0": frozen0, "dev_sample": dev_sample, "dev_exact": dev_exact,
         "moments": r1},
    )


FULL = (
    oracle_equivalence,
    probability_conservation,
    symmetry_suite,
    sum_rules,
    medium_regime_peak,
    strong_regime_tracking,
    zeno_limit,
    weak_value_ratio,
    stationary_phase,
    meter_exactness,
    classical_baseline,
)


def quick_suite():
    """Reduced-size versions of the checks, for a smoke run in well under a minute."""
    return (
        lambda: oracle_equivalence(N=100, alpha=1.0, T=5.0, M=2000),
        lambda: probability_conservation(pairs=((1.0, 20.0),)),
        lambda: symmetry_suite(Ts=(10.0,), M=2000),
        lambda: sum_rules(Ts=(10.0,)),
        lambda: weak_value_ratio(Ts=(3.0,)),
        lambda: stationary_phase(M=10000),
        lambda: meter_exactness(Ns=(10, 100), asym_Ns=(100, 10_000, 1_000_000)),
        lambda: classical_baseline(n_paths=100_000, tol=0.05),
    )


def run_suite(quick: bool = False):
    checks = quick_suite() if quick else FULL
    return [c() for c in checks]
