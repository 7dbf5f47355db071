"""Acceptance criteria, each at its stated tolerance.

Every test prints one PASS/FAIL line; the lines are collected into a
summary section at the end of the pytest run.  The file can also be run
directly (``python tests/test_acceptance.py``) for the bare list.
"""

import sys

from restime import checks

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # pragma: no cover - run as a script from elsewhere
    ACCEPTANCE_LINES = []


def _report(result):
    line = result.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert result.passed, line


def test_01_oracle_equivalence():
    _report(checks.oracle_equivalence(N=400, alpha=1.0, T=10.0, M=8000, tol=1e-3, max_seconds=120.0))


def test_02_probability_conservation():
    _report(checks.probability_conservation(pairs=((0.1, 100.0), (2.0, 10.0), (1.0, 20.0)), tol=1e-3))


def test_03_symmetry_suite():
    _report(checks.symmetry_suite(Ts=(10.0, 100.0), tol=1e-3))


def test_04_sum_rules():
    _report(checks.sum_rules(Ts=(10.0, 20.0, 100.0), M=4000, tol=1e-2))


def test_05_medium_regime_peak():
    _report(checks.medium_regime_peak(T=100.0, alpha=0.1, N_bin=100, peak_tol=0.15, ratio_tol=0.10))


def test_06_strong_regime_tracking():
    _report(checks.strong_regime_tracking(T=100.0, alphas=(1.0, 2.0, 4.0), track_alpha=2.0, N_bin=100))


def test_07_zeno_limit():
    _report(checks.zeno_limit(alpha=2.0, T=10.0, tv_tol=0.05, p0_min=0.99))


def test_08_weak_value_ratio():
    _report(checks.weak_value_ratio(alpha=1e-3, Ts=(3.0, 7.0, 10.0), tol=0.10, blowup=10.0))


def test_09_stationary_phase():
    _report(checks.stationary_phase(T=100.0, fracs=(0.3, 0.5, 0.7), tol=0.10))


def test_10_meter_exactness():
    _report(checks.meter_exactness(Ns=(10, 100, 10_000), norm_tol=1e-12,
                                   asym_Ns=(100, 10_000, 1_000_000), asym_tol=1e-2))


def test_11_classical_baseline():
    _report(checks.classical_baseline(alpha=1e-3, T=10.0, n_paths=1_000_000, seed=2024, tol=0.02))


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_")):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
