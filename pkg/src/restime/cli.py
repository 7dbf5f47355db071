"""``restime`` command line: CSV datasets and the verification runner.

Every subcommand accepts ``--config FILE`` with ``key = value`` lines
(``#`` starts a comment).  Keys are the long option names with ``-`` or
``_``; unknown keys are rejected.  Flags given on the command line win over
the file.  Exit codes: 0 success, 2 invalid input, 3 failed verification.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .checks import run_suite
from .fluct import FluctuatorSpec, p_n_classical, sample_residence, telegraph_moments
from .measure import (
    bin_density,
    default_steps,
    density_convolution,
    density_w,
    histogram_csv,
    outcome_csv,
    outcome_tables,
)
from .meter import MeterConfig, g_asymptotic, g_exact
from .regimes import (
    XI_MAX,
    classify,
    phi11_stationary,
    phi12_stationary,
    poisson_table,
    w_medium,
    w_strong,
    w_zeno,
    weak_value,
    weak_value_closed,
    WeakValueDivergence,
)
from .respath import QubitSpec, phi_fourier_at, phi_pathsum_all
from .timegrid import provenance_lines

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_VERIFY = 3

PRESETS = {
    # quantum accuracy 1/alpha as a fraction of T = 100
    "medium": {"T": 100.0, "alpha": 0.1},
    "strong": {"T": 100.0, "alpha": 2.0},
}


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    return repr(float(x))


def _write(path: Path, meta: dict, header: list[str], rows) -> Path:
    buf = io.StringIO()
    for line in provenance_lines({"tool": f"restime {__version__}", **meta}):
        buf.write(line + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(r if isinstance(r, str) else _fmt(r) for r in row) + "\n")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    return path


def _params(args) -> dict:
    skip = {"func", "config", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


# ---------------------------------------------------------------------------
# phi
# ---------------------------------------------------------------------------


def _tau_fracs(n):
    return np.round(np.linspace(0.5 - XI_MAX, 0.5 + XI_MAX, n), 12)


def _phi_steps(T, M_arg):
    # path-sum error near the window edges grows like T dt^2; 25 T^1.5 keeps it
    # near 1e-3 of max|phi|.  A multiple of 100 puts the default lattice
    # (step 0.01 in tau/T) on grid nodes.
    base = M_arg or max(2000, math.ceil(25 * T**1.5))
    return int(math.ceil(base / 100) * 100)


def cmd_phi(args) -> int:
    out = Path(args.out)
    Ts = np.linspace(args.T_min, args.T_max, args.n_T)
    fracs = _tau_fracs(args.n_tau)
    methods = ["pathsum", "fourier"] if args.method == "both" else [args.method]
    surf = {(m, f): [] for m in methods for f in (1, 2)}
    asym = []
    dev = {1: 0.0, 2: 0.0}
    for T in Ts:
        M = _phi_steps(T, args.M)
        tau = fracs * T
        vals = {}
        if "pathsum" in methods:
            phis = phi_pathsum_all(QubitSpec(i=1, eps=args.eps), T, M)
            for f in (1, 2):
                d = phis[f]
                vals[("pathsum", f)] = np.interp(tau, d.tau, d.density.real) + 1j * np.interp(tau, d.tau, d.density.imag)
        if "fourier" in methods:
            for f in (1, 2):
                vals[("fourier", f)] = phi_fourier_at(QubitSpec(i=1, f=f, eps=args.eps), tau, T, args.lam_max)
        for (m, f), v in vals.items():
            surf[(m, f)].extend((T, x, t, z.real, z.imag, abs(z)) for x, t, z in zip(fracs, tau, v))
        if len(methods) == 2:
            for f in (1, 2):
                scale = np.max(np.abs(vals[("pathsum", f)]))
                dev[f] = max(dev[f], float(np.max(np.abs(vals[("pathsum", f)] - vals[("fourier", f)])) / scale))
        a11 = phi11_stationary(tau, T)
        a21 = phi12_stationary(tau, T, "bessel")
        a21p = phi12_stationary(tau, T, "sqrt")
        asym.extend((T, x, t, p.real, p.imag, q.real, q.imag, r.real, r.imag)
                    for x, t, p, q, r in zip(fracs, tau, a11, a21, a21p))
    meta = {"command": "phi", **_params(args)}
    for (m, f), rows in surf.items():
        _write(out / f"phi{f}1_{m}.csv", {**meta, "f": f, "i": 1, "method": m},
               ["T", "tau_over_T", "tau", "re", "im", "abs"], rows)
    _write(out / "phi_asymptote.csv", meta,
           ["T", "tau_over_T", "tau", "phi11_re", "phi11_im", "phi21_re", "phi21_im",
            "phi21_sqrt_re", "phi21_sqrt_im"], asym)
    if len(methods) == 2:
        print(f"max_deviation phi11={dev[1]:.3e} phi21={dev[2]:.3e} (relative to max|phi| per T)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# meter
# ---------------------------------------------------------------------------


def cmd_meter(args) -> int:
    cfg = MeterConfig(args.N, args.alpha)
    taus = np.linspace(0.0, args.tau_max, args.n_tau)
    ns = np.arange(args.n_max + 1)
    ge = g_exact(ns, taus, cfg)
    ga = g_asymptotic(ns, taus, args.alpha)
    rows = ((n, t, ge[a, b].real, ge[a, b].imag, ga[a, b].real, ga[a, b].imag)
            for a, n in enumerate(ns) for b, t in enumerate(taus))
    _write(Path(args.out) / "meter.csv", {"command": "meter", "dOmega": cfg.dOmega, **_params(args)},
           ["n", "tau", "exact_re", "exact_im", "asymptotic_re", "asymptotic_im"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# measure
# ---------------------------------------------------------------------------


def _apply_preset(args):
    if args.preset:
        for k, v in PRESETS[args.preset].items():
            if getattr(args, k) is None:
                setattr(args, k, v)
    if args.T is None or args.alpha is None:
        raise ConfigError("measure needs T and alpha (or a preset)")


def cmd_measure(args) -> int:
    _apply_preset(args)
    out = Path(args.out)
    T, alpha = args.T, args.alpha
    cfg = MeterConfig(args.N, alpha) if args.N else MeterConfig.for_regime(alpha, T)
    M = args.M or default_steps(T, alpha)
    tabs = outcome_tables(args.i, cfg, T, args.eps, args.meter, M)
    phis = phi_pathsum_all(QubitSpec(i=args.i, eps=args.eps), T, M)
    regime = classify(T, alpha).regime
    meta = {"tool": f"restime {__version__}", "command": "measure", **_params(args), "N": cfg.N, "M": M, "regime": regime,
            "backend": _kernels.backend()}
    grid = np.linspace(0.0, T, args.n_overlay)
    cols, overlay = ["tau"], [grid]
    for f in (1, 2):
        outcome_csv(tabs[f], out / f"outcome_f{f}.csv", {**meta, "f": f})
        histogram_csv(bin_density(tabs[f], args.n_bin), out / f"hist_f{f}.csv", {**meta, "f": f})
        t_conv, w_conv = density_convolution(phis[f], alpha)
        cols += [f"w_convolution_f{f}", f"w_medium_f{f}", f"w_strong_f{f}"]
        overlay += [np.interp(grid, t_conv, w_conv), w_medium(f, args.i, grid, T, alpha, warn=False),
                    w_strong(f, args.i, grid, T, alpha, phis[f])]
    cols.append("w_zeno")
    overlay.append(w_zeno(args.i, grid, T, alpha))
    _write(out / "overlay.csv", meta, cols, zip(*overlay))
    for f in (1, 2):
        print(f"f={f}: total P = {tabs[f].total:.10f}, n_max = {tabs[f].n_max}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# zeno
# ---------------------------------------------------------------------------


def cmd_zeno(args) -> int:
    T, alpha = args.T, args.alpha
    cfg = MeterConfig(args.N, alpha) if args.N else MeterConfig.for_regime(alpha, T)
    tabs = outcome_tables(args.i, cfg, T, 0.0, "exact", args.M)
    n_p, pois = poisson_table(alpha, T)
    n_hi = max(tabs[1].n.size, n_p.size)
    pad = lambda v: np.pad(v, (0, n_hi - v.size))
    p1, p2, pz = pad(tabs[1].P), pad(tabs[2].P), pad(pois if args.i == 1 else np.array([1.0]))
    tv = 0.5 * float(np.abs(p1 - pz).sum())
    meta = {"command": "zeno", **_params(args), "N": cfg.N, "tv_f1_vs_limit": tv}
    _write(Path(args.out) / "zeno.csv", meta, ["n", "P_f1", "P_f2", "P_total", "zeno_limit"],
           ((n, a, b, a + b, c) for n, a, b, c in zip(range(n_hi), p1, p2, pz)))
    print(f"TV(P^(1<-{args.i}), limit) = {tv:.4f}; P_0 summed over f = {p1[0] + p2[0]:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# weak
# ---------------------------------------------------------------------------


def cmd_weak(args) -> int:
    Ts = np.linspace(args.T_min, args.T_max, args.n_T)
    rows = []
    for T in Ts:
        try:
            tb = weak_value(T, args.f, args.i)
        except WeakValueDivergence:
            tb = complex("nan+nanj")
        closed = weak_value_closed(T) if args.f == args.i == 1 else float("nan")
        rows.append((T, tb.real, tb.imag, closed, args.alpha**2 * abs(tb) ** 2))
    _write(Path(args.out) / "weak.csv", {"command": "weak", **_params(args)},
           ["T", "tau_bar_re", "tau_bar_im", "tau_bar_closed", "P1_over_P0"], rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# fluct
# ---------------------------------------------------------------------------


def cmd_fluct(args) -> int:
    spec = FluctuatorSpec(args.k01, args.k10, args.p1_init, args.seed)
    T = args.T
    cfg = MeterConfig(args.N, args.alpha) if args.N else MeterConfig.for_regime(args.alpha, T)
    sample = sample_residence(spec, T, args.n_paths)
    out, err = p_n_classical(spec, cfg, T, sample=sample)
    m1, m2 = telegraph_moments(spec, T)
    meta = {"tool": f"restime {__version__}", "command": "fluct", **_params(args), "N": cfg.N, "tau_mean": float(sample.tau.mean()),
            "tau2_mean": float((sample.tau**2).mean()), "tau_mean_exact": m1, "tau2_mean_exact": m2,
            "atom0": sample.atom0, "atomT": sample.atomT}
    dest = Path(args.out)
    outcome_csv(out, dest / "fluct_outcome.csv", meta)
    histogram_csv(bin_density(out, args.n_bin), dest / "fluct_hist.csv", meta)
    _write(dest / "fluct_stderr.csv", meta, ["n", "P", "stderr"], zip(out.n, out.P, err))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    results = run_suite(quick=args.quick)
    for r in results:
        print(r.line(), flush=True)
    if args.out:
        _write(Path(args.out) / "verify.csv", {"command": "verify", "quick": args.quick},
               ["check", "passed", "summary"],
               ((r.name, str(r.passed), '"' + r.summary.replace('"', "'") + '"') for r in results))
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _positive(kind):
    def conv(s):
        v = kind(s)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v

    conv.__name__ = kind.__name__
    return conv


def _state(s):
    v = int(s)
    if v not in (1, 2):
        raise argparse.ArgumentTypeError("state labels are 1 or 2")
    return v


def _bool(s):
    low = str(s).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="restime", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"restime {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    pf, pi = _positive(float), _positive(int)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="key = value file; command-line flags override it")
        sp.add_argument("--out", default="out", help="output directory")
        sp.set_defaults(func=func)
        return sp

    s = add("phi", cmd_phi, "amplitude distributions over a (T, tau/T) lattice")
    s.add_argument("--T-min", dest="T_min", type=pf, default=5.0)
    s.add_argument("--T-max", dest="T_max", type=pf, default=100.0)
    s.add_argument("--n-T", dest="n_T", type=pi, default=20)
    s.add_argument("--n-tau", dest="n_tau", type=pi, default=97)
    s.add_argument("--M", type=pi, default=None, help="path-sum steps (default max(2000, 25 T^1.5), rounded up to 100)")
    s.add_argument("--lam-max", dest="lam_max", type=pf, default=200.0)
    s.add_argument("--eps", type=float, default=0.0)
    s.add_argument("--method", choices=("pathsum", "fourier", "both"), default="pathsum")

    s = add("meter", cmd_meter, "exact and large-N meter amplitudes")
    s.add_argument("--N", type=pi, default=10**6)
    s.add_argument("--alpha", type=pf, default=1.0)
    s.add_argument("--tau-max", dest="tau_max", type=pf, default=5.0)
    s.add_argument("--n-tau", dest="n_tau", type=pi, default=51)
    s.add_argument("--n-max", dest="n_max", type=int, default=30)

    s = add("measure", cmd_measure, "outcome tables, densities, histograms and regime overlays")
    s.add_argument("--preset", choices=sorted(PRESETS), default=None)
    s.add_argument("--T", type=pf, default=None)
    s.add_argument("--alpha", type=pf, default=None)
    s.add_argument("--N", type=pi, default=None, help="atom count (default: from alpha, T)")
    s.add_argument("--M", type=pi, default=None)
    s.add_argument("--i", type=_state, default=1)
    s.add_argument("--eps", type=float, default=0.0)
    s.add_argument("--meter", choices=("exact", "asymptotic"), default="exact")
    s.add_argument("--n-bin", dest="n_bin", type=pi, default=100)
    s.add_argument("--n-overlay", dest="n_overlay", type=pi, default=1001)

    s = add("zeno", cmd_zeno, "strong-coupling outcome law against its frozen-qubit limit")
    s.add_argument("--T", type=pf, default=10.0)
    s.add_argument("--alpha", type=pf, default=2.0)
    s.add_argument("--N", type=pi, default=None)
    s.add_argument("--M", type=pi, default=None)
    s.add_argument("--i", type=_state, default=1)

    s = add("weak", cmd_weak, "weak values and the small-coupling P1/P0 ratio")
    s.add_argument("--T-min", dest="T_min", type=pf, default=0.1)
    s.add_argument("--T-max", dest="T_max", type=pf, default=10.0)
    s.add_argument("--n-T", dest="n_T", type=pi, default=100)
    s.add_argument("--alpha", type=pf, default=1e-3)
    s.add_argument("--f", type=_state, default=1)
    s.add_argument("--i", type=_state, default=1)

    s = add("fluct", cmd_fluct, "classical telegraph fluctuator read by the same meter")
    s.add_argument("--k01", type=float, default=1.0)
    s.add_argument("--k10", type=float, default=1.0)
    s.add_argument("--p1-init", dest="p1_init", type=float, default=0.5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-paths", dest="n_paths", type=pi, default=100_000)
    s.add_argument("--T", type=pf, default=100.0)
    s.add_argument("--alpha", type=pf, default=0.1)
    s.add_argument("--N", type=pi, default=None)
    s.add_argument("--n-bin", dest="n_bin", type=pi, default=100)

    s = add("verify", cmd_verify, "run the verification checks")
    s.add_argument("--quick", type=_bool, nargs="?", const=True, default=False)
    s.set_defaults(out=None)
    return p


def read_config(path) -> dict[str, str]:
    out = {}
    for num, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _subparser(parser, name):
    for act in parser._subparsers._group_actions:
        if name in act.choices:
            return act.choices[name]
    raise KeyError(name)


def parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = _subparser(parser, args.command)
        actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "config", "func")}
        cfg = read_config(args.config)
        unknown = sorted(set(cfg) - set(actions))
        if unknown:
            raise ConfigError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        defaults = {}
        for k, v in cfg.items():
            act = actions[k]
            try:
                val = act.type(v) if act.type else v
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"config key {k}: {exc}") from exc
            if act.choices is not None and val not in act.choices:
                raise ConfigError(f"config key {k}: {v!r} not in {sorted(act.choices)}")
            defaults[k] = val
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ConfigError, OSError) as exc:
        print(f"restime: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        if getattr(args, "out", None):
            Path(args.out).mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except ValueError as exc:
        print(f"restime: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
