"""Ground truth from the full qubit + condensate Hamiltonian.

Basis ``|q, n>`` with ``q`` in {1, 2} and ``n`` = atoms in the right well,
q-major: index ``(q - 1) * (N + 1) + n``.  The Hamiltonian is

    H = H_q(eps) (x) 1  +  |1><1| (x) dOmega (c_L^+ c_R + c_R^+ c_L)

with no background hopping.  Small systems are diagonalised densely; larger
ones are propagated with ``scipy.sparse.linalg.expm_multiply`` in fixed
steps, halving the step until the norm error is below tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from .measure import MeasurementOutcome, outcome_tables
from .meter import MeterConfig, hopping_matrix
from .respath import QubitSpec

N_ORACLE_MAX = 2000
NORM_TOL = 1e-8


class NormDriftError(RuntimeError):
    pass


def joint_hamiltonian(cfg: MeterConfig, eps: float = 0.0, dense: bool = True):
    N = cfg.N
    hq = sparse.csr_matrix(np.array([[eps, 1.0], [1.0, 0.0]]))
    p1 = sparse.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    h = sparse.kron(hq, sparse.identity(N + 1)) + cfg.dOmega * sparse.kron(p1, hopping_matrix(N))
    h = h.tocsr().astype(np.complex128)
    return h.toarray() if dense else h


@dataclass
class JointOutcome:
    """``P[f - 1, n]`` (and the amplitudes behind it) for preparation ``|i, 0>``."""

    i: int
    T: float
    cfg: MeterConfig
    eps: float
    P: np.ndarray
    norm_defect: float
    solver: str
    amplitudes: np.ndarray | None = None

    def amplitude(self, f: int, n: int) -> complex:
        return complex(self.amplitudes[f - 1, n])

    def table(self, f: int) -> np.ndarray:
        return self.P[f - 1]


def joint_evolve(spec: QubitSpec, cfg: MeterConfig, T: float, n_oracle_max: int = N_ORACLE_MAX,
                 steps: int = 16) -> JointOutcome:
    """Evolve ``|i, 0>`` for time ``T`` and read off ``|<f, n|psi(T)>|^2``.

    Only ``spec.i`` and ``spec.eps`` are used; both post-selections are returned.
    """
    N = cfg.N
    d = 2 * (N + 1)
    psi0 = np.zeros(d, dtype=np.complex128)
    psi0[(spec.i - 1) * (N + 1)] = 1.0
    if N <= n_oracle_max:
        h = joint_hamiltonian(cfg, spec.eps, dense=True)
        evals, evecs = np.linalg.eigh(h)
        psi = evecs @ (np.exp(-1j * evals * T) * (evecs.conj().T @ psi0))
        solver = "eigh"
    else:
        h = joint_hamiltonian(cfg, spec.eps, dense=False)
        psi = _stepped(h, psi0, T, steps)
        solver = "expm_multiply"
    norm_defect = abs(np.linalg.norm(psi) - 1.0)
    if norm_defect > NORM_TOL:
        raise NormDriftError(f"norm drifted by {norm_defect:.2e}")
    amps = psi.reshape(2, N + 1)
    return JointOutcome(spec.i, T, cfg, spec.eps, np.abs(amps) ** 2, norm_defect, solver, amps)


def _stepped(h, psi0, T, steps, max_halvings=6):
    a = -1j * h
    for _ in range(max_halvings):
        psi = psi0
        for _ in range(steps):
            psi = expm_multiply(a * (T / steps), psi)
        if abs(np.linalg.norm(psi) - 1.0) < NORM_TOL:
            return psi
        steps *= 2
    return psi


def _distances(pipe: MeasurementOutcome, exact: np.ndarray):
    n = min(pipe.n.size, exact.size)
    p = np.zeros(exact.size)
    p[:n] = pipe.P[:n]
    diff = p - exact
    # mass the pipeline table carries beyond N cannot exist; count it once
    extra = float(pipe.P[n:].sum())
    return float(np.max(np.abs(diff))), 0.5 * float(np.abs(diff).sum() + extra)


def factorization_report(spec: QubitSpec, cfg: MeterConfig, T: float, M: int,
                         joint: JointOutcome | None = None) -> dict:
    """Distances between pipeline tables (at ``M`` and ``2M`` steps) and the oracle.

    The ``extrapolated_*`` entries compare a Richardson combination of the two
    pipeline tables, assuming second-order convergence in ``1/M``.
    """
    if joint is None:
        joint = joint_evolve(spec, cfg, T)
    exact = joint.table(spec.f)
    coarse = outcome_tables(spec.i, cfg, T, spec.eps, "exact", M, n_cut=cfg.N)[spec.f]
    fine = outcome_tables(spec.i, cfg, T, spec.eps, "exact", 2 * M, n_cut=cfg.N)[spec.f]
    sup_c, tv_c = _distances(coarse, exact)
    sup_f, tv_f = _distances(fine, exact)
    extrap = MeasurementOutcome(fine.n, np.clip((4 * fine.P - coarse.P) / 3, 0, None), fine.meta)
    sup_e, tv_e = _distances(extrap, exact)
    return {
        "f": spec.f, "i": spec.i, "T": T, "N": cfg.N, "alpha": cfg.alpha, "M": M,
        "sup": sup_c, "tv": tv_c,
        "sup_2M": sup_f, "tv_2M": tv_f,
        "order": float(np.log2(sup_c / sup_f)) if sup_f > 0 else float("inf"),
        "extrapolated_sup": sup_e, "extrapolated_tv": tv_e,
        "oracle_solver": joint.solver, "oracle_norm_defect": joint.norm_defect,
    }
