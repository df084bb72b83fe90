"""Ensemble distances: fidelity-kernel MMD, exact 1-Wasserstein transport,
normalized moment distances, and the shot-based SWAP-test fidelity estimate.

The moment distance never materializes ``d**m``-dimensional operators.
Writing ``rho^(m) = sum_i w_i (|psi_i><psi_i|)^(x m)``, every Hilbert-Schmidt
inner product reduces to powers of the fidelity table:

    Tr[rho_E^(m) rho_F^(m)] = sum_ij w_i v_j |<psi_i|phi_j>|^(2m)

and against the uniform (Haar) moment both ``Tr[rho^(m) rho_Haar^(m)]`` and
``||rho_Haar^(m)||_2**2`` equal ``1 / binom(d+m-1, m)`` because every
``|psi>^(x m)`` lies inside the symmetric subspace. The dense construction
exists only in the test suite as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog

from .qstate import Ket, StateEnsemble, fidelity, gram_matrix

MMD_NEGATIVE_TOL = -1e-10


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice for ensemble distances; only the normalized fidelity
    kernel ``kappa(a, b) = |<a|b>|**2`` is implemented."""

    kind: str = "fidelity"

    def __post_init__(self):
        if self.kind != "fidelity":
            raise ValueError(f"unsupported kernel {self.kind!r}")


@dataclass(frozen=True)
class TransportProblem:
    """Cost matrix ``C_ij = 1 - kappa_ij`` with marginal histograms a, b."""

    cost: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.cost.shape != (self.a.size, self.b.size):
            raise ValueError("cost shape must match the marginals")
        if np.any(self.cost < -1e-12) or np.any(self.cost > 1 + 1e-12):
            raise ValueError("cost entries must lie in [0, 1]")
        for v in (self.a, self.b):
            if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-12:
                raise ValueError("marginals must be probability vectors")


@dataclass(frozen=True)
class TransportPlan:
    """Optimal coupling, its objective, and (when solved as an LP) the dual
    prices of the marginal constraints."""

    matrix: np.ndarray
    objective: float
    row_duals: np.ndarray | None = None
    col_duals: np.ndarray | None = None


@dataclass(frozen=True)
class MomentReport:
    """Normalized distances of one ensemble's m-th moment to the Haar and
    target references."""

    m: int
    delta_haar: float
    delta_target: float


def mean_kernel(x: StateEnsemble, y: StateEnsemble) -> float:
    """Weighted mean fidelity kernel between two ensembles."""
    return float(x.weights @ gram_matrix(x, y) @ y.weights)


def mmd(x: StateEnsemble, y: StateEnsemble) -> float:
    """Squared-MMD ensemble distance under the fidelity kernel.

    Mathematically nonnegative for this kernel; tiny negative round-off is
    clamped to zero, anything below ``-1e-10`` raises.
    """
    val = mean_kernel(x, x) + mean_kernel(y, y) - 2.0 * mean_kernel(x, y)
    if val < 0.0:
        if val < MMD_NEGATIVE_TOL:
            raise ValueError(f"MMD came out {val}, below the numerical-noise floor")
        return 0.0
    return float(val)


def _solve_transport_lp(problem: TransportProblem) -> TransportPlan:
    """Exact LP solution of the transport problem, with dual prices."""
    n, m = problem.a.size, problem.b.size
    a_eq = sparse.lil_matrix((n + m, n * m))
    for i in range(n):
        a_eq[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        a_eq[n + j, j::m] = 1.0
    b_eq = np.concatenate([problem.a, problem.b])
    res = linprog(
        problem.cost.ravel(), A_eq=a_eq.tocsr(), b_eq=b_eq, bounds=(0, None), method="highs"
    )
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    plan = res.x.reshape(n, m)
    return TransportPlan(
        matrix=plan,
        objective=float(res.fun),
        row_duals=res.eqlin.marginals[:n].copy(),
        col_duals=res.eqlin.marginals[n:].copy(),
    )


def solve_transport(problem: TransportProblem) -> TransportPlan:
    """Exact optimal transport: assignment reduction when both marginals are
    uniform and equal-sized (the plan is then a permutation over N), LP
    otherwise."""
    n, m = problem.a.size, problem.b.size
    uniform = (
        n == m
        and np.allclose(problem.a, 1.0 / n, atol=1e-12)
        and np.allclose(problem.b, 1.0 / m, atol=1e-12)
    )
    if uniform:
        rows, cols = linear_sum_assignment(problem.cost)
        plan = np.zeros_like(problem.cost)
        plan[rows, cols] = 1.0 / n
        return TransportPlan(matrix=plan, objective=float(problem.cost[rows, cols].sum() / n))
    return _solve_transport_lp(problem)


def wasserstein1(
    x: StateEnsemble, y: StateEnsemble
) -> tuple[float, TransportPlan]:
    """Exact 1-Wasserstein distance under cost ``1 - fidelity``.

    Marginals are the ensemble weights (uniform for sampled ensembles, per
    the convention that samples carry equal mass).
    """
    cost = 1.0 - gram_matrix(x, y)
    plan = solve_transport(TransportProblem(cost, x.weights, y.weights))
    return plan.objective, plan


def symmetric_subspace_dim(d: int, m: int) -> int:
    """Dimension of the m-fold symmetric subspace of C^d."""
    return comb(d + m - 1, m)


def moment_overlap(x: StateEnsemble, y: StateEnsemble, m: int) -> float:
    """``Tr[rho_x^(m) rho_y^(m)]`` via the fidelity-power identity."""
    g = gram_matrix(x, y)
    return float(x.weights @ (g**m) @ y.weights)


def moment_distance(
    e: StateEnsemble, m: int, reference: StateEnsemble | str = "haar"
) -> float:
    """Normalized Hilbert-Schmidt distance of the m-th moment to a reference.

    ``reference`` is either another ensemble or the string ``"haar"`` for the
    uniform measure over pure states. Cancellation can push the squared
    distance a hair below zero; it is clamped before the square root.
    """
    if m < 1:
        raise ValueError(f"moment order must be >= 1, got {m}")
    tr_ee = moment_overlap(e, e, m)
    if isinstance(reference, str):
        if reference != "haar":
            raise ValueError(f"unknown reference {reference!r}")
        d_sym = symmetric_subspace_dim(2**e.n_qubits, m)
        tr_er = 1.0 / d_sym
        tr_rr = 1.0 / d_sym
    else:
        if reference.n_qubits != e.n_qubits:
            raise ValueError("reference ensemble must share the qubit count")
        tr_er = moment_overlap(e, reference, m)
        tr_rr = moment_overlap(reference, reference, m)
    delta_sq = tr_ee - 2.0 * tr_er + tr_rr
    return float(np.sqrt(max(delta_sq, 0.0)) / np.sqrt(tr_rr))


def moment_report(e: StateEnsemble, m: int, target: StateEnsemble) -> MomentReport:
    return MomentReport(
        m=m,
        delta_haar=moment_distance(e, m, "haar"),
        delta_target=moment_distance(e, m, target),
    )


def swap_test_fidelity(
    a: Ket, b: Ket, shots: int, rng: np.random.Generator
) -> float:
    """Shot-noise fidelity estimate from the SWAP-test statistics.

    The ancilla reads 0 with probability ``1/2 + |<a|b>|**2 / 2``; the
    estimate ``2 * freq(0) - 1`` is clamped into [0, 1].
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    p0 = 0.5 + 0.5 * fidelity(a, b)
    zeros = rng.binomial(shots, min(p0, 1.0))
    return float(np.clip(2.0 * zeros / shots - 1.0, 0.0, 1.0))
