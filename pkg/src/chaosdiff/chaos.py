"""Mixed-field Ising chain and exact time evolution.

The chain couples neighboring sites through XX terms and applies uniform x
and y fields, with open boundaries:

    H = sum_j (hx X_j + hy Y_j) + J sum_j X_j X_{j+1}

With both fields nonzero the model is nonintegrable and thermalizing, which
is what makes it useful as a scrambling resource. The propagator
``exp(-i H t)`` is realized through a cached dense eigendecomposition rather
than Trotterization: at the dimensions this package targets (<= 2**13) exact
diagonalization is affordable once, after which every evolution is two dense
matrix-vector products.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from .qstate import PAULI_X, PAULI_Y, Ket

DEFAULT_MAX_SITES = 13


@dataclass(frozen=True, eq=False)
class ChaoticHamiltonian:
    """Dense mixed-field Ising Hamiltonian with its spectral decomposition."""

    n_sites: int
    hx: float
    hy: float
    coupling: float
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return 2**self.n_sites


@dataclass(frozen=True)
class EvolutionConfig:
    """Time step (units of 1/J) and the Hamiltonian driving it."""

    dt: float
    hamiltonian: ChaoticHamiltonian

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")


def _site_op(op: np.ndarray, site: int, n: int) -> sparse.csr_matrix:
    left = sparse.identity(2**site, format="csr", dtype=complex)
    right = sparse.identity(2 ** (n - site - 1), format="csr", dtype=complex)
    return sparse.kron(sparse.kron(left, sparse.csr_matrix(op)), right, format="csr")


@lru_cache(maxsize=8)
def _build(n_sites: int, hx: float, hy: float, coupling: float) -> ChaoticHamiltonian:
    h = sparse.csr_matrix((2**n_sites, 2**n_sites), dtype=complex)
    for j in range(n_sites):
        h = h + hx * _site_op(PAULI_X, j, n_sites) + hy * _site_op(PAULI_Y, j, n_sites)
    for j in range(n_sites - 1):
        h = h + coupling * _site_op(PAULI_X, j, n_sites) @ _site_op(PAULI_X, j + 1, n_sites)
    dense = h.toarray()
    if not np.allclose(dense, dense.conj().T, atol=1e-10):
        raise AssertionError("constructed Hamiltonian is not Hermitian")
    evals, evecs = np.linalg.eigh(dense)
    return ChaoticHamiltonian(n_sites, hx, hy, coupling, dense, evals, evecs)


def build_hamiltonian(
    n_sites: int,
    hx: float,
    hy: float,
    coupling: float,
    max_sites: int = DEFAULT_MAX_SITES,
) -> ChaoticHamiltonian:
    """Construct (or fetch from cache) the chain Hamiltonian and its spectrum."""
    if n_sites < 2:
        raise ValueError(f"chain needs at least 2 sites, got {n_sites}")
    if n_sites > max_sites:
        raise ValueError(
            f"{n_sites} sites exceeds the dense-diagonalization cap of {max_sites}"
        )
    return _build(int(n_sites), float(hx), float(hy), float(coupling))


def propagator(hamiltonian: ChaoticHamiltonian, t: float) -> np.ndarray:
    """Dense ``exp(-i H t)`` from the cached spectrum (exact identity at t=0)."""
    if t == 0.0:
        return np.eye(hamiltonian.dim, dtype=complex)
    phases = np.exp(-1j * hamiltonian.eigenvalues * t)
    return (hamiltonian.eigenvectors * phases) @ hamiltonian.eigenvectors.conj().T


def evolve(state: Ket, hamiltonian: ChaoticHamiltonian, t: float) -> Ket:
    """Evolve a ket for time ``t`` under the cached spectral decomposition."""
    if state.n_qubits != hamiltonian.n_sites:
        raise ValueError(
            f"state has {state.n_qubits} qubits, Hamiltonian has {hamiltonian.n_sites} sites"
        )
    if t < 0:
        raise ValueError(f"evolution time must be nonnegative, got {t}")
    if t == 0.0:
        return state
    v = hamiltonian.eigenvectors
    coeffs = v.conj().T @ state.amplitudes
    coeffs *= np.exp(-1j * hamiltonian.eigenvalues * t)
    return Ket(v @ coeffs)


def evolve_batch(amplitudes: np.ndarray, hamiltonian: ChaoticHamiltonian, t: float) -> np.ndarray:
    """Evolve row-stacked states ``(B, 2**n)`` for time ``t``."""
    return amplitudes @ propagator(hamiltonian, t).T
