"""Independent reference implementations used only to check the library.

Everything here computes the slow, obvious way: explicit Kronecker
embeddings, dense operator products, permutation averaging, brute-force
enumeration. None of it shares code with the package internals it verifies.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np


def random_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def kron_chain(mats: list[np.ndarray]) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def embed_gate(gate: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """Dense 2**n x 2**n embedding of a 1- or 2-qubit gate by index arithmetic."""
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    m = len(targets)
    rest = [q for q in range(n) if q not in targets]
    for row_t in range(2**m):
        for col_t in range(2**m):
            amp = gate[row_t, col_t]
            if amp == 0:
                continue
            for rest_bits in range(2 ** len(rest)):
                row = col = 0
                for pos, q in enumerate(rest):
                    bit = (rest_bits >> (len(rest) - 1 - pos)) & 1
                    row |= bit << (n - 1 - q)
                    col |= bit << (n - 1 - q)
                for pos, q in enumerate(targets):
                    row |= ((row_t >> (m - 1 - pos)) & 1) << (n - 1 - q)
                    col |= ((col_t >> (m - 1 - pos)) & 1) << (n - 1 - q)
                full[row, col] = amp
    return full


def expm_taylor(mat: np.ndarray, order: int = 30, squarings: int = 10) -> np.ndarray:
    """Scaling-and-squaring matrix exponential with a truncated series."""
    scaled = mat / 2**squarings
    term = np.eye(mat.shape[0], dtype=complex)
    out = term.copy()
    for k in range(1, order + 1):
        term = term @ scaled / k
        out += term
    for _ in range(squarings):
        out = out @ out
    return out


def brute_force_assignment(cost: np.ndarray) -> float:
    """Minimum mean transport cost over all permutations (uniform marginals)."""
    n = cost.shape[0]
    best = np.inf
    for perm in permutations(range(n)):
        total = sum(cost[i, perm[i]] for i in range(n)) / n
        best = min(best, total)
    return best


def dense_moment_operator(amps: np.ndarray, weights: np.ndarray, m: int) -> np.ndarray:
    """sum_i w_i (|psi_i><psi_i|)^(x m) built explicitly."""
    d = amps.shape[1]
    out = np.zeros((d**m, d**m), dtype=complex)
    for w, amp in zip(weights, amps):
        vec = amp
        for _ in range(m - 1):
            vec = np.kron(vec, amp)
        out += w * np.outer(vec, vec.conj())
    return out


def permutation_operator(d: int, m: int, perm: tuple[int, ...]) -> np.ndarray:
    """Operator on (C^d)^(x m) sending |j_1 .. j_m> to |j_{perm^-1(1)} ..>."""
    dim = d**m
    op = np.zeros((dim, dim))
    for idx in range(dim):
        digits = []
        rest = idx
        for _ in range(m):
            digits.append(rest % d)
            rest //= d
        digits.reverse()
        permuted = [digits[perm[i]] for i in range(m)]
        out_idx = 0
        for dig in permuted:
            out_idx = out_idx * d + dig
        op[out_idx, idx] = 1.0
    return op


def haar_moment_operator(d: int, m: int) -> np.ndarray:
    """Projector onto the symmetric subspace over its dimension, built by
    averaging all factor permutations."""
    perms = list(permutations(range(m)))
    proj = sum(permutation_operator(d, m, p) for p in perms) / len(perms)
    return proj / np.trace(proj)


def normalized_hs_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def apply_channel(rho: np.ndarray, kraus: list[np.ndarray]) -> np.ndarray:
    return sum(k @ rho @ k.conj().T for k in kraus)
