"""Forward diffusion: chaotic-evolution schemes (cumulative and repeated) and
random-circuit scrambling, plus the execution-time cost model.

Both chaotic schemes attach a randomly drawn computational-basis state on the
complement register, evolve the joint system under the chain Hamiltonian, and
measure the complement, keeping the projected state on the data register:

* cumulative: step k restarts from the *original* sample and evolves for
  ``k * dt`` in one shot, so the k-th ensemble needs only one unitary;
* repeated: step k consumes the step k-1 output, attaches a fresh complement
  sample, and evolves for ``dt``, so one fixed unitary serves every step.

The circuit scheme applies per-sample random layers (per-qubit ZYZ rotations
followed by all-to-all ZZ entanglers) whose angle scale grows as
``layer**2 / 100``, cumulatively over layers.

Ensembles are built from one measurement shot per sample per step; exact
branch enumeration over complement inits and outcomes (the classically
weighted form) is exposed separately for small-system work.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import chaos, noisemod, seeding
from .qstate import Ket, StateEnsemble, measure_trailing_batch

SCHEMES = ("cted", "rted", "rucd")


@dataclass(frozen=True)
class DiffusionConfig:
    """Shape of one forward-diffusion run.

    ``complement_dist`` is the probability vector over complement bitstrings
    used to draw the attached basis state (uniform when None). The circuit
    scheme ignores ``n_complement``/``dt`` and requires ``n_complement = 0``.
    """

    scheme: str
    n_data: int
    n_complement: int
    steps: int
    dt: float = 0.02
    complement_dist: np.ndarray | None = None
    noise: noisemod.NoiseConfig | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.n_data < 1:
            raise ValueError("n_data must be >= 1")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.scheme == "rucd":
            if self.n_complement != 0:
                raise ValueError("the circuit scheme does not use a complement register")
        else:
            if self.n_complement < 1:
                raise ValueError("chaotic schemes need n_complement >= 1")
            if self.dt < 0:
                raise ValueError("dt must be nonnegative")
        if self.complement_dist is not None:
            q = np.asarray(self.complement_dist, dtype=float)
            if q.shape != (2**self.n_complement,):
                raise ValueError(
                    f"complement_dist must have length {2**self.n_complement}, got {q.shape}"
                )
            if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12:
                raise ValueError("complement_dist must be a probability vector")
            object.__setattr__(self, "complement_dist", q)

    def complement_probs(self) -> np.ndarray:
        if self.complement_dist is not None:
            return self.complement_dist
        d = 2**self.n_complement
        return np.full(d, 1.0 / d)


@dataclass(frozen=True)
class DiffusionStepRecord:
    """Trajectory bookkeeping for one sample at one step: which complement
    state was attached, which outcome was measured with what Born
    probability, and the projected data state."""

    step: int
    complement_init: str
    outcome: str
    born_prob: float
    state: Ket


@dataclass(frozen=True)
class RucdLayerParams:
    """Random angles of one scrambling layer at scale ``alpha``."""

    layer: int
    alpha: float
    rotations: np.ndarray  # (n_data, 3) ZYZ angles in [-alpha*pi/8, alpha*pi/8]
    entangler: float  # shared ZZ angle in [0.4*alpha, 0.6*alpha]

    def __post_init__(self):
        bound = self.alpha * np.pi / 8 + 1e-12
        if np.any(np.abs(self.rotations) > bound):
            raise ValueError("rotation angles exceed the layer's alpha bound")
        if not 0.4 * self.alpha - 1e-12 <= self.entangler <= 0.6 * self.alpha + 1e-12:
            raise ValueError("entangler angle outside [0.4 alpha, 0.6 alpha]")


def rucd_alpha(layer: int) -> float:
    """Scrambling-rate schedule: layer l uses alpha = l**2 / 100."""
    return layer * layer / 100.0


def draw_rucd_layer(n_data: int, layer: int, rng: np.random.Generator) -> RucdLayerParams:
    """Sample one layer's angles at that layer's alpha."""
    alpha = rucd_alpha(layer)
    g = rng.uniform(-alpha * np.pi / 8, alpha * np.pi / 8, size=(n_data, 3))
    s = float(rng.uniform(0.4 * alpha, 0.6 * alpha))
    return RucdLayerParams(layer, alpha, g, s)


@dataclass(frozen=True)
class CostModel:
    """Per-unitary execution times and run shape for the cost comparison."""

    tau_u: float
    tau_c: float
    tau_r: float
    n_samples: int
    steps: int

    def __post_init__(self):
        if min(self.tau_u, self.tau_c, self.tau_r) <= 0:
            raise ValueError("execution times must be positive")
        if self.n_samples < 1 or self.steps < 1:
            raise ValueError("n_samples and steps must be >= 1")


def execution_time(model: CostModel, scheme: str) -> tuple[int, float]:
    """Distinct-unitary count and total execution time to generate every step ensemble.

    All three schemes share the ``tau * N * K(K+1)/2`` total, but differ in
    how many distinct unitaries must be synthesized: ``N*K`` random circuits,
    ``K`` cumulative propagators, or a single repeated propagator.
    """
    n, k = model.n_samples, model.steps
    total_factor = n * k * (k + 1) / 2
    if scheme == "rucd":
        return n * k, model.tau_u * total_factor
    if scheme == "cted":
        return k, model.tau_c * total_factor
    if scheme == "rted":
        return 1, model.tau_r * total_factor
    raise ValueError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# chaotic-evolution schemes


def _check_chaotic(cfg: DiffusionConfig, hamiltonian: chaos.ChaoticHamiltonian, s0: StateEnsemble):
    if hamiltonian.n_sites != cfg.n_data + cfg.n_complement:
        raise ValueError(
            f"Hamiltonian has {hamiltonian.n_sites} sites, config needs "
            f"{cfg.n_data + cfg.n_complement}"
        )
    if s0.n_qubits != cfg.n_data:
        raise ValueError(f"dataset has {s0.n_qubits} qubits, config says {cfg.n_data}")


def _attach_complements(amps: np.ndarray, x: np.ndarray, d_comp: int) -> np.ndarray:
    """Tensor each data row with its complement basis state |x_j>."""
    n, d_data = amps.shape
    joint = np.zeros((n, d_data, d_comp), dtype=complex)
    joint[np.arange(n), :, x] = amps
    return joint.reshape(n, d_data * d_comp)


def _step_records(k, x, z, probs, posts, n_complement) -> list[DiffusionStepRecord]:
    return [
        DiffusionStepRecord(
            step=k,
            complement_init=format(int(xj), f"0{n_complement}b"),
            outcome=format(int(zj), f"0{n_complement}b"),
            born_prob=float(pj),
            state=Ket(row),
        )
        for xj, zj, pj, row in zip(x, z, probs, posts)
    ]


def cted_diffuse(
    s0: StateEnsemble,
    cfg: DiffusionConfig,
    hamiltonian: chaos.ChaoticHamiltonian,
    seed: seeding.SeedLike,
) -> list[tuple[StateEnsemble, list[DiffusionStepRecord]]]:
    """Cumulative-evolution diffusion: step k evolves ``psi_j (x) |x>`` for
    ``k * dt`` starting from the *original* sample, then measures the
    complement. Steps are mutually independent."""
    if cfg.scheme != "cted":
        raise ValueError(f"config scheme is {cfg.scheme!r}, expected 'cted'")
    _check_chaotic(cfg, hamiltonian, s0)
    root = seeding.root_sequence(seed)
    q = cfg.complement_probs()
    base = s0.matrix()
    n = base.shape[0]
    d_comp = 2**cfg.n_complement
    p2 = cfg.noise.p2 if cfg.noise is not None else 0.0
    out = []
    for k in range(1, cfg.steps + 1):
        x = seeding.substream(root, k, 0).choice(d_comp, size=n, p=q)
        joint = _attach_complements(base, x, d_comp)
        joint = chaos.evolve_batch(joint, hamiltonian, k * cfg.dt)
        if p2 > 0.0:
            prob_k = noisemod.dephasing_prob_after_steps(k, p2)
            joint = noisemod.apply_dephasing_batch(
                joint, hamiltonian.n_sites, prob_k, seeding.substream(root, k, 1)
            )
        u = seeding.substream(root, k, 2).random(n)
        z, posts, probs = measure_trailing_batch(joint, 2**cfg.n_data, u)
        records = _step_records(k, x, z, probs, posts, cfg.n_complement)
        out.append((StateEnsemble([r.state for r in records]), records))
    return out


def rted_diffuse(
    s0: StateEnsemble,
    cfg: DiffusionConfig,
    hamiltonian: chaos.ChaoticHamiltonian,
    seed: seeding.SeedLike,
    first_step: int = 1,
) -> list[tuple[StateEnsemble, list[DiffusionStepRecord]]]:
    """Repeated-evolution diffusion: step k consumes the step k-1 output,
    attaches a fresh complement sample, evolves for ``dt`` (never ``k*dt``),
    and measures.

    ``first_step`` lets a stored intermediate ensemble be replayed: passing
    ``s0 = S_{m-1}`` with ``first_step = m`` and the same seed reproduces
    steps m..steps of the full run exactly (streams are keyed by step index,
    not by draw order).
    """
    if cfg.scheme != "rted":
        raise ValueError(f"config scheme is {cfg.scheme!r}, expected 'rted'")
    _check_chaotic(cfg, hamiltonian, s0)
    if not 1 <= first_step <= cfg.steps:
        raise ValueError(f"first_step must be in [1, {cfg.steps}], got {first_step}")
    root = seeding.root_sequence(seed)
    q = cfg.complement_probs()
    current = s0.matrix()
    n = current.shape[0]
    d_comp = 2**cfg.n_complement
    p2 = cfg.noise.p2 if cfg.noise is not None else 0.0
    step_unitary = chaos.propagator(hamiltonian, cfg.dt)
    out = []
    for k in range(first_step, cfg.steps + 1):
        x = seeding.substream(root, k, 0).choice(d_comp, size=n, p=q)
        joint = _attach_complements(current, x, d_comp)
        joint = joint @ step_unitary.T
        if p2 > 0.0:
            joint = noisemod.apply_dephasing_batch(
                joint, hamiltonian.n_sites, p2, seeding.substream(root, k, 1)
            )
        u = seeding.substream(root, k, 2).random(n)
        z, posts, probs = measure_trailing_batch(joint, 2**cfg.n_data, u)
        current = posts
        records = _step_records(k, x, z, probs, posts, cfg.n_complement)
        out.append((StateEnsemble([r.state for r in records]), records))
    return out


def cted_branch_ensemble(
    s0: StateEnsemble,
    cfg: DiffusionConfig,
    hamiltonian: chaos.ChaoticHamiltonian,
    step: int,
) -> StateEnsemble:
    """Exact step-``step`` ensemble by enumerating complement inits and outcomes.

    Member weights are ``w_j * q(x) * p_x(z)``: the classically weighted
    projected ensemble, noise-free. Only sensible for small complements.
    """
    if cfg.scheme != "cted":
        raise ValueError(f"config scheme is {cfg.scheme!r}, expected 'cted'")
    _check_chaotic(cfg, hamiltonian, s0)
    q = cfg.complement_probs()
    d_data, d_comp = 2**cfg.n_data, 2**cfg.n_complement
    unitary = chaos.propagator(hamiltonian, step * cfg.dt)
    states, weights = [], []
    for w_j, ket in s0.members:
        for x in range(d_comp):
            if q[x] == 0.0:
                continue
            joint = np.zeros(d_data * d_comp, dtype=complex)
            joint.reshape(d_data, d_comp)[:, x] = ket.amplitudes
            joint = unitary @ joint
            blocks = joint.reshape(d_data, d_comp)
            probs = np.einsum("kz,kz->z", blocks.conj(), blocks).real
            for z in range(d_comp):
                if probs[z] < 1e-14:
                    continue
                states.append(Ket(blocks[:, z] / np.sqrt(probs[z])))
                weights.append(w_j * q[x] * probs[z])
    return StateEnsemble(states, np.asarray(weights) / np.sum(weights))


# ---------------------------------------------------------------------------
# random-circuit scheme


def _apply_1q_batch(amps: np.ndarray, n: int, qubit: int, mats: np.ndarray) -> np.ndarray:
    """Apply per-sample 2x2 matrices ``(B, 2, 2)`` to one qubit of each row."""
    batch = amps.shape[0]
    d_left = 2**qubit
    d_right = 2 ** (n - qubit - 1)
    psi = amps.reshape(batch, d_left, 2, d_right)
    out = np.einsum("bij,bajc->baic", mats, psi)
    return out.reshape(batch, -1)


def _zz_pattern(n: int) -> np.ndarray:
    """sum over pairs q1<q2 of z_{q1} z_{q2} per basis state, z = +/-1."""
    idx = np.arange(2**n)
    z_total = np.zeros(2**n)
    for q in range(n):
        z_total += 1.0 - 2.0 * ((idx >> (n - 1 - q)) & 1)
    return (z_total**2 - n) / 2.0


def _rot_mats(kind: str, angles: np.ndarray) -> np.ndarray:
    """(B, 2, 2) rotation matrices for a vector of angles."""
    c, s = np.cos(angles / 2), np.sin(angles / 2)
    mats = np.zeros(angles.shape + (2, 2), dtype=complex)
    if kind == "rz":
        mats[..., 0, 0] = c - 1j * s
        mats[..., 1, 1] = c + 1j * s
    elif kind == "ry":
        mats[..., 0, 0] = c
        mats[..., 0, 1] = -s
        mats[..., 1, 0] = s
        mats[..., 1, 1] = c
    else:
        raise ValueError(kind)
    return mats


def rucd_diffuse(
    s0: StateEnsemble, cfg: DiffusionConfig, seed: seeding.SeedLike
) -> list[StateEnsemble]:
    """Scrambling-circuit diffusion: per sample, layer l applies fresh random
    ZYZ rotations then the all-pair ZZ entangler, with angle scale
    ``alpha = l**2/100``; the step-k ensemble is the image under layers 1..k.

    With noise, a uniformly random Pauli follows each single-qubit rotation
    with probability ``p1`` (entanglers stay clean); ``p1 = 0`` runs the
    ideal circuit bit-identically.
    """
    if cfg.scheme != "rucd":
        raise ValueError(f"config scheme is {cfg.scheme!r}, expected 'rucd'")
    if s0.n_qubits != cfg.n_data:
        raise ValueError(f"dataset has {s0.n_qubits} qubits, config says {cfg.n_data}")
    root = seeding.root_sequence(seed)
    n = cfg.n_data
    amps = s0.matrix()
    batch = amps.shape[0]
    pattern = _zz_pattern(n)
    p1 = cfg.noise.p1 if cfg.noise is not None else 0.0
    out = []
    for layer in range(1, cfg.steps + 1):
        alpha = rucd_alpha(layer)
        angle_rng = seeding.substream(root, layer, 0)
        noise_rng = seeding.substream(root, layer, 1)
        g = angle_rng.uniform(-alpha * np.pi / 8, alpha * np.pi / 8, size=(batch, n, 3))
        s = angle_rng.uniform(0.4 * alpha, 0.6 * alpha, size=batch)
        for q in range(n):
            for r, kind in enumerate(("rz", "ry", "rz")):
                amps = _apply_1q_batch(amps, n, q, _rot_mats(kind, g[:, q, r]))
                if p1 > 0.0:
                    amps, _ = noisemod.pauli_noise_batch(amps, n, q, p1, noise_rng)
        if n >= 2:
            amps = amps * np.exp(-1j * (s / (2 * np.sqrt(n)))[:, None] * pattern[None, :])
        out.append(StateEnsemble.from_matrix(amps))
    return out


def diffuse(
    s0: StateEnsemble,
    cfg: DiffusionConfig,
    seed: seeding.SeedLike,
    hamiltonian: chaos.ChaoticHamiltonian | None = None,
) -> list[StateEnsemble]:
    """Scheme dispatch returning just the step ensembles S_1..S_K."""
    if cfg.scheme == "rucd":
        return rucd_diffuse(s0, cfg, seed)
    if hamiltonian is None:
        raise ValueError("chaotic schemes need a Hamiltonian")
    fn = cted_diffuse if cfg.scheme == "cted" else rted_diffuse
    return [ensemble for ensemble, _ in fn(s0, cfg, hamiltonian, seed)]
