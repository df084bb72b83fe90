"""Layerwise backward training with exact reverse-mode gradients.

Each cycle trains one step's parameters while everything upstream stays
frozen: fresh product-Haar inputs are pushed through the already-trained
steps, the step under training denoises them, and its parameters descend the
chosen ensemble distance to the matching forward ensemble.

Gradients are computed by hand-rolled adjoints through the whole chain
(unitary, ancilla projection, normalization) rather than an autodiff
framework. The measured ancilla outcomes are treated as fixed during
differentiation, and the optimal transport plan is frozen per evaluation
(an envelope/Danskin argument: at a tie-free optimum the plan does not move
to first order). In enumerated-branch mode the generated ensemble carries
its exact branch probabilities as weights, so two extra first-order effects
appear and are both included: the branch weights' dependence on theta enters
the MMD terms directly, and enters the transport objective through the dual
prices of the column-marginal constraints. Central finite differences are
retained as a first-class gradient mode and as the test oracle.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import seeding
from .circuits import adjoint_gradient, apply_ops
from .denoiser import DenoiserStack, ansatz_ops, attach_ancillas, denoise_batch
from .metrics import TransportProblem, _solve_transport_lp, mean_kernel, solve_transport
from .qstate import StateEnsemble, haar_product_batch

COSTS = ("wasserstein", "mmd")
GRADIENT_MODES = ("adjoint", "finite_difference")
BRANCH_MODES = ("sampled", "enumerated")


@dataclass(frozen=True)
class TrainConfig:
    """Per-step optimization settings; Adam moment decay and epsilon follow
    the conventional defaults and are recorded in the report."""

    epochs: int = 1000
    batch_size: int = 100
    learning_rate: float = 0.001
    cost: str = "wasserstein"
    seed: int | None = None
    gradient_mode: str = "adjoint"
    branch_mode: str = "sampled"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.cost not in COSTS:
            raise ValueError(f"cost must be one of {COSTS}, got {self.cost!r}")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if self.branch_mode not in BRANCH_MODES:
            raise ValueError(f"branch_mode must be one of {BRANCH_MODES}")


@dataclass
class TrainReport:
    """Loss curves (one array per cycle, outermost-trained step first),
    timing, the post-training distance of each step, and the seeds used."""

    loss_curves: list[np.ndarray] = field(default_factory=list)
    final_costs: list[float] = field(default_factory=list)
    wall_clock_seconds: float = 0.0
    seed_entropy: int | None = None
    adam_hyperparams: dict = field(default_factory=dict)


class TrainingError(RuntimeError):
    pass


@dataclass
class _Adam:
    learning_rate: float
    beta1: float
    beta2: float
    epsilon: float
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    t: int = 0

    def update(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


@dataclass(frozen=True)
class DenoiseStepProblem:
    """One step's training instance: the data states entering the step
    (already propagated through all frozen later steps) and the forward
    ensemble they should match after denoising."""

    inputs: np.ndarray  # (B, 2**n_data) row-stacked states
    targets: StateEnsemble
    n_ancilla: int
    layers: int

    @property
    def n_data(self) -> int:
        return int(self.inputs.shape[1]).bit_length() - 1

    @property
    def n_qubits(self) -> int:
        return self.n_data + self.n_ancilla


def draw_outcomes(
    theta: np.ndarray, problem: DenoiseStepProblem, rng: np.random.Generator
) -> np.ndarray:
    """Sample one ancilla outcome per input, for the sampled branch mode."""
    psi = _run_step(theta, problem)
    batch = psi.shape[0]
    if problem.n_ancilla == 0:
        return np.zeros(batch, dtype=int)
    blocks = psi.reshape(batch, 2**problem.n_data, 2**problem.n_ancilla)
    probs = np.einsum("bkz,bkz->bz", blocks.conj(), blocks).real
    cum = np.cumsum(probs, axis=1)
    u = rng.random(batch)
    z = (u[:, None] * cum[:, -1:] >= cum).sum(axis=1)
    return np.minimum(z, 2**problem.n_ancilla - 1)


def _run_step(theta: np.ndarray, problem: DenoiseStepProblem) -> np.ndarray:
    joint = attach_ancillas(problem.inputs, problem.n_ancilla)
    return apply_ops(joint, problem.n_qubits, ansatz_ops(problem.n_qubits, problem.layers), theta)


def _branches(
    theta: np.ndarray,
    problem: DenoiseStepProblem,
    branch_mode: str,
    outcomes: np.ndarray | None,
):
    """Run the step and collect measurement branches.

    Returns the joint output states ``psi`` plus per-branch arrays: the
    unnormalized projected vectors ``u``, probabilities ``p``, owning sample
    ``own``, ancilla index ``z``, and ensemble weights ``w`` (exact branch
    probabilities over the batch in enumerated mode, uniform otherwise).
    """
    psi = _run_step(theta, problem)
    batch = psi.shape[0]
    d_anc = 2**problem.n_ancilla
    blocks = psi.reshape(batch, 2**problem.n_data, d_anc)
    if branch_mode == "enumerated" and problem.n_ancilla > 0:
        probs = np.einsum("bkz,bkz->bz", blocks.conj(), blocks).real
        own, z = np.nonzero(probs >= 1e-14)
        u = blocks[own, :, z]
        p = probs[own, z]
        w = p / batch
    else:
        if outcomes is None:
            raise ValueError("sampled branch mode needs outcomes (use draw_outcomes)")
        own = np.arange(batch)
        z = np.asarray(outcomes, dtype=int)
        u = blocks[own, :, z]
        p = np.einsum("ck,ck->c", u.conj(), u).real
        w = np.full(batch, 1.0 / batch)
    return psi, u, p, own, z, w


def _kernel_cotangent(
    coeff: np.ndarray, s: np.ndarray, k: np.ndarray, t_mat: np.ndarray, u: np.ndarray, p: np.ndarray
) -> np.ndarray:
    """Cotangent of ``sum_ic coeff_ic * k_ic`` with ``k = |<t_i|u_c>|**2 / p_c``.

    Per branch c: sum_i coeff_ic [ (conj(s_ic)/p_c) conj(t_i) - (k_ic/p_c) conj(u_c) ].
    """
    first = (t_mat.conj().T @ (coeff * s.conj())).T / p[:, None]
    second = ((coeff * k).sum(axis=0) / p)[:, None] * u.conj()
    return first - second


def step_cost(
    theta: np.ndarray,
    problem: DenoiseStepProblem,
    cost: str,
    branch_mode: str,
    outcomes: np.ndarray | None = None,
) -> float:
    c, _ = _cost_and_cotangents(theta, problem, cost, branch_mode, outcomes, want_grad=False)
    return c


def _cost_and_cotangents(
    theta: np.ndarray,
    problem: DenoiseStepProblem,
    cost: str,
    branch_mode: str,
    outcomes: np.ndarray | None,
    want_grad: bool,
):
    psi, u, p, own, z, w = _branches(theta, problem, branch_mode, outcomes)
    t_mat = problem.targets.matrix()
    a = problem.targets.weights
    s = t_mat.conj() @ u.T  # (Nt, M): <t_i|u_c>
    k_tg = np.abs(s) ** 2 / p[None, :]
    weights_vary = branch_mode == "enumerated" and problem.n_ancilla > 0

    if cost == "wasserstein":
        c_mat = 1.0 - k_tg
        tp = TransportProblem(np.clip(c_mat, 0.0, 1.0), a, w)
        plan = _solve_transport_lp(tp) if weights_vary else solve_transport(tp)
        value = plan.objective
        if not want_grad:
            return value, None
        cot = _kernel_cotangent(-plan.matrix, s, k_tg, t_mat, u, p)
        if weights_vary:
            cot += (plan.col_duals / problem.inputs.shape[0])[:, None] * u.conj()
    else:  # mmd
        uin = u.conj() @ u.T  # (M, M): <u_c|u_c'>
        k_gg = np.abs(uin) ** 2 / np.outer(p, p)
        d_tt = mean_kernel(problem.targets, problem.targets)
        value = float(d_tt + w @ k_gg @ w - 2.0 * a @ k_tg @ w)
        if not want_grad:
            return value, None
        cot = _kernel_cotangent(-2.0 * np.outer(a, w), s, k_tg, t_mat, u, p)
        f = (np.outer(w, w) / np.outer(p, p)) * uin
        cot += 2.0 * (f @ u.conj())
        cot -= 2.0 * ((w / p) * (k_gg @ w))[:, None] * u.conj()
        if weights_vary:
            dcost_dw = 2.0 * (k_gg @ w) - 2.0 * (k_tg.T @ a)
            cot += (dcost_dw / problem.inputs.shape[0])[:, None] * u.conj()

    # scatter branch cotangents into the ancilla blocks of the joint output
    batch, dim = psi.shape
    full = np.zeros((batch, 2**problem.n_data, 2**problem.n_ancilla), dtype=complex)
    full[own, :, z] = cot
    return value, (psi, full.reshape(batch, dim))


def cost_and_gradient(
    theta: np.ndarray,
    problem: DenoiseStepProblem,
    cost: str = "wasserstein",
    branch_mode: str = "enumerated",
    outcomes: np.ndarray | None = None,
    gradient_mode: str = "adjoint",
    fd_step: float = 1e-5,
) -> tuple[float, np.ndarray]:
    """Ensemble distance between targets and the denoised batch, with its
    gradient in theta. Sampled mode requires pre-drawn ``outcomes`` so that
    the cost is a deterministic function of theta."""
    theta = np.asarray(theta, dtype=float)
    if cost not in COSTS:
        raise ValueError(f"cost must be one of {COSTS}")
    if gradient_mode == "finite_difference":
        value = step_cost(theta, problem, cost, branch_mode, outcomes)
        grad = finite_difference_gradient(
            lambda t: step_cost(t, problem, cost, branch_mode, outcomes), theta, fd_step
        )
        return value, grad
    value, pair = _cost_and_cotangents(theta, problem, cost, branch_mode, outcomes, want_grad=True)
    psi, cotangents = pair
    n = problem.n_qubits
    grad = adjoint_gradient(psi, cotangents, n, ansatz_ops(n, problem.layers), theta)
    if not np.all(np.isfinite(grad)):
        bad = np.flatnonzero(~np.isfinite(grad))
        raise TrainingError(f"non-finite gradient entries at parameter indices {bad.tolist()}")
    return value, grad


def finite_difference_gradient(
    f: Callable[[np.ndarray], float], theta: np.ndarray, step: float = 1e-5
) -> np.ndarray:
    """Central differences, the reference gradient for every adjoint path."""
    grad = np.zeros(theta.size)
    for i in range(theta.size):
        up = theta.copy()
        up[i] += step
        down = theta.copy()
        down[i] -= step
        grad[i] = (f(up) - f(down)) / (2 * step)
    return grad


def train_layerwise(
    forward_ensembles: Sequence[StateEnsemble],
    stack: DenoiserStack,
    cfg: TrainConfig,
    seed: seeding.SeedLike = None,
) -> tuple[DenoiserStack, TrainReport]:
    """Train the backward chain one step at a time, outermost step first.

    ``forward_ensembles[k]`` must hold the forward ensemble S_k for
    k = 0 .. steps-1; the scrambled endpoint's role is played by fresh
    product-Haar samples. Each epoch redraws the Haar inputs, the upstream
    ancilla outcomes, and a without-replacement target mini-batch.
    """
    if len(forward_ensembles) != stack.steps:
        raise ValueError(
            f"need forward ensembles S_0..S_{stack.steps - 1}, got {len(forward_ensembles)}"
        )
    for k, ens in enumerate(forward_ensembles):
        if ens.n_qubits != stack.n_data:
            raise ValueError(f"forward ensemble {k} has {ens.n_qubits} qubits")
        if cfg.batch_size > len(ens):
            raise ValueError(
                f"batch_size {cfg.batch_size} exceeds ensemble size {len(ens)}"
            )
    root = seeding.root_sequence(seed if seed is not None else cfg.seed)
    report = TrainReport(
        seed_entropy=root.entropy,
        adam_hyperparams={
            "beta1": cfg.adam_beta1,
            "beta2": cfg.adam_beta2,
            "epsilon": cfg.adam_epsilon,
            "learning_rate": cfg.learning_rate,
        },
    )
    started = time.perf_counter()
    for k in range(stack.steps, 0, -1):
        theta = stack.thetas[k - 1].copy()
        adam = _Adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon)
        losses = np.zeros(cfg.epochs)
        for epoch in range(cfg.epochs):
            target_ens = forward_ensembles[k - 1]
            picks = seeding.substream(root, k, epoch, 0).choice(
                len(target_ens), size=cfg.batch_size, replace=False
            )
            targets = StateEnsemble([target_ens.states[i] for i in picks])
            inputs = _generate_step_inputs(stack, k, cfg.batch_size, root, epoch)
            problem = DenoiseStepProblem(inputs, targets, stack.n_ancilla, stack.layers)
            outcomes = None
            if cfg.branch_mode == "sampled":
                outcomes = draw_outcomes(theta, problem, seeding.substream(root, k, epoch, 3))
            loss, grad = cost_and_gradient(
                theta,
                problem,
                cost=cfg.cost,
                branch_mode=cfg.branch_mode,
                outcomes=outcomes,
                gradient_mode=cfg.gradient_mode,
                fd_step=cfg.fd_step,
            )
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at cycle for step {k}, epoch {epoch}")
            losses[epoch] = loss
            theta = adam.update(theta, grad)
        stack.thetas[k - 1] = theta
        report.loss_curves.append(losses)
        report.final_costs.append(
            _evaluate_step(stack, k, forward_ensembles[k - 1], cfg, root)
        )
    report.wall_clock_seconds = time.perf_counter() - started
    report.final_costs.reverse()  # index by step: final_costs[k-1] scores step k
    report.loss_curves.reverse()
    return stack, report


def _generate_step_inputs(
    stack: DenoiserStack,
    k: int,
    batch: int,
    root: np.random.SeedSequence,
    epoch: int,
) -> np.ndarray:
    """Fresh Haar-product inputs pushed through the frozen steps K..k+1."""
    haar_rng = seeding.substream(root, k, epoch, 1)
    upstream_rng = seeding.substream(root, k, epoch, 2)
    amps = haar_product_batch(stack.n_data, batch, haar_rng)
    for kk in range(stack.steps, k, -1):
        amps = denoise_batch(
            amps,
            stack.thetas[kk - 1],
            stack.n_data,
            stack.n_ancilla,
            stack.layers,
            upstream_rng.random(batch),
        )
    return amps


def _evaluate_step(
    stack: DenoiserStack,
    k: int,
    target: StateEnsemble,
    cfg: TrainConfig,
    root: np.random.SeedSequence,
) -> float:
    """Post-training distance of step k's output ensemble to its forward target."""
    inputs = _generate_step_inputs(stack, k, len(target), root, cfg.epochs)
    problem = DenoiseStepProblem(inputs, target, stack.n_ancilla, stack.layers)
    outcomes = None
    if cfg.branch_mode == "sampled":
        outcomes = draw_outcomes(
            stack.thetas[k - 1], problem, seeding.substream(root, k, cfg.epochs, 3)
        )
    return step_cost(stack.thetas[k - 1], problem, cfg.cost, cfg.branch_mode, outcomes)
