"""Dataset generators and the experiment-bundle file format.

Three synthetic distributions cover the experiments: a three-cluster mixture
around |0..0>, |1..1>, and the GHZ state with small Gaussian rotation noise;
a one-parameter circular family interpolating the two extremal basis states;
and a compressible family for autoencoder work, built by hiding random
latent states behind one fixed scrambling circuit drawn from the encoder
ansatz family (so a perfect compressor exists by construction).

Bundles are versioned JSON documents holding ensembles (amplitudes as
[re, im] pairs, lossless for float64 round-trips), denoiser and autoencoder
parameters, configs, seeds, and training reports.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import qae
from .circuits import rot_x, rot_y, rot_z
from .denoiser import DenoiserStack
from .qstate import Ket, StateEnsemble, apply_gate_raw, basis_state

FORMAT_VERSION = "1.0"
LOAD_NORM_ATOL = 1e-8


@dataclass(frozen=True)
class ClusterSpec:
    """Three-cluster mixture: |0..0>, |1..1>, GHZ centers with Gaussian
    single-qubit rotation noise of width ``sigma`` radians."""

    n_data: int
    weights: tuple[float, float, float] = (0.4, 0.4, 0.2)
    sigma: float = 0.05

    def __post_init__(self):
        if self.n_data < 1:
            raise ValueError("n_data must be >= 1")
        if abs(sum(self.weights) - 1.0) > 1e-12 or any(w < 0 for w in self.weights):
            raise ValueError("cluster weights must be a probability vector")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def centers(self) -> list[Ket]:
        d = 2**self.n_data
        ghz = np.zeros(d, dtype=complex)
        ghz[0] = ghz[-1] = 1 / np.sqrt(2)
        return [basis_state(self.n_data, 0), basis_state(self.n_data, d - 1), Ket(ghz)]


@dataclass(frozen=True)
class CircularSpec:
    """cos(beta/2)|0..0> + sin(beta/2)|1..1> with beta uniform on [0, 2 pi)."""

    n_data: int
    beta_range: tuple[float, float] = (0.0, 2.0 * np.pi)

    def __post_init__(self):
        if self.n_data < 1:
            raise ValueError("n_data must be >= 1")
        lo, hi = self.beta_range
        if not 0.0 <= lo < hi <= 2.0 * np.pi + 1e-12:
            raise ValueError(f"beta_range must be within [0, 2 pi), got {self.beta_range}")


@dataclass(frozen=True)
class CompressibleSpec:
    """Latent-Haar states hidden behind one fixed scrambling circuit from the
    autoencoder family (depth ``scramble_depth``, angles from ``scramble_seed``)."""

    n_total: int
    n_latent: int
    scramble_depth: int = 2
    scramble_seed: int = 0

    def hidden_model(self) -> qae.QaeModel:
        rng = np.random.default_rng(np.random.SeedSequence(self.scramble_seed))
        return qae.QaeModel.random_init(self.n_total, self.n_latent, self.scramble_depth, rng)


def sample_multicluster(
    spec: ClusterSpec, n_samples: int, rng: np.random.Generator
) -> StateEnsemble:
    """Draw cluster members: pick a center by weight, then rotate every qubit
    about X, Y, and Z by independent N(0, sigma^2) angles."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    centers = spec.centers()
    picks = rng.choice(3, size=n_samples, p=np.asarray(spec.weights))
    states = []
    for c in picks:
        amp = centers[c].amplitudes
        angles = rng.normal(0.0, spec.sigma, size=(spec.n_data, 3))
        for q in range(spec.n_data):
            for rot, ang in zip((rot_x, rot_y, rot_z), angles[q]):
                amp = apply_gate_raw(amp, rot(ang), (q,), spec.n_data)
        states.append(Ket(amp))
    return StateEnsemble(states)


def sample_circular(
    spec: CircularSpec, n_samples: int, rng: np.random.Generator
) -> StateEnsemble:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    beta = rng.uniform(*spec.beta_range, size=n_samples)
    d = 2**spec.n_data
    amps = np.zeros((n_samples, d), dtype=complex)
    amps[:, 0] = np.cos(beta / 2)
    amps[:, -1] = np.sin(beta / 2)
    return StateEnsemble.from_matrix(amps)


def sample_compressible(
    spec: CompressibleSpec, n_samples: int, rng: np.random.Generator
) -> StateEnsemble:
    """Haar-random latent kets, zero-padded on the trash register and pushed
    through the inverse of the hidden encoder (so that encoder recovers them)."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    hidden = spec.hidden_model()
    d_lat = 2**spec.n_latent
    states = []
    for _ in range(n_samples):
        v = rng.normal(size=d_lat) + 1j * rng.normal(size=d_lat)
        latent = Ket(v / np.linalg.norm(v))
        states.append(qae.decode(hidden, latent))
    return StateEnsemble(states)


# ---------------------------------------------------------------------------
# bundle serialization


@dataclass
class Bundle:
    """Everything one experiment needs to be replayed or evaluated later."""

    ensembles: dict[str, StateEnsemble] = field(default_factory=dict)
    denoisers: dict[str, DenoiserStack] = field(default_factory=dict)
    qae_models: dict[str, qae.QaeModel] = field(default_factory=dict)
    configs: dict[str, Any] = field(default_factory=dict)
    seeds: dict[str, int] = field(default_factory=dict)
    reports: dict[str, Any] = field(default_factory=dict)


def _complex_pairs(amps: np.ndarray) -> list[list[float]]:
    return [[float(c.real), float(c.imag)] for c in amps]


def _ensemble_to_json(e: StateEnsemble) -> dict:
    return {
        "n_qubits": e.n_qubits,
        "weights": [float(w) for w in e.weights],
        "amplitudes": [_complex_pairs(s.amplitudes) for s in e.states],
    }


def _ensemble_from_json(obj: dict) -> StateEnsemble:
    states = []
    for rows in obj["amplitudes"]:
        amp = np.array([complex(re, im) for re, im in rows])
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > LOAD_NORM_ATOL:
            raise ValueError(f"stored state norm {norm!r} violates the {LOAD_NORM_ATOL} bound")
        states.append(Ket(amp))
    ensemble = StateEnsemble(states, obj["weights"])
    if ensemble.n_qubits != obj["n_qubits"]:
        raise ValueError("stored qubit count does not match the amplitude length")
    return ensemble


def _stack_to_json(s: DenoiserStack) -> dict:
    return {
        "steps": s.steps,
        "n_data": s.n_data,
        "n_ancilla": s.n_ancilla,
        "layers": s.layers,
        "thetas": [t.tolist() for t in s.thetas],
    }


def _stack_from_json(obj: dict) -> DenoiserStack:
    return DenoiserStack(
        obj["steps"],
        obj["n_data"],
        obj["n_ancilla"],
        obj["layers"],
        [np.asarray(t) for t in obj["thetas"]],
    )


def _qae_to_json(m: qae.QaeModel) -> dict:
    return {
        "n_total": m.n_total,
        "n_latent": m.n_latent,
        "depth": m.depth,
        "params": m.params.tolist(),
    }


def _qae_from_json(obj: dict) -> qae.QaeModel:
    return qae.QaeModel(obj["n_total"], obj["n_latent"], obj["depth"], np.asarray(obj["params"]))


def save_bundle(path: str | os.PathLike, bundle: Bundle) -> None:
    """Write a bundle as versioned JSON; empty ensembles are rejected."""
    for name, e in bundle.ensembles.items():
        if len(e.states) == 0:
            raise ValueError(f"ensemble {name!r} is empty")
    doc = {
        "format_version": FORMAT_VERSION,
        "ensembles": {k: _ensemble_to_json(v) for k, v in bundle.ensembles.items()},
        "denoisers": {k: _stack_to_json(v) for k, v in bundle.denoisers.items()},
        "qae_models": {k: _qae_to_json(v) for k, v in bundle.qae_models.items()},
        "configs": bundle.configs,
        "seeds": bundle.seeds,
        "reports": bundle.reports,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_bundle(path: str | os.PathLike) -> Bundle:
    """Read a bundle, rejecting unknown major versions and corrupted states."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValueError(f"bundle {path} is not valid JSON: {err}") from err
    version = doc.get("format_version")
    if not isinstance(version, str) or version.split(".")[0] != FORMAT_VERSION.split(".")[0]:
        raise ValueError(
            f"bundle version {version!r} is incompatible with {FORMAT_VERSION}"
        )
    return Bundle(
        ensembles={k: _ensemble_from_json(v) for k, v in doc.get("ensembles", {}).items()},
        denoisers={k: _stack_from_json(v) for k, v in doc.get("denoisers", {}).items()},
        qae_models={k: _qae_from_json(v) for k, v in doc.get("qae_models", {}).items()},
        configs=doc.get("configs", {}),
        seeds=doc.get("seeds", {}),
        reports=doc.get("reports", {}),
    )
