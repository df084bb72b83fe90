"""Config-driven experiment runner.

Subcommands reproduce the experiment shapes end to end and emit plot-ready
CSV tables with fixed headers (part of the public contract):

* ``forward``      per-step ensemble metrics of a diffusion run
* ``train``        forward diffusion + layerwise backward training, persisted
                   as a bundle plus per-cycle loss curves
* ``sample``       draw an ensemble from a trained bundle
* ``evaluate``     distance table between two stored ensembles
* ``noise-sweep``  pipeline distance across a grid of noise strengths
* ``qae``          autoencoder training and the latent-vs-full comparison

One master seed fans out to named sub-streams (dataset / forward / train /
noise / generation / evaluation), so changing one stage's workload never
perturbs another stage's randomness, and reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import data as datamod
from . import denoiser, forward, metrics, noisemod, qae, seeding, train
from .qstate import StateEnsemble
from .chaos import ChaoticHamiltonian, build_hamiltonian

FORWARD_HEADER = "scheme,k,n_f,m,metric_name,value,trial"
LOSS_HEADER = "cycle,epoch,loss"
NOISE_HEADER = "scheme,noise_param,value,trial,D_wass"
EVALUATE_HEADER = "metric_name,m,value"
QAE_HEADER = "space,metric_name,value,trial"

# named sub-streams of the master seed
STREAM_DATASET = 0
STREAM_FORWARD = 1
STREAM_TRAIN = 2
STREAM_NOISE = 3
STREAM_GENERATE = 4
STREAM_EVAL = 5

PAPER_HAMILTONIAN = {"hx": 0.8090, "hy": 0.9045, "coupling": 1.0}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Validated experiment description (see README for the JSON schema)."""

    dataset: dict
    diffusion: dict = field(default_factory=dict)
    hamiltonian: dict = field(default_factory=lambda: dict(PAPER_HAMILTONIAN))
    denoiser: dict = field(default_factory=lambda: {"n_ancilla": 1, "layers": 4})
    train: dict = field(default_factory=dict)
    noise: dict | None = None
    metrics: dict = field(default_factory=lambda: {"moments": [1], "distances": ["wasserstein"]})
    noise_sweep: dict = field(default_factory=dict)
    qae: dict = field(default_factory=dict)
    evaluate: dict = field(default_factory=dict)
    n_samples: int = 100
    trials: int = 1
    seed: int = 0
    out_dir: str = "results"
    threads: int = 1

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as err:
                raise ConfigError(f"config {path} is not valid JSON: {err}") from err
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)

    def __post_init__(self):
        if "kind" not in self.dataset:
            raise ConfigError("dataset.kind is required (multicluster|circular|compressible)")
        if self.dataset["kind"] not in ("multicluster", "circular", "compressible"):
            raise ConfigError(f"unknown dataset kind {self.dataset['kind']!r}")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    # -- validated sub-configs -------------------------------------------------

    def n_data(self) -> int:
        if self.dataset["kind"] == "compressible":
            return int(self.dataset["n_latent"])
        return int(self.dataset.get("n_data", 2))

    def noise_config(self) -> noisemod.NoiseConfig | None:
        if not self.noise:
            return None
        try:
            return noisemod.NoiseConfig(
                p1=self.noise.get("p1", 0.0),
                p2=self.noise.get("p2", 0.0),
                gamma_phi=self.noise.get("gamma_phi"),
            )
        except ValueError as err:
            raise ConfigError(f"noise: {err}") from err

    def diffusion_config(self, n_data: int | None = None) -> forward.DiffusionConfig:
        d = self.diffusion
        if "scheme" not in d:
            raise ConfigError("diffusion.scheme is required (cted|rted|rucd)")
        scheme = d["scheme"]
        try:
            return forward.DiffusionConfig(
                scheme=scheme,
                n_data=n_data if n_data is not None else self.n_data(),
                n_complement=int(d.get("n_complement", 0 if scheme == "rucd" else 2)),
                steps=int(d.get("steps", 10)),
                dt=float(d.get("dt", 0.02)),
                complement_dist=(
                    np.asarray(d["complement_dist"]) if d.get("complement_dist") else None
                ),
                noise=self.noise_config(),
            )
        except ValueError as err:
            raise ConfigError(f"diffusion: {err}") from err

    def train_config(self) -> train.TrainConfig:
        t = self.train
        try:
            cfg = train.TrainConfig(
                epochs=int(t.get("epochs", 1000)),
                batch_size=int(t.get("batch_size", 100)),
                learning_rate=float(t.get("learning_rate", 0.001)),
                cost=t.get("cost", "wasserstein"),
                gradient_mode=t.get("gradient_mode", "adjoint"),
                branch_mode=t.get("branch_mode", "sampled"),
            )
        except ValueError as err:
            raise ConfigError(f"train: {err}") from err
        if cfg.batch_size > self.n_samples:
            raise ConfigError(
                f"train.batch_size {cfg.batch_size} exceeds n_samples {self.n_samples}"
            )
        return cfg

    def hamiltonian_for(self, cfg: forward.DiffusionConfig) -> ChaoticHamiltonian | None:
        if cfg.scheme == "rucd":
            return None
        h = self.hamiltonian
        return build_hamiltonian(
            cfg.n_data + cfg.n_complement,
            hx=float(h.get("hx", PAPER_HAMILTONIAN["hx"])),
            hy=float(h.get("hy", PAPER_HAMILTONIAN["hy"])),
            coupling=float(h.get("coupling", PAPER_HAMILTONIAN["coupling"])),
        )


# ---------------------------------------------------------------------------
# pipeline building blocks (also reused by the acceptance suite)


def build_dataset(cfg: ExperimentConfig, n_samples: int, rng: np.random.Generator) -> StateEnsemble:
    d = cfg.dataset
    kind = d["kind"]
    if kind == "multicluster":
        spec = datamod.ClusterSpec(
            n_data=int(d.get("n_data", 2)),
            weights=tuple(d.get("weights", (0.4, 0.4, 0.2))),
            sigma=float(d.get("sigma", 0.05)),
        )
        return datamod.sample_multicluster(spec, n_samples, rng)
    if kind == "circular":
        return datamod.sample_circular(
            datamod.CircularSpec(n_data=int(d.get("n_data", 2))), n_samples, rng
        )
    spec = datamod.CompressibleSpec(
        n_total=int(d["n_total"]),
        n_latent=int(d["n_latent"]),
        scramble_depth=int(d.get("scramble_depth", 2)),
        scramble_seed=int(d.get("scramble_seed", 0)),
    )
    return datamod.sample_compressible(spec, n_samples, rng)


def forward_ensembles_for_training(
    dataset: StateEnsemble,
    dcfg: forward.DiffusionConfig,
    hamiltonian: ChaoticHamiltonian | None,
    seed: seeding.SeedLike,
) -> list[StateEnsemble]:
    """S_0 .. S_{K-1}: the dataset itself plus the first K-1 diffusion steps."""
    if dcfg.steps == 1:
        return [dataset]
    truncated = forward.DiffusionConfig(
        scheme=dcfg.scheme,
        n_data=dcfg.n_data,
        n_complement=dcfg.n_complement,
        steps=dcfg.steps - 1,
        dt=dcfg.dt,
        complement_dist=dcfg.complement_dist,
        noise=dcfg.noise,
    )
    return [dataset] + forward.diffuse(dataset, truncated, seed, hamiltonian)


def run_training_pipeline(
    cfg: ExperimentConfig,
    trial: int,
    dataset_override: StateEnsemble | None = None,
    n_data: int | None = None,
) -> tuple[denoiser.DenoiserStack, train.TrainReport, StateEnsemble]:
    """Dataset, forward diffusion, layerwise training; returns the trained
    stack, the report, and the dataset used."""
    root = seeding.root_sequence(cfg.seed)
    dcfg = cfg.diffusion_config(n_data)
    h = cfg.hamiltonian_for(dcfg)
    dataset = dataset_override
    if dataset is None:
        dataset = build_dataset(
            cfg, cfg.n_samples, seeding.substream(root, STREAM_DATASET, trial)
        )
    ensembles = forward_ensembles_for_training(
        dataset, dcfg, h, seeding.child_sequence(root, STREAM_FORWARD, trial)
    )
    den = cfg.denoiser
    stack = denoiser.DenoiserStack.random_init(
        dcfg.steps,
        dcfg.n_data,
        int(den.get("n_ancilla", 1)),
        int(den.get("layers", 4)),
        seeding.substream(root, STREAM_TRAIN, trial, 0),
    )
    tcfg = cfg.train_config()
    stack, report = train.train_layerwise(
        ensembles, stack, tcfg, seeding.child_sequence(root, STREAM_TRAIN, trial, 1)
    )
    return stack, report, dataset


def final_wasserstein(
    cfg: ExperimentConfig, stack: denoiser.DenoiserStack, trial: int
) -> float:
    """Distance between a fresh generated ensemble and held-out target samples."""
    root = seeding.root_sequence(cfg.seed)
    generated = denoiser.generate(
        stack, cfg.n_samples, seeding.child_sequence(root, STREAM_GENERATE, trial)
    ).final
    held_out = build_dataset(cfg, cfg.n_samples, seeding.substream(root, STREAM_EVAL, trial))
    if generated.n_qubits != held_out.n_qubits:
        raise ConfigError("generated and held-out ensembles have mismatched qubit counts")
    return metrics.wasserstein1(generated, held_out)[0]


# ---------------------------------------------------------------------------
# CSV plumbing


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: str, rows: list[tuple]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [header] + [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def _run_trials(cfg: ExperimentConfig, worker) -> list[tuple]:
    trials = range(cfg.trials)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            chunks = list(pool.map(worker, trials))
    else:
        chunks = [worker(t) for t in trials]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: tuple(str(v) for v in r))
    return rows


# ---------------------------------------------------------------------------
# commands


def cmd_forward(cfg: ExperimentConfig) -> Path:
    """Diffuse the dataset and tabulate per-step metrics against the Haar and
    target references."""
    dcfg = cfg.diffusion_config()
    h = cfg.hamiltonian_for(dcfg)
    root = seeding.root_sequence(cfg.seed)
    moments = [int(m) for m in cfg.metrics.get("moments", [1])]
    distances = cfg.metrics.get("distances", ["wasserstein"])

    def worker(trial: int) -> list[tuple]:
        dataset = build_dataset(cfg, cfg.n_samples, seeding.substream(root, STREAM_DATASET, trial))
        steps = forward.diffuse(
            dataset, dcfg, seeding.child_sequence(root, STREAM_FORWARD, trial), h
        )
        rows = []
        for k, ensemble in enumerate(steps, start=1):
            for m in moments:
                rows.append(
                    (dcfg.scheme, k, dcfg.n_complement, m, "delta_haar",
                     metrics.moment_distance(ensemble, m, "haar"), trial)
                )
                rows.append(
                    (dcfg.scheme, k, dcfg.n_complement, m, "delta_target",
                     metrics.moment_distance(ensemble, m, dataset), trial)
                )
            for dist in distances:
                if dist == "wasserstein":
                    value = metrics.wasserstein1(ensemble, dataset)[0]
                elif dist == "mmd":
                    value = metrics.mmd(ensemble, dataset)
                else:
                    raise ConfigError(f"unknown distance {dist!r}")
                rows.append((dcfg.scheme, k, dcfg.n_complement, "", dist, value, trial))
        return rows

    return _write_csv(Path(cfg.out_dir) / "forward_metrics.csv", FORWARD_HEADER, _run_trials(cfg, worker))


def cmd_train(cfg: ExperimentConfig) -> tuple[Path, Path]:
    """Train the backward chain and persist the bundle plus loss curves."""
    stack, report, dataset = run_training_pipeline(cfg, trial=0)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = datamod.Bundle(
        ensembles={"target": dataset},
        denoisers={"trained": stack},
        configs={"experiment": _config_json(cfg)},
        seeds={"master": cfg.seed},
        reports={
            "train": {
                "loss_curves": [curve.tolist() for curve in report.loss_curves],
                "final_costs": report.final_costs,
                "wall_clock_seconds": report.wall_clock_seconds,
                "adam": report.adam_hyperparams,
            }
        },
    )
    bundle_path = out / "trained.bundle.json"
    datamod.save_bundle(bundle_path, bundle)
    rows = []
    for k, curve in enumerate(report.loss_curves, start=1):
        for epoch, loss in enumerate(curve):
            rows.append((k, epoch, float(loss)))
    loss_path = _write_csv(out / "losses.csv", LOSS_HEADER, rows)
    return bundle_path, loss_path


def cmd_sample(cfg: ExperimentConfig, bundle_path: str) -> Path:
    """Generate a fresh ensemble from a stored trained stack."""
    bundle = datamod.load_bundle(bundle_path)
    if "trained" not in bundle.denoisers:
        raise ConfigError(f"bundle {bundle_path} holds no trained denoiser")
    stack = bundle.denoisers["trained"]
    root = seeding.root_sequence(cfg.seed)
    generated = denoiser.generate(
        stack, cfg.n_samples, seeding.child_sequence(root, STREAM_GENERATE, 0)
    ).final
    bundle.ensembles["generated"] = generated
    bundle.seeds["sample"] = cfg.seed
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sampled.bundle.json"
    datamod.save_bundle(path, bundle)
    return path


def cmd_evaluate(cfg: ExperimentConfig, bundle_a: str, bundle_b: str) -> Path:
    """Distance table between two stored ensembles."""
    name_a = cfg.evaluate.get("ensemble_a", "generated")
    name_b = cfg.evaluate.get("ensemble_b", "target")
    ens_a = _pick_ensemble(bundle_a, name_a)
    ens_b = _pick_ensemble(bundle_b, name_b)
    if ens_a.n_qubits != ens_b.n_qubits:
        raise ConfigError(
            f"qubit counts differ: {name_a} has {ens_a.n_qubits}, {name_b} has {ens_b.n_qubits}"
        )
    rows = [
        ("wasserstein", "", metrics.wasserstein1(ens_a, ens_b)[0]),
        ("mmd", "", metrics.mmd(ens_a, ens_b)),
    ]
    for m in [int(v) for v in cfg.metrics.get("moments", [1])]:
        rows.append(("delta_haar", m, metrics.moment_distance(ens_a, m, "haar")))
        rows.append(("delta_target", m, metrics.moment_distance(ens_a, m, ens_b)))
    return _write_csv(Path(cfg.out_dir) / "evaluate.csv", EVALUATE_HEADER, rows)


def _pick_ensemble(bundle_path: str, name: str) -> StateEnsemble:
    bundle = datamod.load_bundle(bundle_path)
    if name not in bundle.ensembles:
        raise ConfigError(
            f"bundle {bundle_path} has no ensemble {name!r}; found {sorted(bundle.ensembles)}"
        )
    return bundle.ensembles[name]


def cmd_noise_sweep(cfg: ExperimentConfig) -> Path:
    """Full pipeline distance across a noise grid, fixed seeds per cell."""
    sweep = cfg.noise_sweep
    param = sweep.get("parameter")
    if param not in ("p1", "p2"):
        raise ConfigError("noise_sweep.parameter must be 'p1' or 'p2'")
    values = sweep.get("values")
    if not values:
        raise ConfigError("noise_sweep.values must be a non-empty list")
    scheme = cfg.diffusion.get("scheme")
    if param == "p1" and scheme != "rucd":
        raise ConfigError("p1 sweeps apply to the circuit scheme (rucd) only")
    if param == "p2" and scheme == "rucd":
        raise ConfigError("p2 sweeps apply to the chaotic schemes (cted/rted) only")

    def worker(trial: int) -> list[tuple]:
        rows = []
        for value in values:
            cell = _with_noise(cfg, param, float(value))
            stack, _, _ = run_training_pipeline(cell, trial)
            d_wass = final_wasserstein(cell, stack, trial)
            rows.append((scheme, param, float(value), trial, d_wass))
        return rows

    return _write_csv(Path(cfg.out_dir) / "noise_sweep.csv", NOISE_HEADER, _run_trials(cfg, worker))


def _with_noise(cfg: ExperimentConfig, param: str, value: float) -> ExperimentConfig:
    noise = dict(cfg.noise or {})
    noise[param] = value
    clone = _config_json(cfg)
    clone["noise"] = noise
    return ExperimentConfig(**clone)


def cmd_qae(cfg: ExperimentConfig) -> Path:
    """Train the autoencoder, then compare latent-space diffusion against the
    full-space run on the same compressible dataset."""
    if cfg.dataset.get("kind") != "compressible":
        raise ConfigError("the qae command needs dataset.kind = 'compressible'")
    root = seeding.root_sequence(cfg.seed)
    qcfg = cfg.qae
    depth = int(qcfg.get("depth", qae.DEFAULT_DEPTH))
    epochs = int(qcfg.get("epochs", 2000))
    lr = float(qcfg.get("learning_rate", 0.001))
    n_total = int(cfg.dataset["n_total"])
    n_latent = int(cfg.dataset["n_latent"])

    def worker(trial: int) -> list[tuple]:
        dataset = build_dataset(cfg, cfg.n_samples, seeding.substream(root, STREAM_DATASET, trial))
        model = qae.QaeModel.random_init(
            n_total, n_latent, depth, seeding.substream(root, STREAM_TRAIN, trial, 2)
        )
        model, losses = qae.train_qae(
            model, dataset, epochs=epochs, learning_rate=lr,
            seed=seeding.child_sequence(root, STREAM_TRAIN, trial, 3),
        )
        rows = [("qae", "trash_loss", float(losses[-1]), trial)]
        roundtrip = np.mean([_roundtrip_fidelity(model, s) for s in dataset.states])
        rows.append(("qae", "roundtrip_fidelity", float(roundtrip), trial))

        # latent-space diffusion and training
        latents = qae.encode_ensemble(model, dataset)
        stack_latent, _, _ = run_training_pipeline(
            cfg, trial, dataset_override=latents, n_data=n_latent
        )
        gen_latent = denoiser.generate(
            stack_latent, cfg.n_samples, seeding.child_sequence(root, STREAM_GENERATE, trial, 0)
        ).final
        decoded = qae.decode_ensemble(model, gen_latent)
        held_out = build_dataset(cfg, cfg.n_samples, seeding.substream(root, STREAM_EVAL, trial))
        rows.append(
            ("latent", "d_wass_final", metrics.wasserstein1(decoded, held_out)[0], trial)
        )

        # full-space run on the same dataset
        stack_full, _, _ = run_training_pipeline(
            cfg, trial, dataset_override=dataset, n_data=n_total
        )
        gen_full = denoiser.generate(
            stack_full, cfg.n_samples, seeding.child_sequence(root, STREAM_GENERATE, trial, 1)
        ).final
        rows.append(
            ("full", "d_wass_final", metrics.wasserstein1(gen_full, held_out)[0], trial)
        )
        return rows

    return _write_csv(Path(cfg.out_dir) / "qae_compare.csv", QAE_HEADER, _run_trials(cfg, worker))


def _roundtrip_fidelity(model: qae.QaeModel, state) -> float:
    from .qstate import fidelity

    return fidelity(qae.decode(model, qae.encode(model, state)), state)


def _config_json(cfg: ExperimentConfig) -> dict:
    return {
        name: getattr(cfg, name)
        for name in cfg.__dataclass_fields__
        if getattr(cfg, name) is not None
    }


# ---------------------------------------------------------------------------
# entry point


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="chaosdiff", description="chaotic quantum diffusion experiment runner"
    )
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--seed", type=int, help="override the config's master seed")
    parser.add_argument("--out", help="override the config's output directory")
    parser.add_argument("--trials", type=int, help="override the config's trial count")
    parser.add_argument("--threads", type=int, help="worker threads across trials")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("forward", help="forward diffusion metrics")
    sub.add_parser("train", help="layerwise backward training")
    p_sample = sub.add_parser("sample", help="generate from a trained bundle")
    p_sample.add_argument("bundle")
    p_eval = sub.add_parser("evaluate", help="distance table between two bundles")
    p_eval.add_argument("bundle_a")
    p_eval.add_argument("bundle_b")
    sub.add_parser("noise-sweep", help="noise-strength sweep")
    sub.add_parser("qae", help="latent-vs-full autoencoder comparison")

    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
        if args.trials is not None:
            cfg.trials = args.trials
            ExperimentConfig(**_config_json(cfg))  # re-validate
        if args.threads is not None:
            cfg.threads = args.threads

        if args.command == "forward":
            paths = [cmd_forward(cfg)]
        elif args.command == "train":
            paths = list(cmd_train(cfg))
        elif args.command == "sample":
            paths = [cmd_sample(cfg, args.bundle)]
        elif args.command == "evaluate":
            paths = [cmd_evaluate(cfg, args.bundle_a, args.bundle_b)]
        elif args.command == "noise-sweep":
            paths = [cmd_noise_sweep(cfg)]
        else:
            paths = [cmd_qae(cfg)]
    except (ConfigError, FileNotFoundError, ValueError) as err:
        parser.exit(2, f"error: {err}\n")
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
