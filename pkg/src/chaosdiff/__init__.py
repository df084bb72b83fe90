"""Statevector-level diffusion models for quantum data.

Forward scrambling by chaotic Hamiltonian evolution (cumulative or repeated)
or layered random circuits; backward denoising through measurement-enabled
variational channels trained layerwise; exact ensemble distances (MMD,
1-Wasserstein transport, moment distances); trajectory-level noise models;
and a quantum autoencoder for latent-space diffusion.
"""

from .qstate import (
    Ket,
    MeasurementRecord,
    StateEnsemble,
    apply_gate,
    basis_state,
    enumerate_branches,
    fidelity,
    gram_matrix,
    haar_product_state,
    measure_subset,
    tensor,
)
from .chaos import ChaoticHamiltonian, EvolutionConfig, build_hamiltonian, evolve
from .forward import (
    CostModel,
    DiffusionConfig,
    DiffusionStepRecord,
    RucdLayerParams,
    cted_branch_ensemble,
    cted_diffuse,
    execution_time,
    rted_diffuse,
    rucd_diffuse,
)
from .denoiser import (
    DenoiserStack,
    DenoiseStepRecord,
    GenerationResult,
    build_ansatz_unitary,
    denoise_branches,
    denoise_step,
    generate,
)
from .metrics import (
    KernelSpec,
    MomentReport,
    TransportPlan,
    TransportProblem,
    mmd,
    moment_distance,
    moment_report,
    swap_test_fidelity,
    wasserstein1,
)
from .train import (
    DenoiseStepProblem,
    TrainConfig,
    TrainReport,
    cost_and_gradient,
    train_layerwise,
)
from .noisemod import (
    NoiseConfig,
    PovmElement,
    apply_dephasing,
    dephasing_prob,
    dephasing_prob_after_steps,
    inject_rucd_pauli,
    pauli_relabel_check,
    povm_from_channel,
)
from .qae import QaeModel, decode, encode, encoder_circuit, train_qae, trash_loss
from .data import (
    Bundle,
    CircularSpec,
    ClusterSpec,
    CompressibleSpec,
    load_bundle,
    sample_circular,
    sample_compressible,
    sample_multicluster,
    save_bundle,
)

__version__ = "0.1.0"
