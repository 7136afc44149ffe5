"""Wasserstein proximal (JKO-style) training in closed form and with particles.

Two regimes share one proximal template: 1-D Gaussians with a KL objective,
where each step has a closed form, and clouds of neural-network particles,
where each step is solved inexactly by fitting an invertible coupling flow.
The harness subpackage adds configs, CSV/plot/cloud artifacts and a CLI.
"""

from .estimators import ScoreField, kernel_score, kernel_score_at, kl_entropy_estimate
from .gaussian_prox import (
    GaussianProxConfig,
    hopf_lax_derivative_check,
    hopf_lax_value,
    prox_kl_gaussian,
    run_gaussian_experiment,
)
from .measures import (
    GaussianState,
    ParticleCloud,
    SeededRng,
    sample_gaussian_cloud,
    w2_discrete,
    w2_gaussian_1d,
)
from .objectives import (
    Dataset,
    MfldSpec,
    kl_gaussian,
    nn_predict,
    pl_residual,
    predict_all,
    relative_fisher_gaussian,
    risk,
    risk_particle_gradient,
    total_objective,
)
from .prox_trainer import (
    MfldRunConfig,
    inexact_error,
    initial_cloud,
    noisy_gd_step,
    prox_step,
    run_noisy_gd,
    run_proximal_training,
)
from .trace import TraceRecord
from .transport_flow import (
    CouplingBlock,
    FlowParams,
    flow_forward,
    flow_inverse,
    flow_loss,
    flow_loss_gradient,
    init_near_identity,
    sgd_fit,
)

__version__ = "0.1.0"

__all__ = [
    "CouplingBlock",
    "Dataset",
    "FlowParams",
    "GaussianProxConfig",
    "GaussianState",
    "MfldRunConfig",
    "MfldSpec",
    "ParticleCloud",
    "ScoreField",
    "SeededRng",
    "TraceRecord",
    "flow_forward",
    "flow_inverse",
    "flow_loss",
    "flow_loss_gradient",
    "hopf_lax_derivative_check",
    "hopf_lax_value",
    "inexact_error",
    "init_near_identity",
    "initial_cloud",
    "kernel_score",
    "kernel_score_at",
    "kl_entropy_estimate",
    "kl_gaussian",
    "nn_predict",
    "noisy_gd_step",
    "pl_residual",
    "predict_all",
    "prox_kl_gaussian",
    "prox_step",
    "relative_fisher_gaussian",
    "risk",
    "risk_particle_gradient",
    "run_gaussian_experiment",
    "run_noisy_gd",
    "run_proximal_training",
    "sample_gaussian_cloud",
    "sgd_fit",
    "total_objective",
    "w2_discrete",
    "w2_gaussian_1d",
]
