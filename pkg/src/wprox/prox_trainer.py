"""Outer training loops for the entropy-regularized mean-field objective.

Two algorithms over the same objective F_tau = R + tau * int(rho log rho):

* run_proximal_training — inexact Wasserstein proximal iteration. Each outer
  step fits a fresh near-identity coupling flow T by gradient descent on the
  proximal fitting loss and pushes every particle through it. The quality of
  a step is tracked by the inexact-error diagnostic beta: the gap between
  the rescaled inverse-map displacement (T^{-1} - id)/xi and the estimated
  gradient field (risk gradient + tau * KDE score) at the new particles.

* run_noisy_gd — the noisy gradient descent baseline
  theta <- theta - xi * grad + sqrt(2 xi tau) z, one explicit Euler step of
  the same flow per iteration.

Both runs are bit-reproducible: the weight seed fixes the initial cloud
(shared by both algorithms) and every other random draw comes from streams
derived with purpose tags.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .estimators import kernel_score, kl_entropy_estimate
from .measures import ParticleCloud, SeededRng, sample_gaussian_cloud, w2_discrete
from .objectives import Dataset, MfldSpec, risk, risk_particle_gradient, total_objective
from .trace import TraceRecord
from .transport_flow import FlowParams, _forward_cloud, _inverse_cloud, init_near_identity, sgd_fit


@dataclass(frozen=True)
class MfldRunConfig:
    """Everything that determines one particle-training run."""

    spec: MfldSpec = field(default_factory=MfldSpec)
    step_xi: float = 0.2
    outer_iterations: int = 60
    particle_count: int = 100
    data_count: int = 1000
    data_dim: int = 2
    inner_lr: float = 0.005
    inner_iterations: int = 150
    inner_blocks: int = 2
    inner_hidden: int = 100
    inner_init_scale: float = 0.1
    inner_batch: int | None = None
    score_bandwidth: float = 0.5
    data_seed: int = 101
    weight_seed: int = 202
    track_beta: bool = True
    reference: ParticleCloud | None = None

    def __post_init__(self) -> None:
        if not self.step_xi > 0.0:
            raise ValueError(f"step_xi must be positive, got {self.step_xi}")
        if self.outer_iterations < 0:
            raise ValueError(f"outer_iterations must be >= 0, got {self.outer_iterations}")
        for name in ("particle_count", "data_count", "data_dim",
                     "inner_iterations", "inner_blocks", "inner_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.inner_lr > 0.0:
            raise ValueError(f"inner_lr must be positive, got {self.inner_lr}")
        if not self.score_bandwidth > 0.0:
            raise ValueError(f"score_bandwidth must be positive, got {self.score_bandwidth}")


def _dataset_for(cfg: MfldRunConfig) -> Dataset:
    from .harness.datasets import generate_teacher_dataset

    return generate_teacher_dataset(cfg.data_count, cfg.data_dim, cfg.data_seed)


def initial_cloud(cfg: MfldRunConfig) -> ParticleCloud:
    """Standard-Gaussian initial weights, shared by both algorithms."""
    rng = SeededRng(cfg.weight_seed).derive("init-weights")
    return sample_gaussian_cloud(np.zeros(cfg.data_dim), 1.0, cfg.particle_count, rng)


def _diagnostics(cloud: ParticleCloud, data: Dataset, cfg: MfldRunConfig,
                 iteration: int, t0: float, **extra) -> TraceRecord:
    ent = kl_entropy_estimate(cloud)
    w2 = None
    if cfg.reference is not None:
        w2 = w2_discrete(cloud, cfg.reference)
    return TraceRecord(
        iteration=iteration,
        risk=risk(cloud, data, cfg.spec),
        entropy=ent,
        total_objective=total_objective(cloud, data, cfg.spec, ent),
        w2_to_reference=w2,
        wall_time_s=time.perf_counter() - t0,
        **extra,
    )


def prox_step(cloud: ParticleCloud, data: Dataset, cfg: MfldRunConfig, rng: SeededRng,
              iteration: int = 0, t0: float | None = None,
              ) -> tuple[ParticleCloud, FlowParams, TraceRecord]:
    """One inexact proximal step: fit a transport map, push the particles."""
    if t0 is None:
        t0 = time.perf_counter()
    flow0 = init_near_identity(cloud.d, cfg.inner_blocks, cfg.inner_hidden,
                               cfg.inner_init_scale, rng)
    flow, final_loss = sgd_fit(flow0, cloud, data, cfg.spec, cfg.step_xi,
                               cfg.inner_lr, cfg.inner_iterations,
                               batch_size=cfg.inner_batch, rng=rng)
    images, _, _ = _forward_cloud(flow, cloud.points)
    nxt = ParticleCloud(images)
    beta = None
    if cfg.track_beta:
        beta = inexact_error(flow, cloud, nxt, data, cfg.spec, cfg.step_xi,
                             cfg.score_bandwidth)
    rec = _diagnostics(nxt, data, cfg, iteration, t0,
                       beta_norm_sq=beta, inner_final_loss=final_loss)
    return nxt, flow, rec


def run_proximal_training(cfg: MfldRunConfig, data: Dataset | None = None,
                          snapshots: list | None = None) -> list[TraceRecord]:
    """Full proximal run; trace record 0 holds the initial diagnostics."""
    if data is None:
        data = _dataset_for(cfg)
    t0 = time.perf_counter()
    cloud = initial_cloud(cfg)
    flow_rng = SeededRng(cfg.weight_seed).derive("flow-init")
    trace = [_diagnostics(cloud, data, cfg, 0, t0)]
    if snapshots is not None:
        snapshots.append(cloud)
    for n in range(1, cfg.outer_iterations + 1):
        cloud, _, rec = prox_step(cloud, data, cfg, flow_rng, iteration=n, t0=t0)
        trace.append(rec)
        if snapshots is not None:
            snapshots.append(cloud)
    return trace


def noisy_gd_step(cloud: ParticleCloud, data: Dataset, spec: MfldSpec,
                  xi: float, rng: SeededRng) -> ParticleCloud:
    """theta <- theta - xi * grad(dR/drho)(theta) + sqrt(2 xi tau) z."""
    if not xi > 0.0:
        raise ValueError(f"xi must be positive, got {xi}")
    grad = risk_particle_gradient(cloud, data, spec)
    noise = math.sqrt(2.0 * xi * spec.tau) * rng.standard_normal(cloud.points.shape)
    return ParticleCloud(cloud.points - xi * grad + noise)


def run_noisy_gd(cfg: MfldRunConfig, data: Dataset | None = None,
                 snapshots: list | None = None) -> list[TraceRecord]:
    """Noisy gradient descent baseline with the same diagnostics trace."""
    if data is None:
        data = _dataset_for(cfg)
    t0 = time.perf_counter()
    cloud = initial_cloud(cfg)
    noise_rng = SeededRng(cfg.weight_seed).derive("gd-noise")
    trace = [_diagnostics(cloud, data, cfg, 0, t0)]
    if snapshots is not None:
        snapshots.append(cloud)
    for n in range(1, cfg.outer_iterations + 1):
        cloud = noisy_gd_step(cloud, data, cfg.spec, cfg.step_xi, noise_rng)
        trace.append(_diagnostics(cloud, data, cfg, n, t0))
        if snapshots is not None:
            snapshots.append(cloud)
    return trace


def inexact_error(flow: FlowParams, prev: ParticleCloud, next_cloud: ParticleCloud,
                  data: Dataset, spec: MfldSpec, xi: float, bandwidth: float) -> float:
    """Mean squared norm of the inexactness field beta at the new particles.

    beta(theta) = (T^{-1}(theta) - theta)/xi - [grad(dR/drho)(theta)
    + tau * grad log rho_hat(theta)] over the pushed cloud. The inverse is
    evaluated through the learned map (not assumed equal to prev), so the
    diagnostic includes any numerical inversion error.
    """
    if prev.m != next_cloud.m or prev.d != next_cloud.d:
        raise ValueError("prev and next clouds must have matching shapes")
    back = _inverse_cloud(flow, next_cloud.points)
    v = (back - next_cloud.points) / xi
    g = risk_particle_gradient(next_cloud, data, spec)
    g = g + spec.tau * kernel_score(next_cloud, bandwidth).vectors
    b = v - g
    return float(np.einsum("jd,jd->", b, b) / next_cloud.m)
