"""Objective functionals and their particle-level gradients.

Two objectives drive everything:

* KL divergence to the standard Gaussian target on the closed-form path,
  together with its relative Fisher information and the
  Polyak-Lojasiewicz residual J - 2*mu*KL (nonnegative for mu = 1).
* The entropy-regularized training objective of a mean-field two-layer
  tanh network: F_tau = R + tau * int(rho log rho), where R is the
  L2-regularized squared-error risk. The entropy term is supplied
  externally (see the estimators module); this module owns R and the
  per-particle gradient of its first variation.

Loss convention: l(f, y) = 0.5 * (f - y)^2, so l'(f, y) = f - y.
Entropy sign convention: int(rho log rho) is the *negative* differential
entropy, e.g. about -2.8379 for a standard Gaussian in d = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import GaussianState, ParticleCloud


@dataclass(frozen=True)
class Dataset:
    """Regression data; teacher-generated sets carry the generating direction."""

    inputs: np.ndarray  # (N, d)
    labels: np.ndarray  # (N,)
    teacher_direction: np.ndarray | None = None  # (d,) when teacher-generated

    def __post_init__(self) -> None:
        if self.inputs.ndim != 2 or self.inputs.shape[0] < 1:
            raise ValueError(f"inputs must be (N, d) with N >= 1, got {self.inputs.shape}")
        if self.labels.shape != (self.inputs.shape[0],):
            raise ValueError("labels must be one real per input row")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.labels))):
            raise ValueError("dataset contains non-finite values")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class MfldSpec:
    """Hyperparameters of the regularized objective: L2 weight and temperature."""

    lam: float = 0.1
    tau: float = 0.1

    def __post_init__(self) -> None:
        if self.lam < 0.0 or self.tau < 0.0:
            raise ValueError(f"lam and tau must be nonnegative, got {self.lam}, {self.tau}")


def _check_dims(cloud: ParticleCloud, data: Dataset) -> None:
    if cloud.d != data.d:
        raise ValueError(f"cloud dimension {cloud.d} != data dimension {data.d}")


def nn_predict(cloud: ParticleCloud, x) -> float:
    """Mean-field two-layer network output: mean over particles of tanh(theta . x)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cloud.d,):
        raise ValueError(f"input has shape {x.shape}, expected ({cloud.d},)")
    return float(np.tanh(cloud.points @ x).mean())


def predict_all(cloud: ParticleCloud, data: Dataset) -> np.ndarray:
    """Network outputs at every data point, shape (N,)."""
    _check_dims(cloud, data)
    return np.tanh(cloud.points @ data.inputs.T).mean(axis=0)


def risk(cloud: ParticleCloud, data: Dataset, spec: MfldSpec) -> float:
    """L2-regularized empirical risk R(rho^m)."""
    err = predict_all(cloud, data) - data.labels
    reg = spec.lam * float(np.einsum("jd,jd->", cloud.points, cloud.points)) / cloud.m
    return 0.5 * float(err @ err) / data.n + reg


def risk_particle_gradient(cloud: ParticleCloud, data: Dataset, spec: MfldSpec) -> np.ndarray:
    """Gradient of the first variation of R at each particle, shape (m, d).

    For the squared loss this is
    (1/N) sum_i (f(x_i) - y_i) (1 - tanh^2(theta_j . x_i)) x_i + 2 lam theta_j.
    """
    _check_dims(cloud, data)
    acts = np.tanh(cloud.points @ data.inputs.T)  # (m, N)
    err = acts.mean(axis=0) - data.labels
    sens = (1.0 - acts * acts) * err[None, :]
    return sens @ data.inputs / data.n + 2.0 * spec.lam * cloud.points


def total_objective(cloud: ParticleCloud, data: Dataset, spec: MfldSpec, entropy: float) -> float:
    """F_tau = R + tau * entropy, with entropy meaning int(rho log rho)."""
    if not math.isfinite(entropy):
        raise ValueError(f"entropy must be finite, got {entropy}")
    return risk(cloud, data, spec) + spec.tau * entropy


def kl_gaussian(a: GaussianState) -> float:
    """KL(N(mean, stddev^2) || N(0, 1)) = (mean^2 + stddev^2 - 1 - 2 ln stddev) / 2."""
    return 0.5 * (a.mean * a.mean + a.stddev * a.stddev - 1.0 - 2.0 * math.log(a.stddev))


def relative_fisher_gaussian(a: GaussianState) -> float:
    """Relative Fisher information J(rho || N(0,1)) for a 1-D Gaussian rho.

    With s = stddev and m = mean, grad log(rho/nu)(x) = x(1 - 1/s^2) + m/s^2;
    its squared expectation under rho collapses to m^2 + (s - 1/s)^2.
    """
    s = a.stddev
    gap = s - 1.0 / s
    return a.mean * a.mean + gap * gap


def pl_residual(a: GaussianState, mu: float) -> float:
    """Slack J - 2*mu*KL of the Wasserstein PL inequality for the KL objective.

    Nonnegative for every Gaussian state when mu = 1 (the standard Gaussian
    target satisfies a log-Sobolev inequality with constant 1); mean shifts
    saturate it exactly.
    """
    if not mu > 0.0:
        raise ValueError(f"mu must be positive, got {mu}")
    return relative_fisher_gaussian(a) - 2.0 * mu * kl_gaussian(a)
