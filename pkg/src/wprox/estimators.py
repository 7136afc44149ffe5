"""Nonparametric estimators over particle clouds: entropy and score.

kl_entropy_estimate gives int(rho log rho) (negative differential entropy)
via the first-nearest-neighbor construction with the standard bias
correction. kernel_score gives grad log rho at each particle from a Gaussian
kernel density estimate; the kernel is the squared-exponential
exp(-||u||^2 / h^2), i.e. a Gaussian with variance h^2/2 per coordinate, and
the score follows as a softmax-weighted displacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import ParticleCloud


@dataclass(frozen=True)
class ScoreField:
    """Estimated grad log rho at each particle of a cloud, shape (m, d)."""

    vectors: np.ndarray

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("score field contains non-finite entries")


def _pairwise_sq_dists(pts: np.ndarray) -> np.ndarray:
    sq = np.einsum("id,id->i", pts, pts)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def kl_entropy_estimate(cloud: ParticleCloud) -> float:
    """First-nearest-neighbor estimate of int(rho log rho).

    Returns -[ (d/m) sum_j log r_j + log V_d + log(m-1) + gamma ] where r_j
    is the distance from point j to its nearest neighbor, V_d the unit-ball
    volume and gamma the Euler-Mascheroni constant. Duplicate points make
    the estimate undefined and raise an error naming the offending indices.
    """
    if cloud.m < 2:
        raise ValueError("entropy estimate needs at least 2 points")
    pts = cloud.points
    d2 = _pairwise_sq_dists(pts)
    np.fill_diagonal(d2, np.inf)
    nn_idx = d2.argmin(axis=1)
    nn_sq = d2[np.arange(cloud.m), nn_idx]
    zero = np.nonzero(nn_sq == 0.0)[0]
    if zero.size:
        j = int(zero[0])
        raise ValueError(f"duplicate points in cloud: indices {j} and {int(nn_idx[j])}")
    d = cloud.d
    log_vd = (d / 2.0) * math.log(math.pi) - math.lgamma(d / 2.0 + 1.0)
    h_hat = (
        (d / cloud.m) * 0.5 * float(np.log(nn_sq).sum())
        + log_vd
        + math.log(cloud.m - 1)
        + np.euler_gamma
    )
    return -h_hat


def kernel_score(cloud: ParticleCloud, bandwidth: float) -> ScoreField:
    """Score of the Gaussian KDE of the cloud, evaluated at its own points.

    With kernel exp(-||u||^2/h^2) the density gradient gives
    grad log rho_hat(theta_j) = -(2/h^2) (theta_j - sum_k w_k theta_k) with
    softmax weights w_k proportional to exp(-||theta_j - theta_k||^2/h^2).
    The self-term is included; it contributes nothing to the displacement.
    """
    field = kernel_score_at(cloud, cloud.points, bandwidth)
    return ScoreField(field)


def kernel_score_at(cloud: ParticleCloud, where: np.ndarray, bandwidth: float) -> np.ndarray:
    """Same KDE score, evaluated at arbitrary query points (q, d)."""
    if not bandwidth > 0.0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    pts = cloud.points
    where = np.asarray(where, dtype=np.float64)
    squeeze = where.ndim == 1
    if squeeze:
        where = where[None, :]
    if where.shape[1] != cloud.d:
        raise ValueError(f"query dimension {where.shape[1]} != cloud dimension {cloud.d}")
    h2 = bandwidth * bandwidth
    qq = np.einsum("qd,qd->q", where, where)
    pp = np.einsum("kd,kd->k", pts, pts)
    d2 = qq[:, None] + pp[None, :] - 2.0 * (where @ pts.T)
    np.maximum(d2, 0.0, out=d2)
    logw = -d2 / h2
    logw -= logw.max(axis=1, keepdims=True)  # stable softmax
    w = np.exp(logw)
    w /= w.sum(axis=1, keepdims=True)
    field = -(2.0 / h2) * (where - w @ pts)
    return field[0] if squeeze else field
