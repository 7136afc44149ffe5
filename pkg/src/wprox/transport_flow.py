"""Learnable transport maps: affine coupling blocks with exact gradients.

A map T is a composition of coupling blocks. Each block passes one
contiguous half of the coordinates through unchanged and transforms the
other half affinely, with scale and shift produced by small one-hidden-layer
networks (softplus hidden activation, linear output) of the kept half:

    kept:        a_K = u_K
    transformed: a_C = u_C * exp(s(u_K)) + t(u_K)

The Jacobian is triangular, so log|det| is the sum of the s outputs and the
inverse is available in closed form; blocks alternate which half is kept so
the composition mixes all coordinates. Parameter gradients of the proximal
fitting loss are accumulated by hand-written reverse mode — the only
nontrivial paths are through the mean-field prediction, the logdet sum and
the two small networks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import ParticleCloud, SeededRng
from .objectives import Dataset, MfldSpec

_PARAM_FIELDS = ("ws1", "bs1", "ws2", "bs2", "wt1", "bt1", "wt2", "bt2")


@dataclass
class CouplingBlock:
    """One coupling block. parity 0 keeps the first floor(d/2) coordinates,
    parity 1 keeps the rest. (ws1, bs1, ws2, bs2) is the scale net,
    (wt1, bt1, wt2, bt2) the shift net; hidden layer first."""

    parity: int
    ws1: np.ndarray
    bs1: np.ndarray
    ws2: np.ndarray
    bs2: np.ndarray
    wt1: np.ndarray
    bt1: np.ndarray
    wt2: np.ndarray
    bt2: np.ndarray

    def __post_init__(self) -> None:
        for f in _PARAM_FIELDS:
            if not np.all(np.isfinite(getattr(self, f))):
                raise ValueError(f"non-finite parameters in coupling block field {f}")

    def copy(self) -> "CouplingBlock":
        return CouplingBlock(self.parity, *(getattr(self, f).copy() for f in _PARAM_FIELDS))


@dataclass
class FlowParams:
    """An ordered composition of coupling blocks acting on R^d."""

    d: int
    blocks: list

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"coupling flows need d >= 2, got d={self.d}")
        if len(self.blocks) < 1:
            raise ValueError("flow needs at least one block")
        for i in range(1, len(self.blocks)):
            if self.blocks[i].parity == self.blocks[i - 1].parity:
                raise ValueError("consecutive blocks must alternate parity")

    def copy(self) -> "FlowParams":
        return FlowParams(self.d, [b.copy() for b in self.blocks])


@dataclass
class FlowGradient:
    """Same shape as FlowParams: one array per parameter array."""

    blocks: list  # list of 8-tuples ordered like _PARAM_FIELDS


def _split(d: int, parity: int) -> tuple[slice, slice]:
    dt = d // 2
    if parity == 0:
        return slice(0, dt), slice(dt, d)
    return slice(dt, d), slice(0, dt)


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _mlp(w1, b1, w2, b2, u):
    z = u @ w1.T + b1
    h = _softplus(z)
    return h @ w2.T + b2, z, h


def _forward_cloud(params: FlowParams, pts: np.ndarray, want_cache: bool = False):
    """Map an (m, d) array through the flow; returns images, logdets, caches."""
    x = np.array(pts, dtype=np.float64)
    logdet = np.zeros(x.shape[0])
    caches = [] if want_cache else None
    for blk in params.blocks:
        keep, chg = _split(params.d, blk.parity)
        u = x[:, keep]
        v = x[:, chg]
        s, zs, hs = _mlp(blk.ws1, blk.bs1, blk.ws2, blk.bs2, u)
        t, zt, ht = _mlp(blk.wt1, blk.bt1, blk.wt2, blk.bt2, u)
        e = np.exp(s)
        if want_cache:
            caches.append((u, v, s, e, zs, hs, zt, ht))
        x = x.copy()
        x[:, chg] = v * e + t
        logdet += s.sum(axis=1)
    return x, logdet, caches


def _inverse_cloud(params: FlowParams, pts: np.ndarray) -> np.ndarray:
    a = np.array(pts, dtype=np.float64)
    for blk in reversed(params.blocks):
        keep, chg = _split(params.d, blk.parity)
        u = a[:, keep]
        s, _, _ = _mlp(blk.ws1, blk.bs1, blk.ws2, blk.bs2, u)
        t, _, _ = _mlp(blk.wt1, blk.bt1, blk.wt2, blk.bt2, u)
        a = a.copy()
        a[:, chg] = (a[:, chg] - t) * np.exp(-s)
    return a


def flow_forward(params: FlowParams, theta) -> tuple[np.ndarray, float]:
    """Apply the flow to one point; returns (image, log|det Jacobian|)."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (params.d,):
        raise ValueError(f"point has shape {theta.shape}, flow expects ({params.d},)")
    img, logdet, _ = _forward_cloud(params, theta[None, :])
    return img[0], float(logdet[0])


def flow_inverse(params: FlowParams, alpha) -> np.ndarray:
    """Exact inverse of flow_forward at one point."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (params.d,):
        raise ValueError(f"point has shape {alpha.shape}, flow expects ({params.d},)")
    return _inverse_cloud(params, alpha[None, :])[0]


def init_near_identity(d: int, blocks: int, hidden: int, scale: float, rng: SeededRng) -> FlowParams:
    """Fresh flow that is exactly the identity map.

    Hidden-layer weights are N(0, scale^2/fan_in); output layers and all
    biases start at zero, so s = t = 0 everywhere and logdet = 0 until the
    first optimizer update.
    """
    if blocks < 1:
        raise ValueError(f"blocks must be >= 1, got {blocks}")
    if hidden < 1:
        raise ValueError(f"hidden must be >= 1, got {hidden}")
    if scale < 0.0:
        raise ValueError(f"scale must be nonnegative, got {scale}")
    out = []
    for i in range(blocks):
        parity = i % 2
        keep, chg = _split(d, parity)
        k = keep.stop - keep.start
        nc = chg.stop - chg.start
        sd = scale / math.sqrt(k)

        def hidden_w():
            return sd * rng.standard_normal((hidden, k))

        out.append(
            CouplingBlock(
                parity,
                hidden_w(), np.zeros(hidden), np.zeros((nc, hidden)), np.zeros(nc),
                hidden_w(), np.zeros(hidden), np.zeros((nc, hidden)), np.zeros(nc),
            )
        )
    return FlowParams(d, out)


def _loss_terms(params, cloud, data, spec, xi, want_grad):
    if not xi > 0.0:
        raise ValueError(f"xi must be positive, got {xi}")
    if cloud.d != params.d or cloud.d != data.d:
        raise ValueError(
            f"dimension mismatch: cloud d={cloud.d}, flow d={params.d}, data d={data.d}"
        )
    x0 = cloud.points
    m = cloud.m
    n = data.n
    images, logdet, caches = _forward_cloud(params, x0, want_cache=want_grad)

    acts = np.tanh(images @ data.inputs.T)  # (m, N)
    err = acts.mean(axis=0) - data.labels
    diff = images - x0
    loss = (
        0.5 * float(err @ err) / n
        + spec.lam * float(np.einsum("jd,jd->", images, images)) / m
        - spec.tau * float(logdet.sum()) / m
        + float(np.einsum("jd,jd->", diff, diff)) / (2.0 * m * xi)
    )
    if not want_grad:
        return loss, None

    # d loss / d images, then reverse through the blocks.
    sens = (1.0 - acts * acts) * err[None, :]
    g_img = sens @ data.inputs / (n * m)
    g_img += (2.0 * spec.lam / m) * images
    g_img += diff / (m * xi)
    g_logdet = -spec.tau / m  # per s-output entry

    grads = []
    g = g_img
    for blk, cache in zip(reversed(params.blocks), reversed(caches)):
        keep, chg = _split(params.d, blk.parity)
        u, v, s, e, zs, hs, zt, ht = cache
        gc = g[:, chg]
        ds = gc * v * e + g_logdet
        dt = gc
        dv = gc * e

        dws2 = ds.T @ hs
        dbs2 = ds.sum(axis=0)
        dzs = (ds @ blk.ws2) * _sigmoid(zs)
        dws1 = dzs.T @ u
        dbs1 = dzs.sum(axis=0)
        du = dzs @ blk.ws1

        dwt2 = dt.T @ ht
        dbt2 = dt.sum(axis=0)
        dzt = (dt @ blk.wt2) * _sigmoid(zt)
        dwt1 = dzt.T @ u
        dbt1 = dzt.sum(axis=0)
        du += dzt @ blk.wt1

        grads.append((dws1, dbs1, dws2, dbs2, dwt1, dbt1, dwt2, dbt2))
        g_prev = np.empty_like(g)
        g_prev[:, keep] = g[:, keep] + du
        g_prev[:, chg] = dv
        g = g_prev
    grads.reverse()
    return loss, FlowGradient(grads)


def flow_loss(params: FlowParams, cloud: ParticleCloud, data: Dataset,
              spec: MfldSpec, xi: float) -> float:
    """Inner proximal fitting loss of the map T = params applied to the cloud.

    Four terms: empirical squared-error risk of the transported particles,
    L2 regularization of the transported particles, -tau/m times the summed
    logdets (change-of-variables entropy surrogate) and the W2 proximity
    penalty (1/(2 m xi)) sum ||T(theta_j) - theta_j||^2.
    """
    loss, _ = _loss_terms(params, cloud, data, spec, xi, want_grad=False)
    return loss


def flow_loss_gradient(params: FlowParams, cloud: ParticleCloud, data: Dataset,
                       spec: MfldSpec, xi: float) -> FlowGradient:
    """Exact gradient of flow_loss with respect to every block parameter."""
    _, grad = _loss_terms(params, cloud, data, spec, xi, want_grad=True)
    return grad


def _subsample(data: Dataset, idx: np.ndarray) -> Dataset:
    return Dataset(data.inputs[idx], data.labels[idx], data.teacher_direction)


def sgd_fit(params: FlowParams, cloud: ParticleCloud, data: Dataset, spec: MfldSpec,
            xi: float, lr: float, iters: int, batch_size: int | None = None,
            rng: SeededRng | None = None, loss_history: list | None = None,
            ) -> tuple[FlowParams, float]:
    """Plain gradient descent on flow_loss: params <- params - lr * grad.

    Full-batch by default (deterministic); a batch_size draws that many data
    rows per iteration from rng. Returns the fitted parameters and the final
    full-batch loss. A non-finite loss aborts with a diagnostic rather than
    being clipped.
    """
    if not lr > 0.0:
        raise ValueError(f"lr must be positive, got {lr}")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if batch_size is not None and rng is None:
        raise ValueError("minibatch fitting needs an rng")
    work = params.copy()
    for it in range(iters):
        batch = data
        if batch_size is not None and batch_size < data.n:
            idx = rng.integers(0, data.n, size=batch_size)
            batch = _subsample(data, idx)
        loss, grad = _loss_terms(work, cloud, batch, spec, xi, want_grad=True)
        if not math.isfinite(loss):
            raise RuntimeError(f"inner fit diverged: non-finite loss at iteration {it}")
        if loss_history is not None:
            loss_history.append(loss)
        for blk, g in zip(work.blocks, grad.blocks):
            for name, garr in zip(_PARAM_FIELDS, g):
                arr = getattr(blk, name)
                arr -= lr * garr
    final_loss = flow_loss(work, cloud, data, spec, xi)
    if not math.isfinite(final_loss):
        raise RuntimeError("inner fit diverged: non-finite final loss")
    if loss_history is not None:
        loss_history.append(final_loss)
    return work, final_loss
