"""Probability-measure representations and exact Wasserstein-2 distances.

Two families of measures appear throughout: one-dimensional Gaussians
(closed-form W2, used by the exact proximal path) and empirical particle
clouds in R^d (exact discrete W2 via assignment, used by the mean-field
path). Everything here is a pure function of its inputs; the only stateful
object is :class:`SeededRng`, which wraps a numpy generator with
deterministic, tag-derived substreams.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog


@dataclass(frozen=True)
class GaussianState:
    """A 1-D Gaussian law N(mean, stddev^2). stddev must be positive."""

    mean: float
    stddev: float

    def __post_init__(self) -> None:
        if not (self.stddev > 0.0 and math.isfinite(self.stddev)):
            raise ValueError(f"stddev must be positive and finite, got {self.stddev}")
        if not math.isfinite(self.mean):
            raise ValueError(f"mean must be finite, got {self.mean}")


class ParticleCloud:
    """An empirical measure (1/m) sum of Dirac masses at m points in R^d.

    Wraps an (m, d) float64 array. The array is copied on construction and
    marked read-only so clouds can be shared safely across threads.
    """

    __slots__ = ("points",)

    def __init__(self, points) -> None:
        pts = np.array(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a nonempty (m, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("cloud contains non-finite points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __repr__(self) -> str:
        return f"ParticleCloud(m={self.m}, d={self.d})"

    def __reduce__(self):
        # __slots__ + read-only array: rebuild through the constructor
        return (ParticleCloud, (np.asarray(self.points),))


class SeededRng:
    """Reproducible random stream with deterministic named substreams.

    A fixed 64-bit master seed fully determines every sample drawn from this
    object and from any stream obtained through :meth:`derive`. Substreams
    are keyed by (master seed, sha256 of the tag), so distinct tags give
    statistically independent streams and the mapping is stable across
    platforms and runs.
    """

    def __init__(self, seed: int) -> None:
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def derive(self, tag: str) -> "SeededRng":
        digest = hashlib.sha256(tag.encode("utf-8")).digest()
        words = [int.from_bytes(digest[4 * i : 4 * i + 4], "little") for i in range(4)]
        child = SeededRng.__new__(SeededRng)
        child.seed = self.seed
        child._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, *words]))
        )
        return child

    # Convenience passthroughs used all over the trainers.
    def standard_normal(self, shape):
        return self._gen.standard_normal(shape)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high=high, size=size)


def w2_gaussian_1d(a: GaussianState, b: GaussianState) -> float:
    """W2 between 1-D Gaussians: sqrt((mean gap)^2 + (stddev gap)^2)."""
    return math.hypot(a.mean - b.mean, a.stddev - b.stddev)


def sample_gaussian_cloud(mean, stddev: float, m: int, rng: SeededRng) -> ParticleCloud:
    """m i.i.d. draws from the isotropic Gaussian N(mean, stddev^2 I)."""
    if not stddev > 0.0:
        raise ValueError(f"stddev must be positive, got {stddev}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    center = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    pts = center[None, :] + stddev * rng.standard_normal((m, center.shape[0]))
    return ParticleCloud(pts)


def _sq_cost_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # ||x_i - y_j||^2. Direct differences are exact (identical points give an
    # exact zero); the memory-light expansion only kicks in for huge problems,
    # where tiny negatives from cancellation get clipped.
    if x.shape[0] * y.shape[0] * x.shape[1] <= 8_000_000:
        diff = x[:, None, :] - y[None, :, :]
        return np.einsum("ijd,ijd->ij", diff, diff)
    xx = np.einsum("id,id->i", x, x)
    yy = np.einsum("jd,jd->j", y, y)
    c = xx[:, None] + yy[None, :] - 2.0 * (x @ y.T)
    np.maximum(c, 0.0, out=c)
    return c


# Above this many replicated points the assignment formulation gets slow and
# we fall back to solving the transportation LP directly (still exact).
_ASSIGNMENT_SIZE_CAP = 4000


def w2_discrete(x: ParticleCloud, y: ParticleCloud) -> float:
    """Exact W2 between uniform-weight particle clouds.

    Equal sizes reduce to an assignment problem (optimal permutation).
    Unequal sizes are handled by replicating each cloud to lcm(mx, my)
    points, which is exact for uniform weights because the transportation
    polytope has integral vertices; very large lcm values fall back to the
    transportation LP.
    """
    if x.d != y.d:
        raise ValueError(f"dimension mismatch: {x.d} vs {y.d}")
    xp, yp = x.points, y.points
    if x.m == y.m:
        cost = _sq_cost_matrix(xp, yp)
        rows, cols = linear_sum_assignment(cost)
        return float(np.sqrt(cost[rows, cols].mean()))

    size = math.lcm(x.m, y.m)
    if size <= _ASSIGNMENT_SIZE_CAP:
        xr = np.repeat(xp, size // x.m, axis=0)
        yr = np.repeat(yp, size // y.m, axis=0)
        cost = _sq_cost_matrix(xr, yr)
        rows, cols = linear_sum_assignment(cost)
        return float(np.sqrt(cost[rows, cols].mean()))
    return _w2_transportation_lp(xp, yp)


def _w2_transportation_lp(xp: np.ndarray, yp: np.ndarray) -> float:
    # Uniform-marginal transportation LP, solved exactly with HiGHS.
    mx, my = xp.shape[0], yp.shape[0]
    cost = _sq_cost_matrix(xp, yp).ravel()
    # Row-sum and column-sum constraints on the mx*my plan.
    a_rows = np.zeros((mx, mx * my))
    for i in range(mx):
        a_rows[i, i * my : (i + 1) * my] = 1.0
    a_cols = np.zeros((my, mx * my))
    for j in range(my):
        a_cols[j, j::my] = 1.0
    a_eq = np.vstack([a_rows, a_cols])
    b_eq = np.concatenate([np.full(mx, 1.0 / mx), np.full(my, 1.0 / my)])
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transportation LP failed: {res.message}")
    return float(np.sqrt(res.fun))
