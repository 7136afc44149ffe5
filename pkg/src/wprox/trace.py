"""Per-iteration diagnostics shared by every experiment loop."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TraceRecord:
    """One row of an experiment trace.

    Fields not meaningful for a given path are left as None: the Gaussian
    path fills kl/contraction_ratio and uses w2_to_reference for the distance
    to the target law; the particle paths fill risk/entropy/total_objective
    and optionally w2_to_reference (against a reference cloud), beta_norm_sq
    and inner_final_loss. Distances are stored unsquared; squaring happens at
    CSV/plot emission.
    """

    iteration: int
    risk: float | None = None
    entropy: float | None = None
    total_objective: float | None = None
    w2_to_reference: float | None = None
    kl: float | None = None
    contraction_ratio: float | None = None
    beta_norm_sq: float | None = None
    inner_final_loss: float | None = None
    wall_time_s: float = 0.0
