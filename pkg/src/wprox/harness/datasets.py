"""Synthetic regression data from the sin teacher."""

from __future__ import annotations

import numpy as np

from ..measures import SeededRng
from ..objectives import Dataset


def generate_teacher_dataset(n: int, d: int, seed: int) -> Dataset:
    """N inputs x ~ N(0, I_d) labeled by y = sin(alpha . x).

    The teacher direction alpha ~ N(0, I_d) is drawn first from the seed's
    stream, then the inputs, so a given seed pins the whole dataset.
    """
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    gen = SeededRng(seed).derive("teacher-data").generator
    alpha = gen.standard_normal(d)
    inputs = gen.standard_normal((n, d))
    labels = np.sin(inputs @ alpha)
    return Dataset(inputs=inputs, labels=labels, teacher_direction=alpha)
