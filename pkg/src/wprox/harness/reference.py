"""High-resolution reference solution, cached content-addressed on disk.

The anchor cloud for W2 comparisons is produced by running noisy gradient
descent with a very small step on many particles until the risk plateaus (or
a step cap is hit). Because that costs minutes, the result is persisted
under a name derived from every parameter that defines it; reruns with the
same parameters load the cached cloud. Set WPROX_CACHE to relocate the
cache (default ~/.cache/wprox).
"""

from __future__ import annotations

import hashlib
import logging
import os
from pathlib import Path

import numpy as np

from ..measures import ParticleCloud, SeededRng, sample_gaussian_cloud
from ..objectives import Dataset, risk
from ..prox_trainer import noisy_gd_step
from .config import ExperimentConfig
from .datasets import generate_teacher_dataset
from .persistence import load_cloud, save_cloud

log = logging.getLogger("wprox.reference")


def cache_dir() -> Path:
    env = os.environ.get("WPROX_CACHE")
    path = Path(env) if env else Path.home() / ".cache" / "wprox"
    path.mkdir(parents=True, exist_ok=True)
    return path


def reference_key(cfg: ExperimentConfig) -> str:
    """Hash of every parameter the reference cloud depends on."""
    m = cfg.mfld
    parts = (
        f"data_seed={m.data_seed} data_count={m.data_count} data_dim={m.data_dim} "
        f"lambda={m.spec.lam!r} tau={m.spec.tau!r} "
        f"ref_step_xi={cfg.ref_step_xi!r} ref_particle_count={cfg.ref_particle_count} "
        f"ref_max_steps={cfg.ref_max_steps} ref_plateau_tol={cfg.ref_plateau_tol!r} "
        f"ref_plateau_window={cfg.ref_plateau_window}"
    )
    return hashlib.sha256(parts.encode()).hexdigest()[:16]


def compute_reference(cfg: ExperimentConfig, data: Dataset | None = None) -> ParticleCloud:
    """Return the reference cloud for cfg, computing and caching if needed."""
    if cfg.mfld is None:
        raise ValueError("reference computation needs a particle-run config")
    key = reference_key(cfg)
    path = cache_dir() / f"reference_{key}.wpxc"
    if path.exists():
        log.info("reference cache hit: %s", path)
        return load_cloud(path)

    if data is None:
        data = generate_teacher_dataset(cfg.mfld.data_count, cfg.mfld.data_dim,
                                        cfg.mfld.data_seed)
    spec = cfg.mfld.spec
    xi = cfg.ref_step_xi
    window = cfg.ref_plateau_window
    seed_rng = SeededRng(cfg.mfld.data_seed)
    cloud = sample_gaussian_cloud(np.zeros(cfg.mfld.data_dim), 1.0,
                                  cfg.ref_particle_count, seed_rng.derive("reference-init"))
    noise = seed_rng.derive("reference-noise")
    log.info("computing reference: m=%d xi=%g tau=%g (up to %d steps)",
             cfg.ref_particle_count, xi, spec.tau, cfg.ref_max_steps)
    risk_prev = risk(cloud, data, spec)
    steps = 0
    while steps < cfg.ref_max_steps:
        for _ in range(min(window, cfg.ref_max_steps - steps)):
            cloud = noisy_gd_step(cloud, data, spec, xi, noise)
            steps += 1
        risk_now = risk(cloud, data, spec)
        if steps % (10 * window) == 0:
            log.info("  reference step %d: risk %.6f", steps, risk_now)
        if abs(risk_now - risk_prev) < cfg.ref_plateau_tol:
            log.info("  risk plateaued after %d steps", steps)
            break
        risk_prev = risk_now

    meta = {
        "kind": "reference",
        "key": key,
        "steps_run": steps,
        "final_risk": repr(risk(cloud, data, spec)),
        "data_seed": cfg.mfld.data_seed,
        "tau": repr(spec.tau),
        "lambda": repr(spec.lam),
        "ref_step_xi": repr(xi),
        "ref_particle_count": cfg.ref_particle_count,
    }
    save_cloud(cloud, path, meta)
    log.info("reference saved: %s", path)
    return cloud
