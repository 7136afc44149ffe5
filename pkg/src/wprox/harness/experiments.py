"""Experiment orchestration: runs, repetitions, sweeps, emitted artifacts.

Every entry point takes a validated ExperimentConfig plus an output
directory and writes the same artifact family: resolved_config.toml, one CSV
per trace, an SVG plot and binary cloud snapshots. Repetitions derive their
weight seeds as base+rep so both algorithms see identical initializations
per repetition; setting WPROX_THREADS > 1 fans repetitions/sweep points out
to a process pool without changing any output byte.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..gaussian_prox import run_gaussian_experiment
from ..measures import ParticleCloud, w2_discrete
from ..prox_trainer import run_noisy_gd, run_proximal_training
from .config import ExperimentConfig, write_resolved_config
from .csvio import emit_trace_csv
from .datasets import generate_teacher_dataset
from .persistence import load_cloud, save_cloud
from .reference import compute_reference, reference_key
from .svgplot import Panel, Series, emit_plot_svg, render_svg

log = logging.getLogger("wprox.experiments")


def _threads() -> int:
    raw = os.environ.get("WPROX_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_tasks(fn, tasks: list):
    n = _threads()
    if n <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(n, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def early_phase_factor(w2_values: list) -> tuple[float, int, float]:
    """Fitted per-step contraction factor of the squared-W2 series.

    The plateau level is the median of the trailing quarter; the early phase
    is the longest prefix staying above twice that level (at least 5
    points). Returns (factor, window_length, plateau) where factor is
    exp(slope) of a least-squares line through log(W2^2) on the window.
    """
    sq = np.asarray([w * w for w in w2_values], dtype=float)
    if sq.size < 8 or np.any(sq <= 0.0):
        raise ValueError("need >= 8 positive W2 values to fit a contraction factor")
    plateau = float(np.median(sq[-(sq.size // 4):]))
    below = np.nonzero(sq <= 2.0 * plateau)[0]
    end = int(below[0]) if below.size else sq.size
    end = max(end, 5)
    xs = np.arange(end)
    slope = float(np.polyfit(xs, np.log(sq[:end]), 1)[0])
    return math.exp(slope), end, plateau


def run_gaussian(cfg: ExperimentConfig, out_dir) -> list:
    out = Path(out_dir)
    write_resolved_config(cfg, out)
    trace = run_gaussian_experiment(cfg.gaussian)
    emit_trace_csv(trace, out / "trace.csv")
    emit_plot_svg({"proximal": trace}, "gaussian", out / "plot.svg",
                  mu=cfg.gaussian.mu, xi=cfg.gaussian.step_xi)
    log.info("gaussian run: KL %.6g -> %.6g over %d iterations",
             trace[0].kl, trace[-1].kl, cfg.gaussian.iterations)
    return trace


def _reference_for(cfg: ExperimentConfig, data) -> ParticleCloud:
    if cfg.reference_path:
        return load_cloud(cfg.reference_path)
    return compute_reference(cfg, data)


def run_mfld_single(cfg: ExperimentConfig, out_dir, algorithm: str) -> list:
    """One standalone particle run; reference only if reference_path is set."""
    out = Path(out_dir)
    write_resolved_config(cfg, out)
    data = generate_teacher_dataset(cfg.mfld.data_count, cfg.mfld.data_dim,
                                    cfg.mfld.data_seed)
    run_cfg = cfg.mfld
    if cfg.reference_path:
        run_cfg = dataclasses.replace(run_cfg, reference=load_cloud(cfg.reference_path))
    snapshots: list = []
    if algorithm == "prox":
        trace = run_proximal_training(run_cfg, data, snapshots)
    elif algorithm == "gd":
        trace = run_noisy_gd(run_cfg, data, snapshots)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    emit_trace_csv(trace, out / "trace.csv")
    emit_plot_svg({algorithm: trace}, "mfld", out / "plot.svg")
    save_cloud(snapshots[-1], out / "final_cloud.wpxc", {
        "algorithm": algorithm,
        "weight_seed": run_cfg.weight_seed,
        "data_seed": run_cfg.data_seed,
    })
    log.info("%s run: risk %.5f -> %.5f", algorithm, trace[0].risk, trace[-1].risk)
    return trace


def run_reference(cfg: ExperimentConfig, out_dir) -> ParticleCloud:
    out = Path(out_dir)
    write_resolved_config(cfg, out)
    ref = compute_reference(cfg)
    save_cloud(ref, out / "reference.wpxc", {"key": reference_key(cfg)})
    return ref


def _rep_task(args):
    algorithm, run_cfg, data = args
    snapshots: list = []
    if algorithm == "prox":
        trace = run_proximal_training(run_cfg, data, snapshots)
    else:
        trace = run_noisy_gd(run_cfg, data, snapshots)
    return trace, snapshots[-1]


def _mean_series(traces: list, attr: str, square: bool = False):
    xs = [rec.iteration for rec in traces[0]]
    rows = []
    for trace in traces:
        vals = [getattr(rec, attr) for rec in trace]
        rows.append([v * v if square and v is not None else v for v in vals])
    means = [float(np.mean([row[i] for row in rows])) for i in range(len(xs))]
    return xs, means


def run_compare(cfg: ExperimentConfig, out_dir) -> dict:
    """Proximal vs noisy-GD on shared data/reference over repetitions."""
    out = Path(out_dir)
    write_resolved_config(cfg, out)
    data = generate_teacher_dataset(cfg.mfld.data_count, cfg.mfld.data_dim,
                                    cfg.mfld.data_seed)
    ref = _reference_for(cfg, data)

    tasks = []
    for rep in range(cfg.repetitions):
        run_cfg = dataclasses.replace(cfg.mfld, weight_seed=cfg.mfld.weight_seed + rep,
                                      reference=ref)
        tasks.append(("prox", run_cfg, data))
        tasks.append(("gd", run_cfg, data))
    results = _map_tasks(_rep_task, tasks)

    prox_traces, gd_traces = [], []
    for i, rep in enumerate(range(cfg.repetitions)):
        prox_trace, prox_final = results[2 * i]
        gd_trace, gd_final = results[2 * i + 1]
        prox_traces.append(prox_trace)
        gd_traces.append(gd_trace)
        emit_trace_csv(prox_trace, out / f"rep{rep:02d}_prox.csv")
        emit_trace_csv(gd_trace, out / f"rep{rep:02d}_gd.csv")
        save_cloud(prox_final, out / f"rep{rep:02d}_prox_final.wpxc",
                   {"weight_seed": cfg.mfld.weight_seed + rep})
        save_cloud(gd_final, out / f"rep{rep:02d}_gd_final.wpxc",
                   {"weight_seed": cfg.mfld.weight_seed + rep})

    _emit_compare_plot(prox_traces, gd_traces, cfg, out / "plot.svg")
    _emit_compare_summary(prox_traces, gd_traces, out / "summary.csv")
    return {"prox": prox_traces, "gd": gd_traces, "reference": ref}


def _emit_compare_plot(prox_traces, gd_traces, cfg, path) -> None:
    reps = len(prox_traces)
    tau = cfg.mfld.spec.tau
    w2_panel = Panel(f"squared W2 to reference (tau={tau:g})", "iteration",
                     "W2^2 (log scale)", logy=True)
    f_panel = Panel(f"total objective (tau={tau:g})", "iteration", "F_tau")
    for color, label, traces in (("#1f77b4", "proximal", prox_traces),
                                 ("#d62728", "noisy-gd", gd_traces)):
        for trace in traces:
            xs = [r.iteration for r in trace]
            w2sq = [None if r.w2_to_reference is None else r.w2_to_reference ** 2
                    for r in trace]
            fs = [r.total_objective for r in trace]
            w2_panel.series.append(Series(xs, w2sq, color=color, opacity=0.25, width=1.0))
            f_panel.series.append(Series(xs, fs, color=color, opacity=0.25, width=1.0))
        xs, w2m = _mean_series(traces, "w2_to_reference", square=True)
        w2_panel.series.append(Series(xs, w2m, label=f"{label} (mean of {reps})",
                                      color=color, width=2.4))
        xs, fm = _mean_series(traces, "total_objective")
        f_panel.series.append(Series(xs, fm, label=f"{label} (mean of {reps})",
                                     color=color, width=2.4))
    render_svg([w2_panel, f_panel], path)


def _emit_compare_summary(prox_traces, gd_traces, path) -> None:
    lines = ["algorithm,rep,early_factor,early_window,w2_sq_plateau,final_w2"]
    for label, traces in (("prox", prox_traces), ("gd", gd_traces)):
        for rep, trace in enumerate(traces):
            w2 = [r.w2_to_reference for r in trace]
            try:
                factor, window, plateau = early_phase_factor(w2)
                fitted = f"{factor!r},{window},{plateau!r}"
            except ValueError:
                fitted = ",,"  # series too short to fit a contraction factor
            lines.append(f"{label},{rep},{fitted},{w2[-1]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def run_sweep(cfg: ExperimentConfig, out_dir) -> dict:
    """Final W2-to-reference versus particle count for both algorithms."""
    out = Path(out_dir)
    write_resolved_config(cfg, out)
    data = generate_teacher_dataset(cfg.mfld.data_count, cfg.mfld.data_dim,
                                    cfg.mfld.data_seed)
    ref = _reference_for(cfg, data)

    tasks = []
    for m in cfg.sweep_particles:
        for rep in range(cfg.repetitions):
            run_cfg = dataclasses.replace(cfg.mfld, particle_count=m,
                                          weight_seed=cfg.mfld.weight_seed + rep)
            tasks.append(("prox", run_cfg, data))
            tasks.append(("gd", run_cfg, data))
    results = _map_tasks(_rep_task, tasks)

    finals: dict = {"prox": {m: [] for m in cfg.sweep_particles},
                    "gd": {m: [] for m in cfg.sweep_particles}}
    runs_dir = out / "runs"
    i = 0
    for m in cfg.sweep_particles:
        for rep in range(cfg.repetitions):
            for alg in ("prox", "gd"):
                trace, final = results[i]
                i += 1
                finals[alg][m].append(float(w2_discrete(final, ref)))
                emit_trace_csv(trace, runs_dir / f"m{m}_rep{rep:02d}_{alg}.csv")

    lines = ["algorithm,m,rep,final_w2"]
    for alg in ("prox", "gd"):
        for m in cfg.sweep_particles:
            for rep, w2 in enumerate(finals[alg][m]):
                lines.append(f"{alg},{m},{rep},{w2!r}")
    (out / "sweep_summary.csv").write_text("\n".join(lines) + "\n")

    ms = list(cfg.sweep_particles)
    emit_plot_svg(
        {
            "proximal (mean)": (ms, [float(np.mean(finals["prox"][m])) for m in ms]),
            "noisy-gd (mean)": (ms, [float(np.mean(finals["gd"][m])) for m in ms]),
        },
        "sweep",
        out / "plot.svg",
    )
    for alg in ("prox", "gd"):
        means = [float(np.mean(finals[alg][m])) for m in ms]
        log.info("sweep %s: %s", alg,
                 "  ".join(f"m={m}: {w:.4f}" for m, w in zip(ms, means)))
    return finals
