"""Trace CSV emission and parsing.

One row per trace record, fixed column order, floats in repr round-trip
precision, absent quantities as empty fields. w2_sq_to_reference is derived
from the stored (unsquared) distance at emission time.
"""

from __future__ import annotations

import csv
from pathlib import Path

from ..trace import TraceRecord

COLUMNS = (
    "iter",
    "risk",
    "entropy",
    "total_objective",
    "w2_to_reference",
    "w2_sq_to_reference",
    "kl",
    "contraction_ratio",
    "beta_norm_sq",
    "inner_final_loss",
    "wall_time_s",
)


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def emit_trace_csv(trace, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for rec in trace:
            w2 = rec.w2_to_reference
            writer.writerow(
                [
                    str(rec.iteration),
                    _fmt(rec.risk),
                    _fmt(rec.entropy),
                    _fmt(rec.total_objective),
                    _fmt(w2),
                    _fmt(None if w2 is None else w2 * w2),
                    _fmt(rec.kl),
                    _fmt(rec.contraction_ratio),
                    _fmt(rec.beta_norm_sq),
                    _fmt(rec.inner_final_loss),
                    _fmt(rec.wall_time_s),
                ]
            )


def read_trace_csv(path) -> list[TraceRecord]:
    def opt(s: str):
        return None if s == "" else float(s)

    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"{path}: unexpected CSV header {header}")
        for row in reader:
            vals = dict(zip(COLUMNS, row))
            out.append(
                TraceRecord(
                    iteration=int(vals["iter"]),
                    risk=opt(vals["risk"]),
                    entropy=opt(vals["entropy"]),
                    total_objective=opt(vals["total_objective"]),
                    w2_to_reference=opt(vals["w2_to_reference"]),
                    kl=opt(vals["kl"]),
                    contraction_ratio=opt(vals["contraction_ratio"]),
                    beta_norm_sq=opt(vals["beta_norm_sq"]),
                    inner_final_loss=opt(vals["inner_final_loss"]),
                    wall_time_s=float(vals["wall_time_s"]),
                )
            )
    return out


def strip_wall_time(csv_text: str) -> str:
    """Drop the wall-time column; used by determinism comparisons."""
    lines = csv_text.splitlines()
    out = []
    idx = COLUMNS.index("wall_time_s")
    for line in lines:
        parts = line.split(",")
        del parts[idx]
        out.append(",".join(parts))
    return "\n".join(out) + "\n"
