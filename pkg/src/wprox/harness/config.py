"""Declarative run configuration: flat TOML in, validated config out.

Config files are flat key/value TOML. Unknown keys are hard errors (typos
must not silently fall back to defaults), every key is type-checked, and the
fully resolved mapping — defaults included — is echoed into the output
directory so a run's inputs are always reconstructable.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..gaussian_prox import GaussianProxConfig
from ..measures import GaussianState
from ..objectives import MfldSpec
from ..prox_trainer import MfldRunConfig

KINDS = ("gaussian", "mfld-prox", "mfld-gd", "reference", "sweep", "compare")

_GAUSSIAN_DEFAULTS = {
    "init_mean": 0.0,
    "init_stddev": 10.0,
    "step_xi": 0.1,
    "iterations": 60,
    "mu": 1.0,
}

_MFLD_DEFAULTS = {
    "lambda": 0.1,
    "tau": 0.1,
    "particle_count": 100,
    "step_xi": 0.2,
    "outer_iterations": 60,
    "inner_lr": 0.005,
    "inner_iterations": 150,
    "inner_blocks": 2,
    "inner_hidden": 100,
    "inner_init_scale": 0.1,
    "inner_batch": 0,  # 0 = full batch
    "score_bandwidth": 0.5,
    "data_count": 1000,
    "data_dim": 2,
    "data_seed": 101,
    "weight_seed": 202,
    "repetitions": 5,
    "track_beta": True,
    "reference_path": "",
    "ref_step_xi": 0.001,
    "ref_particle_count": 1000,
    "ref_max_steps": 50000,
    "ref_plateau_tol": 1e-6,
    "ref_plateau_window": 1000,
}

_SWEEP_EXTRA = {"sweep_particles": [50, 100, 200, 500]}

_FLOAT_KEYS = {
    "init_mean", "init_stddev", "step_xi", "mu", "lambda", "tau", "inner_lr",
    "inner_init_scale", "score_bandwidth", "ref_step_xi", "ref_plateau_tol",
}
_INT_KEYS = {
    "iterations", "particle_count", "outer_iterations", "inner_iterations",
    "inner_blocks", "inner_hidden", "inner_batch", "data_count", "data_dim",
    "data_seed", "weight_seed", "repetitions", "ref_particle_count",
    "ref_max_steps", "ref_plateau_window",
}
_BOOL_KEYS = {"track_beta"}
_STR_KEYS = {"reference_path"}
_INT_LIST_KEYS = {"sweep_particles"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    values: dict
    gaussian: GaussianProxConfig | None = None
    mfld: MfldRunConfig | None = None
    repetitions: int = 1
    reference_path: str | None = None
    ref_step_xi: float = 0.001
    ref_particle_count: int = 1000
    ref_max_steps: int = 50000
    ref_plateau_tol: float = 1e-6
    ref_plateau_window: int = 1000
    sweep_particles: tuple = ()


def _defaults_for(kind: str) -> dict:
    if kind == "gaussian":
        return dict(_GAUSSIAN_DEFAULTS)
    out = dict(_MFLD_DEFAULTS)
    if kind == "sweep":
        out.update(_SWEEP_EXTRA)
    return out


def _check_type(key: str, value):
    if key in _FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected a boolean, got {value!r}")
        return value
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if key in _INT_LIST_KEYS:
        if (not isinstance(value, list) or not value
                or any(isinstance(v, bool) or not isinstance(v, int) for v in value)):
            raise ConfigError(f"{key}: expected a nonempty list of integers, got {value!r}")
        return [int(v) for v in value]
    raise ConfigError(f"unhandled key {key}")  # pragma: no cover


def _require_positive(values: dict, *keys: str) -> None:
    for key in keys:
        if key in values and not values[key] > 0:
            raise ConfigError(f"{key}: must be positive, got {values[key]}")


def parse_config(path=None, kind: str | None = None) -> ExperimentConfig:
    """Load, validate and resolve a run configuration.

    `path` may be None for an all-defaults config of the given kind. The
    config file may carry its own `kind`; if both are present they must
    agree.
    """
    raw: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            try:
                raw = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: not valid TOML: {exc}") from exc
    file_kind = raw.pop("kind", None)
    if file_kind is not None and not isinstance(file_kind, str):
        raise ConfigError(f"kind: expected a string, got {file_kind!r}")
    if kind is None:
        kind = file_kind
    elif file_kind is not None and file_kind != kind:
        raise ConfigError(f"kind: config says {file_kind!r} but {kind!r} was requested")
    if kind is None:
        raise ConfigError("kind: missing (set it in the config or pick a subcommand)")
    if kind not in KINDS:
        raise ConfigError(f"kind: unknown experiment kind {kind!r}; valid: {', '.join(KINDS)}")

    defaults = _defaults_for(kind)
    unknown = sorted(set(raw) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown config keys for kind {kind}: {', '.join(unknown)}")

    values = {}
    for key, default in defaults.items():
        values[key] = _check_type(key, raw.get(key, default))

    _require_positive(values, "init_stddev", "step_xi", "mu", "inner_lr",
                      "score_bandwidth", "ref_step_xi", "ref_plateau_tol")
    if kind == "gaussian":
        if values["iterations"] < 0:
            raise ConfigError(f"iterations: must be >= 0, got {values['iterations']}")
        gauss = GaussianProxConfig(
            init=GaussianState(values["init_mean"], values["init_stddev"]),
            step_xi=values["step_xi"],
            iterations=values["iterations"],
            mu=values["mu"],
        )
        ordered = {"kind": kind, **values}
        return ExperimentConfig(kind=kind, values=ordered, gaussian=gauss)

    for key in ("lambda", "tau", "inner_init_scale"):
        if values[key] < 0:
            raise ConfigError(f"{key}: must be nonnegative, got {values[key]}")
    for key in ("particle_count", "inner_iterations", "inner_blocks", "inner_hidden",
                "data_count", "data_dim", "repetitions", "ref_particle_count",
                "ref_max_steps", "ref_plateau_window"):
        if values[key] < 1:
            raise ConfigError(f"{key}: must be >= 1, got {values[key]}")
    if values["outer_iterations"] < 0:
        raise ConfigError(f"outer_iterations: must be >= 0, got {values['outer_iterations']}")
    if values["inner_batch"] < 0:
        raise ConfigError(f"inner_batch: must be >= 0 (0 = full batch), got {values['inner_batch']}")
    if kind == "sweep" and any(m < 2 for m in values["sweep_particles"]):
        raise ConfigError("sweep_particles: particle counts must be >= 2")

    mfld = MfldRunConfig(
        spec=MfldSpec(lam=values["lambda"], tau=values["tau"]),
        step_xi=values["step_xi"],
        outer_iterations=values["outer_iterations"],
        particle_count=values["particle_count"],
        data_count=values["data_count"],
        data_dim=values["data_dim"],
        inner_lr=values["inner_lr"],
        inner_iterations=values["inner_iterations"],
        inner_blocks=values["inner_blocks"],
        inner_hidden=values["inner_hidden"],
        inner_init_scale=values["inner_init_scale"],
        inner_batch=values["inner_batch"] or None,
        score_bandwidth=values["score_bandwidth"],
        data_seed=values["data_seed"],
        weight_seed=values["weight_seed"],
        track_beta=values["track_beta"],
    )
    ordered = {"kind": kind, **values}
    return ExperimentConfig(
        kind=kind,
        values=ordered,
        mfld=mfld,
        repetitions=values["repetitions"],
        reference_path=values["reference_path"] or None,
        ref_step_xi=values["ref_step_xi"],
        ref_particle_count=values["ref_particle_count"],
        ref_max_steps=values["ref_max_steps"],
        ref_plateau_tol=values["ref_plateau_tol"],
        ref_plateau_window=values["ref_plateau_window"],
        sweep_particles=tuple(values.get("sweep_particles", ())),
    )


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        text = repr(value)
        return text if any(c in text for c in ".einf") else text + ".0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot render {value!r} as TOML")


def resolved_config_text(cfg: ExperimentConfig) -> str:
    lines = [f"{key} = {_toml_value(val)}" for key, val in cfg.values.items()]
    return "\n".join(lines) + "\n"


def write_resolved_config(cfg: ExperimentConfig, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "resolved_config.toml"
    path.write_text(resolved_config_text(cfg))
    return path
