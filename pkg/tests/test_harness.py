import math

import numpy as np
import pytest

from wprox.harness import cli
from wprox.harness.config import ConfigError, parse_config, resolved_config_text
from wprox.harness.csvio import (
    COLUMNS,
    emit_trace_csv,
    read_trace_csv,
    strip_wall_time,
)
from wprox.harness.datasets import generate_teacher_dataset
from wprox.harness.experiments import early_phase_factor
from wprox.harness.persistence import load_cloud, load_metadata, save_cloud
from wprox.harness.svgplot import emit_plot_svg
from wprox.measures import ParticleCloud
from wprox.trace import TraceRecord


# ---------------------------------------------------------------- config ---

def test_defaults_load_for_every_kind():
    for kind in ("gaussian", "mfld-prox", "mfld-gd", "reference",
                 "compare", "sweep"):
        cfg = parse_config(None, kind=kind)
        assert cfg.kind == kind
    mfld = parse_config(None, kind="compare")
    assert mfld.mfld.particle_count == 100
    assert mfld.mfld.spec.lam == 0.1 and mfld.mfld.spec.tau == 0.1
    assert mfld.repetitions == 5
    gauss = parse_config(None, kind="gaussian")
    assert gauss.gaussian.step_xi == 0.1 and gauss.gaussian.iterations == 60


def test_unknown_key_is_an_error(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('kind = "gaussian"\nstep_size = 0.1\n')
    with pytest.raises(ConfigError, match="step_size"):
        parse_config(path)


def test_kind_mismatch_is_an_error(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('kind = "gaussian"\n')
    with pytest.raises(ConfigError, match="kind"):
        parse_config(path, kind="sweep")


def test_type_and_range_checks(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('kind = "gaussian"\nstep_xi = "big"\n')
    with pytest.raises(ConfigError, match="step_xi"):
        parse_config(path)
    path.write_text('kind = "mfld-prox"\nparticle_count = -3\n')
    with pytest.raises(ConfigError, match="particle_count"):
        parse_config(path)


def test_inner_batch_zero_means_full_batch(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('kind = "mfld-prox"\ninner_batch = 0\n')
    cfg = parse_config(path)
    assert cfg.mfld.inner_batch is None


def test_resolved_config_roundtrips(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('kind = "compare"\nstep_xi = 0.25\nrepetitions = 2\n')
    cfg = parse_config(path)
    echo = tmp_path / "resolved.toml"
    echo.write_text(resolved_config_text(cfg))
    again = parse_config(echo)
    assert again == cfg


# ----------------------------------------------------------------- csvio ---

def _fake_trace():
    return [
        TraceRecord(iteration=0, risk=0.5, entropy=-1.0, total_objective=0.4,
                    w2_to_reference=2.0, kl=None, contraction_ratio=None,
                    beta_norm_sq=None, inner_final_loss=None, wall_time_s=0.1),
        TraceRecord(iteration=1, risk=0.25, entropy=-1.1, total_objective=0.14,
                    w2_to_reference=1.0, kl=None, contraction_ratio=0.5,
                    beta_norm_sq=0.01, inner_final_loss=0.2, wall_time_s=0.3),
    ]


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "t.csv"
    trace = _fake_trace()
    emit_trace_csv(trace, path)
    text = path.read_text()
    header = text.splitlines()[0]
    assert header == ",".join(COLUMNS)
    again = read_trace_csv(path)
    assert again == trace


def test_csv_squares_distance_at_emission(tmp_path):
    path = tmp_path / "t.csv"
    emit_trace_csv(_fake_trace(), path)
    rows = path.read_text().splitlines()
    idx = COLUMNS.index("w2_sq_to_reference")
    assert rows[1].split(",")[idx] == "4.0"


def test_strip_wall_time(tmp_path):
    path = tmp_path / "t.csv"
    emit_trace_csv(_fake_trace(), path)
    stripped = strip_wall_time(path.read_text())
    for line in stripped.splitlines():
        assert "wall_time" not in line
        assert len(line.split(",")) == len(COLUMNS) - 1


def test_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_trace_csv(path)


# ----------------------------------------------------------- persistence ---

def test_cloud_save_load_roundtrip(tmp_path):
    pts = np.random.default_rng(0).normal(size=(17, 3))
    cloud = ParticleCloud(pts)
    path = tmp_path / "c.wpxc"
    save_cloud(cloud, path, {"purpose": "test", "count": 17})
    again = load_cloud(path)
    assert np.array_equal(again.points, cloud.points)
    meta = load_metadata(path)
    assert meta["purpose"] == "test"
    assert meta["count"] == "17"


def test_cloud_load_rejects_corrupt_file(tmp_path):
    path = tmp_path / "c.wpxc"
    path.write_bytes(b"not a cloud file at all")
    with pytest.raises(ValueError):
        load_cloud(path)


# ---------------------------------------------------------------- dataset ---

def test_teacher_dataset_is_deterministic_and_consistent():
    a = generate_teacher_dataset(50, 2, 7)
    b = generate_teacher_dataset(50, 2, 7)
    c = generate_teacher_dataset(50, 2, 8)
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.labels, b.labels)
    assert not np.array_equal(a.inputs, c.inputs)
    assert a.teacher_direction.shape == (2,)
    assert np.allclose(a.labels, np.sin(a.inputs @ a.teacher_direction), atol=1e-15)
    assert np.all(np.abs(a.labels) <= 1.0)


# ------------------------------------------------------------------ plots ---

def test_plot_emission(tmp_path):
    trace = _fake_trace()
    gaussian_trace = [
        TraceRecord(iteration=i, risk=None, entropy=None, total_objective=None,
                    w2_to_reference=3.0 * 0.8**i, kl=2.0 * 0.7**i,
                    contraction_ratio=None, beta_norm_sq=None,
                    inner_final_loss=None, wall_time_s=0.0)
        for i in range(10)
    ]
    p1 = tmp_path / "g.svg"
    emit_plot_svg({"proximal": gaussian_trace}, "gaussian", p1, mu=1.0, xi=0.1)
    p2 = tmp_path / "m.svg"
    emit_plot_svg({"prox": trace, "gd": trace}, "mfld", p2)
    p3 = tmp_path / "s.svg"
    emit_plot_svg({"prox": ([50, 100], [0.3, 0.2])}, "sweep", p3)
    for p in (p1, p2, p3):
        text = p.read_text()
        assert text.startswith("<svg")
        assert "NaN" not in text and "nan" not in text
    assert "rate bound" in p1.read_text()
    with pytest.raises(ValueError):
        emit_plot_svg({}, "gaussian", tmp_path / "empty.svg")


# ------------------------------------------------------------ experiments ---

def test_early_phase_factor_recovers_geometric_rate():
    rate = 0.8
    w2_sq = [1.0 * rate**n + 1e-4 for n in range(60)]
    w2 = [math.sqrt(v) for v in w2_sq]
    factor, window, plateau = early_phase_factor(w2)
    assert factor == pytest.approx(rate, abs=0.02)
    assert window >= 5
    assert plateau == pytest.approx(1e-4, rel=0.5)


def test_early_phase_factor_rejects_short_series():
    with pytest.raises(ValueError):
        early_phase_factor([1.0, 0.5, 0.25])


# -------------------------------------------------------------------- cli ---

def test_cli_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('kind = "gaussian"\nnonsense = 1\n')
    code = cli.main(["gaussian", "--config", str(bad),
                     "--out", str(tmp_path / "out")])
    assert code == 2


def test_cli_gaussian_run(tmp_path):
    cfg = tmp_path / "g.toml"
    cfg.write_text('kind = "gaussian"\niterations = 4\n')
    out = tmp_path / "out"
    code = cli.main(["gaussian", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    assert (out / "trace.csv").exists()
    assert (out / "plot.svg").exists()
    assert (out / "resolved_config.toml").exists()
    assert len(read_trace_csv(out / "trace.csv")) == 5


def test_cli_sweep_particle_override(tmp_path):
    bad = cli.main(["sweep", "--out", str(tmp_path / "o"), "--particles", "a,b"])
    assert bad == 2
