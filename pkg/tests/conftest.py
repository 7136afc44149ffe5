"""Shared fixtures and the acceptance-criteria summary hook.

The reference cloud and the two heavy experiment fixtures are session-scoped
and cached on disk (WPROX_CACHE points into the test tree) so repeated runs
only pay the long-horizon cost once.
"""

import os
from pathlib import Path

os.environ.setdefault("WPROX_CACHE", str(Path(__file__).resolve().parent / "_cache"))

import pytest

from wprox.harness.config import parse_config

_CRITERIA = (
    ("test_criterion_01_gaussian_rate",
     "1. Gaussian per-step KL ratio <= 1/(1+mu*xi)^2 over 60 iterations"),
    ("test_criterion_02_sharper_than_one_step_rate",
     "2. KL trace below squared-rate envelope, strictly below single-rate envelope"),
    ("test_criterion_03_envelope_derivative_identity",
     "3. d/dxi of the proximal envelope matches -W2^2/(2 xi^2) to 1e-4"),
    ("test_criterion_04_prox_matches_numeric_minimizer",
     "4. closed-form prox matches 2-D numeric minimization to 1e-6; fixed point 1e-14"),
    ("test_criterion_05_w2_matches_brute_force",
     "5. discrete W2 equals permutation brute force to 1e-12 on 50 random pairs"),
    ("test_criterion_06_flow_correctness",
     "6. flow round trip < 1e-9, logdet vs numeric Jacobian < 1e-6, grad vs FD < 1e-4"),
    ("test_criterion_07_estimator_calibration",
     "7. entropy estimate within 0.1; kernel score RMS error < 0.15"),
    ("test_criterion_08_mfld_comparison",
     "8. proximal F_tau nonincreasing (2% slack); early W2^2 factor < 1, prox <= gd"
     " on >= 4/5 reps; plateaus within 3x"),
    ("test_criterion_09_inexact_error_bounded",
     "9. beta_norm_sq: max(trailing half) <= 2 * max(leading half) over 40 steps"),
    ("test_criterion_10_particle_sweep_monotone",
     "10. mean final W2 nonincreasing over m in {50,100,200,500}, both algorithms"),
    ("test_criterion_11_determinism",
     "11. repeated runs byte-identical CSVs (wall-time column excluded)"),
)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"),
                          ("error", "FAIL"), ("skipped", "SKIP")):
        for report in terminalreporter.stats.get(status, ""):
            nodeid = getattr(report, "nodeid", "")
            base = nodeid.split("::")[-1].split("[")[0]
            if outcomes.get(base) != "FAIL":
                outcomes[base] = label
    if not any(name in outcomes for name, _ in _CRITERIA):
        return
    terminalreporter.section("acceptance criteria")
    for name, description in _CRITERIA:
        verdict = outcomes.get(name, "NOT RUN")
        terminalreporter.write_line(f"{verdict:8s}{description}")


@pytest.fixture(scope="session")
def compare_config():
    """Default comparison study config (matches the reference experiment)."""
    return parse_config(None, kind="compare")


@pytest.fixture(scope="session")
def reference_cloud(compare_config):
    from wprox.harness.reference import compute_reference

    return compute_reference(compare_config)


@pytest.fixture(scope="session")
def compare_results(compare_config, tmp_path_factory):
    """Five-repetition proximal-vs-gd study on the default configuration."""
    from wprox.harness.experiments import run_compare

    out = tmp_path_factory.mktemp("compare")
    return run_compare(compare_config, out)
