"""Cross-checks between the compiled whole-run kernel, the python reference
stepper and the no-jit fallback selected by MAW_NO_NUMBA."""

import os
import subprocess
import sys
import textwrap

import pytest

from antcover import _kernels
from antcover.field import NoiseProfile
from antcover.harness import ExperimentConfig, run_experiment


def _compare_paths(**kwargs):
    fast = run_experiment(ExperimentConfig(monitors="off", **kwargs))
    slow = run_experiment(ExperimentConfig(monitors="all", **kwargs))
    for a, b in zip(fast.results, slow.results):
        assert a.cover_time_swept == b.cover_time_swept
        assert a.cover_time_marked == b.cover_time_marked
        assert a.max_revisit_gap == b.max_revisit_gap
        assert a.steps == b.steps
        assert a.start_cells == b.start_cells
    assert slow.violations_total == 0
    return fast


def test_kernel_matches_stepper_seeded_random():
    _compare_paths(domain="empty", width=22, height=22, runs=3, seed=1,
                   tie_break="seeded_random")


def test_kernel_matches_stepper_scan_order():
    _compare_paths(domain="scatter", width=30, height=30, runs=2, seed=2,
                   tie_break="scan_order")


def test_kernel_matches_stepper_adversarial_loops():
    _compare_paths(domain="loops:4", runs=2, seed=3, tie_break="adversarial_loops")


def test_kernel_matches_stepper_multirobot():
    _compare_paths(domain="empty", width=30, height=30, runs=2, seed=4, robots=3)


def test_kernel_matches_stepper_random_walk():
    _compare_paths(domain="empty", width=18, height=18, runs=2, seed=5,
                   algorithm="random_walk")


def test_kernel_matches_stepper_noisy():
    _compare_paths(domain="empty", width=22, height=22, runs=2, seed=6,
                   noise=NoiseProfile("const_scatter", 0.5, 6))


def test_kernel_matches_stepper_l1():
    _compare_paths(domain="empty", width=20, height=20, runs=2, seed=7, metric="l1")


def test_kernel_rerun_bit_identical():
    cfg = ExperimentConfig(domain="maze", width=31, height=31, runs=3, seed=9)
    assert run_experiment(cfg).results_csv() == run_experiment(cfg).results_csv()


_SNIPPET = textwrap.dedent(
    """
    from antcover.harness import ExperimentConfig, run_experiment
    cfg = ExperimentConfig(domain="rooms", width=40, height=40, runs=3, seed=17,
                           robots=2, tie_break="seeded_random")
    print(run_experiment(cfg).results_csv(), end="")
    """
)


def _run_snippet(no_numba: bool) -> str:
    env = dict(os.environ)
    if no_numba:
        env["MAW_NO_NUMBA"] = "1"
    else:
        env.pop("MAW_NO_NUMBA", None)
    out = subprocess.run(
        [sys.executable, "-c", _SNIPPET], env=env,
        capture_output=True, text=True, timeout=600, check=True,
    )
    return out.stdout


@pytest.mark.skipif(not _kernels.NUMBA_ENABLED, reason="jit already disabled")
def test_fallback_matches_jit():
    assert _run_snippet(no_numba=True) == _run_snippet(no_numba=False)


def test_no_numba_env_flag_disables_jit():
    out = subprocess.run(
        [sys.executable, "-c", "from antcover import _kernels; print(_kernels.NUMBA_ENABLED)"],
        env={**os.environ, "MAW_NO_NUMBA": "1"},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "False"
