import time
from contextlib import contextmanager

import numpy as np
import pytest

from romclose.config import PipelineConfig
from romclose.fom import FomConfig, Grid1D, SnapshotSet, solve_burgers
from romclose.pipeline import run_benchmark

ACCEPTANCE_LINES = []


@contextmanager
def criterion(number, title):
    """Record a PASS/FAIL line for an acceptance criterion; failures still raise."""
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        if isinstance(exc, pytest.skip.Exception):
            raise
        line = f"criterion {number} FAIL  {title}  {_describe(detail)}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"criterion {number} PASS  {title}  {_describe(detail)}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def _describe(detail):
    return " ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                    for k, v in detail.items())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def benchmark_cfg():
    return PipelineConfig()


@pytest.fixture(scope="session")
def benchmark_timed(benchmark_cfg):
    """The full Burgers benchmark, run once per session, with its wall time."""
    start = time.perf_counter()
    run = run_benchmark(benchmark_cfg)
    return run, time.perf_counter() - start


@pytest.fixture(scope="session")
def benchmark_run(benchmark_timed):
    return benchmark_timed[0]


@pytest.fixture(scope="session")
def small_burgers():
    """A short, cheap Burgers run on a coarse periodic grid."""
    grid = Grid1D(128, 2 * np.pi)
    cfg = FomConfig(0.05, 2e-3, 500, 10)
    return solve_burgers(cfg, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


def random_snapshots(rng, n=64, M=30, L=2 * np.pi, boundary="periodic"):
    grid = Grid1D(n, L, boundary)
    return SnapshotSet(grid, np.arange(M, dtype=float), rng.standard_normal((n, M)))
