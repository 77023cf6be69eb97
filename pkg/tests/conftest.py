from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from genspec import bench
from genspec.analysis import AnalysisConfig, SpectralSolution, algorithm1, algorithm2b

SEED = (5.0, 0.0)

# filled by tests/test_acceptance.py, echoed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


@dataclass
class Benchmark:
    sys: object
    config: AnalysisConfig
    solution: SpectralSolution
    reference: np.ndarray

    @property
    def spectrum(self):
        return self.solution.spectrum

    @property
    def density(self):
        return self.solution.density


def averaged_density(X, Y, n=4000):
    """Small-eps density: slow marginal of the averaged SDE times N(sin x, 1/2) in y.

    The averaged drift/diffusion ratio has nonzero mean, so the stationary
    state carries a constant probability flux around the circle.
    """
    h = 2 * np.pi / n
    xs = h * np.arange(2 * n)
    mu, D = bench.homogenized_reference(xs)
    phi = np.concatenate([[0.0], np.cumsum(2 * mu / D)[:-1] * h])
    ce = np.concatenate([[0.0], np.cumsum(np.exp(-phi))[:-1] * h])
    q = np.exp(phi[:n]) * (ce[n:] - ce[:n])
    p = q / D[:n]
    p /= p.sum() * h
    xo = np.mod(X - np.sin(Y), 2 * np.pi)
    px = np.interp(xo, xs[:n], p, period=2 * np.pi)
    return px * np.exp(-((Y - np.sin(xo)) ** 2)) / np.sqrt(np.pi)


@pytest.fixture(scope="session")
def benchmark() -> Benchmark:
    """Default slow-fast benchmark with one shared eigensolve."""
    sys_ = bench.crommelin_transformed()
    cfg = AnalysisConfig(anchor=SEED)
    sol = SpectralSolution(sys_, cfg)
    return Benchmark(sys_, cfg, sol, bench.fibre_eigenvalues(bench.DEFAULT_EPS, cfg.k_max - 1))


@pytest.fixture(scope="session")
def report1(benchmark):
    return algorithm1(benchmark.sys, SEED, benchmark.config, benchmark.solution)


@pytest.fixture(scope="session")
def report2b(benchmark):
    return algorithm2b(benchmark.sys, SEED, benchmark.config, benchmark.solution, benchmark.reference)


@pytest.fixture(scope="session")
def original_spectrum():
    sol = SpectralSolution(bench.crommelin_original(), AnalysisConfig())
    return sol.spectrum


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
