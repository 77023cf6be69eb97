from __future__ import annotations

import numpy as np
import pytest

from genspec import bench
from genspec.errors import AllWeightsZero, ComponentTooShort, DegenerateGradient, FibreTooShort
from genspec.fibre import Fibre, attach_weights, hausdorff, resample_uniform, trace_level_set
from genspec.sde import DomainSpec, GridFunction

from conftest import SEED, averaged_density


def periodic_box(nx=32, ny=33, L=3.0):
    return DomainSpec.box((0.0, 2 * np.pi, "periodic", nx), (-L, L, "dirichlet", ny))


def field(dom, f):
    X, Y = dom.mesh()
    return GridFunction(dom, f(X, Y))


def test_straight_level_set():
    psi = field(periodic_box(), lambda x, y: np.cos(x))
    f = trace_level_set(psi, (np.pi / 2, 0.0))
    assert not f.closed
    assert np.abs(f.points[:, 0] - np.pi / 2).max() < 1e-8
    assert f.points[:, 1].min() == pytest.approx(-3.0) and f.points[:, 1].max() == pytest.approx(3.0)
    # oriented with y increasing
    assert f.points[-1, 1] > f.points[0, 1]


def test_level_set_of_complex_field_uses_real_part():
    psi = field(periodic_box(), lambda x, y: np.cos(x) + 1j * np.sin(y))
    f = trace_level_set(psi, (1.0, 0.5))
    assert np.abs(f.points[:, 0] - 1.0).max() < 1e-8
    g = trace_level_set(psi, (1.0, 0.5), use_imag=True)
    assert np.abs(g.points[:, 1] - 0.5).max() < 1e-8
    assert g.closed  # wraps around the periodic axis


def test_wrapping_fibre_is_closed():
    psi = field(periodic_box(), lambda x, y: y + 0.3 * np.sin(x))
    f = trace_level_set(psi, (1.0, 0.0))
    assert f.closed
    exact = -0.3 * np.sin(f.points[:, 0]) + 0.3 * np.sin(1.0)
    assert np.abs(f.points[:, 1] - exact).max() < 1e-6
    xx = np.linspace(0, 2 * np.pi, 20001)
    length = np.trapezoid(np.sqrt(1 + 0.09 * np.cos(xx) ** 2), xx)
    r = resample_uniform(f, 0.05)
    assert abs(len(r) * r.spacing - length) < 1e-3
    # continuous across the seam, closing segment included
    assert np.abs(r.segment_lengths - r.spacing).max() < 0.01 * r.spacing
    ext = r.extended(5)
    assert np.abs(np.linalg.norm(np.diff(ext, axis=0), axis=1) - r.spacing).max() < 0.01 * r.spacing


def test_circle():
    dom = DomainSpec.box((-2.0, 2.0, "dirichlet", 24), (-2.0, 2.0, "dirichlet", 24))
    psi = field(dom, lambda x, y: x**2 + y**2)
    f = trace_level_set(psi, (1.0, 0.0))
    assert f.closed
    r = resample_uniform(f, 2 * np.pi / 100)
    assert len(r) == 100
    assert np.abs(np.hypot(*r.points.T) - 1).max() < 1e-3
    assert np.allclose(r.points[0], (1.0, 0.0), atol=0.05)


def test_degenerate_seed():
    psi = field(periodic_box(), lambda x, y: np.ones_like(x))
    with pytest.raises(DegenerateGradient):
        trace_level_set(psi, (1.0, 0.0))


def test_tiny_component():
    dom = DomainSpec.box((-2.0, 2.0, "dirichlet", 16), (-2.0, 2.0, "dirichlet", 16))
    psi = field(dom, lambda x, y: x**2 + y**2)
    with pytest.raises(ComponentTooShort):
        trace_level_set(psi, (0.05, 0.0), refine=2)


def test_resample_segment():
    f = Fibre(np.array([[0.0, 0.0], [1.0, 0.0]]), 0.0, np.zeros(2))
    r = resample_uniform(f, 0.1)
    assert len(r) == 11
    assert np.allclose(r.points[:, 0], np.linspace(0, 1, 11))
    assert np.allclose(r.segment_lengths, 0.1)
    with pytest.raises(FibreTooShort):
        resample_uniform(f, 0.5)


def test_weights():
    dom = periodic_box()
    f = Fibre(np.column_stack([np.full(11, 1.0), np.linspace(-1, 1, 11)]), 0.0, np.zeros(2))
    uni = attach_weights(f, field(dom, lambda x, y: np.ones_like(x)))
    assert np.allclose(uni.weights, 1 / 11)
    gauss = attach_weights(f, field(dom, lambda x, y: np.exp(-(y**2))))
    expect = np.exp(-f.points[:, 1] ** 2)
    assert np.allclose(gauss.weights, expect / expect.sum(), atol=1e-8)
    with pytest.raises(AllWeightsZero):
        attach_weights(f, field(dom, lambda x, y: np.zeros_like(x)))


def test_hausdorff():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert hausdorff(a, a) == 0
    assert hausdorff(a, a + [0.0, 0.2]) == pytest.approx(0.2)


# benchmark fibre: x = sin(y) + c in the transformed coordinates


def test_benchmark_fibre_shape(benchmark):
    f = benchmark.solution.fibre(SEED)
    c = f.points[:, 0] - np.sin(f.points[:, 1])
    assert abs(c.mean() - 5.0) < 0.02
    rms = np.sqrt(np.mean((c - 5.0) ** 2))
    assert rms < 0.05
    exact = np.column_stack([np.sin(f.points[:, 1]) + 5.0, f.points[:, 1]])
    assert hausdorff(f.points, exact) < 0.05
    # y spans the truncated interval
    assert f.points[0, 1] == pytest.approx(-5.0) and f.points[-1, 1] == pytest.approx(5.0)


def test_benchmark_fibre_resampling(benchmark):
    f = benchmark.solution.fibre(SEED)
    yy = np.linspace(-5, 5, 20001)
    length = np.trapezoid(np.sqrt(1 + np.cos(yy) ** 2), yy)
    assert abs(f.length - length) < 0.02 * length
    assert abs(f.spacing - 0.1) < 0.001
    seg = f.segment_lengths
    assert np.abs(seg - f.spacing).max() < 0.01 * f.spacing
    assert np.abs(f.level_residual()).max() < 1e-8


def test_benchmark_fibre_weights(benchmark):
    f = benchmark.solution.fibre(SEED, weighted=True)
    assert abs(f.weights.sum() - 1) < 1e-12
    assert np.all(f.weights >= 0)
    ref = averaged_density(*f.points.T)
    ref /= ref.sum()
    assert np.abs(f.weights - ref).max() < 0.01 * ref.max()


def test_benchmark_reseed_on_same_fibre(benchmark):
    f = benchmark.solution.fibre(SEED)
    g = trace_level_set(benchmark.solution.psi1(SEED), f.points[30])
    assert abs(g.level - f.level) < 1e-6
    assert hausdorff(resample_uniform(g, 0.1).points, f.points) <= f.spacing


def test_eigenfunction_constant_along_fibres(benchmark):
    # psi_1 varies little along each exact fibre compared with its range across fibres
    psi = benchmark.solution.psi1(SEED)
    ys = np.linspace(-2, 2, 81)
    vals = []
    for c in np.linspace(0, 2 * np.pi, 24, endpoint=False):
        x = np.mod(np.sin(ys) + c, 2 * np.pi)
        vals.append(psi.evaluate(np.vstack([x, ys])))
    vals = np.array(vals)
    for part in (vals.real, vals.imag):
        across = np.ptp(part.mean(axis=1))
        along = np.ptp(part, axis=1).max()
        assert along < 0.1 * across


def test_benchmark_fibre_from_imaginary_part(benchmark):
    g = trace_level_set(benchmark.solution.psi1(SEED), SEED, use_imag=True)
    c = g.points[:, 0] - np.sin(g.points[:, 1])
    assert np.sqrt(np.mean((c - c.mean()) ** 2)) < 0.05
