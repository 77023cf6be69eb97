from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genspec.collocation import (
    Basis,
    chebyshev_diff,
    chebyshev_interp_matrix,
    chebyshev_nodes,
    clenshaw_curtis_weights,
    fd4_diff,
    fourier_diff,
    fourier_interp_matrix,
)
from genspec.errors import InvalidGrid, TooFewPoints

TWO_PI = (0.0, 2.0 * np.pi)


def test_fourier_first_derivative_of_cosine():
    dm = fourier_diff(16, TWO_PI)
    x = dm.nodes
    assert np.abs(dm.d1 @ np.cos(x) + np.sin(x)).max() < 1e-10
    assert dm.basis is Basis.FOURIER


def test_fourier_derivatives_annihilate_constants():
    dm = fourier_diff(16, TWO_PI)
    one = np.ones(16)
    assert np.abs(dm.d1 @ one).max() < 1e-12
    assert np.abs(dm.d2 @ one).max() < 1e-10


@pytest.mark.parametrize("k", [1, 2, 3])
def test_fourier_low_modes_exact(k):
    dm = fourier_diff(32, TWO_PI)
    x = dm.nodes
    assert np.abs(dm.d1 @ np.sin(k * x) - k * np.cos(k * x)).max() < 1e-8
    assert np.abs(dm.d2 @ np.sin(k * x) + k**2 * np.sin(k * x)).max() < 1e-8


def test_fourier_second_derivative_matches_square_below_nyquist():
    # d2 is the exact second derivative of the interpolant; it agrees with d1 @ d1
    # on every mode below n/2 and differs only on the Nyquist mode, which d1 kills
    n = 16
    dm = fourier_diff(n, TWO_PI)
    x = dm.nodes
    for k in range(n // 2):
        for f in (np.cos(k * x), np.sin(k * x)):
            assert np.abs(dm.d2 @ f - dm.d1 @ (dm.d1 @ f)).max() < 1e-8
    nyq = np.cos(n // 2 * x)
    assert np.abs(dm.d1 @ nyq).max() < 1e-10
    assert np.allclose(dm.d2 @ nyq, -(n // 2) ** 2 * nyq)


def test_fourier_scales_with_interval():
    dm = fourier_diff(24, (0.0, 4.0))
    x = dm.nodes
    f = np.sin(2 * np.pi * x / 4.0)
    assert np.abs(dm.d1 @ f - (2 * np.pi / 4.0) * np.cos(2 * np.pi * x / 4.0)).max() < 1e-10


def test_chebyshev_cubic_derivative():
    dm = chebyshev_diff(20, (-1.0, 1.0))
    y = dm.nodes
    assert np.abs(dm.d1 @ y**3 - 3 * y**2).max() < 1e-10
    assert np.abs(dm.d2 @ y**3 - 6 * y).max() < 1e-8
    assert np.abs(dm.d1 @ np.ones(20)).max() < 1e-12


def test_chebyshev_nodes_layout():
    y = chebyshev_nodes(51, -5.0, 5.0)
    assert y[0] == -5.0 and y[-1] == 5.0
    assert np.all(np.diff(y) > 0)
    assert y[25] == 0.0
    assert np.allclose(y, -y[::-1], atol=1e-14)


def test_grid_validation():
    with pytest.raises(InvalidGrid):
        fourier_diff(15, TWO_PI)
    with pytest.raises(InvalidGrid):
        fourier_diff(6, TWO_PI)
    with pytest.raises(InvalidGrid):
        chebyshev_diff(7, (-1.0, 1.0))
    with pytest.raises(InvalidGrid):
        chebyshev_diff(10, (1.0, 1.0))
    with pytest.raises(TooFewPoints):
        fd4_diff(4, 0.1, closed=True)


def test_fd4_fourth_order_on_periodic_grid():
    errs = []
    for n in (40, 80):
        h = 2 * np.pi / n
        dm = fd4_diff(n, h, closed=True)
        x = h * np.arange(n)
        errs.append(np.abs(dm.d1 @ np.sin(x) - np.cos(x)).max())
    assert errs[1] < errs[0] / 14.0  # ~2^4


def test_fd4_open_ends():
    n, h = 30, 0.1
    x = h * np.arange(n)
    dm = fd4_diff(n, h, closed=False, boundary="dirichlet")
    # interior rows are exact on quartics' derivatives up to cubic order
    f = x**3
    inner = slice(2, n - 2)
    assert np.abs((dm.d1 @ f)[inner] - 3 * x[inner] ** 2).max() < 1e-9
    neu = fd4_diff(n, h, closed=False, boundary="neumann")
    # even reflection: constants are annihilated everywhere
    assert np.abs(neu.d1 @ np.ones(n)).max() < 1e-12
    assert np.abs(neu.d2 @ np.ones(n)).max() < 1e-9


def test_interpolation_exact_at_nodes():
    x = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    W = fourier_interp_matrix(x, 16, 0.0, 2 * np.pi)
    assert np.allclose(W, np.eye(16))
    y = chebyshev_nodes(12, -1.0, 1.0)
    assert np.allclose(chebyshev_interp_matrix(y, y), np.eye(12))


@settings(max_examples=40, deadline=None)
@given(
    coef=st.lists(st.floats(-1, 1), min_size=7, max_size=7),
    q=st.floats(0.0, 2 * np.pi, exclude_max=True),
)
def test_fourier_interpolation_exact_for_low_degree(coef, q):
    n = 16
    x = np.arange(n) * 2 * np.pi / n
    f = lambda t: coef[0] + sum(coef[k] * np.cos(k * t) + coef[k + 3] * np.sin(k * t) for k in (1, 2, 3))
    W = fourier_interp_matrix(np.array([q]), n, 0.0, 2 * np.pi)
    assert abs(W[0] @ f(x) - f(q)) < 1e-10


@settings(max_examples=40, deadline=None)
@given(
    coef=st.lists(st.floats(-2, 2), min_size=6, max_size=6),
    q=st.floats(-3.0, 3.0),
)
def test_chebyshev_interpolation_exact_for_polynomials(coef, q):
    y = chebyshev_nodes(10, -3.0, 3.0)
    f = np.polynomial.Polynomial(coef)
    W = chebyshev_interp_matrix(np.array([q]), y)
    assert abs(W[0] @ f(y) - f(q)) < 1e-9 * max(1.0, np.abs(f(y)).max())


def test_clenshaw_curtis():
    for n in (9, 10):
        y = chebyshev_nodes(n, -2.0, 3.0)
        w = clenshaw_curtis_weights(n, -2.0, 3.0)
        assert abs(w.sum() - 5.0) < 1e-12
        assert abs(w @ y**2 - (27 + 8) / 3) < 1e-10
    y = chebyshev_nodes(41, -5.0, 5.0)
    w = clenshaw_curtis_weights(41, -5.0, 5.0)
    assert abs(w @ np.exp(-(y**2)) - np.sqrt(np.pi)) < 1e-8
