"""One-dimensional collocation primitives.

Nodes, differentiation matrices, barycentric interpolation matrices and
quadrature weights for the three bases used in the package: Fourier
(periodic, equispaced), Chebyshev (Gauss-Lobatto) and fourth-order central
finite differences on a uniform grid.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .errors import InvalidGrid, TooFewPoints

MIN_NODES = 8


class Basis(enum.Enum):
    FOURIER = "Fourier"
    CHEBYSHEV = "Chebyshev"
    FD4 = "FiniteDifference4"


@dataclass(frozen=True)
class DiffMatrices:
    """Nodes plus first and second derivative matrices for one axis."""

    nodes: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    basis: Basis


def _check_interval(a: float, b: float) -> None:
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        raise InvalidGrid(f"invalid interval [{a}, {b}]")


def fourier_nodes(n: int, a: float, b: float) -> np.ndarray:
    return a + (b - a) * np.arange(n) / n


def chebyshev_nodes(n: int, a: float, b: float) -> np.ndarray:
    """Gauss-Lobatto nodes in increasing order, endpoints included exactly.

    The sine form keeps the nodes exactly symmetric, so an odd ``n`` puts a
    node exactly at the midpoint of the interval.
    """
    N = n - 1
    t = np.sin(np.pi * (2 * np.arange(n) - N) / (2 * N))
    t[0], t[-1] = -1.0, 1.0
    x = a + (t + 1.0) * (b - a) / 2.0
    x[0], x[-1] = a, b
    if n % 2 == 1:
        x[N // 2] = 0.5 * (a + b)
    return x


def fourier_diff(n: int, interval: tuple[float, float]) -> DiffMatrices:
    """Spectral differentiation matrices for periodic functions.

    ``d1`` is the standard even-``n`` matrix, which maps the Nyquist mode to
    zero.  ``d2`` is the exact second-derivative matrix of the trigonometric
    interpolant (it keeps the Nyquist mode at ``-(n/2)^2``); it equals
    ``d1 @ d1`` on every trigonometric polynomial of degree below ``n/2``.
    """
    a, b = map(float, interval)
    _check_interval(a, b)
    if n < MIN_NODES or n % 2:
        raise InvalidGrid(f"Fourier grid needs an even n >= {MIN_NODES}, got {n}")
    h = 2.0 * np.pi / n
    j = np.arange(1, n)
    sign = (-1.0) ** j
    col1 = np.zeros(n)
    col1[1:] = 0.5 * sign / np.tan(j * h / 2.0)
    d1 = toeplitz(col1, -col1)
    col2 = np.empty(n)
    col2[0] = -np.pi**2 / (3.0 * h**2) - 1.0 / 6.0
    col2[1:] = -0.5 * sign / np.sin(j * h / 2.0) ** 2
    d2 = toeplitz(col2)
    scale = 2.0 * np.pi / (b - a)
    return DiffMatrices(fourier_nodes(n, a, b), d1 * scale, d2 * scale**2, Basis.FOURIER)


def chebyshev_weights(n: int) -> np.ndarray:
    """Barycentric weights of the Gauss-Lobatto nodes (increasing order)."""
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def chebyshev_diff(n: int, interval: tuple[float, float]) -> DiffMatrices:
    a, b = map(float, interval)
    _check_interval(a, b)
    if n < MIN_NODES:
        raise InvalidGrid(f"Chebyshev grid needs n >= {MIN_NODES}, got {n}")
    x = chebyshev_nodes(n, a, b)
    w = chebyshev_weights(n)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    d1 = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(d1, 0.0)
    # negative-sum trick: exact annihilation of constants
    np.fill_diagonal(d1, -d1.sum(axis=1))
    return DiffMatrices(x, d1, d1 @ d1, Basis.CHEBYSHEV)


_FD4_FIRST = np.array([1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12])
_FD4_SECOND = np.array([-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12])


def fd4_diff(n: int, spacing: float, closed: bool, boundary: str = "dirichlet") -> DiffMatrices:
    """Fourth-order central differences on ``n`` uniformly spaced points.

    Closed grids wrap around.  On open grids the stencil reaches past the
    ends; ``boundary="dirichlet"`` treats the missing values as zero and
    ``"neumann"`` reflects them evenly about the end point.
    """
    if n < 5:
        raise TooFewPoints(f"need at least 5 points, got {n}")
    if boundary not in ("dirichlet", "neumann"):
        raise ValueError(f"unknown boundary {boundary!r}")
    d1 = np.zeros((n, n))
    d2 = np.zeros((n, n))
    for i in range(n):
        for off, c1, c2 in zip(range(-2, 3), _FD4_FIRST, _FD4_SECOND):
            j = i + off
            if closed:
                j %= n
            elif j < 0 or j >= n:
                if boundary == "dirichlet":
                    continue
                j = -j if j < 0 else 2 * (n - 1) - j
            d1[i, j] += c1
            d2[i, j] += c2
    nodes = spacing * np.arange(n)
    return DiffMatrices(nodes, d1 / spacing, d2 / spacing**2, Basis.FD4)


def fourier_interp_matrix(query: np.ndarray, n: int, a: float, b: float) -> np.ndarray:
    """Rows of barycentric trigonometric interpolation weights (even ``n``)."""
    query = np.atleast_1d(np.asarray(query, dtype=float))
    nodes = fourier_nodes(n, a, b)
    t = np.pi * (query[:, None] - nodes[None, :]) / (b - a)
    s = np.sin(t)
    hit = np.abs(s) < 1e-14
    sign = (-1.0) ** np.arange(n)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c = sign * np.cos(t) / s
        W = c / c.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    W[rows] = hit[rows].astype(float)
    return W


def chebyshev_interp_matrix(query: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Rows of barycentric interpolation weights on Gauss-Lobatto ``nodes``."""
    query = np.atleast_1d(np.asarray(query, dtype=float))
    w = chebyshev_weights(len(nodes))
    d = query[:, None] - nodes[None, :]
    hit = d == 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c = w / d
        W = c / c.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    W[rows] = hit[rows].astype(float)
    return W


def clenshaw_curtis_weights(n: int, a: float, b: float) -> np.ndarray:
    """Clenshaw-Curtis quadrature weights on the Gauss-Lobatto nodes."""
    N = n - 1
    theta = np.pi * np.arange(n) / N
    w = np.zeros(n)
    v = np.ones(N - 1)
    inner = slice(1, N)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k**2 - 1)
        v -= np.cos(N * theta[inner]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k**2 - 1)
    w[inner] = 2.0 * v / N
    # weights are symmetric, so the node order does not matter
    return w * (b - a) / 2.0
