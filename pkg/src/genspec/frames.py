"""Local frames adapted to a fibre and the Ito flattening transform.

Near a fibre point ``z`` an isometry ``A`` puts the fibre's tangent space on
the first ``d-1`` coordinates.  In those coordinates the fibre is locally a
graph ``y = g(v)`` and the shear ``(v, y) -> (v, y - g(v))`` flattens it.
Ito's lemma applied to the composite map gives the drift and diffusion seen
along (tangent) and across (normal) the fibre.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .errors import IllConditionedFit, RankDeficientNeighborhood

MAX_FIT_CONDITION = 1e10


@dataclass(frozen=True)
class Isometry:
    """Orthogonal matrix whose last row is the fibre normal, based at ``base``."""

    matrix: np.ndarray
    base: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if np.abs(A.T @ A - np.eye(A.shape[0])).max() > 1e-10:
            raise ValueError("isometry matrix is not orthogonal")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def tangent(self) -> np.ndarray:
        return self.matrix[:-1]

    @property
    def normal(self) -> np.ndarray:
        return self.matrix[-1]

    def to_local(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.base) @ self.matrix.T

    @classmethod
    def rotation(cls, theta: float, base=(0.0, 0.0)) -> "Isometry":
        """Planar rotation by ``theta`` radians."""
        c, s = np.cos(theta), np.sin(theta)
        return cls(np.array([[c, -s], [s, c]]), np.asarray(base, dtype=float))


@dataclass(frozen=True)
class LocalGraph:
    """Quadratic ``y = c0 + g1 . v + 1/2 v^T g2 v`` fitted in local coordinates.

    ``isometry`` is the frame the fit lives in; it differs from the input
    frame when the fit was asked to have zero slope.
    """

    c0: float
    g1: np.ndarray
    g2: np.ndarray
    fit_window: int
    residual: float
    isometry: Isometry

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.atleast_2d(v)
        return self.c0 + v @ self.g1 + 0.5 * np.einsum("ni,ij,nj->n", v, self.g2, v)


@dataclass(frozen=True)
class LocalDynamics:
    mu_hat: np.ndarray
    D_hat: np.ndarray
    mu_tan: float
    mu_nor: float
    D_tan: float
    D_nor: float


def _orient(A: np.ndarray) -> np.ndarray:
    """Make the normal's largest component positive, then fix det(A) = +1."""
    A = A.copy()
    n = A[-1]
    if n[np.argmax(np.abs(n))] < 0:
        A[-1] = -n
    if np.linalg.det(A) < 0:
        A[0] = -A[0]
    return A


def fit_tangent(points: np.ndarray, z) -> Isometry:
    """Total-least-squares tangent hyperplane of ``points`` near ``z``."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    d = P.shape[1]
    if len(P) < d + 2:
        raise RankDeficientNeighborhood(f"need at least {d + 2} points, got {len(P)}")
    C = P - P.mean(axis=0)
    _, sv, Vt = np.linalg.svd(C, full_matrices=True)
    sv = np.concatenate([sv, np.zeros(max(0, d - len(sv)))])
    if sv[0] == 0 or sv[d - 2] <= 1e-12 * sv[0]:
        raise RankDeficientNeighborhood("neighbourhood does not span a hyperplane")
    # rows of Vt are already orthonormal, ordered by decreasing spread
    return Isometry(_orient(Vt), np.asarray(z, dtype=float))


def _design(v: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    n, k = v.shape
    pairs = list(combinations_with_replacement(range(k), 2))
    cols = [np.ones(n)] + [v[:, i] for i in range(k)] + [v[:, i] * v[:, j] for i, j in pairs]
    return np.column_stack(cols), pairs


def _fit_quadratic(local: np.ndarray):
    v, y = local[:, :-1], local[:, -1]
    X, pairs = _design(v)
    cond = np.linalg.cond(X.T @ X)
    if not cond <= MAX_FIT_CONDITION:
        raise IllConditionedFit(f"normal equations condition number {cond:.3g}")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    k = v.shape[1]
    g1 = coef[1 : k + 1]
    g2 = np.zeros((k, k))
    for c, (i, j) in zip(coef[k + 1 :], pairs):
        if i == j:
            g2[i, i] = 2.0 * c
        else:
            g2[i, j] = g2[j, i] = c
    resid = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    return float(coef[0]), g1, g2, resid


def nearest_points(points: np.ndarray, z, window: int) -> np.ndarray:
    d = np.linalg.norm(np.asarray(points) - np.asarray(z), axis=1)
    return np.asarray(points)[np.argsort(d, kind="stable")[:window]]


def fit_local_graph(f, A: Isometry, z, window: int = 13, zero_slope: bool = False) -> LocalGraph:
    """Least-squares quadratic graph of the fibre in the frame ``A``.

    Parameters
    ----------
    f : Fibre or ndarray
        Fibre (or bare point array) supplying the neighbours.
    A : Isometry
    z : point
        Expansion point; the fit is centred here.
    window : int
        Number of nearest fibre points used.
    zero_slope : bool
        Rotate the frame (planar case) until the fitted slope at ``z``
        vanishes, as in the arc-length parameterization.
    """
    pts = f.points if hasattr(f, "points") else np.asarray(f, dtype=float)
    d = pts.shape[1]
    need = d * (d + 1) // 2 + 3
    if window < need:
        raise RankDeficientNeighborhood(f"window {window} below the minimum {need}")
    nb = nearest_points(pts, z, window)
    iso = Isometry(A.matrix, np.asarray(z, dtype=float))
    c0, g1, g2, resid = _fit_quadratic(iso.to_local(nb))
    if zero_slope:
        if d != 2:
            raise ValueError("zero-slope refit is only defined for planar fibres")
        for _ in range(4):
            if abs(g1[0]) < 1e-13:
                break
            phi = np.arctan(g1[0])
            c, s = np.cos(phi), np.sin(phi)
            M = iso.matrix
            iso = Isometry(np.array([c * M[0] + s * M[1], -s * M[0] + c * M[1]]), iso.base)
            c0, g1, g2, resid = _fit_quadratic(iso.to_local(nb))
    return LocalGraph(c0, g1, g2, len(nb), resid, iso)


def transform_linear(mu, D, A: Isometry | np.ndarray):
    """Drift and diffusion in the rotated frame: ``A mu`` and ``A D A^T``."""
    M = A.matrix if isinstance(A, Isometry) else np.asarray(A, dtype=float)
    muA = M @ np.asarray(mu, dtype=float)
    DA = M @ np.asarray(D, dtype=float) @ M.T
    return muA, 0.5 * (DA + DA.T)


def ito_flatten(muA, DA, g1, g2, hessian_sign: float = -1.0):
    """Drift and diffusion after the shear ``y -> y - g(v)``.

    With ``Y = y - g(v)`` Ito's lemma gives the normal drift
    ``mu_d - sum_i mu_i g_i - 1/2 sum_ij D_ij g_ij``.  ``hessian_sign``
    exists only to exhibit the opposite convention in tests.
    """
    muA = np.asarray(muA, dtype=float)
    DA = np.asarray(DA, dtype=float)
    g1 = np.atleast_1d(np.asarray(g1, dtype=float))
    g2 = np.atleast_2d(np.asarray(g2, dtype=float))
    k = len(muA) - 1
    Dt = DA[:k, :k]
    mu_hat = muA.copy()
    mu_hat[k] = muA[k] - muA[:k] @ g1 + hessian_sign * 0.5 * np.sum(Dt * g2)
    D_hat = DA.copy()
    cross = DA[:k, k] - Dt @ g1
    D_hat[:k, k] = cross
    D_hat[k, :k] = cross
    D_hat[k, k] = DA[k, k] - 2.0 * DA[:k, k] @ g1 + g1 @ Dt @ g1
    return mu_hat, D_hat


def split_components(mu_hat, D_hat) -> LocalDynamics:
    mu_hat = np.asarray(mu_hat, dtype=float)
    D_hat = np.asarray(D_hat, dtype=float)
    k = len(mu_hat) - 1
    D_tan = float(np.linalg.svd(D_hat[:k, :k], compute_uv=False)[0]) if k else 0.0
    return LocalDynamics(
        mu_hat,
        D_hat,
        float(np.linalg.norm(mu_hat[:k])),
        float(abs(mu_hat[k])),
        D_tan,
        float(abs(D_hat[k, k])),
    )
