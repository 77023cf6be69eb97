"""Leading eigenpairs of generator matrices and the invariant density."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    AnchorDegenerate,
    EigensolverFailure,
    NegativeDensity,
    ResidualTooLarge,
    ZeroModeNotFound,
)
from .generator import GeneratorKind, GeneratorMatrix
from .sde import GridFunction

RESIDUAL_TOL = 1e-6
ZERO_MODE_TOL = 1e-4
# relative to max(rho); spectral collocation leaves oscillatory undershoot of
# order 1e-5 max(rho) in the exponentially small tails
NEGATIVE_DENSITY_TOL = 1e-4


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by decreasing real part, with matching eigenfunctions.

    ``eigenfunctions`` holds :class:`GridFunction` objects for operators on a
    collocation grid and plain sample vectors for fibre operators.
    """

    eigenvalues: np.ndarray
    eigenfunctions: tuple
    kind: GeneratorKind
    residuals: np.ndarray

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def vector(self, k: int) -> np.ndarray:
        f = self.eigenfunctions[k]
        return f.values if isinstance(f, GridFunction) else np.asarray(f)


def sort_eigenvalues(w: np.ndarray) -> np.ndarray:
    """Indices ordering ``w`` by decreasing real part.

    Conjugate pairs share a real part (up to rounding) and come out adjacent,
    positive imaginary part first.
    """
    w = np.asarray(w, dtype=complex)
    scale = max(np.abs(w).max(initial=0.0), 1e-300)
    re = np.round(w.real / scale, 12)
    return np.lexsort((-w.imag, -re))


def _eliminate(M: GeneratorMatrix):
    """Reduced matrix on interior unknowns plus the lifting map.

    Boundary rows read ``A_bb u_b + A_bi u_i = 0``; solving for ``u_b`` and
    substituting gives the Schur complement on the interior block.
    """
    A = M.matrix
    b = M.bc_rows
    if b.size == 0:
        return A, None
    i = M.interior_rows
    try:
        S = np.linalg.solve(A[np.ix_(b, b)], A[np.ix_(b, i)])
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(f"singular boundary block: {exc}") from exc
    return A[np.ix_(i, i)] - A[np.ix_(i, b)] @ S, S


def _lift(M: GeneratorMatrix, S, v: np.ndarray) -> np.ndarray:
    if S is None:
        return v
    out = np.zeros(M.size, dtype=complex)
    out[M.interior_rows] = v
    out[M.bc_rows] = -S @ v
    return out


def _normalize(v: np.ndarray) -> np.ndarray:
    """Scale so that max |v| = 1 and the largest-modulus entry is real positive."""
    j = int(np.argmax(np.abs(v)))
    if np.abs(v[j]) == 0:
        return v
    return v * (np.conj(v[j]) / np.abs(v[j]) ** 2)


def _wrap(M: GeneratorMatrix, v: np.ndarray, label: str):
    if M.domain is None:
        return v
    return GridFunction(M.domain, v, label)


def leading_spectrum(M: GeneratorMatrix, k: int, check: bool = True) -> Spectrum:
    """The ``k`` eigenpairs of ``M`` with largest real part.

    Boundary-condition rows are eliminated first, so the eigenproblem is
    posed on interior unknowns only and boundary values are recovered from
    the boundary equations.  Residuals are measured on interior rows.
    """
    m = M.size
    if not 1 <= k <= m:
        raise ValueError(f"k must lie in [1, {m}], got {k}")
    Ared, S = _eliminate(M)
    try:
        w, V = sla.eig(Ared, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverFailure(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise EigensolverFailure("eigensolver returned non-finite eigenvalues")
    order = sort_eigenvalues(w)[:k]
    rows = M.interior_rows
    norm = max(np.abs(M.matrix).sum(axis=1).max(), 1e-300)
    vals, funcs, res = [], [], []
    for n, j in enumerate(order):
        v = _normalize(_lift(M, S, V[:, j]))
        lam = w[j]
        r = np.abs(M.matrix[rows] @ v - lam * v[rows]).max() / norm
        if check and r > RESIDUAL_TOL:
            raise ResidualTooLarge(
                f"eigenpair {n} (lambda={lam:.6g}) has residual {r:.3g}", n, lam, r
            )
        vals.append(lam)
        funcs.append(_wrap(M, v, f"psi_{n}"))
        res.append(r)
    return Spectrum(np.array(vals, dtype=complex), tuple(funcs), M.kind, np.array(res))


def invariant_density(L: GeneratorMatrix) -> GridFunction:
    """Normalized stationary density from the kernel of the forward operator."""
    if L.kind is not GeneratorKind.FOKKER_PLANCK:
        raise ValueError(f"expected a FokkerPlanck generator, got {L.kind.value}")
    Ared, S = _eliminate(L)
    try:
        w, V = sla.eig(Ared)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverFailure(str(exc)) from exc
    radius = max(np.abs(w).max(), 1e-300)
    j = int(np.lexsort((np.abs(w.imag), np.abs(w)))[0])
    if np.abs(w[j]) >= ZERO_MODE_TOL * radius:
        raise ZeroModeNotFound(f"smallest |lambda| = {abs(w[j]):.3g}, spectral radius {radius:.3g}")
    v = _normalize(_lift(L, S, V[:, j])).real
    weights = L.domain.quadrature()
    mass = v @ weights
    if mass < 0:
        v = -v
        mass = -mass
    if mass == 0:
        raise ZeroModeNotFound("kernel vector has zero mass")
    v = v / mass
    if v.min() < -NEGATIVE_DENSITY_TOL * v.max():
        raise NegativeDensity(f"density minimum {v.min():.3g} vs maximum {v.max():.3g}")
    return GridFunction(L.domain, v, "rho_0")


def fix_phase(psi: GridFunction, anchor: Sequence[float]) -> GridFunction:
    """Rotate ``psi`` by a unit complex scalar so ``psi(anchor)`` is real positive."""
    a = complex(psi.evaluate(np.asarray(anchor, dtype=float)))
    if abs(a) <= 1e-8:
        raise AnchorDegenerate(f"|psi(anchor)| = {abs(a):.3g} is too small to fix the phase")
    return GridFunction(psi.domain, psi.values.astype(complex) * (np.conj(a) / abs(a)), psi.label)
