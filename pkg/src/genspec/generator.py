"""Dense collocation matrices for the Fokker-Planck operator and its adjoint.

Grid functions are flattened in row-major axis order, so the operator for a
derivative along axis ``i`` is a Kronecker product with identities on every
other axis.  Boundary conditions replace the rows of the boundary nodes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .collocation import DiffMatrices, chebyshev_diff, fd4_diff, fourier_diff
from .errors import (
    CoefficientEvaluationFailed,
    NegativeDiffusion,
    TooFewPoints,
)
from .sde import Boundary, DomainSpec, SdeSystem

__all__ = [
    "DiffMatrices",
    "GeneratorKind",
    "GeneratorMatrix",
    "assemble_generator",
    "assemble_fibre_generator",
    "chebyshev_diff",
    "fourier_diff",
    "fd4_diff",
]

MIN_FIBRE_POINTS = 12


class GeneratorKind(enum.Enum):
    FOKKER_PLANCK = "FokkerPlanck"
    ADJOINT = "Adjoint"
    FIBRE = "FibreFokkerPlanck"


@dataclass(frozen=True)
class GeneratorMatrix:
    """A discretized generator together with its boundary-row bookkeeping.

    Attributes
    ----------
    matrix : ndarray, shape (m, m)
    domain : DomainSpec or None
        ``None`` for fibre operators.
    kind : GeneratorKind
    bc_rows : ndarray of int
        Indices of rows that encode boundary conditions rather than the PDE.
    bc_applied : str
        Human-readable description of the row replacements.
    spacing : float or None
        Grid spacing of fibre operators.
    """

    matrix: np.ndarray
    domain: DomainSpec | None
    kind: GeneratorKind
    bc_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    bc_applied: str = "none"
    spacing: float | None = None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def interior_rows(self) -> np.ndarray:
        mask = np.ones(self.size, dtype=bool)
        mask[self.bc_rows] = False
        return np.flatnonzero(mask)


def _kron_all(mats: list[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)


def _axis_operator(diffs: list[DiffMatrices], orders: dict[int, int]) -> np.ndarray:
    """Full-grid matrix of the mixed derivative with per-axis ``orders``."""
    mats = []
    for i, dm in enumerate(diffs):
        k = orders.get(i, 0)
        if k == 0:
            mats.append(np.eye(len(dm.nodes)))
        elif k == 1:
            mats.append(dm.d1)
        else:
            mats.append(dm.d2)
    return _kron_all(mats)


def _face_rows(domain: DomainSpec) -> list[tuple[int, np.ndarray]]:
    """(axis, row indices) for each non-periodic axis; corners go to the first axis."""
    shape = domain.shape
    taken = np.zeros(shape, dtype=bool)
    out = []
    for i, ax in enumerate(domain.axes):
        if ax.periodic:
            continue
        mask = np.zeros(shape, dtype=bool)
        index = [slice(None)] * domain.dim
        for end in (0, -1):
            index[i] = end
            mask[tuple(index)] = True
        mask &= ~taken
        taken |= mask
        out.append((i, np.flatnonzero(mask.ravel())))
    return out


def _sample(sys: SdeSystem) -> tuple[np.ndarray, np.ndarray]:
    try:
        return sys.coefficients(sys.domain.mesh())
    except Exception as exc:  # noqa: BLE001 - user callables may raise anything
        raise CoefficientEvaluationFailed(f"{sys.name}: {type(exc).__name__}: {exc}") from exc


def assemble_generator(
    sys: SdeSystem,
    adjoint: bool,
    boundary: Boundary | str | None = None,
) -> GeneratorMatrix:
    """Collocation matrix of the Fokker-Planck operator or of its adjoint.

    Parameters
    ----------
    sys : SdeSystem
    adjoint : bool
        ``True`` builds ``L* f = mu . grad f + 1/2 D : Hess f``; ``False``
        builds ``L rho = -div(mu rho) + 1/2 div div(D rho)`` in conservative
        form, i.e. derivative matrices applied after multiplication by the
        sampled coefficients.
    boundary : Boundary, optional
        Row replacement on non-periodic faces.  Defaults to ``NeumannZero``
        for the adjoint and to the axis flag for the forward operator.
    """
    domain = sys.domain
    mu, D = _sample(sys)
    diffs = [ax.diff() for ax in domain.axes]
    m = domain.size
    A = np.zeros((m, m))
    d = domain.dim
    for i in range(d):
        if np.any(mu[i]):
            Di = _axis_operator(diffs, {i: 1})
            A += mu[i][:, None] * Di if adjoint else -Di * mu[i][None, :]
    for i in range(d):
        for j in range(i, d):
            coef = D[i, j] if i == j else 2.0 * D[i, j]
            if not np.any(coef):
                continue
            orders = {i: 2} if i == j else {i: 1, j: 1}
            Dij = _axis_operator(diffs, orders)
            A += 0.5 * (coef[:, None] * Dij if adjoint else Dij * coef[None, :])

    rows = []
    notes = []
    for i, idx in _face_rows(domain):
        bc = Boundary.parse(boundary) if boundary is not None else None
        if bc is None:
            bc = Boundary.NEUMANN if adjoint else domain.axes[i].boundary
        if bc is Boundary.NEUMANN:
            A[idx] = _axis_operator(diffs, {i: 1})[idx]
        elif bc is Boundary.DIRICHLET:
            A[idx] = 0.0
            A[idx, idx] = 1.0
        else:
            continue
        rows.append(idx)
        notes.append(f"axis {i}: {bc.value}")
    bc_rows = np.sort(np.concatenate(rows)) if rows else np.zeros(0, dtype=int)
    kind = GeneratorKind.ADJOINT if adjoint else GeneratorKind.FOKKER_PLANCK
    return GeneratorMatrix(A, domain, kind, bc_rows, "; ".join(notes) or "none")


def assemble_fibre_generator(
    mu1: np.ndarray,
    d11: np.ndarray,
    spacing: float,
    closed: bool,
    boundary: str = "dirichlet",
) -> GeneratorMatrix:
    """One-dimensional Fokker-Planck matrix on a uniformly sampled fibre.

    Fourth-order central differences in conservative form,
    ``M = -D1 diag(mu1) + 1/2 D2 diag(d11)``.  Open fibres treat values past
    the ends as zero (``"dirichlet"``) or reflect them (``"neumann"``).
    """
    mu1 = np.asarray(mu1, dtype=float)
    d11 = np.asarray(d11, dtype=float)
    n = mu1.size
    if n < MIN_FIBRE_POINTS:
        raise TooFewPoints(f"fibre operator needs at least {MIN_FIBRE_POINTS} points, got {n}")
    if d11.shape != mu1.shape:
        raise ValueError("mu1 and d11 must have the same length")
    scale = max(np.abs(d11).max(), 1e-300)
    if np.any(d11 < -1e-12 * scale):
        raise NegativeDiffusion(f"negative diffusion {d11.min():.3g} on the fibre")
    dm = fd4_diff(n, spacing, closed, boundary)
    M = -dm.d1 * mu1[None, :] + 0.5 * dm.d2 * d11[None, :]
    note = "periodic" if closed else f"open, {boundary} ends"
    return GeneratorMatrix(M, None, GeneratorKind.FIBRE, np.zeros(0, dtype=int), note, float(spacing))
