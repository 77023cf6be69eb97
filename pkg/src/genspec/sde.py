"""Drift-diffusion systems, computational domains and grid functions."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import collocation as col
from .errors import InvalidDomain, NegativeDiffusion, NonFiniteCoefficient, OutOfDomain


class Boundary(enum.Enum):
    PERIODIC = "Periodic"
    DIRICHLET = "DirichletZero"
    NEUMANN = "NeumannZero"

    @classmethod
    def parse(cls, value: "Boundary | str") -> "Boundary":
        if isinstance(value, Boundary):
            return value
        key = str(value).strip().lower()
        aliases = {
            "periodic": cls.PERIODIC,
            "dirichlet": cls.DIRICHLET,
            "dirichletzero": cls.DIRICHLET,
            "neumann": cls.NEUMANN,
            "neumannzero": cls.NEUMANN,
        }
        try:
            return aliases[key]
        except KeyError:
            raise InvalidDomain(f"unknown boundary type {value!r}") from None


@dataclass(frozen=True)
class Axis:
    lower: float
    upper: float
    boundary: Boundary
    n: int

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary.parse(self.boundary))
        if not (np.isfinite(self.lower) and np.isfinite(self.upper) and self.lower < self.upper):
            raise InvalidDomain(f"axis bounds must satisfy a < b, got [{self.lower}, {self.upper}]")
        if self.n < col.MIN_NODES:
            raise InvalidDomain(f"axis needs at least {col.MIN_NODES} nodes, got {self.n}")
        if self.periodic and self.n % 2:
            raise InvalidDomain(f"periodic axes need an even number of nodes, got {self.n}")

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def basis(self) -> col.Basis:
        return col.Basis.FOURIER if self.periodic else col.Basis.CHEBYSHEV

    def nodes(self) -> np.ndarray:
        if self.periodic:
            return col.fourier_nodes(self.n, self.lower, self.upper)
        return col.chebyshev_nodes(self.n, self.lower, self.upper)

    def diff(self) -> col.DiffMatrices:
        if self.periodic:
            return col.fourier_diff(self.n, (self.lower, self.upper))
        return col.chebyshev_diff(self.n, (self.lower, self.upper))

    def quadrature(self) -> np.ndarray:
        if self.periodic:
            return np.full(self.n, self.width / self.n)
        return col.clenshaw_curtis_weights(self.n, self.lower, self.upper)

    def wrap(self, values: np.ndarray) -> np.ndarray:
        """Map coordinates into ``[lower, upper)`` on periodic axes."""
        values = np.asarray(values, dtype=float)
        if not self.periodic:
            return values
        return self.lower + np.mod(values - self.lower, self.width)

    def interp_matrix(self, query: np.ndarray) -> np.ndarray:
        query = np.atleast_1d(np.asarray(query, dtype=float))
        if self.periodic:
            return col.fourier_interp_matrix(query, self.n, self.lower, self.upper)
        tol = 1e-12 * self.width
        if np.any(query < self.lower - tol) or np.any(query > self.upper + tol):
            raise OutOfDomain(
                f"coordinate outside [{self.lower}, {self.upper}]: "
                f"{query[(query < self.lower - tol) | (query > self.upper + tol)][:3]}"
            )
        return col.chebyshev_interp_matrix(np.clip(query, self.lower, self.upper), self.nodes())


@dataclass(frozen=True)
class DomainSpec:
    """Tensor-product box; each axis carries its interval, boundary type and grid size."""

    axes: tuple[Axis, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not self.axes:
            raise InvalidDomain("a domain needs at least one axis")

    @classmethod
    def box(cls, *specs: tuple) -> "DomainSpec":
        """``DomainSpec.box((0, 2*pi, "periodic", 50), (-5, 5, "dirichlet", 51))``."""
        return cls(tuple(Axis(float(a), float(b), Boundary.parse(bc), int(n)) for a, b, bc, n in specs))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n for ax in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def nodes(self) -> list[np.ndarray]:
        return [ax.nodes() for ax in self.axes]

    def mesh(self) -> np.ndarray:
        """Grid coordinates as an array of shape ``(d, m)`` in row-major order."""
        grids = np.meshgrid(*self.nodes(), indexing="ij")
        return np.stack([g.ravel() for g in grids])

    def quadrature(self) -> np.ndarray:
        w = np.ones(1)
        for ax in self.axes:
            w = np.multiply.outer(w, ax.quadrature()).ravel()
        return w

    def wrap(self, points: np.ndarray) -> np.ndarray:
        points = np.array(points, dtype=float)
        for i, ax in enumerate(self.axes):
            points[i] = ax.wrap(points[i])
        return points

    def with_sizes(self, sizes: Sequence[int]) -> "DomainSpec":
        return DomainSpec(tuple(Axis(ax.lower, ax.upper, ax.boundary, int(n)) for ax, n in zip(self.axes, sizes)))

    def boundary_mask(self) -> np.ndarray:
        """Boolean mask over grid nodes lying on a non-periodic face."""
        mask = np.zeros(self.shape, dtype=bool)
        for i, ax in enumerate(self.axes):
            if ax.periodic:
                continue
            index = [slice(None)] * self.dim
            index[i] = 0
            mask[tuple(index)] = True
            index[i] = -1
            mask[tuple(index)] = True
        return mask.ravel()


@dataclass(frozen=True)
class SdeSystem:
    """Ito drift-diffusion process ``dz = mu(z) dt + sigma(z) dW``.

    ``drift`` maps points of shape ``(d, N)`` to ``(d, N)``.  Exactly one of
    ``diffusion_factor`` (returning ``(d, l, N)``) and ``diffusion`` (returning
    ``(d, d, N)``) is supplied.  Callables that only handle a single point can
    be wrapped by passing ``vectorized=False``.
    """

    dim: int
    drift: Callable[[np.ndarray], np.ndarray]
    domain: DomainSpec
    diffusion_factor: Callable[[np.ndarray], np.ndarray] | None = None
    diffusion: Callable[[np.ndarray], np.ndarray] | None = None
    noise_dim: int | None = None
    name: str = "system"
    vectorized: bool = True
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidDomain("dimension must be >= 1")
        if self.domain.dim != self.dim:
            raise InvalidDomain(f"domain has {self.domain.dim} axes, system has dimension {self.dim}")
        if (self.diffusion_factor is None) == (self.diffusion is None):
            raise ValueError("supply exactly one of diffusion_factor or diffusion")
        noise_dim = self.noise_dim
        if noise_dim is None:
            noise_dim = self.dim
        if not 1 <= noise_dim <= self.dim:
            raise InvalidDomain(f"noise dimension {noise_dim} must lie in [1, {self.dim}]")
        object.__setattr__(self, "noise_dim", noise_dim)

    def _call(self, fn, points: np.ndarray) -> np.ndarray:
        if self.vectorized:
            return np.asarray(fn(points), dtype=float)
        out = [np.asarray(fn(points[:, k]), dtype=float) for k in range(points.shape[1])]
        return np.stack(out, axis=-1)

    def coefficients(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Drift ``(d, N)`` and symmetrized diffusion matrix ``(d, d, N)``."""
        pts = np.asarray(points, dtype=float).reshape(self.dim, -1)
        pts = self.domain.wrap(pts)
        npts = pts.shape[1]
        mu = np.broadcast_to(self._call(self.drift, pts), (self.dim, npts)).astype(float)
        if self.diffusion_factor is not None:
            sig = self._call(self.diffusion_factor, pts)
            sig = np.broadcast_to(sig, (self.dim, self.noise_dim, npts))
            D = np.einsum("ikn,jkn->ijn", sig, sig)
        else:
            D = np.broadcast_to(self._call(self.diffusion, pts), (self.dim, self.dim, npts))
            D = np.array(D, dtype=float)
        D = 0.5 * (D + D.transpose(1, 0, 2))
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(D))):
            bad = ~(np.isfinite(mu).all(axis=0) & np.isfinite(D).all(axis=(0, 1)))
            raise NonFiniteCoefficient(f"non-finite drift/diffusion at {pts[:, bad][:, 0]}")
        if self.diffusion is not None:
            check_psd(D)
        return mu, D


def check_psd(D: np.ndarray) -> None:
    """Raise if any diffusion matrix in the stack ``(d, d, N)`` is not PSD."""
    mats = np.moveaxis(D, -1, 0)
    eig = np.linalg.eigvalsh(mats)
    scale = np.abs(mats).max(axis=(1, 2))
    if np.any(eig.min(axis=1) < -1e-12 * np.maximum(scale, 1e-300)):
        raise NegativeDiffusion("diffusion matrix is not positive semi-definite")


def evaluate_coefficients(sys: SdeSystem, z: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Drift vector and diffusion matrix ``sigma sigma^T`` at a single point."""
    z = np.asarray(z, dtype=float).reshape(sys.dim, 1)
    for i, ax in enumerate(sys.domain.axes):
        if not ax.periodic:
            tol = 1e-12 * ax.width
            if z[i, 0] < ax.lower - tol or z[i, 0] > ax.upper + tol:
                raise OutOfDomain(f"coordinate {i} = {z[i, 0]} outside [{ax.lower}, {ax.upper}]")
    mu, D = sys.coefficients(z)
    return mu[:, 0], D[:, :, 0]


@dataclass(frozen=True)
class GridFunction:
    """Nodal values of a scalar field on the collocation grid of ``domain``."""

    domain: DomainSpec
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values).ravel()
        if vals.size != self.domain.size:
            raise ValueError(f"expected {self.domain.size} values, got {vals.size}")
        vals = vals.astype(complex) if np.iscomplexobj(vals) else vals.astype(float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape(self.domain.shape)

    @property
    def real(self) -> "GridFunction":
        return GridFunction(self.domain, self.values.real, self.label + ".real")

    @property
    def imag(self) -> "GridFunction":
        return GridFunction(self.domain, self.values.imag, self.label + ".imag")

    def scaled(self, factor) -> "GridFunction":
        return GridFunction(self.domain, self.values * factor, self.label)

    def derivative(self, axis: int) -> "GridFunction":
        """Spectral derivative along ``axis``, as a new grid function."""
        dm = self.domain.axes[axis].diff()
        g = np.moveaxis(np.tensordot(dm.d1, np.moveaxis(self.grid, axis, 0), axes=1), 0, axis)
        return GridFunction(self.domain, g.ravel(), f"d{axis}({self.label})")

    def gradient(self) -> list["GridFunction"]:
        return [self.derivative(i) for i in range(self.domain.dim)]

    def integral(self) -> complex | float:
        return self.values @ self.domain.quadrature()

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Interpolated values at points of shape ``(d, N)`` (or ``(d,)``)."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = pts.reshape(self.domain.dim, -1)
        out = self.grid
        mats = [ax.interp_matrix(pts[i]) for i, ax in enumerate(self.domain.axes)]
        # contract axis by axis, keeping the point index in front
        res = np.tensordot(mats[0], out, axes=([1], [0]))
        for i in range(1, self.domain.dim):
            res = np.einsum("pj,pj...->p...", mats[i], res)
        return res[0] if single else res

    def on_grid(self, nodes: Sequence[np.ndarray]) -> np.ndarray:
        """Values on the tensor grid spanned by per-axis coordinate arrays."""
        out = self.grid
        for i, (ax, q) in enumerate(zip(self.domain.axes, nodes)):
            W = ax.interp_matrix(q)
            out = np.moveaxis(np.tensordot(W, np.moveaxis(out, i, 0), axes=1), 0, i)
        return out


def interpolate(f: GridFunction, z: Sequence[float]):
    """Tensor-product spectral interpolant of ``f`` at the point ``z``."""
    return f.evaluate(np.asarray(z, dtype=float))
