"""Built-in benchmark systems, analytic references and an Euler-Maruyama oracle.

The slow-fast benchmark couples a slow periodic coordinate ``x`` to a fast
Ornstein-Uhlenbeck coordinate ``y``::

    dx = sin(y) dt + sqrt(1 + sin(y)/2) dW_x
    dy = (sin(x) - y)/eps dt + eps**-0.5 dW_y

The transformed variant is the same process written in ``X = x + sin(y)``,
where the fast fibres become the curves ``X = sin(y) + c``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BlowUp, NonPositiveEpsilon
from .sde import DomainSpec, SdeSystem

DEFAULT_EPS = 1e-3
DEFAULT_L = 5.0
DEFAULT_GRID = (50, 51)

# Philox4x32 keys are derived from the user seed through SeedSequence, so a
# given (seed, step) pair always maps to the same counter block.
RNG_NAME = "Philox4x32-10"


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not (np.isfinite(eps) and eps > 0):
        raise NonPositiveEpsilon(f"eps must be positive, got {eps}")
    return eps


def benchmark_domain(L: float = DEFAULT_L, grid: tuple[int, int] = DEFAULT_GRID) -> DomainSpec:
    """``[0, 2 pi) x [-L, L]``, periodic in x, zero density at ``y = +-L``."""
    return DomainSpec.box((0.0, 2.0 * np.pi, "periodic", grid[0]), (-L, L, "dirichlet", grid[1]))


def crommelin_original(eps: float = DEFAULT_EPS, L: float = DEFAULT_L, grid=DEFAULT_GRID) -> SdeSystem:
    eps = _check_eps(eps)

    def drift(z):
        x, y = z
        return np.stack([np.sin(y), (np.sin(x) - y) / eps])

    def sigma(z):
        x, y = z
        zero = np.zeros_like(y)
        return np.array(
            [
                [np.sqrt(1.0 + 0.5 * np.sin(y)), zero],
                [zero, np.full_like(y, 1.0 / np.sqrt(eps))],
            ]
        )

    return SdeSystem(
        2, drift, benchmark_domain(L, grid), diffusion_factor=sigma, noise_dim=2,
        name="crommelin_original", params={"eps": eps, "L": L},
    )


def crommelin_transformed(eps: float = DEFAULT_EPS, L: float = DEFAULT_L, grid=DEFAULT_GRID) -> SdeSystem:
    eps = _check_eps(eps)

    def drift(z):
        x, y = z
        fast = np.sin(x - np.sin(y)) - y
        mx = np.sin(y) + np.cos(y) * fast / eps - np.sin(y) / (2.0 * eps)
        return np.stack([mx, fast / eps])

    def sigma(z):
        x, y = z
        root = 1.0 / np.sqrt(eps)
        return np.array(
            [
                [np.sqrt(1.0 + 0.5 * np.sin(y)), np.cos(y) * root],
                [np.zeros_like(y), np.full_like(y, root)],
            ]
        )

    return SdeSystem(
        2, drift, benchmark_domain(L, grid), diffusion_factor=sigma, noise_dim=2,
        name="crommelin_transformed", params={"eps": eps, "L": L},
    )


def ou_1d(theta: float = 1.0, diffusion: float = 2.0, L: float = 8.0, n: int = 64) -> SdeSystem:
    """``dv = -theta v dt + sqrt(diffusion) dW``; generator spectrum ``-k theta``."""
    dom = DomainSpec.box((-L, L, "dirichlet", n))
    return SdeSystem(
        1,
        lambda z: -theta * z,
        dom,
        diffusion_factor=lambda z: np.full((1, 1, z.shape[1]), np.sqrt(diffusion)),
        name="ou_1d",
        params={"theta": theta, "diffusion": diffusion},
    )


def isotropic_ou(L: float = 4.0, grid: tuple[int, int] = (32, 32)) -> SdeSystem:
    """``dz = -z dt + dW`` in two dimensions, truncated to a box."""
    dom = DomainSpec.box((-L, L, "dirichlet", grid[0]), (-L, L, "dirichlet", grid[1]))
    return SdeSystem(
        2,
        lambda z: -z,
        dom,
        diffusion_factor=lambda z: np.broadcast_to(np.eye(2)[:, :, None], (2, 2, z.shape[1])),
        name="isotropic_ou",
    )


BUILTIN: dict[str, Callable[..., SdeSystem]] = {
    "crommelin_original": crommelin_original,
    "crommelin_transformed": crommelin_transformed,
}


# analytic references


def fibre_eigenvalues(eps: float, k: int) -> np.ndarray:
    """Exact fast-process spectrum ``-j/eps``, ``j = 0..k``."""
    return -np.arange(k + 1) / _check_eps(eps)


def fibre_curve(c: float, y: np.ndarray) -> np.ndarray:
    """x-coordinate of the fast fibre ``x = sin(y) + c`` of the transformed system."""
    return np.sin(y) + c


def homogenized_reference(x):
    """Drift and diffusion of the averaged slow equation.

    Averaging ``sin(y)`` and ``sqrt(1 + sin(y)/2)^2`` over the fast invariant
    measure ``N(sin x, 1/2)`` gives drift ``e^{-1/4} sin(sin x)`` and diffusion
    ``1 + e^{-1/4} sin(sin x) / 2``.
    """
    mu = np.exp(-0.25) * np.sin(np.sin(x))
    return mu, 1.0 + 0.5 * mu


@dataclass(frozen=True)
class BenchmarkSystem:
    name: str
    build: Callable[..., SdeSystem]
    fibre_eigenvalues: Callable[[float, int], np.ndarray] = fibre_eigenvalues
    homogenized: Callable = homogenized_reference
    fibre_family: Callable | None = None
    notes: dict = field(default_factory=dict)


BENCHMARKS = {
    "crommelin_original": BenchmarkSystem("crommelin_original", crommelin_original),
    "crommelin_transformed": BenchmarkSystem(
        "crommelin_transformed", crommelin_transformed, fibre_family=fibre_curve
    ),
}


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def euler_maruyama(
    sys: SdeSystem,
    z0,
    dt: float,
    steps: int,
    seed: int = 0,
    paths: int | None = None,
    record: bool = True,
) -> np.ndarray:
    """Explicit Euler-Maruyama integration.

    Parameters
    ----------
    z0 : array_like, shape (d,)
    dt : float
    steps : int
    seed : int
        Seeds a Philox counter-based generator.
    paths : int, optional
        Number of independent paths integrated together.  Without it a
        single path is returned with shape ``(steps + 1, d)``.
    record : bool
        Keep every step; otherwise only the final state.

    Returns
    -------
    ndarray
        ``(steps + 1, d)`` or ``(steps + 1, d, paths)`` when recording, else
        the final state ``(d,)`` or ``(d, paths)``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if sys.diffusion_factor is None:
        raise ValueError("Euler-Maruyama needs a diffusion factor")
    d, ell = sys.dim, sys.noise_dim
    npaths = 1 if paths is None else int(paths)
    rng = make_rng(seed)
    z = np.repeat(np.asarray(z0, dtype=float).reshape(d, 1), npaths, axis=1)
    hist = [z.copy()] if record else None
    sq = np.sqrt(dt)
    for _ in range(int(steps)):
        mu = sys._call(sys.drift, z)
        sig = np.broadcast_to(sys._call(sys.diffusion_factor, z), (d, ell, npaths))
        dw = rng.standard_normal((ell, npaths)) * sq
        z = z + mu * dt + np.einsum("ikn,kn->in", sig, dw)
        z = sys.domain.wrap(z)
        if not np.all(np.isfinite(z)) or np.abs(z).max() > 1e6:
            raise BlowUp("trajectory left the ball of radius 1e6")
        if record:
            hist.append(z.copy())
    if record:
        out = np.stack(hist)
        return out[:, :, 0] if paths is None else out
    return z[:, 0] if paths is None else z
