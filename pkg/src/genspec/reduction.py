"""Reduced slow dynamics on a transverse section from leading eigenpairs.

On a section ``C`` crossing every fibre once, each leading eigenfunction of
the full adjoint is approximately an eigenfunction of the reduced 1-D
adjoint, ``lambda psi = mu psi' + 1/2 D psi''``.  Two independent real
equations per point determine ``mu`` and ``D`` there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bench import homogenized_reference
from .collocation import fourier_diff
from .errors import SectionOutsideDomain, SingularSystem, WindowTooSmall
from .sde import GridFunction
from .spectra import Spectrum

__all__ = [
    "Section",
    "ReducedModel",
    "restrict_to_section",
    "window_derivatives",
    "spectral_derivatives",
    "demoura_solve",
    "homogenized_reference",
    "heldout_residual",
    "reduce_spectrum",
]

MAX_CONDITION = 1e6


@dataclass(frozen=True)
class Section:
    """Grid line ``{z_other = value}`` running along ``axis`` of a planar domain."""

    axis: int
    value: float
    x: np.ndarray
    periodic: bool
    interval: tuple[float, float]
    exact_row: bool

    @property
    def period(self) -> float | None:
        return self.interval[1] - self.interval[0] if self.periodic else None


def make_section(domain, axis: int = 0, value: float = 0.0) -> Section:
    if domain.dim != 2:
        raise SectionOutsideDomain("sections are implemented for planar domains")
    other = domain.axes[1 - axis]
    tol = 1e-12 * other.width
    if not other.periodic and not (other.lower - tol <= value <= other.upper + tol):
        raise SectionOutsideDomain(f"section value {value} outside [{other.lower}, {other.upper}]")
    nodes = other.nodes()
    exact = bool(np.any(np.abs(nodes - value) <= tol))
    ax = domain.axes[axis]
    return Section(axis, float(value), ax.nodes(), ax.periodic, (ax.lower, ax.upper), exact)


def restrict_to_section(psi: GridFunction, section: Section | None = None, axis: int = 0, value: float = 0.0) -> np.ndarray:
    """Values of ``psi`` along the section.

    An aligned section returns the stored grid row unchanged; otherwise the
    other axis is interpolated spectrally.
    """
    sec = section or make_section(psi.domain, axis, value)
    other = 1 - sec.axis
    grid = np.moveaxis(psi.grid, sec.axis, 0)
    nodes = psi.domain.axes[other].nodes()
    hit = np.flatnonzero(np.abs(nodes - sec.value) <= 1e-12 * psi.domain.axes[other].width)
    if hit.size:
        return grid[:, hit[0]].copy()
    W = psi.domain.axes[other].interp_matrix(np.array([sec.value]))
    return grid @ W[0]


def window_derivatives(
    values: np.ndarray,
    x: np.ndarray,
    periodic: bool = True,
    period: float | None = None,
    window: int = 11,
    degree: int = 3,
) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives from local least-squares polynomials.

    Each point uses itself and its ``window - 1`` nearest neighbours
    (wrapping around for periodic data); derivatives of the fitted
    polynomial are taken at the centre point.
    """
    values = np.asarray(values)
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < window:
        raise WindowTooSmall(f"need at least {window} samples, got {n}")
    if window <= degree:
        raise WindowTooSmall(f"window {window} cannot determine a degree-{degree} fit")
    if periodic and period is None:
        period = n * (x[1] - x[0])
    half = window // 2
    d1 = np.empty(n, dtype=values.dtype)
    d2 = np.empty(n, dtype=values.dtype)
    for i in range(n):
        if periodic:
            idx = (i + np.arange(-half, window - half)) % n
            dx = x[idx] - x[i]
            dx = (dx + period / 2) % period - period / 2
        else:
            lo = min(max(i - half, 0), n - window)
            idx = np.arange(lo, lo + window)
            dx = x[idx] - x[i]
        V = np.vander(dx, degree + 1, increasing=True)
        coef = np.linalg.lstsq(V, values[idx], rcond=None)[0]
        d1[i] = coef[1]
        d2[i] = 2.0 * coef[2]
    return d1, d2


def spectral_derivatives(values: np.ndarray, interval: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Fourier collocation derivatives of periodic samples."""
    dm = fourier_diff(len(values), interval)
    return dm.d1 @ values, dm.d2 @ values


@dataclass(frozen=True)
class ReducedModel:
    """Sampled drift and diffusion of the slow one-dimensional process.

    Points whose 2x2 system is singular or worse conditioned than the
    threshold are gaps: ``mu_tilde`` and ``D_tilde`` hold NaN there.
    """

    x: np.ndarray
    mu_tilde: np.ndarray
    D_tilde: np.ndarray
    condition: np.ndarray
    eigpairs_used: tuple[int, ...]
    derivative: str = "window"
    notes: list[str] = field(default_factory=list)

    @property
    def gaps(self) -> np.ndarray:
        return ~np.isfinite(self.mu_tilde)

    def negative_diffusion(self, tol: float = 0.0) -> np.ndarray:
        return np.nan_to_num(self.D_tilde, nan=0.0) < -tol

    def filled(self) -> tuple[np.ndarray, np.ndarray]:
        """Gap-free copies for presentation, gaps linearly interpolated."""
        ok = ~self.gaps
        if ok.all() or not ok.any():
            return self.mu_tilde.copy(), self.D_tilde.copy()
        fill = lambda a: np.interp(self.x, self.x[ok], a[ok])
        return fill(self.mu_tilde), fill(self.D_tilde)


def _equations(pairs) -> tuple[np.ndarray, np.ndarray]:
    """Real coefficient rows ``(N, r, 2)`` and right-hand sides ``(N, r)``."""
    (l1, p1, a1, b1), (l2, p2, a2, b2) = pairs
    l1, l2 = complex(l1), complex(l2)
    conj_pair = (
        abs(l1.imag) > 0
        and np.isclose(l2, np.conj(l1), rtol=1e-9, atol=0)
        and np.allclose(p2, np.conj(p1), rtol=1e-9, atol=1e-12)
    )
    rows, rhs = [], []
    use = [(l1, p1, a1, b1)] if conj_pair else [(l1, p1, a1, b1), (l2, p2, a2, b2)]
    for lam, p, a, b in use:
        lhs = np.stack([np.asarray(a), 0.5 * np.asarray(b)], axis=-1)
        r = lam * np.asarray(p)
        if conj_pair or abs(lam.imag) > 0 or np.iscomplexobj(p) and np.any(np.imag(p) != 0):
            rows += [lhs.real, lhs.imag]
            rhs += [r.real, r.imag]
        else:
            rows.append(lhs.real)
            rhs.append(r.real)
    return np.stack(rows, axis=1), np.stack(rhs, axis=1)


def demoura_solve(
    pairs: Sequence[tuple],
    x: np.ndarray | None = None,
    indices: tuple[int, ...] = (1, 2),
    max_condition: float = MAX_CONDITION,
    derivative: str = "window",
) -> ReducedModel:
    """Pointwise inversion of ``lambda psi = mu psi' + 1/2 D psi''``.

    Parameters
    ----------
    pairs : two tuples ``(lambda, psi, dpsi, d2psi)``
        Restricted eigenpairs with their section derivatives.  A complex
        conjugate pair contributes the real and imaginary parts of its first
        member's equation; other combinations are stacked and solved in the
        least-squares sense.
    x : ndarray, optional
        Section abscissae, stored in the result.

    Raises
    ------
    SingularSystem
        If the system is singular at every point.
    """
    if len(pairs) != 2:
        raise ValueError("exactly two eigenpairs are required")
    (l1, p1, *_), (l2, p2, *_) = pairs
    if complex(l1) == complex(l2) and np.allclose(p1, p2, rtol=1e-12, atol=0):
        raise SingularSystem("the two eigenpairs coincide")
    M, r = _equations(pairs)
    n = M.shape[0]
    mu = np.full(n, np.nan)
    D = np.full(n, np.nan)
    cond = np.full(n, np.inf)
    for i in range(n):
        sv = np.linalg.svd(M[i], compute_uv=False)
        c = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
        cond[i] = c
        if not c <= max_condition:
            continue
        sol = np.linalg.lstsq(M[i], r[i], rcond=None)[0]
        mu[i], D[i] = sol
    if not np.isfinite(mu).any():
        raise SingularSystem("the reduced system is singular at every section point")
    notes = []
    if np.isnan(mu).any():
        notes.append(f"{int(np.isnan(mu).sum())} gap(s) where cond > {max_condition:g}")
    xs = np.arange(n, dtype=float) if x is None else np.asarray(x, dtype=float)
    return ReducedModel(xs, mu, D, cond, tuple(indices), derivative, notes)


def _derivs(values, sec: Section, method: str, window: int):
    if method == "spectral":
        if not sec.periodic:
            raise ValueError("spectral section derivatives need a periodic section")
        return spectral_derivatives(values, sec.interval)
    if method == "window":
        return window_derivatives(values, sec.x, sec.periodic, sec.period, window)
    raise ValueError(f"unknown derivative method {method!r}")


def reduce_spectrum(
    spectrum: Spectrum,
    section: Section | None = None,
    indices: tuple[int, int] = (1, 2),
    derivative: str = "window",
    window: int = 11,
    max_condition: float = MAX_CONDITION,
) -> ReducedModel:
    """Restrict two eigenpairs of the full adjoint to a section and invert."""
    sec = section or make_section(spectrum.eigenfunctions[0].domain)
    pairs = []
    for k in indices:
        p = restrict_to_section(spectrum.eigenfunctions[k], sec)
        d1, d2 = _derivs(p, sec, derivative, window)
        pairs.append((spectrum.eigenvalues[k], p, d1, d2))
    return demoura_solve(pairs, sec.x, tuple(indices), max_condition, derivative)


def heldout_residual(
    model: ReducedModel,
    spectrum: Spectrum,
    k: int,
    section: Section | None = None,
    derivative: str = "window",
    window: int = 11,
) -> float:
    """RMS of ``lambda psi - (mu psi' + 1/2 D psi'')`` relative to RMS of ``lambda psi``.

    Meant for an eigenpair not used to build ``model``; gaps are ignored.
    """
    sec = section or make_section(spectrum.eigenfunctions[0].domain)
    p = restrict_to_section(spectrum.eigenfunctions[k], sec)
    d1, d2 = _derivs(p, sec, derivative, window)
    lam = spectrum.eigenvalues[k]
    ok = ~model.gaps
    res = lam * p[ok] - (model.mu_tilde[ok] * d1[ok] + 0.5 * model.D_tilde[ok] * d2[ok])
    rms = lambda a: np.sqrt(np.mean(np.abs(a) ** 2))
    return float(rms(res) / rms(lam * p[ok]))
