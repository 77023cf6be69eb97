"""Fast fibres as level-set components of a leading eigenfunction.

A fibre is traced with marching squares on a refined tensor grid, snapped
back onto the spectral level set by Newton steps along the gradient, then
resampled uniformly in arc length.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from skimage import measure

from .errors import (
    AllWeightsZero,
    ComponentTooShort,
    DegenerateGradient,
    FibreTooShort,
    InvalidDomain,
)
from .sde import GridFunction

MIN_VERTICES = 12


@dataclass(frozen=True)
class Fibre:
    """Ordered polyline on a level set ``{Re psi = level}``.

    Attributes
    ----------
    points : ndarray, shape (N, d)
    level : float
    seed : ndarray, shape (d,)
    spacing : float or None
        Arc length between consecutive points once resampled.
    closed : bool
    weights : ndarray or None
        Probability weights from the invariant density.
    field : GridFunction or None
        Real field whose level set the fibre follows, kept for re-projection.
    shift : ndarray or None
        For a closed fibre that wraps a periodic axis, the period vector
        joining the last point back to the first (``points[0] + shift``
        follows ``points[-1]``).  Points stay continuous, not wrapped.
    """

    points: np.ndarray
    level: float
    seed: np.ndarray
    spacing: float | None = None
    closed: bool = False
    weights: np.ndarray | None = None
    field: GridFunction | None = None
    shift: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.points)

    @property
    def closing_shift(self) -> np.ndarray:
        return np.zeros(self.points.shape[1]) if self.shift is None else np.asarray(self.shift)

    @property
    def segment_lengths(self) -> np.ndarray:
        p = self.points
        if self.closed:
            p = np.vstack([p, p[:1] + self.closing_shift])
        return np.linalg.norm(np.diff(p, axis=0), axis=1)

    def extended(self, k: int) -> np.ndarray:
        """Points padded with ``k`` wrapped neighbours at each end of a closed fibre."""
        if not self.closed or k <= 0:
            return self.points
        k = min(k, len(self.points))
        s = self.closing_shift
        return np.vstack([self.points[-k:] - s, self.points, self.points[:k] + s])

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    @property
    def arclength(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.segment_lengths)])[: len(self.points)]

    def level_residual(self) -> np.ndarray:
        if self.field is None:
            raise ValueError("fibre carries no field")
        return self.field.evaluate(self.points.T).real - self.level


def _real_field(psi: GridFunction, use_imag: bool) -> GridFunction:
    vals = psi.values.imag if use_imag else psi.values.real
    return GridFunction(psi.domain, np.asarray(vals, dtype=float), psi.label + (".imag" if use_imag else ".real"))


def _clip_to_domain(field: GridFunction, pts: np.ndarray) -> np.ndarray:
    """Clamp non-periodic coordinates of ``pts`` (shape (d, N)) into the box."""
    pts = np.array(pts, dtype=float)
    for i, ax in enumerate(field.domain.axes):
        if not ax.periodic:
            np.clip(pts[i], ax.lower, ax.upper, out=pts[i])
    return pts


def project_to_level(
    field: GridFunction,
    points: np.ndarray,
    level: float,
    iterations: int = 4,
    grad: list[GridFunction] | None = None,
) -> np.ndarray:
    """Newton steps along the gradient onto ``{field = level}``.

    Points sitting on a non-periodic face move only within that face so the
    fibre keeps its end points on the boundary.
    """
    pts = np.array(points, dtype=float).T
    grad = grad if grad is not None else field.gradient()
    on_face = []
    for i, ax in enumerate(field.domain.axes):
        if not ax.periodic:
            tol = 1e-12 * ax.width
            on_face.append((i, (pts[i] <= ax.lower + tol) | (pts[i] >= ax.upper - tol)))
    for _ in range(iterations):
        r = field.evaluate(pts).real - level
        g = np.array([gi.evaluate(pts).real for gi in grad])
        for i, mask in on_face:
            g[i, mask] = 0.0
        g2 = (g**2).sum(axis=0)
        ok = g2 > 0
        step = np.zeros_like(pts)
        step[:, ok] = g[:, ok] * (r[ok] / g2[ok])
        pts = _clip_to_domain(field, pts - step)
    return pts.T


def _refined_axes(field: GridFunction, refine: int) -> list[np.ndarray]:
    out = []
    for ax in field.domain.axes:
        m = refine * ax.n
        if ax.periodic:
            out.append(ax.lower + ax.width * np.arange(m) / m)
        else:
            out.append(np.linspace(ax.lower, ax.upper, m))
    return out


def _period_shift(chain: np.ndarray, i0: int, period: float, axis: int, tol: float):
    """Sub-chain covering one period starting at ``i0`` if the chain wraps."""
    target = chain[i0].copy()
    for sign in (1.0, -1.0):
        target_s = target.copy()
        target_s[axis] += sign * period
        dist = np.linalg.norm(chain - target_s, axis=1)
        j = int(np.argmin(dist))
        if dist[j] < tol:
            lo, hi = sorted((i0, j))
            return chain[lo:hi]
    return None


def trace_level_set(
    psi: GridFunction,
    seed: Sequence[float],
    refine: int = 4,
    use_imag: bool = False,
    grad_tol: float | None = None,
) -> Fibre:
    """Connected component of ``{Re psi = Re psi(seed)}`` through ``seed``.

    Parameters
    ----------
    psi : GridFunction
        Eigenfunction on a two-dimensional collocation grid.
    seed : point
        Fixes both the level value and the component.
    refine : int
        Refinement factor per axis of the evaluation grid for marching squares.
    use_imag : bool
        Trace the imaginary part instead of the real part.
    grad_tol : float, optional
        Minimum gradient norm at the seed; defaults to
        ``1e-6 * max(range, max |psi|) / width``.

    Returns
    -------
    Fibre
        Unresampled polyline, oriented so the last coordinate increases at
        the seed.
    """
    dom = psi.domain
    if dom.dim != 2:
        raise InvalidDomain("level-set tracing is implemented for two-dimensional domains")
    field = _real_field(psi, use_imag)
    seed = dom.wrap(np.asarray(seed, dtype=float).reshape(2, 1))[:, 0]
    level = float(field.evaluate(seed))
    vals = field.values
    span = max(float(vals.max() - vals.min()), float(np.abs(vals).max()))
    width = max(ax.width for ax in dom.axes)
    grad = field.gradient()
    gnorm = float(np.hypot(*[g.evaluate(seed).real for g in grad]))
    if grad_tol is None:
        grad_tol = 1e-6 * span / width
    if not gnorm > grad_tol:
        raise DegenerateGradient(f"|grad| = {gnorm:.3g} at the seed")

    nodes = _refined_axes(field, refine)
    F = field.on_grid(nodes)
    # tile periodic axes three times so a component through the seed is never cut
    offsets = []
    for i, ax in enumerate(dom.axes):
        if ax.periodic:
            F = np.concatenate([F, F, F, np.take(F, [0], axis=i)], axis=i)
            offsets.append(-ax.width)
        else:
            offsets.append(0.0)
    steps = [
        (ax.width / len(q)) if ax.periodic else (q[1] - q[0]) for ax, q in zip(dom.axes, nodes)
    ]
    origin = np.array([ax.lower + off for ax, off in zip(dom.axes, offsets)])
    contours = measure.find_contours(F, level)
    if not contours:
        raise ComponentTooShort("no level-set component found")
    best, best_d = None, np.inf
    for c in contours:
        p = origin + c * np.asarray(steps)
        d = np.linalg.norm(p - seed, axis=1).min()
        if d < best_d:
            best, best_d = p, d
    chain = best
    cell = float(np.hypot(*steps))
    closed = bool(len(chain) > 2 and np.allclose(chain[0], chain[-1]))
    if closed:
        chain = chain[:-1]
    i0 = int(np.argmin(np.linalg.norm(chain - seed, axis=1)))
    shift = np.zeros(2)
    for i, ax in enumerate(dom.axes):
        if ax.periodic and not closed:
            sub = _period_shift(chain, i0, ax.width, i, 2.0 * cell)
            if sub is not None:
                chain, closed = sub, True
                shift[i] = ax.width * np.sign(chain[-1, i] - chain[0, i])
                i0 = int(np.argmin(np.linalg.norm(chain - seed, axis=1)))
    if len(chain) < MIN_VERTICES:
        raise ComponentTooShort(f"component has {len(chain)} vertices")

    chain = project_to_level(field, chain, level, iterations=6, grad=grad)
    # orientation: last coordinate non-decreasing at the seed
    a, b = max(i0 - 1, 0), min(i0 + 1, len(chain) - 1)
    if chain[b, -1] < chain[a, -1]:
        chain = chain[::-1]
        shift = -shift
    if closed:
        # start the loop at the vertex nearest the seed, keeping it continuous
        i0 = int(np.argmin(np.linalg.norm(chain - seed, axis=1)))
        chain = np.vstack([chain[i0:], chain[:i0] + shift])
    return Fibre(chain, level, seed, None, closed, None, field, shift if closed else None)


def resample_uniform(f: Fibre, h: float, project: bool = True) -> Fibre:
    """Equal arc-length resampling of the polyline.

    Open fibres keep both end points, so the spacing is adjusted to
    ``length / round(length / h)``; closed fibres get ``round(length / h)``
    points.  The adjustment is below 1% once the fibre is 50 spacings long.
    """
    if not h > 0:
        raise ValueError(f"spacing must be positive, got {h}")
    total = f.length
    if total < 3.0 * h:
        raise FibreTooShort(f"fibre length {total:.4g} is below 3h = {3 * h:.4g}")
    pts = np.vstack([f.points, f.points[:1] + f.closing_shift]) if f.closed else f.points
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    nseg = max(int(round(total / h)), 3)
    step = total / nseg
    t = step * np.arange(nseg if f.closed else nseg + 1)
    if not f.closed:
        t[-1] = total
    out = np.column_stack([np.interp(t, s, pts[:, i]) for i in range(pts.shape[1])])
    if project and f.field is not None:
        out = project_to_level(f.field, out, f.level)
    return replace(f, points=out, spacing=step, weights=None)


def attach_weights(f: Fibre, rho: GridFunction) -> Fibre:
    """Probability weights proportional to the interpolated density."""
    w = np.clip(np.asarray(rho.evaluate(f.points.T)).real, 0.0, None)
    total = w.sum()
    if not total > 0:
        raise AllWeightsZero("density vanishes at every fibre point")
    return replace(f, weights=w / total)


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))
