"""Algorithm drivers: the multiscale test and the two fibre-spectrum methods."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import fibre as fb
from . import frames as fr
from .errors import (
    GenspecError,
    IllConditionedFit,
    IndexMismatch,
    NotAGraph,
    RankDeficientNeighborhood,
    StepFailed,
)
from .generator import assemble_fibre_generator, assemble_generator
from .sde import GridFunction, SdeSystem, evaluate_coefficients
from .spectra import Spectrum, fix_phase, invariant_density, leading_spectrum


class Verdict(enum.Enum):
    MULTISCALE = "Multiscale"
    NOT_MULTISCALE = "NotMultiscale"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class AnalysisConfig:
    """Numerical knobs shared by the drivers.

    Attributes
    ----------
    k_max : int
        Number of leading eigenpairs (``lambda_0`` included).
    spacing : float
        Target arc-length spacing of resampled fibres.
    window : int
        Neighbour count for tangent and local-graph fits.
    threshold : float
        Ratio at or above which the verdict is multiscale.
    refine : int
        Refinement factor of the marching-squares grid.
    use_imag : bool
        Trace level sets of the imaginary part of the eigenfunction.
    fibre_boundary : str
        End treatment of open fibre operators, ``"dirichlet"`` or ``"neumann"``.
    n_samples : int
        Graph samples for the graph-parameterized fibre operator.
    anchor : point or None
        Phase anchor of the eigenfunctions; defaults to the seed.
    hessian_sign : float
        Sign of the curvature term in the flattened normal drift.
    """

    k_max: int = 7
    spacing: float = 0.1
    window: int = 13
    threshold: float = 10.0
    refine: int = 4
    use_imag: bool = False
    fibre_boundary: str = "dirichlet"
    n_samples: int = 200
    anchor: tuple[float, ...] | None = None
    hessian_sign: float = -1.0


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GENSPEC_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Order-preserving map, threaded when ``GENSPEC_THREADS`` > 1."""
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _step(name: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StepFailed:
        raise
    except GenspecError as exc:
        raise StepFailed(name, exc) from exc


class SpectralSolution:
    """Lazily computed spectral data of one system, shared across drivers.

    The adjoint spectrum, the invariant density and traced fibres are each
    computed once and reused, so a full pipeline needs a single eigensolve
    per operator.
    """

    def __init__(self, sys: SdeSystem, config: AnalysisConfig | None = None, anchor=None):
        self.sys = sys
        self.config = config or AnalysisConfig()
        self.anchor = None if anchor is None else tuple(float(a) for a in anchor)
        if self.anchor is None and self.config.anchor is not None:
            self.anchor = tuple(self.config.anchor)
        self._spectrum: Spectrum | None = None
        self._density: GridFunction | None = None
        self._fibres: dict = {}

    @property
    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            L_adj = _step("assemble adjoint", assemble_generator, self.sys, True)
            self._spectrum = _step("leading spectrum", leading_spectrum, L_adj, self.config.k_max)
        return self._spectrum

    @property
    def density(self) -> GridFunction:
        if self._density is None:
            L = _step("assemble Fokker-Planck", assemble_generator, self.sys, False)
            self._density = _step("invariant density", invariant_density, L)
        return self._density

    def psi1(self, seed) -> GridFunction:
        anchor = self.anchor if self.anchor is not None else tuple(seed)
        if self.anchor is None:
            self.anchor = anchor
        if len(self.spectrum) < 2:
            raise StepFailed("leading spectrum", IndexMismatch("need at least two eigenpairs"))
        return _step("phase fix", fix_phase, self.spectrum.eigenfunctions[1], anchor)

    def raw_fibre(self, seed) -> fb.Fibre:
        key = ("raw", tuple(float(s) for s in seed))
        if key not in self._fibres:
            psi = self.psi1(seed)
            self._fibres[key] = _step(
                "trace fibre", fb.trace_level_set, psi, seed, self.config.refine, self.config.use_imag
            )
        return self._fibres[key]

    def fibre(self, seed, weighted: bool = False) -> fb.Fibre:
        key = ("uniform", tuple(float(s) for s in seed), weighted)
        if key not in self._fibres:
            f = _step("resample fibre", fb.resample_uniform, self.raw_fibre(seed), self.config.spacing)
            if weighted:
                f = _step("fibre weights", fb.attach_weights, f, self.density)
            self._fibres[key] = f
        return self._fibres[key]


# Algorithm 1


@dataclass
class MultiscaleReport:
    mu_tan_avg: float
    mu_nor_avg: float
    D_tan_avg: float
    D_nor_avg: float
    ratio_mu: float
    ratio_D: float
    verdict: Verdict
    table: list[dict]
    skipped_points: int
    threshold: float
    fibre: fb.Fibre | None = field(default=None, repr=False)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "averages": {
                "mu_tan": self.mu_tan_avg,
                "mu_nor": self.mu_nor_avg,
                "D_tan": self.D_tan_avg,
                "D_nor": self.D_nor_avg,
            },
            "ratio_mu": self.ratio_mu,
            "ratio_D": self.ratio_D,
            "threshold": self.threshold,
            "verdict": self.verdict.value,
            "points": len(self.table),
            "skipped_points": self.skipped_points,
            "metadata": self.metadata,
        }


def flatten_at(
    sys: SdeSystem,
    points: np.ndarray,
    n: int,
    window: int,
    hessian_sign: float = -1.0,
) -> tuple[fr.LocalDynamics, fr.LocalGraph]:
    """Tangent fit, local graph and Ito flattening at fibre point ``n``."""
    z = points[n]
    nb = fr.nearest_points(points, z, window)
    iso = fr.fit_tangent(nb, z)
    graph = fr.fit_local_graph(points, iso, z, window)
    mu, D = evaluate_coefficients(sys, z)
    muA, DA = fr.transform_linear(mu, D, graph.isometry)
    mu_hat, D_hat = fr.ito_flatten(muA, DA, graph.g1, graph.g2, hessian_sign)
    return fr.split_components(mu_hat, D_hat), graph


def _verdict(ratio: float, threshold: float, skipped: int, total: int) -> Verdict:
    if not np.isfinite(ratio) or skipped * 2 > total:
        return Verdict.INCONCLUSIVE
    if ratio >= threshold:
        return Verdict.MULTISCALE
    if ratio >= math.sqrt(threshold):
        return Verdict.INCONCLUSIVE
    return Verdict.NOT_MULTISCALE


def algorithm1(
    sys: SdeSystem,
    seed: Sequence[float],
    config: AnalysisConfig | None = None,
    solution: SpectralSolution | None = None,
) -> MultiscaleReport:
    """Multiscale test from tangent/normal drift and diffusion along one fibre.

    Steps: invariant density, leading adjoint eigenfunction, fibre through
    ``seed`` with density weights, per-point flattening, weighted averages
    and the verdict.  Failures are re-raised as :class:`StepFailed`.
    """
    config = config or AnalysisConfig()
    sol = solution or SpectralSolution(sys, config)
    f = sol.fibre(seed, weighted=True)
    pts = f.points
    # closed fibres: neighbours across the start/end seam come from wrapped copies
    ext = f.extended(config.window)
    off = (len(ext) - len(pts)) // 2
    grad = [g for g in sol.psi1(seed).gradient()]
    gscale = np.abs(sol.psi1(seed).values).max() / max(ax.width for ax in sys.domain.axes)

    def one(n):
        row = {"n": n, "s": float(f.arclength[n]), "point": pts[n].tolist(), "weight": float(f.weights[n])}
        gnorm = np.linalg.norm([np.real(g.evaluate(pts[n])) for g in grad])
        if gnorm <= 1e-6 * gscale:
            row["skipped"] = "DegenerateGradient"
            return row
        try:
            dyn, graph = flatten_at(sys, ext, n + off, config.window, config.hessian_sign)
        except (RankDeficientNeighborhood, IllConditionedFit) as exc:
            row["skipped"] = type(exc).__name__
            return row
        except GenspecError as exc:
            raise StepFailed("local flattening", exc) from exc
        row.update(
            skipped=None,
            mu_hat=dyn.mu_hat.tolist(),
            D_hat=dyn.D_hat.tolist(),
            g1=graph.g1.tolist(),
            g2=graph.g2.ravel().tolist(),
            mu_tan=dyn.mu_tan,
            mu_nor=dyn.mu_nor,
            D_tan=dyn.D_tan,
            D_nor=dyn.D_nor,
        )
        return row

    table = parallel_map(one, list(range(len(pts))))
    ok = np.array([r["skipped"] is None for r in table])
    skipped = int((~ok).sum())
    w = f.weights * ok
    if w.sum() > 0:
        w = w / w.sum()
        vals = np.array([[r[k] if r["skipped"] is None else 0.0 for k in ("mu_tan", "mu_nor", "D_tan", "D_nor")] for r in table])
        mt, mn, dt, dn = (w @ vals).tolist()
    else:
        mt = mn = dt = dn = float("nan")
    denom = max(mn, dn)
    ratio_mu = mt / denom if denom > 0 else float("inf")
    ratio_D = dt / denom if denom > 0 else float("inf")
    verdict = _verdict(max(ratio_mu, ratio_D), config.threshold, skipped, len(table))
    meta = {
        "system": sys.name,
        "seed": [float(s) for s in seed],
        "phase_anchor": list(sol.anchor) if sol.anchor else None,
        "level": f.level,
        "fibre_points": len(pts),
        "fibre_spacing": f.spacing,
        "fibre_length": f.length,
        "window": config.window,
        "traced_part": "imag" if config.use_imag else "real",
    }
    return MultiscaleReport(mt, mn, dt, dn, ratio_mu, ratio_D, verdict, table, skipped, config.threshold, f, meta)


# Algorithms 2A and 2B


@dataclass
class TimescaleReport:
    """Full-system versus fibre eigenvalues, index by index for ``k >= 1``."""

    slow_eigs: np.ndarray
    fibre_eigs: np.ndarray
    ratios: np.ndarray
    err: np.ndarray | None
    epsilon_estimate: float
    method: str = ""
    theta: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        c = lambda a: [[float(np.real(v)), float(np.imag(v))] for v in a]
        return {
            "method": self.method,
            "theta": self.theta,
            "slow_eigs": c(self.slow_eigs),
            "fibre_eigs": c(self.fibre_eigs),
            "ratios": [float(r) for r in self.ratios],
            "err": None if self.err is None else [float(e) for e in self.err],
            "epsilon_estimate": self.epsilon_estimate,
            "notes": list(self.notes),
        }


def timescale_ratios(slow: Spectrum, fibre: Spectrum, reference=None, k: int | None = None) -> TimescaleReport:
    """Ratios ``Re lambda_k / Re lambda_hat_k`` and optional relative errors.

    Index ``k`` of the full spectrum is paired with index ``k`` of the fibre
    spectrum, so the two members of a conjugate pair meet different fibre
    eigenvalues.
    """
    lam = np.asarray(slow.eigenvalues if isinstance(slow, Spectrum) else slow, dtype=complex)
    lhat = np.asarray(fibre.eigenvalues if isinstance(fibre, Spectrum) else fibre, dtype=complex)
    k = len(lam) - 1 if k is None else int(k)
    if k < 1:
        raise IndexMismatch("need at least one eigenvalue beyond lambda_0")
    if len(lhat) < k + 1 or len(lam) < k + 1:
        raise IndexMismatch(f"spectra have {len(lam)} and {len(lhat)} entries, need {k + 1}")
    ratios = lam[1 : k + 1].real / lhat[1 : k + 1].real
    err = None
    if reference is not None:
        ref = np.asarray(reference, dtype=complex)
        if len(ref) < k + 1:
            raise IndexMismatch(f"reference has {len(ref)} entries, need {k + 1}")
        err = np.abs(lhat[1 : k + 1] - ref[1 : k + 1]) / np.abs(ref[1 : k + 1])
    eps = float(np.exp(np.mean(np.log(np.abs(ratios)))))
    notes = []
    if np.any(np.abs(lam[1 : k + 1].imag) > 0):
        notes.append("complex conjugate pairs are matched index-wise with real fibre eigenvalues")
    return TimescaleReport(lam[: k + 1], lhat[: k + 1], ratios, err, eps, notes=notes)


def _fibre_spectrum(mu, d, spacing, closed, config: AnalysisConfig) -> Spectrum:
    M = _step("fibre generator", assemble_fibre_generator, mu, d, spacing, closed, config.fibre_boundary)
    return _step("fibre spectrum", leading_spectrum, M, min(config.k_max, M.size))


def graph_samples(chain: np.ndarray, theta_deg: float, n_samples: int):
    """Rotate, check the graph property and sample ``w(v)`` on an even grid.

    Returns the rotation matrix, the sample abscissae ``v`` and the points
    ``A^T (v, w(v))`` in original coordinates.
    """
    th = np.deg2rad(theta_deg)
    A = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    R = chain @ A.T
    v = R[:, 0]
    dv = np.diff(v)
    if not (np.all(dv > 0) or np.all(dv < 0)):
        raise NotAGraph(f"fibre is not a graph over the direction theta = {theta_deg} degrees")
    order = np.argsort(v)
    v, w = v[order], R[order, 1]
    # interior samples: one sample cell in from each end
    vs = np.linspace(v[0], v[-1], n_samples + 2)[1:-1]
    ws = np.interp(vs, v, w)
    return A, vs, np.column_stack([vs, ws]) @ A


def algorithm2a(
    sys: SdeSystem,
    seed: Sequence[float],
    theta: float = 90.0,
    n_samples: int | None = None,
    config: AnalysisConfig | None = None,
    solution: SpectralSolution | None = None,
    reference=None,
) -> TimescaleReport:
    """Fibre spectrum from the graph parameterization at rotation ``theta`` (degrees).

    Only the tangential drift ``(A mu)_1`` and diffusion ``(A D A^T)_11`` are
    needed; no derivatives of the graph enter.
    """
    config = config or AnalysisConfig()
    n_samples = n_samples or config.n_samples
    sol = solution or SpectralSolution(sys, config)
    raw = sol.raw_fibre(seed)
    if raw.closed:
        raise StepFailed("graph parameterization", NotAGraph("closed fibres are not graphs"))
    A, vs, Z = _step("graph parameterization", graph_samples, raw.points, theta, n_samples)
    mu = np.empty(len(vs))
    d = np.empty(len(vs))
    for i, z in enumerate(Z):
        m, D = _step("coefficients", evaluate_coefficients, sys, z)
        muA, DA = fr.transform_linear(m, D, A)
        mu[i], d[i] = muA[0], DA[0, 0]
    spec = _fibre_spectrum(mu, d, vs[1] - vs[0], False, config)
    rep = _step("ratios", timescale_ratios, sol.spectrum, spec, reference)
    rep.method, rep.theta = "graph", float(theta)
    return rep


def arclength_coefficients(sys: SdeSystem, f: fb.Fibre, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Tangential drift and diffusion at each point of a uniformly resampled fibre."""
    q = f.points
    n = len(q)
    ext = f.extended(window)
    off = (len(ext) - n) // 2
    mu = np.empty(n)
    d = np.empty(n)
    for i in range(n):
        # chord through the two neighbours (one-sided at open ends)
        a, b = max(i + off - 1, 0), min(i + off + 1, len(ext) - 1)
        t = ext[b] - ext[a]
        t = t / np.linalg.norm(t)
        iso = fr.Isometry(np.array([t, [-t[1], t[0]]]), q[i])
        graph = fr.fit_local_graph(ext, iso, q[i], window, zero_slope=True)
        tan = graph.isometry.tangent[0]
        m, D = evaluate_coefficients(sys, q[i])
        mu[i] = tan @ m
        d[i] = tan @ D @ tan
    return mu, d


def algorithm2b(
    sys: SdeSystem,
    seed: Sequence[float],
    config: AnalysisConfig | None = None,
    solution: SpectralSolution | None = None,
    reference=None,
) -> TimescaleReport:
    """Fibre spectrum from the arc-length parameterization of the fibre."""
    config = config or AnalysisConfig()
    if sys.dim != 2:
        raise ValueError("the arc-length method is implemented for planar systems")
    sol = solution or SpectralSolution(sys, config)
    f = sol.fibre(seed)
    mu, d = _step("tangential coefficients", arclength_coefficients, sys, f, config.window)
    spec = _fibre_spectrum(mu, d, f.spacing, f.closed, config)
    rep = _step("ratios", timescale_ratios, sol.spectrum, spec, reference)
    rep.method = "arclength"
    return rep
