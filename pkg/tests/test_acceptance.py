"""Acceptance criteria of the benchmark reproduction, one test per criterion.

Each test records a single PASS/FAIL line; the lines are printed together in
the "acceptance criteria" section at the end of the pytest run.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from genspec import bench
from genspec.analysis import AnalysisConfig, SpectralSolution, Verdict, algorithm1, algorithm2a, flatten_at
from genspec.cli import main
from genspec.frames import fit_local_graph, ito_flatten, split_components, transform_linear
from genspec.generator import assemble_generator
from genspec.reduction import reduce_spectrum
from genspec.spectra import leading_spectrum

from conftest import ACCEPTANCE_LINES, SEED
from test_frames import IDENTITY, N_MC, T_MC, _flattened_increments, _moments, curved_system

# criterion 1
EIG_REFERENCE = {1: (-0.6467 + 0.1097j, 0.02), 3: (-2.0508 + 0.2465j, 0.03), 5: (-4.4543 + 0.3912j, 0.05)}
LAMBDA0_TOL = 1e-6
RUNTIME_BUDGET = 60.0
# criterion 2
FIBRE_TOL = 0.05
RATIO_RANGE = (1e-4, 1e-3)
# criterion 3
THETAS = np.arange(55.0, 126.0, 5.0)
GRAPH_SAMPLES = 200
GRAPH_TOL = 0.01
# criterion 4
AVERAGES = {"mu_tan": 704.27, "D_tan": 1480.9, "mu_nor": 25.165, "D_nor": 1.4216}
AVERAGE_FACTOR = 1.5
# criterion 5
MU_RMS_TOL = 0.1
D_RMS_TOL = 0.15
# criterion 6
EXACT_TOL = 1e-8
OU_TOL = 1e-4
MC_SIGMAS = 3.0
ORIG_TRANS_TOL = 0.02


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def rms(a):
    return float(np.sqrt(np.mean(np.abs(a) ** 2)))


def test_criterion_1_spectrum():
    t0 = time.perf_counter()
    sol = SpectralSolution(bench.crommelin_transformed(), AnalysisConfig(anchor=SEED))
    lam = sol.spectrum.eigenvalues
    sol.density
    elapsed = time.perf_counter() - t0
    errs = {k: abs(lam[k] - ref) / abs(ref) for k, (ref, _) in EIG_REFERENCE.items()}
    ok = abs(lam[0]) < LAMBDA0_TOL and all(errs[k] < tol for k, (_, tol) in EIG_REFERENCE.items())
    ok &= elapsed < RUNTIME_BUDGET
    detail = f"|lambda_0| = {abs(lam[0]):.1e}, " + ", ".join(
        f"err_{k} = {errs[k]:.2%} (< {tol:.0%})" for k, (_, tol) in EIG_REFERENCE.items()
    )
    record(1, ok, f"{detail}, solve {elapsed:.1f} s (< {RUNTIME_BUDGET:.0f} s)")


def test_criterion_2_fibre_eigenvalues(report2b):
    err = report2b.err[:6]
    r = report2b.ratios[:6]
    ok = len(err) == 6 and err.max() < FIBRE_TOL and r.min() >= RATIO_RANGE[0] and r.max() <= RATIO_RANGE[1]
    record(2, ok, f"arc-length max err {err.max():.2%} (< {FIBRE_TOL:.0%}), "
                  f"ratios in [{r.min():.2e}, {r.max():.2e}] within [1e-4, 1e-3]")


def test_criterion_3_theta_sweep(benchmark):
    worst = []
    for th in THETAS:
        rep = algorithm2a(benchmark.sys, SEED, th, GRAPH_SAMPLES, benchmark.config, benchmark.solution,
                          benchmark.reference)
        worst.append(rep.err[:6].max())
    worst = np.array(worst)
    i = int(np.argmax(worst))
    record(3, bool(worst.max() < GRAPH_TOL),
           f"{len(THETAS)} angles, max err {worst.max():.3%} at theta = {THETAS[i]:g} (< {GRAPH_TOL:.0%})")


def test_criterion_4_averages(report1):
    got = {"mu_tan": report1.mu_tan_avg, "D_tan": report1.D_tan_avg,
           "mu_nor": report1.mu_nor_avg, "D_nor": report1.D_nor_avg}
    within = all(v / AVERAGE_FACTOR <= got[k] <= v * AVERAGE_FACTOR for k, v in AVERAGES.items())
    # plain tangent/normal ratios; the report's ratio_D divides by max(mu_nor, D_nor) instead
    r_mu, r_D = got["mu_tan"] / got["mu_nor"], got["D_tan"] / got["D_nor"]
    ok = within and r_mu > 10 and r_D > 100 and report1.verdict is Verdict.MULTISCALE
    vals = ", ".join(f"{k} = {got[k]:.4g}" for k in AVERAGES)
    record(4, ok, f"{vals} (factor {AVERAGE_FACTOR}); mu_tan/mu_nor = {r_mu:.3g} (> 10), "
                  f"D_tan/D_nor = {r_D:.4g} (> 100); {report1.verdict.value}")


def test_criterion_5_reduced_dynamics(benchmark):
    model = reduce_spectrum(benchmark.spectrum)
    mu, D = bench.homogenized_reference(model.x)
    ok_pts = ~model.gaps
    e_mu = rms((model.mu_tilde - mu)[ok_pts]) / rms(mu)
    # D is the square of the true noise coefficient sqrt(1 + mu/2)
    e_D = rms((model.D_tilde - D)[ok_pts]) / rms(D)
    e_disp = rms((model.D_tilde - D**2)[ok_pts]) / rms(D**2)
    ok = ok_pts.all() and e_mu < MU_RMS_TOL and e_D < D_RMS_TOL
    record(5, ok, f"RMS mu err {e_mu:.2%} (< {MU_RMS_TOL:.0%}), RMS D err {e_D:.2%} vs 1 + mu/2 "
                  f"(< {D_RMS_TOL:.0%}); vs (1 + mu/2)^2 it would be {e_disp:.1%}")


def test_criterion_6_exact_math(benchmark, original_spectrum):
    parts = {}
    # (a) parabola x = W, y = x^2 at 20 points
    worst = 0.0
    for x0 in np.linspace(-2, 2, 20):
        v = np.linspace(-0.3, 0.3, 13)
        g = fit_local_graph(np.column_stack([x0 + v, (x0 + v) ** 2]), IDENTITY, (x0, x0**2))
        D = np.array([[1.0, 2 * x0], [2 * x0, 4 * x0**2]])
        mh, Dh = ito_flatten(*transform_linear([0.0, 1.0], D, g.isometry), g.g1, g.g2)
        worst = max(worst, np.abs(mh).max(), np.abs(Dh - np.diag([1.0, 0.0])).max())
    parts["a"] = (worst < EXACT_TOL, f"parabola {worst:.1e}")

    # (b) tangent-preserving gauge changes
    rng = np.random.default_rng(2024)
    worst = 0.0
    for d in (2, 3):
        k = d - 1
        for _ in range(200):
            muA = rng.normal(size=d)
            S = rng.normal(size=(d, d))
            g1, g2 = rng.normal(size=k), rng.normal(size=(k, k))
            g2 = g2 + g2.T
            Qt = np.linalg.qr(rng.normal(size=(k, k)))[0]
            s = rng.choice([-1.0, 1.0])
            Q = np.zeros((d, d))
            Q[:k, :k], Q[k, k] = Qt, s

            def scal(m, D, a, b):
                c = split_components(*ito_flatten(m, D, a, b))
                return np.array([c.mu_tan, c.mu_nor, c.D_tan, c.D_nor])

            before = scal(muA, S @ S.T, g1, g2)
            after = scal(*transform_linear(muA, S @ S.T, Q), s * Qt @ g1, s * Qt @ g2 @ Qt.T)
            worst = max(worst, (np.abs(before - after) / np.maximum(1, np.abs(before))).max())
    parts["b"] = (worst < EXACT_TOL, f"gauge {worst:.1e}")

    # (c) OU generator at n = 64
    lam = leading_spectrum(assemble_generator(bench.ou_1d(n=64), adjoint=True), 4).eigenvalues
    e = np.abs(lam - np.array([0.0, -1.0, -2.0, -3.0])).max()
    parts["c"] = (e < OU_TOL, f"OU {e:.1e}")

    # (d) Monte-Carlo moments: synthetic curved graph and the benchmark inflection point
    sys_, (c, a, m, s, b, r) = curved_system()
    z0 = np.array([0.4, a * 0.4 + 0.5 * c * 0.16])
    mu, D = sys_.coefficients(z0[:, None])
    mh, Dh = ito_flatten(mu[:, 0], D[:, :, 0], [a + c * 0.4], [[c]])
    zs = bench.euler_maruyama(sys_, z0, T_MC, 1, seed=11, paths=N_MC, record=False)
    mean, se, cov, se_cov = _moments(_flattened_increments(z0, zs, IDENTITY, a + c * 0.4, c), T_MC)
    z_syn = max((np.abs(mean - mh) / se).max(), (np.abs(cov - Dh) / se_cov).max())

    f = benchmark.solution.fibre(SEED)
    n = int(np.argmin(np.abs(f.points[:, 1])))
    dyn, graph = flatten_at(benchmark.sys, f.points, n, benchmark.config.window)
    zs = bench.euler_maruyama(benchmark.sys, f.points[n], T_MC, 1, seed=5, paths=N_MC, record=False)
    dz = zs - f.points[n][:, None]
    dz[0] = (dz[0] + np.pi) % (2 * np.pi) - np.pi
    Y = _flattened_increments(np.zeros(2), dz, graph.isometry, graph.g1[0], graph.g2[0, 0])
    mean, se, cov, se_cov = _moments(Y, T_MC)
    z_bench = max((np.abs(mean - dyn.mu_hat) / se).max(), (np.abs(cov - dyn.D_hat) / se_cov).max())
    parts["d"] = (max(z_syn, z_bench) < MC_SIGMAS, f"MC {z_syn:.2f}/{z_bench:.2f} SE")

    # (e) original vs transformed coordinates
    lt, lo = benchmark.spectrum.eigenvalues[1:7], original_spectrum.eigenvalues[1:7]
    e = (np.abs(lo - lt) / np.abs(lt)).max()
    parts["e"] = (e < ORIG_TRANS_TOL, f"orig/trans {e:.2%}")

    ok = all(p[0] for p in parts.values())
    record(6, ok, "; ".join(f"({k}) {'ok' if p[0] else 'FAIL'} {p[1]}" for k, p in parts.items()))


def test_criterion_7_negative_controls(tmp_path, capsys):
    code = main(["analyze", "--eps", "1", "--out", str(tmp_path)])
    capsys.readouterr()
    names = {3: "NotMultiscale", 4: "Inconclusive", 0: "Multiscale"}
    iso = algorithm1(bench.isotropic_ou(), (1.0, 0.5), AnalysisConfig(anchor=(1.0, 0.5)))
    ok = code in (3, 4) and iso.verdict is Verdict.NOT_MULTISCALE
    record(7, ok, f"eps = 1: {names.get(code, f'exit {code}')}; isotropic OU: {iso.verdict.value}")


@pytest.mark.slow
def test_criterion_8_determinism(tmp_path, capsys):
    out = tmp_path / "run"
    runs = []
    for _ in range(2):
        code = main(["all", "--out", str(out)])
        runs.append((code, {p.name: p.read_bytes() for p in sorted(out.iterdir())}))
    capsys.readouterr()
    (c1, a), (c2, b) = runs
    same = a == b and len(a) == 7
    record(8, same and c1 == c2 == 0, f"{len(a)} files from two default 'all' runs, "
                                      f"{'byte-identical' if same else 'DIFFERENT'}")
