"""Command-line interface.

Exit codes: 0 multiscale (or success), 3 not multiscale, 4 inconclusive,
2 configuration error, 1 any other failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .analysis import (
    SpectralSolution,
    TimescaleReport,
    Verdict,
    algorithm1,
    algorithm2a,
    algorithm2b,
)
from .bench import homogenized_reference
from .config import RunConfig, load_config
from .errors import ConfigError, GenspecError, NotAGraph, StepFailed
from .io import write_csv, write_json
from .reduction import make_section, reduce_spectrum

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_CODES = {Verdict.MULTISCALE: 0, Verdict.NOT_MULTISCALE: 3, Verdict.INCONCLUSIVE: 4}


class Session:
    """One system plus its shared spectral solution and output directory."""

    def __init__(self, cfg: RunConfig, echo=print):
        self.cfg = cfg
        self.sys = cfg.build_system()
        self.acfg = cfg.analysis_config()
        self.solution = SpectralSolution(self.sys, self.acfg, anchor=cfg.seed_point)
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.echo = echo

    @property
    def k_rows(self) -> int:
        return self.cfg.k_max


def run_spectrum(s: Session) -> int:
    lam = s.solution.spectrum.eigenvalues[: s.k_rows]
    write_csv(s.out / "spectrum.csv", ["k", "re", "im"], [(k, v.real, v.imag) for k, v in enumerate(lam)])
    s.echo("leading eigenvalues of the adjoint generator:")
    for k, v in enumerate(lam):
        s.echo(f"  lambda_{k} = {v.real: .6e} {v.imag:+.6e}i")
    return EXIT_OK


def run_fibre(s: Session) -> int:
    f = s.solution.fibre(s.cfg.seed_point, weighted=True)
    rows = [(n, *p, w) for n, (p, w) in enumerate(zip(f.points, f.weights))]
    write_csv(s.out / "fibre.csv", ["n", "x", "y", "weight"], rows)
    s.echo(f"fibre through {tuple(s.cfg.seed_point)}: {len(f)} points, spacing {f.spacing:.6g}, length {f.length:.6g}")
    return EXIT_OK


def run_analyze(s: Session) -> int:
    rep = algorithm1(s.sys, s.cfg.seed_point, s.acfg, s.solution)
    doc = rep.to_dict()
    doc["config"] = s.cfg.to_dict()
    write_json(s.out / "multiscale_report.json", doc)
    run_fibre(s)
    header = ["n", "s", "x", "y", "weight", "mu_hat_1", "mu_hat_2", "D_hat_11", "D_hat_12", "D_hat_22",
              "mu_tan", "mu_nor", "D_tan", "D_nor", "skipped"]
    rows = []
    for r in rep.table:
        if r["skipped"] is None:
            mh, Dh = r["mu_hat"], r["D_hat"]
            vals = [mh[0], mh[1], Dh[0][0], Dh[0][1], Dh[1][1], r["mu_tan"], r["mu_nor"], r["D_tan"], r["D_nor"], ""]
        else:
            vals = [None] * 9 + [r["skipped"]]
        rows.append([r["n"], r["s"], *r["point"], r["weight"], *vals])
    write_csv(s.out / "local_dynamics.csv", header, rows)
    s.echo("weighted averages along the fibre:")
    s.echo(f"  mu_tan = {rep.mu_tan_avg:.6g}   mu_nor = {rep.mu_nor_avg:.6g}")
    s.echo(f"  D_tan  = {rep.D_tan_avg:.6g}   D_nor  = {rep.D_nor_avg:.6g}")
    s.echo(f"  ratio_mu = {rep.ratio_mu:.4g}, ratio_D = {rep.ratio_D:.4g}, skipped {rep.skipped_points}")
    s.echo(f"verdict: {rep.verdict.value}")
    return EXIT_CODES[rep.verdict]


def _table_rows(rep: TimescaleReport, k_rows: int):
    theta = "" if rep.theta is None else rep.theta
    rows = []
    for k in range(min(k_rows, len(rep.slow_eigs))):
        lam, lh = rep.slow_eigs[k], rep.fibre_eigs[k]
        ratio = rep.ratios[k - 1] if k else None
        err = rep.err[k - 1] if (k and rep.err is not None) else None
        rows.append([rep.method, theta, k, lam.real, lam.imag, lh.real, lh.imag, ratio, err])
    return rows


def run_timescale(s: Session) -> int:
    methods = [s.cfg.method] if s.cfg.method else ["arclength", "graph"]
    ref = s.cfg.reference_eigenvalues()
    reports: list[TimescaleReport] = []
    failures = []
    for m in methods:
        if m == "arclength":
            reports.append(algorithm2b(s.sys, s.cfg.seed_point, s.acfg, s.solution, ref))
            continue
        for th in s.cfg.theta:
            try:
                reports.append(algorithm2a(s.sys, s.cfg.seed_point, th, s.acfg.n_samples, s.acfg, s.solution, ref))
            except StepFailed as exc:
                if not isinstance(exc.cause, NotAGraph):
                    raise
                failures.append({"method": "graph", "theta": th, "error": str(exc.cause)})
                s.echo(f"theta = {th:g}: {exc.cause}", file=sys.stderr)
    header = ["method", "theta", "k", "lambda_re", "lambda_im", "lambda_hat_re", "lambda_hat_im", "ratio", "err"]
    rows = [row for rep in reports for row in _table_rows(rep, s.k_rows)]
    write_csv(s.out / "table1.csv", header, rows)
    k = s.k_rows - 1
    docs = []
    for rep in reports:
        d = rep.to_dict()
        d["slow_eigs"] = d["slow_eigs"][: k + 1]
        d["fibre_eigs"] = d["fibre_eigs"][: k + 1]
        d["ratios"] = d["ratios"][:k]
        if d["err"] is not None:
            d["err"] = d["err"][:k]
        docs.append(d)
    write_json(s.out / "timescale_report.json", {"reports": docs, "failures": failures, "config": s.cfg.to_dict()})
    for rep in reports:
        label = rep.method if rep.theta is None else f"{rep.method} theta={rep.theta:g}"
        err = "" if rep.err is None else f", max err {np.max(rep.err[:k]):.3%}"
        s.echo(f"{label}: ratios in [{rep.ratios[:k].min():.3e}, {rep.ratios[:k].max():.3e}]"
               f", eps estimate {rep.epsilon_estimate:.3e}{err}")
    if not reports:
        s.echo("no timescale report could be produced", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def run_reduce(s: Session) -> int:
    sec = make_section(s.sys.domain, 0, 0.0)
    model = reduce_spectrum(
        s.solution.spectrum, sec, tuple(s.cfg.pairs), s.cfg.derivative, s.cfg.reduce_window
    )
    mu_f, D_f = model.filled()
    if s.cfg.builtin:
        mh, Dh = homogenized_reference(model.x)
        Dsq = Dh**2
    else:
        mh = Dh = Dsq = [None] * len(model.x)
    rows = zip(model.x, mu_f, D_f, mh, Dh, Dsq, model.condition, model.gaps)
    header = ["x", "mu_tilde", "D_tilde", "mu_homog", "D_homog", "D_homog_sq", "cond", "gap"]
    write_csv(s.out / "reduced.csv", header, rows)
    s.echo(f"reduced model on y = 0 from eigenpairs {model.eigpairs_used}, {int(model.gaps.sum())} gap(s)")
    if s.cfg.builtin:
        ok = ~model.gaps
        rms = lambda a: float(np.sqrt(np.mean(a**2)))
        s.echo(f"  RMS(mu_tilde - mu_homog) = {rms(model.mu_tilde[ok] - mh[ok]):.4g}"
               f" (relative {rms(model.mu_tilde[ok] - mh[ok]) / rms(mh[ok]):.3%})")
        s.echo(f"  RMS(D_tilde - D_homog)   = {rms(model.D_tilde[ok] - Dh[ok]):.4g}"
               f" (relative {rms(model.D_tilde[ok] - Dh[ok]) / rms(Dh[ok]):.3%})")
    return EXIT_OK


def run_all(s: Session) -> int:
    t0 = time.perf_counter()
    run_spectrum(s)
    code = run_analyze(s)
    run_timescale(s)
    run_reduce(s)
    s.echo(f"total wall time {time.perf_counter() - t0:.1f} s")
    return code


COMMANDS = {
    "analyze": run_analyze,
    "timescale": run_timescale,
    "reduce": run_reduce,
    "spectrum": run_spectrum,
    "fibre": run_fibre,
    "all": run_all,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file; flags override it")
    common.add_argument("--system", help="built-in system name or a .json expression file")
    common.add_argument("--eps", type=float)
    common.add_argument("--grid", help="NX,NY")
    common.add_argument("--L", dest="L", type=float, help="half-width of the y interval")
    common.add_argument("--seed-point", dest="seed_point", help="X,Y")
    common.add_argument("--spacing", type=float, help="fibre arc-length spacing")
    common.add_argument("--threshold", type=float, help="multiscale ratio threshold")
    common.add_argument("--theta", help="comma-separated rotation angles in degrees")
    common.add_argument("--method", choices=["graph", "arclength"])
    common.add_argument("--out", help="output directory")
    common.add_argument("--k-max", dest="k_max", type=int, help="eigenpairs reported, lambda_0 included")
    common.add_argument("--window", type=int, help="neighbours in local fits")
    common.add_argument("--derivative", choices=["window", "spectral"], help="section derivative estimator")
    common.add_argument("--pairs", help="eigenpair indices used by the reduction, e.g. 1,2")
    common.add_argument("--use-imag", dest="use_imag", action="store_true", default=None,
                        help="trace level sets of the imaginary part")
    common.add_argument("--fibre-boundary", dest="fibre_boundary", choices=["dirichlet", "neumann"])
    parser = argparse.ArgumentParser(prog="genspec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "analyze": "multiscale test along one fibre",
        "timescale": "fibre spectra and timescale ratios",
        "reduce": "reduced slow drift and diffusion on y = 0",
        "spectrum": "leading eigenvalues of the adjoint generator",
        "fibre": "trace and export the fibre through the seed point",
        "all": "spectrum, analyze, timescale and reduce with one eigensolve",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}

    def echo(msg, file=None):
        print(msg, file=file or sys.stdout, flush=True)

    try:
        cfg = load_config(args.config, overrides)
        threads = os.environ.get("GENSPEC_THREADS")
        limit = int(threads) if threads and threads.isdigit() and int(threads) > 0 else None
        with threadpool_limits(limits=limit):
            session = Session(cfg, echo)
            return COMMANDS[args.command](session)
    except ConfigError as exc:
        echo(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GenspecError as exc:
        echo(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
