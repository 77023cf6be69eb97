"""Run configuration: defaults, JSON files and command-line overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import bench
from .analysis import AnalysisConfig
from .errors import ConfigError, GenspecError
from .expr import load_system_file
from .sde import SdeSystem

DEFAULT_THETAS = tuple(float(t) for t in range(55, 126, 5))


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs; defaults reproduce the benchmark run.

    ``k_max`` counts eigenpairs including ``lambda_0``.
    """

    system: str = "crommelin_transformed"
    eps: float = bench.DEFAULT_EPS
    grid: tuple[int, int] = bench.DEFAULT_GRID
    L: float = bench.DEFAULT_L
    seed_point: tuple[float, float] = (5.0, 0.0)
    spacing: float = 0.1
    threshold: float = 10.0
    theta: tuple[float, ...] = DEFAULT_THETAS
    method: str | None = None
    out: str = "genspec_out"
    k_max: int = 7
    window: int = 13
    reduce_window: int = 11
    derivative: str = "window"
    pairs: tuple[int, int] = (1, 2)
    n_samples: int = 200
    use_imag: bool = False
    fibre_boundary: str = "dirichlet"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def positive(name, v):
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")

        for name in ("eps", "L", "spacing", "threshold"):
            positive(name, getattr(self, name))
        for name in ("k_max", "window", "reduce_window", "n_samples"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if len(self.grid) != 2 or any(not isinstance(n, int) or n < 8 for n in self.grid):
            raise ConfigError(f"grid must be two integers >= 8, got {self.grid!r}")
        if self.grid[0] % 2:
            raise ConfigError(f"the periodic grid size must be even, got {self.grid[0]}")
        if len(self.seed_point) != 2:
            raise ConfigError("seed point must have two coordinates")
        if self.method not in (None, "graph", "arclength"):
            raise ConfigError(f"method must be graph or arclength, got {self.method!r}")
        if self.derivative not in ("window", "spectral"):
            raise ConfigError(f"derivative must be window or spectral, got {self.derivative!r}")
        if self.fibre_boundary not in ("dirichlet", "neumann"):
            raise ConfigError(f"fibre boundary must be dirichlet or neumann, got {self.fibre_boundary!r}")
        if len(self.pairs) != 2 or any(not isinstance(p, int) or p < 0 for p in self.pairs):
            raise ConfigError(f"pairs must be two nonnegative indices, got {self.pairs!r}")
        if not self.theta:
            raise ConfigError("theta list is empty")
        if not self.builtin and not self.system.endswith(".json"):
            raise ConfigError(
                f"unknown system {self.system!r}; choose one of {sorted(bench.BUILTIN)} or a .json system file"
            )

    @property
    def builtin(self) -> bool:
        return self.system in bench.BUILTIN

    def build_system(self) -> SdeSystem:
        try:
            if self.builtin:
                return bench.BUILTIN[self.system](self.eps, self.L, self.grid)
            return load_system_file(self.system, self.eps, self.grid, self.L)
        except ConfigError:
            raise
        except GenspecError as exc:
            raise ConfigError(f"cannot build system: {exc}") from exc

    def analysis_config(self) -> AnalysisConfig:
        # the reduction needs eigenpairs up to max(pairs) even when the tables are shorter
        k = max(self.k_max, max(self.pairs) + 1, 2)
        return AnalysisConfig(
            k_max=k,
            spacing=self.spacing,
            window=self.window,
            threshold=self.threshold,
            use_imag=self.use_imag,
            fibre_boundary=self.fibre_boundary,
            n_samples=self.n_samples,
            anchor=tuple(self.seed_point),
        )

    def reference_eigenvalues(self):
        """Exact fibre spectrum of the built-in benchmarks, else ``None``."""
        if self.builtin:
            return bench.fibre_eigenvalues(self.eps, self.analysis_config().k_max - 1)
        return None

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


_TUPLE_FIELDS = {"grid": int, "seed_point": float, "theta": float, "pairs": int}


def _coerce(name: str, value):
    if name in _TUPLE_FIELDS:
        kind = _TUPLE_FIELDS[name]
        if isinstance(value, str):
            value = [v for v in value.replace(" ", "").split(",") if v]
        elif not isinstance(value, (list, tuple)):
            value = [value]
        try:
            if kind is int:
                out = []
                for v in value:
                    fv = float(v)
                    if fv != int(fv):
                        raise ValueError
                    out.append(int(fv))
                return tuple(out)
            return tuple(float(v) for v in value)
        except (TypeError, ValueError):
            raise ConfigError(f"invalid value for {name}: {value!r}") from None
    default = next(f for f in fields(RunConfig) if f.name == name).default
    if name == "method" and value is None:
        return None
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if isinstance(default, int):
            fv = float(value)
            if fv != int(fv):
                raise ValueError
            return int(fv)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {name}: {value!r}") from None


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the JSON file, then ``overrides`` (flags win)."""
    values: dict = {}
    names = {f.name for f in fields(RunConfig)}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    coerced = {k: _coerce(k, v) for k, v in values.items()}
    return RunConfig(**coerced)
