"""A tiny arithmetic language for user-defined coefficients.

Expressions use the state variables ``x`` (and ``y`` in two dimensions),
the functions ``sin``, ``cos``, ``exp`` and ``sqrt``, the constants ``pi``,
``e`` and ``eps``, numeric literals and ``+ - * / **``.  They are parsed with
:mod:`ast`, checked against that whitelist and compiled to numpy-vectorized
callables.

A system file is JSON::

    {
      "name": "my_system",
      "eps": 0.01,
      "drift": ["sin(y)", "(sin(x) - y)/eps"],
      "diffusion_factor": [["1", "0"], ["0", "1/sqrt(eps)"]],
      "domain": [[0, "2*pi", "periodic", 50], [-5, 5, "dirichlet", 51]]
    }

``diffusion`` (a symmetric matrix of expressions) may replace
``diffusion_factor``.
"""

from __future__ import annotations

import ast
import json
from pathlib import Path

import numpy as np

from .errors import ExpressionError
from .sde import DomainSpec, SdeSystem

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
CONSTANTS = {"pi": np.pi, "e": np.e}
VARIABLES = ("x", "y")

_ALLOWED = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
)


def compile_expression(text: str, dim: int = 2, eps: float | None = None):
    """Compile ``text`` into ``f(z) -> ndarray`` with ``z`` of shape ``(dim, N)``."""
    if isinstance(text, (int, float)):
        text = repr(float(text))
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError(f"expected a non-empty expression string, got {text!r}")
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    names = set(VARIABLES[:dim]) | set(FUNCTIONS) | set(CONSTANTS) | {"eps"}
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED):
            raise ExpressionError(f"{type(node).__name__} is not allowed in {text!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ExpressionError(f"only numeric literals are allowed in {text!r}")
        if isinstance(node, ast.Name) and node.id not in names:
            raise ExpressionError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                raise ExpressionError(f"unknown function in {text!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"functions take exactly one argument in {text!r}")
    uses_eps = any(isinstance(n, ast.Name) and n.id == "eps" for n in ast.walk(tree))
    if uses_eps and eps is None:
        raise ExpressionError(f"{text!r} uses eps but no eps value is set")
    code = compile(tree, "<expression>", "eval")
    env = {"__builtins__": {}, **FUNCTIONS, **CONSTANTS}
    if eps is not None:
        env["eps"] = float(eps)

    def f(z):
        z = np.asarray(z, dtype=float)
        local = dict(zip(VARIABLES[:dim], z))
        with np.errstate(all="ignore"):
            out = eval(code, env, local)  # noqa: S307 - whitelisted AST only
        return np.broadcast_to(np.asarray(out, dtype=float), z.shape[1:]).copy()

    f.source = text
    return f


def _stack(fns, shape):
    def call(z):
        z = np.asarray(z, dtype=float)
        vals = np.array([fn(z) for fn in fns])
        return vals.reshape(shape + z.shape[1:])

    return call


def _bound(v) -> float:
    if isinstance(v, (int, float)):
        return float(v)
    return float(compile_expression(str(v), dim=0)(np.zeros((0,))))


def system_from_spec(spec: dict, eps: float | None = None, grid=None, L: float | None = None) -> SdeSystem:
    """Build an :class:`SdeSystem` from a parsed system description."""
    try:
        drift = spec["drift"]
        dom_spec = spec["domain"]
    except KeyError as exc:
        raise ExpressionError(f"system description lacks {exc.args[0]!r}") from None
    if eps is None:
        eps = spec.get("eps")
    dim = len(drift)
    if dim not in (1, 2):
        raise ExpressionError("expression systems support one or two dimensions")
    if len(dom_spec) != dim:
        raise ExpressionError(f"domain has {len(dom_spec)} axes for a {dim}-dimensional drift")
    axes = []
    for i, entry in enumerate(dom_spec):
        if len(entry) != 4:
            raise ExpressionError("domain entries are [lower, upper, boundary, n]")
        lo, hi, bc, n = entry
        lo, hi = _bound(lo), _bound(hi)
        if L is not None and bc.lower() != "periodic":
            lo, hi = -float(L), float(L)
        if grid is not None:
            n = grid[i]
        axes.append((lo, hi, bc, int(n)))
    domain = DomainSpec.box(*axes)
    mu = _stack([compile_expression(t, dim, eps) for t in drift], (dim,))
    kwargs = {}
    if "diffusion_factor" in spec:
        rows = spec["diffusion_factor"]
        ell = len(rows[0])
        if len(rows) != dim or any(len(r) != ell for r in rows):
            raise ExpressionError("diffusion_factor must be a dim x noise_dim matrix")
        kwargs["diffusion_factor"] = _stack([compile_expression(t, dim, eps) for r in rows for t in r], (dim, ell))
        kwargs["noise_dim"] = ell
    elif "diffusion" in spec:
        rows = spec["diffusion"]
        if len(rows) != dim or any(len(r) != dim for r in rows):
            raise ExpressionError("diffusion must be a dim x dim matrix")
        kwargs["diffusion"] = _stack([compile_expression(t, dim, eps) for r in rows for t in r], (dim, dim))
    else:
        raise ExpressionError("system description needs diffusion_factor or diffusion")
    params = {"eps": eps} if eps is not None else {}
    return SdeSystem(dim, mu, domain, name=str(spec.get("name", "user_system")), params=params, **kwargs)


def load_system_file(path: str | Path, eps: float | None = None, grid=None, L: float | None = None) -> SdeSystem:
    try:
        spec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ExpressionError(f"cannot read system file {path}: {exc}") from None
    return system_from_spec(spec, eps, grid, L)
