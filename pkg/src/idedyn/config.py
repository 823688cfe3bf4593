"""TOML run configuration and the whitelisted parameter-expression language.

Parameter sequences are written as closed-form expressions in ``t``, ``x``
(and ``y`` for custom kernels), e.g. ``"3 - sin(t*x/5)"``. Only arithmetic,
numeric literals and the functions in :data:`FUNCTIONS` are accepted.
"""
from __future__ import annotations

import ast
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .model import (BevertonHolt, CustomKernel, Habitat, IdeModel, LaplaceKernel, Ricker,
                    kernel_mass, ricker_rates)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

FUNCTIONS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh,
}
CONSTANTS = {"pi": np.pi, "e": np.e}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod)


class ConfigError(InputError):
    """Invalid configuration; ``where`` names the offending field."""

    def __init__(self, message, where=None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


def compile_expression(text, variables=("t", "x"), where=None):
    """Compile ``text`` into a vectorized function of ``variables``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    if not isinstance(text, str):
        raise ConfigError(f"expected an expression string, got {text!r}", where)
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse {text!r}: {exc.msg}", where) from None
    for node in ast.walk(tree):
        if isinstance(node, (ast.Expression, ast.Load, ast.UnaryOp, ast.UAdd, ast.USub)):
            continue
        if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
            continue
        if isinstance(node, _BINOPS):
            continue
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            continue
        if isinstance(node, ast.Name) and (node.id in variables or node.id in CONSTANTS
                                           or node.id in FUNCTIONS):
            continue
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in FUNCTIONS and not node.keywords and len(node.args) == 1:
            continue
        raise ConfigError(f"disallowed element {ast.dump(node)[:40]} in {text!r}", where)
    code = compile(tree, f"<{where or 'expr'}>", "eval")
    env = {"__builtins__": {}, **FUNCTIONS, **CONSTANTS}

    def fn(*args):
        local = dict(zip(variables, args))
        out = eval(code, env, local)
        shape = np.broadcast_shapes(*(np.shape(a) for a in args)) if args else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape) if shape else float(out)

    fn.source = text
    return fn


DEFAULT_CONFIG = """\
seed = 0

[model]
habitat = [-3.0, 3.0]

[model.kernel]
type = "laplace"
dispersal = "2 + sin(t/3)"

[model.growth]
type = "beverton-holt"
alpha = 0.5
gamma = "3 - sin(t*x/5)"

[discretization]
degree = 1
n = 64
n_list = [16, 32, 64, 128, 256, 512, 1024]
n_ref = 4096
grid = "points"
quadrature = "trapezoid"

[experiment]
tau = -15
T = 0
t = 0
depth = 15
initial = "1.0"
alphas = [0.5, 1.0]
trials = 100
"""


@dataclass
class RunConfig:
    """Parsed configuration: the raw TOML tables plus the model built from them."""

    raw: dict
    model: IdeModel
    discretization: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    seed: int = 0
    text: str = ""

    def with_alpha(self, alpha) -> "RunConfig":
        raw = _deep_copy(self.raw)
        raw["model"]["growth"]["alpha"] = float(alpha)
        return build_config(raw, self.text)


def _deep_copy(d):
    return {k: _deep_copy(v) if isinstance(v, dict) else v for k, v in d.items()}


def _table(raw, key, where):
    val = raw.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError("expected a table", where)
    return val


def _build_model(m) -> IdeModel:
    hab = m.get("habitat")
    if not (isinstance(hab, list) and len(hab) == 2):
        raise ConfigError("habitat must be a pair [a, b]", "model.habitat")
    try:
        habitat = Habitat(float(hab[0]), float(hab[1]))
    except (InputError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "model.habitat") from None

    k = _table(m, "kernel", "model.kernel")
    ktype = k.get("type", "laplace")
    if ktype == "laplace":
        disp = compile_expression(k.get("dispersal", 2.0), ("t",), "model.kernel.dispersal")
        kernel = LaplaceKernel(disp)
    elif ktype == "custom":
        if "expression" not in k:
            raise ConfigError("custom kernel needs 'expression'", "model.kernel")
        ev = compile_expression(k["expression"], ("t", "x", "y"), "model.kernel.expression")
        kernel = CustomKernel(ev, k.get("k0"))
    else:
        raise ConfigError(f"unknown kernel type {ktype!r}", "model.kernel.type")

    source = None
    if "inhomogeneity" in m:
        src = compile_expression(m["inhomogeneity"], ("x",), "model.inhomogeneity")
        source = src

    lo, hi = m.get("time_domain", [None, None])
    time_domain = (None if lo in (None, "-inf") else int(lo),
                   None if hi in (None, "inf") else int(hi))

    g = _table(m, "growth", "model.growth")
    gtype = g.get("type", "beverton-holt")
    if gtype == "beverton-holt":
        if "alpha" not in g:
            raise ConfigError("missing 'alpha'", "model.growth")
        try:
            growth = BevertonHolt(float(g["alpha"]),
                                  compile_expression(g.get("gamma", 1.0), ("t", "x"),
                                                     "model.growth.gamma"))
        except InputError as exc:
            raise ConfigError(str(exc), "model.growth.alpha") from None
    elif gtype == "ricker":
        limit = g.get("limit")
        if "gamma" in g:
            rates = compile_expression(g["gamma"], ("t",), "model.growth.gamma")
        elif limit is not None:
            probe = IdeModel(habitat, kernel, Ricker(lambda t: limit, limit), source)
            rates = ricker_rates(float(limit), kernel_mass(probe), float(g.get("c", 0.5)))
        else:
            raise ConfigError("ricker growth needs 'gamma' or 'limit'", "model.growth")
        growth = Ricker(rates, None if limit is None else float(limit))
    else:
        raise ConfigError(f"unknown growth type {gtype!r}", "model.growth.type")
    return IdeModel(habitat, kernel, growth, source, time_domain)


def build_config(raw: dict, text: str = "") -> RunConfig:
    model = _build_model(_table(raw, "model", "model"))
    disc = dict(_table(raw, "discretization", "discretization"))
    if disc.get("degree", 1) not in (1, 2, 3):
        raise ConfigError("degree must be 1, 2 or 3", "discretization.degree")
    if disc.get("quadrature", "trapezoid") != "trapezoid":
        raise ConfigError("only 'trapezoid' quadrature is available",
                          "discretization.quadrature")
    if disc.get("grid", "points") not in ("points", "intervals"):
        raise ConfigError("grid must be 'points' or 'intervals'", "discretization.grid")
    exp = dict(_table(raw, "experiment", "experiment"))
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer", "seed")
    return RunConfig(raw, model, disc, exp, seed, text)


def parse_config(text: str) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from None
    return build_config(raw, text)


def load_config(path=None) -> RunConfig:
    if path is None:
        return parse_config(DEFAULT_CONFIG)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from None
    return parse_config(text)
