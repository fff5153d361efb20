"""Closed-form field expressions evaluated on grid nodes.

Grammar: numbers, ``+ - * / **``, parentheses, ``sin cos exp min max``, the
constant ``pi`` and the variables ``x y z t``. Anything else is rejected before
evaluation, so config files cannot execute arbitrary code.
"""
from __future__ import annotations

import ast

import numpy as np

from .errors import ConfigError

_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "min": np.minimum,
    "max": np.maximum,
}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_VARS = ("x", "y", "z", "t")


def _eval(node, env):
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return np.pi
        if node.id in env:
            return env[node.id]
        raise ConfigError(f"unknown variable {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        val = _eval(node.operand, env)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        if node.keywords:
            raise ConfigError("keyword arguments are not allowed")
        args = [_eval(a, env) for a in node.args]
        fn = _FUNCS[node.func.id]
        if node.func.id in ("min", "max"):
            if len(args) < 2:
                raise ConfigError(f"{node.func.id} needs at least two arguments")
            out = args[0]
            for a in args[1:]:
                out = fn(out, a)
            return out
        if len(args) != 1:
            raise ConfigError(f"{node.func.id} takes one argument")
        return fn(args[0])
    raise ConfigError(f"unsupported expression element: {ast.dump(node)}")


def compile_expression(text: str):
    """Parse ``text`` once; returns ``f(x=..., y=..., z=..., t=...)``."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def evaluate(**env):
        with np.errstate(all="ignore"):
            return _eval(tree, {k: v for k, v in env.items() if k in _VARS})

    # reject bad names early
    evaluate(x=0.0, y=0.0, z=0.0, t=0.0)
    return evaluate


def evaluate_on_grid(text: str, grid, space_time: bool = True) -> np.ndarray:
    """Evaluate an expression at every node (and time level when ``space_time``)."""
    fn = compile_expression(text)
    coords = grid.mesh()
    env = {name: 0.0 for name in _VARS}
    for name, c in zip(("x", "y", "z"), coords):
        env[name] = c
    if space_time:
        shape = grid.space_time_shape
        t = grid.times.reshape((-1,) + (1,) * grid.dim)
        env = {k: (v[None] if isinstance(v, np.ndarray) else v) for k, v in env.items()}
        env["t"] = t
    else:
        shape = grid.shape
    with np.errstate(all="ignore"):
        out = np.broadcast_to(np.asarray(fn(**env), dtype=float), shape).copy()
    if not np.all(np.isfinite(out)):
        raise ConfigError(f"expression {text!r} is not finite on the grid")
    return out
