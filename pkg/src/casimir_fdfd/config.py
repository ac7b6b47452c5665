"""Scene configuration files.

A configuration is a JSON object (see ``configs/`` for complete files)::

    {
      "schema_version": 1,
      "a": 1.0,
      "parameters": {"s": 1, "h": 1, "t": "a/4"},
      "materials": {"gold": {"kind": "preset", "name": "drude_gold"}},
      "cell": ["2*s + 5*a", "s + 2*h + 2*t"],
      "bodies": [
        {"id": "A", "material": "metal",
         "shape": {"type": "rectangle", "center": ["-(a+s)/2", 0], "widths": ["s", "s"]}},
        ...
      ],
      "target": "A",
      "dx": "a/32",
      "polarizations": "both",
      "mode": "force2d",
      "sweep": {"variable": "h", "values": [0.5, 1, 2]},
      "pfa": {"kind": "2d_squares", "s": "s", "a": "a"},
      "quadrature": {"rel_tol": 1e-3},
      "solver": {"backend": "direct"},
      "subtract": true
    }

Every number may be written as an arithmetic expression over ``a``,
``pi``, the parameters declared before it and the sweep variable, using
``+ - * / **`` and the functions ``sqrt exp log sin cos abs min max``.
Material names ``metal`` and ``vacuum`` are predefined.  PFA kinds are
``2d_squares`` and ``3d_blocks`` (fields ``s``, ``a``), ``slabs_2d`` (adds
``material``) and ``cylinder_plate`` (fields ``R``, ``a``).
"""

from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import dataclass

from .geometry import Body, Disk, Rectangle, Scene, Slab
from .materials import PERFECT_METAL, VACUUM, ConstantDielectric, Drude, drude_gold_preset
from .quadrature import QuadratureSpec

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "evaluate", "SCHEMA_VERSION", "MODES"]

SCHEMA_VERSION = 1
MODES = ("force2d", "force3d-zinv", "integrand-dump", "stress-map", "validate-1d")
_PRESETS = {"drude_gold": drude_gold_preset}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log, "sin": math.sin, "cos": math.cos, "abs": abs,
          "min": min, "max": max}


def evaluate(expr, names, where="expression"):
    """Value of a number or an arithmetic expression string."""
    if isinstance(expr, bool):
        raise ConfigError(f"{where}: expected a number, got {expr!r}")
    if isinstance(expr, (int, float)):
        return float(expr)
    if not isinstance(expr, str):
        raise ConfigError(f"{where}: expected a number or expression, got {expr!r}")
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"{where}: cannot parse {expr!r}: {exc.msg}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name):
            if node.id in names:
                return float(names[node.id])
            raise ConfigError(f"{where}: unknown name {node.id!r} in {expr!r}")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            return float(_FUNCS[node.func.id](*[ev(x) for x in node.args]))
        raise ConfigError(f"{where}: unsupported syntax in {expr!r}")

    try:
        return ev(tree)
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: cannot evaluate {expr!r}: {exc}") from None


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    if key not in obj:
        raise ConfigError(f"{where}: missing required field {key!r}")
    return obj[key]


def _material(spec, names, where):
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = _require(spec, "kind", where)
    if kind == "preset":
        name = _require(spec, "name", where)
        if name not in _PRESETS:
            raise ConfigError(f"{where}.name: unknown preset {name!r} (known: {sorted(_PRESETS)})")
        return _PRESETS[name]()
    if kind == "PerfectMetal":
        return PERFECT_METAL
    if kind == "Vacuum":
        return VACUUM
    try:
        if kind == "ConstantDielectric":
            return ConstantDielectric(evaluate(_require(spec, "eps", where), names, f"{where}.eps"))
        if kind == "Drude":
            return Drude(
                evaluate(_require(spec, "omega_p", where), names, f"{where}.omega_p"),
                evaluate(spec.get("gamma_p", 0.0), names, f"{where}.gamma_p"),
            )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}.kind: unknown material kind {kind!r}")


def _vector(v, names, where):
    if not isinstance(v, list):
        raise ConfigError(f"{where}: expected a list")
    return tuple(evaluate(x, names, f"{where}[{i}]") for i, x in enumerate(v))


def _shape(spec, names, where):
    kind = _require(spec, "type", where)
    if kind == "rectangle":
        return Rectangle(_vector(_require(spec, "center", where), names, f"{where}.center"),
                         _vector(_require(spec, "widths", where), names, f"{where}.widths"))
    if kind == "disk":
        return Disk(_vector(_require(spec, "center", where), names, f"{where}.center"),
                    evaluate(_require(spec, "radius", where), names, f"{where}.radius"))
    if kind == "slab":
        axis = _require(spec, "axis", where)
        if axis not in (0, 1, "x", "y"):
            raise ConfigError(f"{where}.axis: expected 0, 1, 'x' or 'y'")
        axis = {"x": 0, "y": 1}.get(axis, axis)
        return Slab(axis, evaluate(_require(spec, "position", where), names, f"{where}.position"),
                    evaluate(spec.get("thickness", 0.0), names, f"{where}.thickness"))
    raise ConfigError(f"{where}.type: unknown shape {kind!r}")


@dataclass
class RunConfig:
    """A parsed configuration; :meth:`scene` builds the scene at a sweep value."""

    raw: dict
    mode: str
    polarizations: tuple
    quad: QuadratureSpec
    solver: str
    solve_rel_tol: float
    subtract: bool
    sweep_variable: str | None
    sweep_values: tuple
    force_axis: int

    def names(self, sweep_value=None):
        raw = self.raw
        names = {"pi": math.pi}
        names["a"] = evaluate(raw.get("a", 1.0), names, "a")
        if names["a"] <= 0:
            raise ConfigError("a: must be > 0")
        params = raw.get("parameters", {})
        if not isinstance(params, dict):
            raise ConfigError("parameters: expected an object")
        for k, v in params.items():
            if k == self.sweep_variable and sweep_value is not None:
                names[k] = float(sweep_value)
            else:
                names[k] = evaluate(v, names, f"parameters.{k}")
        if self.sweep_variable is not None and sweep_value is not None:
            names[self.sweep_variable] = float(sweep_value)
        return names

    def scene(self, sweep_value=None) -> Scene:
        raw = self.raw
        names = self.names(sweep_value)
        materials = {"metal": PERFECT_METAL, "vacuum": VACUUM}
        for k, v in raw.get("materials", {}).items():
            materials[k] = _material(v, names, f"materials.{k}")
        bodies = []
        blist = _require(raw, "bodies", "config")
        if not isinstance(blist, list):
            raise ConfigError("bodies: expected a list")
        for i, b in enumerate(blist):
            where = f"bodies[{i}]"
            mname = _require(b, "material", where)
            if mname not in materials:
                raise ConfigError(f"{where}.material: unknown material {mname!r}")
            try:
                shape = _shape(_require(b, "shape", where), names, f"{where}.shape")
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"{where}.shape: {exc}") from None
            bodies.append(Body(shape, materials[mname], str(_require(b, "id", where)), bool(b.get("fixed", False))))
        cell = _vector(_require(raw, "cell", "config"), names, "cell")
        margin = raw.get("margin")
        margin = None if margin is None else evaluate(margin, names, "margin")
        origin = raw.get("origin")
        origin = None if origin is None else _vector(origin, names, "origin")
        try:
            return Scene(tuple(bodies), cell, target=raw.get("target"), a=names["a"], params=dict(names),
                         origin=origin, margin=margin, bloch_axis=raw.get("bloch_axis"))
        except KeyError as exc:
            raise ConfigError(f"scene: {exc.args[0]}") from None
        except ValueError as exc:
            raise ConfigError(f"scene: {exc}") from None

    def dx(self, sweep_value=None):
        names = self.names(sweep_value)
        dx = evaluate(_require(self.raw, "dx", "config"), names, "dx")
        if dx <= 0:
            raise ConfigError("dx: must be > 0")
        return dx

    def pfa(self, sweep_value=None):
        """PFA normalization (polarization average) or None."""
        from . import reference_models as rm

        spec = self.raw.get("pfa")
        if spec is None:
            return None
        names = self.names(sweep_value)
        kind = _require(spec, "kind", "pfa")
        a = evaluate(spec.get("a", "a"), names, "pfa.a")
        if kind == "cylinder_plate":
            return rm.pfa_cylinder_plate(evaluate(_require(spec, "R", "pfa"), names, "pfa.R"), a)
        s = evaluate(_require(spec, "s", "pfa"), names, "pfa.s")
        if kind == "2d_squares":
            return rm.pfa_2d_squares(s, a)
        if kind == "3d_blocks":
            return rm.pfa_3d_blocks(s, a)
        if kind == "slabs_2d":
            mname = _require(spec, "material", "pfa")
            mats = self.raw.get("materials", {})
            if mname == "metal":
                return rm.pfa_2d_squares(s, a)
            if mname not in mats:
                raise ConfigError(f"pfa.material: unknown material {mname!r}")
            return rm.pfa_slabs_2d(_material(mats[mname], names, f"materials.{mname}"), s, a)["mean"]
        raise ConfigError(f"pfa.kind: unknown PFA kind {kind!r}")

    @property
    def quadrature_mode(self):
        return "zinv3d" if self.mode == "force3d-zinv" else self.quad.mode


def parse_config(raw: dict) -> RunConfig:
    """Validate the top-level fields of a configuration object."""
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object")
    version = _require(raw, "schema_version", "config")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported version {version!r} (expected {SCHEMA_VERSION})")
    mode = raw.get("mode", "force2d")
    if mode not in MODES:
        raise ConfigError(f"mode: expected one of {MODES}, got {mode!r}")
    pols = raw.get("polarizations", "both")
    if pols == "both":
        pols = ("TM", "TE")
    elif pols in ("TM", "TE"):
        pols = (pols,)
    elif isinstance(pols, list) and pols and all(p in ("TM", "TE") for p in pols):
        pols = tuple(pols)
    else:
        raise ConfigError(f"polarizations: expected 'TM', 'TE', 'both' or a list, got {pols!r}")
    q = raw.get("quadrature", {})
    if not isinstance(q, dict):
        raise ConfigError("quadrature: expected an object")
    allowed = {"rel_tol", "abs_tol", "w_scale", "max_subdivisions", "kz_nodes", "mode"}
    for k in q:
        if k not in allowed:
            raise ConfigError(f"quadrature.{k}: unknown option")
    try:
        quad = QuadratureSpec(**{k: q[k] for k in q})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"quadrature: {exc}") from None
    s = raw.get("solver", {})
    backend = s.get("backend", "direct")
    if backend not in ("direct", "cg"):
        raise ConfigError(f"solver.backend: expected 'direct' or 'cg', got {backend!r}")
    sweep = raw.get("sweep")
    var, values = None, ()
    if sweep is not None:
        var = _require(sweep, "variable", "sweep")
        vals = _require(sweep, "values", "sweep")
        if not isinstance(vals, list):
            raise ConfigError("sweep.values: expected a list")
        values = tuple(evaluate(v, {"pi": math.pi}, f"sweep.values[{i}]") for i, v in enumerate(vals))
    axis = raw.get("force_axis", 0)
    axis = {"x": 0, "y": 1}.get(axis, axis)
    if axis not in (0, 1):
        raise ConfigError("force_axis: expected 0, 1, 'x' or 'y'")
    cfg = RunConfig(raw, mode, pols, quad, backend, float(s.get("rel_tol", 1e-8)), bool(raw.get("subtract", True)),
                    var, values, axis)
    # build once so that geometry errors surface at load time
    cfg.scene(values[0] if values else None)
    return cfg


def load_config(path) -> RunConfig:
    """Read and validate a JSON configuration file."""
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return parse_config(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
