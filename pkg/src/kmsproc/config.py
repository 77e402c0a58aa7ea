"""Sectioned key-value run configuration.

Sections: ``[model]`` (variant and parameters), ``[thermal]`` (beta and an
optional ``b_override``), ``[sampler]``, ``[checks]`` (tolerances and
trial counts) and ``[green]`` (word to evaluate).
"""
from __future__ import annotations

import ast
import configparser
import math
import operator
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import models
from .errors import ConfigParse, KMSError
from .quasifree import ThermalContext
from .spectral import read_matrix

DEFAULT_TOLERANCES = {
    "kms_reflection": 1e-10,
    "real_symmetry": 1e-10,
    "os_gram": 1e-10,
    "weyl_os": 1e-10,
    "char_functional": 1e-10,
    "eg1_shift": 1e-12,
    "eg1_merge": 1e-12,
    "eg4_cyclic": 1e-10,
    "markov": 1e-8,
    "image_sum": 1e-12,
    "holder": 0.0,
    "quadrature_kernel": 1e-6,
    "fourier_series": 1e-4,
    "roundtrip": 1e-10,
}

CORRUPTIONS = {
    # B(lambda) replaced by 1 + e^{-beta lambda}
    "corrupted": lambda beta: (lambda lam: 1.0 + np.exp(-beta * lam)),
}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_float(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity", "+inf"):
        return math.inf
    try:
        return float(t)
    except ValueError:
        raise ConfigParse(f"not a number: {text!r}") from None


def eval_time(text: str, beta: float) -> float:
    """Arithmetic on numbers and the token ``beta`` (e.g. ``beta/2``, ``0.25*beta``)."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "beta":
            return beta
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        raise ConfigParse(f"unsupported time expression {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError:
        raise ConfigParse(f"unparsable time expression {text!r}") from None


@dataclass
class RunConfig:
    path: str | None
    model: dict
    beta: float | None
    b_override: str | None
    sampler: dict
    tolerances: dict
    checks: dict
    green: dict
    base_dir: Path = field(default_factory=Path.cwd)

    def build(self) -> ThermalContext:
        try:
            return build_context(self)
        except ConfigParse:
            raise
        except (KMSError, ValueError, TypeError, OSError) as exc:
            raise ConfigParse(f"model build failed: {exc}") from exc

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "beta": self.beta,
            "b_override": self.b_override,
            "sampler": self.sampler,
            "tolerances": self.tolerances,
            "checks": self.checks,
            "green": self.green,
        }


def _section(cp, name) -> dict:
    return dict(cp[name]) if cp.has_section(name) else {}


def load_config(path=None, text: str | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        if text is None:
            if path is None:
                raise ConfigParse("no configuration given")
            with open(path) as fh:
                text = fh.read()
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigParse(f"malformed configuration: {exc}") from None
    except OSError as exc:
        raise ConfigParse(f"cannot read configuration: {exc}") from None
    if not cp.has_section("model") or "variant" not in cp["model"]:
        raise ConfigParse("configuration needs a [model] section with a 'variant' key")
    thermal = _section(cp, "thermal")
    beta = parse_float(thermal["beta"]) if "beta" in thermal else None
    if beta is not None and not beta > 0:
        raise ConfigParse(f"beta must be positive, got {beta}")
    override = thermal.get("b_override")
    if override is not None and override not in CORRUPTIONS:
        raise ConfigParse(f"unknown b_override {override!r}; known: {sorted(CORRUPTIONS)}")
    checks = _section(cp, "checks")
    tolerances = dict(DEFAULT_TOLERANCES)
    for k in list(checks):
        if k.startswith("tol_"):
            name = k[4:]
            if name not in tolerances:
                raise ConfigParse(f"unknown tolerance {name!r}")
            tolerances[name] = parse_float(checks.pop(k))
    return RunConfig(
        path=None if path is None else str(path),
        model=_section(cp, "model"),
        beta=beta,
        b_override=override,
        sampler=_section(cp, "sampler"),
        tolerances=tolerances,
        checks=checks,
        green=_section(cp, "green"),
        base_dir=Path(path).resolve().parent if path else Path.cwd(),
    )


def _get(d: dict, key: str, conv, default):
    if key not in d:
        return default
    try:
        return conv(d[key])
    except (ValueError, ConfigParse):
        raise ConfigParse(f"bad value for {key!r}: {d[key]!r}") from None


def build_context(cfg: RunConfig) -> ThermalContext:
    m = cfg.model
    variant = m["variant"].strip().lower()
    beta = cfg.beta
    if beta is None:
        beta = models.TWO_PI if variant == "rindler" else 1.0
    if variant == "crystal":
        coupling = None
        if "coupling_file" in m:
            coupling = read_matrix(cfg.base_dir / m["coupling_file"]).h
        ctx = models.build_crystal(
            L=_get(m, "l", int, 2),
            space_dim=_get(m, "space_dim", int, 1),
            coupling=coupling,
            kappa=_get(m, "kappa", float, 0.0),
            beta=beta,
        )
    elif variant == "minkowski":
        ctx = models.build_minkowski(
            space_dim=_get(m, "space_dim", int, 3),
            mass=_get(m, "mass", float, 1.0),
            beta=beta,
            process=m.get("process", "field"),
            n_nodes=_get(m, "nodes", int, 256),
        )
    elif variant == "bose":
        ctx = models.build_bose_gas(
            dispersion=m.get("dispersion", "standard"),
            space_dim=_get(m, "space_dim", int, 3),
            mu=_get(m, "mu", float, 0.5),
            mass=_get(m, "mass", float, 1.0),
            condensate=_get(m, "condensate", float, 0.0),
            beta=beta,
            n_nodes=_get(m, "nodes", int, 256),
        )
    elif variant == "rindler":
        ctx = models.build_rindler(
            mass=_get(m, "mass", float, 1.0),
            half_width=_get(m, "half_width", float, 5.0),
            grid=_get(m, "grid", int, 64),
            beta=beta,
            index=m.get("index", "raw"),
        )
    elif variant == "random":
        ctx = models.build_random(dim=_get(m, "dim", int, 4), seed=_get(m, "seed", int, 0), beta=beta)
    elif variant == "matrix":
        if "matrix_file" not in m:
            raise ConfigParse("variant 'matrix' needs a matrix_file")
        ctx = models.build_matrix(read_matrix(cfg.base_dir / m["matrix_file"]).h, beta=beta)
    else:
        raise ConfigParse(f"unknown model variant {variant!r}")
    if cfg.b_override:
        ctx = replace(ctx, b_override=CORRUPTIONS[cfg.b_override](beta), model_id=ctx.model_id + "-" + cfg.b_override)
    return ctx


# --------------------------------------------------------------------------
# test-vector descriptions for [green]
# --------------------------------------------------------------------------


def parse_vector(ctx: ThermalContext, text: str):
    """``e3``, ``-e0``, ``[0.1, 0.2, ...]`` (matrix) or ``gauss(amp, width)`` (quadrature)."""
    t = text.strip()
    sign = 1.0
    if t.startswith("-"):
        sign, t = -1.0, t[1:].strip()
    m = ctx.model
    try:
        if t.startswith("gauss(") and t.endswith(")"):
            if m.kind != "quadrature":
                raise ConfigParse("gauss(...) vectors need a quadrature model")
            amp, width = (float(x) for x in t[6:-1].split(","))
            return m.gaussian(sign * amp, width)
        if m.kind != "matrix":
            raise ConfigParse(f"quadrature models take gauss(amp, width) vectors, got {text!r}")
        if t.startswith("e"):
            i = int(t[1:])
            if not 0 <= i < m.dim:
                raise ConfigParse(f"basis index {i} outside 0..{m.dim - 1}")
            return sign * m.basis(i)
        if t.startswith("["):
            v = np.array(ast.literal_eval(t), dtype=float)
            if v.shape != (m.dim,):
                raise ConfigParse(f"vector must have {m.dim} entries")
            return sign * v
    except (ValueError, SyntaxError):
        raise ConfigParse(f"bad vector description {text!r}") from None
    raise ConfigParse(f"bad vector description {text!r}")
