"""Verification suite and its structured report.

Every check reduces to a single residual (worst case over random trials)
compared with a tolerance. Trial inputs come from a seeded generator, so a
report depends only on the model, the tolerances and the seed.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import checks as C
from . import process as P
from . import quasifree as Q
from .config import DEFAULT_TOLERANCES
from .errors import KMSError
from .models import random_vector

REFS = {
    "kms_reflection": "KMS boundary condition S(f,g;s) = S(g,f;beta-s)",
    "real_symmetry": "symmetry of S on real vectors",
    "os_gram": "reflection positivity of the two-point kernel",
    "weyl_os": "reflection positivity of Weyl Green functions",
    "char_functional": "Gaussian characteristic functional = Euclidean Green function",
    "eg1_shift": "time-shift invariance",
    "eg1_merge": "Weyl product at coinciding times",
    "eg4_cyclic": "cyclic form of the KMS condition",
    "markov": "two-sided Markov property on the circle",
    "image_sum": "periodisation R_beta = sum of shifted R_inf",
    "holder": "increment bound |S(h) - S(0)| <= 2 m(f) |h|",
    "quadrature_kernel": "integral representation of S on the strip",
    "fourier_series": "Fourier series of the periodic kernel",
    "roundtrip": "h -> B -> h inversion",
}


@dataclass
class CheckResult:
    check_name: str
    model_id: str
    beta: float
    residual: float
    tolerance: float
    passed: bool
    ref: str
    note: str = ""

    def as_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass
class VerificationReport:
    model_id: str
    beta: float
    model_hash: str
    results: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failed(self) -> list:
        return [r for r in self.results if not r.passed]

    def as_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "beta": self.beta,
            "model_hash": self.model_hash,
            "all_pass": self.all_passed,
            "checks": [r.as_dict() for r in self.results],
        }


# --------------------------------------------------------------------------
# JSON with 17 significant digits
# --------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """Serialise dicts/lists/scalars with every float written as ``%.17g``."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [pad + to_json(v, indent, _level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    return json.dumps(str(obj))


# --------------------------------------------------------------------------
# trial generators
# --------------------------------------------------------------------------


def _span(ctx) -> float:
    return 5.0 if ctx.is_ground else ctx.beta


def random_word(ctx, rng, n: int, span: float | None = None, real: bool = True) -> Q.EuclideanWord:
    span = _span(ctx) if span is None else span
    times = np.sort(rng.uniform(0.0, span, n))
    return Q.EuclideanWord(tuple(random_vector(ctx, rng, real=real) for _ in range(n)), tuple(float(t) for t in times))


def _markov_config(ctx, rng):
    if ctx.is_ground:
        r, u, s = np.sort(rng.uniform(0.0, 5.0, 3))
        v = s + rng.uniform(0.1, 2.0) if rng.random() < 0.5 else r - rng.uniform(0.1, 2.0)
        return r, s, u, v
    b = ctx.beta
    r = rng.uniform(0.0, b)
    arc = rng.uniform(0.05, 0.95) * b
    s = r + arc
    u = r + rng.uniform(0.01, 0.99) * arc
    v = s + rng.uniform(0.01, 0.99) * (b - arc)
    return r, s, u, v


# --------------------------------------------------------------------------
# individual checks
# --------------------------------------------------------------------------


def _kms(ctx, rng, trials):
    grid = np.linspace(0.0, ctx.beta, 64)
    return max(
        C.kms_reflection_check(ctx, random_vector(ctx, rng), random_vector(ctx, rng), grid) for _ in range(trials)
    )


def _symmetry(ctx, rng, trials):
    grid = np.linspace(0.0, _span(ctx), 16)
    return max(
        C.real_symmetry_check(ctx, random_vector(ctx, rng), random_vector(ctx, rng), grid) for _ in range(trials)
    )


def _os_gram(ctx, rng, trials):
    half = 2.5 if ctx.is_ground else ctx.beta / 2
    worst = math.inf
    for _ in range(trials):
        n = int(rng.integers(1, 9))
        real = bool(rng.random() < 0.5)
        vecs = [random_vector(ctx, rng, real=real) for _ in range(n)]
        res = C.os_gram_check(ctx, vecs, rng.uniform(0.0, half, n))
        worst = min(worst, res.margin())
    return max(0.0, -worst)


def _weyl_os(ctx, rng, trials):
    half = 2.5 if ctx.is_ground else ctx.beta / 2
    worst = math.inf
    for _ in range(trials):
        words = [Q.EuclideanWord((), ())]
        for _ in range(int(rng.integers(1, 5))):
            words.append(random_word(ctx, rng, int(rng.integers(1, 3)), span=half, real=False))
        lo, norm = C.weyl_os_check(ctx, words)
        worst = min(worst, lo / max(norm, 1e-300))
    return max(0.0, -worst)


def _char(ctx, rng, trials):
    worst = 0.0
    for _ in range(trials):
        w = random_word(ctx, rng, int(rng.integers(1, 6)))
        worst = max(worst, abs(P.char_functional(ctx, w) - Q.multi_green_euclid(ctx, w)))
    return worst


def _shift(ctx, rng, trials):
    worst = 0.0
    span = _span(ctx)
    for _ in range(trials):
        w = random_word(ctx, rng, int(rng.integers(1, 5)), span=span / 2, real=bool(rng.random() < 0.5))
        worst = max(worst, C.shift_check(ctx, w, rng.uniform(0.0, span / 2)))
    return worst


def _merge(ctx, rng, trials):
    worst = 0.0
    for _ in range(trials):
        w = random_word(ctx, rng, int(rng.integers(2, 5)), real=bool(rng.random() < 0.5))
        i = int(rng.integers(0, len(w) - 1))
        times = list(w.times)
        times[i + 1] = times[i]
        worst = max(worst, C.merge_check(ctx, Q.EuclideanWord(w.vectors, tuple(times)), i))
    return worst


def _cyclic(ctx, rng, trials):
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 5))
        w = random_word(ctx, rng, n, real=bool(rng.random() < 0.5))
        w = Q.EuclideanWord(w.vectors, (0.0,) + w.times[1:])
        worst = max(worst, C.eg4_cyclic_check(ctx, w))
    return worst


def _markov(ctx, rng, trials):
    worst = 0.0
    for _ in range(trials):
        r, s, u, v = _markov_config(ctx, rng)
        worst = max(worst, abs(P.markov_check(ctx, r, s, u, v, random_vector(ctx, rng), random_vector(ctx, rng))))
    return worst


def _image_sum(ctx, rng, trials, n_images=20):
    worst = -math.inf
    for d in np.linspace(0.0, ctx.beta, 33):
        worst = max(worst, P.image_sum_check(ctx, d, n_images) - P.image_sum_tail(ctx, d, n_images))
    return max(worst, 0.0)


def holder_h_grid(ctx, n: int = 12) -> np.ndarray:
    return np.geomspace(1e-3, 0.4 * _span(ctx), n)


def _holder(ctx, rng, trials):
    worst = math.inf
    for _ in range(trials):
        rep = P.holder_check(ctx, random_vector(ctx, rng), holder_h_grid(ctx))
        worst = min(worst, float(rep.slack.min()))
    return max(0.0, -worst)


def _quadrature(ctx, rng, trials):
    worst = 0.0
    for _ in range(trials):
        f, g = random_vector(ctx, rng, real=False), random_vector(ctx, rng, real=False)
        s = rng.uniform(0.1, 0.9) * ctx.beta
        worst = max(worst, abs(Q.quadrature_S(ctx, f, g, s) - Q.S_kernel(ctx, f, g, s)))
    return worst


def _fourier(ctx, rng, trials, n_modes=10_000):
    worst = 0.0
    s = np.linspace(0.0, ctx.beta, 17)
    for _ in range(trials):
        f = random_vector(ctx, rng)
        exact = np.array([Q.S_kernel(ctx, f, f, x).real for x in s])
        series = Q.fourier_series_S(ctx, f, s, n_modes)
        worst = max(worst, float(np.max(np.abs(series - exact)) / exact[0]))
    return worst


def _roundtrip(ctx, rng, trials):
    B = C.thermal_B(ctx.model, ctx.beta)
    back = C.recover_generator(B, ctx.beta)
    return float(np.max(np.abs(back.h - ctx.model.h)))


# name -> (function, trials, applicable(ctx))
SUITE = {
    "kms_reflection": (_kms, 10, lambda c: not c.is_ground),
    "real_symmetry": (_symmetry, 5, lambda c: True),
    "os_gram": (_os_gram, 20, lambda c: True),
    "weyl_os": (_weyl_os, 5, lambda c: True),
    "char_functional": (_char, 20, lambda c: True),
    "eg1_shift": (_shift, 20, lambda c: True),
    "eg1_merge": (_merge, 20, lambda c: True),
    "eg4_cyclic": (_cyclic, 20, lambda c: not c.is_ground),
    "markov": (_markov, 20, lambda c: True),
    "image_sum": (_image_sum, 1, lambda c: not c.is_ground and c.model.kind == "matrix"),
    "holder": (_holder, 5, lambda c: True),
    "quadrature_kernel": (_quadrature, 3, lambda c: not c.is_ground),
    # the series converges like beta*lambda/N; beyond ~200 it needs millions of modes
    "fourier_series": (_fourier, 2, lambda c: not c.is_ground and c.beta * c.eigenvalues.max() <= 200.0),
    "roundtrip": (
        _roundtrip,
        1,
        lambda c: not c.is_ground and c.model.kind == "matrix" and c.beta * c.eigenvalues.max() <= 16.0,
    ),
}


def run_suite(ctx, tolerances: dict | None = None, seed: int = 0, only=None) -> VerificationReport:
    """Run every applicable check; exceptions become failed records."""
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    rep = VerificationReport(ctx.model_id, ctx.beta, ctx.meta.get("hash", ""))
    for k, (name, (fn, trials, applies)) in enumerate(SUITE.items()):
        if only is not None and name not in only:
            continue
        if not applies(ctx):
            continue
        rng = np.random.default_rng([seed, k])
        note = ""
        try:
            residual = float(fn(ctx, rng, trials))
        except (KMSError, ValueError, ArithmeticError) as exc:
            residual, note = math.inf, f"{type(exc).__name__}: {exc}"
        ok = bool(residual <= tol[name])
        rep.results.append(CheckResult(name, ctx.model_id, ctx.beta, residual, tol[name], ok, REFS[name], note))
    return rep
