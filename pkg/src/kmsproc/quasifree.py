r"""Quasi-free thermal states and their Green functions.

A :class:`ThermalContext` pairs a one-particle model with an inverse
temperature. For finite :math:`\beta` the two-point form is
:math:`\mathbb B(f,g) = \langle f, B g\rangle` with

.. math:: B = \frac{1 + e^{-\beta h}}{1 - e^{-\beta h}},

and :math:`\beta = \infty` gives the ground state (:math:`B = 1`). All
kernels are evaluated mode by mode in the eigenbasis of :math:`h`.

The Euclidean two-point kernel splits as

.. math::
    S(f,g;s) = \tfrac12\langle f,(B+1)e^{-sh}g\rangle
             + \tfrac12\langle g,(B-1)e^{sh}f\rangle,

and for the exact thermal :math:`B` both halves are evaluated in the
overflow-free form :math:`e^{-sh}(1-e^{-\beta h})^{-1}` and
:math:`e^{-(\beta-s)h}(1-e^{-\beta h})^{-1}`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import EndpointSingularity, NonRealVector, TimeOutOfRange, UnorderedWord
from .spectral import inner, is_real

TIME_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ThermalContext:
    """A one-particle model at inverse temperature ``beta`` (``math.inf`` = ground state).

    ``b_override`` replaces the thermal function :math:`\\lambda \\mapsto B(\\lambda)`;
    it exists so that deliberately wrong states can be fed to the checks.
    """

    model: object
    beta: float
    b_override: Callable | None = None
    model_id: str = "model"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError(f"beta must be positive or inf, got {self.beta}")

    @property
    def is_ground(self) -> bool:
        return math.isinf(self.beta)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.model.eigenvalues

    @cached_property
    def _denom(self) -> np.ndarray:
        # 1 - exp(-beta * lambda)
        return -np.expm1(-self.beta * self.eigenvalues)

    @cached_property
    def B_values(self) -> np.ndarray:
        lam = self.eigenvalues
        if self.b_override is not None:
            return np.asarray(self.b_override(lam), dtype=float)
        if self.is_ground:
            return np.ones_like(lam)
        return 1.0 + 2.0 * np.exp(-self.beta * lam) / self._denom

    def plus_values(self, s: float) -> np.ndarray:
        r""":math:`\tfrac12(B(\lambda)+1)e^{-s\lambda}` per mode."""
        lam = self.eigenvalues
        if self.b_override is not None:
            return 0.5 * (self.B_values + 1.0) * np.exp(-s * lam)
        if self.is_ground:
            return np.exp(-s * lam)
        return np.exp(-s * lam) / self._denom

    def minus_values(self, s: float) -> np.ndarray:
        r""":math:`\tfrac12(B(\lambda)-1)e^{s\lambda}` per mode."""
        lam = self.eigenvalues
        if self.b_override is not None:
            with np.errstate(over="ignore", invalid="ignore"):
                out = 0.5 * (self.B_values - 1.0) * np.exp(s * lam)
            return np.where(self.B_values == 1.0, 0.0, out)
        if self.is_ground:
            return np.zeros_like(lam)
        return np.exp(-(self.beta - s) * lam) / self._denom

    def R_values(self, d: float) -> np.ndarray:
        """Covariance operator eigenvalues at lag ``d`` (``d`` in [0, beta])."""
        return self.plus_values(d) + self.minus_values(d)

    def condensate_term(self, f, g) -> float:
        c = getattr(self.model, "condensate", 0.0)
        if not c:
            return 0.0
        z = np.conj(self.model.zero_value(f)) * self.model.zero_value(g)
        return c * float(np.real(z))


def thermal_context(model, beta, **kw) -> ThermalContext:
    return ThermalContext(model=model, beta=float(beta), **kw)


# --------------------------------------------------------------------------
# one- and two-point functions
# --------------------------------------------------------------------------


def bilinear_B(ctx: ThermalContext, f, g) -> complex:
    r""":math:`\mathbb B(f,g) = \langle B^{1/2} f, B^{1/2} g\rangle`."""
    cf = ctx.model.coords(f)
    cg = ctx.model.coords(g)
    return complex(np.sum(np.conj(cf) * ctx.B_values * cg)) + ctx.condensate_term(f, g)


def state_eval(ctx: ThermalContext, f) -> float:
    r"""Quasi-free state on a Weyl generator, :math:`\omega(W_f) = e^{-\mathbb B(f,f)/4}`."""
    return math.exp(-0.25 * bilinear_B(ctx, f, f).real)


def F_kernel(ctx: ThermalContext, f, g, t: float) -> complex:
    r""":math:`F(f,g;t) = \mathrm{Re}\,\mathbb B(f,T_t g) + i\,\sigma(f,T_t g)`."""
    cf = ctx.model.coords(f)
    cg = ctx.model.coords(g)
    phase = np.exp(1j * t * ctx.eigenvalues)
    pair = np.conj(cf) * phase * cg
    re = float(np.sum(ctx.B_values * pair).real) + ctx.condensate_term(f, g)
    return complex(re, float(np.sum(pair).imag))


def green2_real(ctx: ThermalContext, f, g, t: float) -> complex:
    """Real-time two-point function :math:`\\omega(W_f\\,W_{T_t g})`."""
    bf = bilinear_B(ctx, f, f).real
    bg = bilinear_B(ctx, g, g).real
    return complex(np.exp(-0.25 * (bf + bg) - 0.5 * F_kernel(ctx, f, g, t)))


def _check_time(ctx: ThermalContext, s: float) -> float:
    if ctx.is_ground:
        if s < -TIME_TOL:
            raise TimeOutOfRange(f"Euclidean time {s} must be >= 0 in the ground state")
        return max(s, 0.0)
    tol = TIME_TOL * max(1.0, ctx.beta)
    if s < -tol or s > ctx.beta + tol:
        raise TimeOutOfRange(f"Euclidean time {s} outside [0, beta={ctx.beta}]")
    return min(max(s, 0.0), ctx.beta)


def _S_from_coords(ctx: ThermalContext, cf, cg, s: float) -> complex:
    plus = np.sum(np.conj(cf) * ctx.plus_values(s) * cg)
    minus = np.sum(np.conj(cg) * ctx.minus_values(s) * cf)
    return complex(plus + minus)


def S_kernel(ctx: ThermalContext, f, g, s: float) -> complex:
    r"""Euclidean two-point kernel :math:`S(f,g;s)`, :math:`s \in [0,\beta]`.

    For the ground state this is :math:`\langle f, e^{-sh} g\rangle`, ``s >= 0``.
    """
    s = _check_time(ctx, float(s))
    out = _S_from_coords(ctx, ctx.model.coords(f), ctx.model.coords(g), s)
    return out + ctx.condensate_term(f, g)


def S_periodic(ctx: ThermalContext, f, g, s: float) -> float:
    """``S`` for real vectors, extended to all ``s`` by beta-periodicity."""
    if not (is_real(f) and is_real(g)):
        raise NonRealVector("the periodic extension is only defined on real vectors")
    if ctx.is_ground:
        return S_kernel(ctx, f, g, abs(s)).real
    return S_kernel(ctx, f, g, float(np.mod(s, ctx.beta))).real


def green2_euclid(ctx: ThermalContext, f, g, s: float) -> complex:
    """Euclidean two-point function built from :func:`S_kernel`."""
    bf = bilinear_B(ctx, f, f).real
    bg = bilinear_B(ctx, g, g).real
    return complex(np.exp(-0.25 * (bf + bg) - 0.5 * S_kernel(ctx, f, g, s)))


# --------------------------------------------------------------------------
# multi-time Euclidean Green functions
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EuclideanWord:
    """Ordered Weyl letters ``W_{f_k}`` placed at Euclidean times ``s_k``."""

    vectors: tuple
    times: tuple

    def __post_init__(self):
        if len(self.vectors) != len(self.times):
            raise ValueError("a word needs one time per letter")

    @classmethod
    def of(cls, pairs: Sequence) -> "EuclideanWord":
        pairs = list(pairs)
        return cls(tuple(p[0] for p in pairs), tuple(float(p[1]) for p in pairs))

    def __len__(self):
        return len(self.vectors)

    def __add__(self, other: "EuclideanWord") -> "EuclideanWord":
        return EuclideanWord(self.vectors + other.vectors, self.times + other.times)

    def reflect(self) -> "EuclideanWord":
        """Adjoint word: letters reversed, ``W_f -> W_{-f}``, ``s -> -s``."""
        return EuclideanWord(
            tuple(-v for v in reversed(self.vectors)),
            tuple(-t for t in reversed(self.times)),
        )

    def shifted(self, s: float) -> "EuclideanWord":
        return EuclideanWord(self.vectors, tuple(t + s for t in self.times))

    def is_real(self) -> bool:
        return all(is_real(v) for v in self.vectors)


def validate_word(ctx: ThermalContext, word: EuclideanWord):
    t = word.times
    for a, b in zip(t, t[1:]):
        if b < a - TIME_TOL * max(1.0, abs(a)):
            raise UnorderedWord(f"times must be non-decreasing, got {a} then {b}")
    if t and not ctx.is_ground:
        span = t[-1] - t[0]
        if span > ctx.beta * (1 + TIME_TOL):
            raise TimeOutOfRange(f"word spans {span}, more than beta={ctx.beta}")


def multi_green_euclid(ctx: ThermalContext, word: EuclideanWord) -> complex:
    r"""Multi-time Euclidean Green function of a quasi-free state.

    .. math::
        G^E = \prod_k e^{-\mathbb B(f_k,f_k)/4}
              \prod_{j<l} e^{-S(f_j,f_l;\,s_l-s_j)/2}

    Pairs are taken in letter order, so equal times need no special
    treatment: at zero separation :math:`S(f,g;0) = \mathrm{Re}\,\mathbb B(f,g)
    + i\sigma(f,g)` supplies exactly the Weyl phase of the product.
    """
    validate_word(ctx, word)
    n = len(word)
    if n == 0:
        return 1.0 + 0.0j
    coords = [ctx.model.coords(v) for v in word.vectors]
    B = ctx.B_values
    log_g = 0.0 + 0.0j
    for k in range(n):
        b_kk = float(np.sum(np.abs(coords[k]) ** 2 * B)) + ctx.condensate_term(word.vectors[k], word.vectors[k])
        log_g -= 0.25 * b_kk
    for j in range(n):
        for l in range(j + 1, n):
            d = word.times[l] - word.times[j]
            d = max(d, 0.0) if ctx.is_ground else min(max(d, 0.0), ctx.beta)
            s_jl = _S_from_coords(ctx, coords[j], coords[l], d)
            s_jl += ctx.condensate_term(word.vectors[j], word.vectors[l])
            log_g -= 0.5 * s_jl
    return complex(np.exp(log_g))


def merge_letters(word: EuclideanWord, i: int):
    """Fuse letters ``i`` and ``i+1`` (equal times) into one Weyl generator.

    Returns ``(phase, merged_word)`` with ``W_f W_g = phase * W_{f+g}``.
    """
    f, g = word.vectors[i], word.vectors[i + 1]
    phase = np.exp(-0.5j * inner(f, g).imag)
    vecs = word.vectors[:i] + (f + g,) + word.vectors[i + 2:]
    times = word.times[:i] + word.times[i + 1:]
    return complex(phase), EuclideanWord(vecs, times)


# --------------------------------------------------------------------------
# Fourier and integral representations
# --------------------------------------------------------------------------


def fourier_coeff(n, p, beta):
    r"""Fourier coefficients of :math:`e^{-sp} + e^{-(\beta-s)p}` on the circle.

    .. math:: c_n(p) = \frac{2\beta p\,(1-e^{-\beta p})}{(p\beta)^2 + (2\pi n)^2}
    """
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    out = 2.0 * beta * p * (-np.expm1(-beta * p)) / ((p * beta) ** 2 + (2.0 * np.pi * n) ** 2)
    return out if out.shape else float(out)


def fourier_series_S(ctx: ThermalContext, f, s, n_modes: int):
    """Truncation ``|n| <= n_modes`` of the Fourier series of ``S(f,f;s)``."""
    if ctx.is_ground:
        raise ValueError("the Fourier representation needs a finite beta")
    if not is_real(f):
        raise NonRealVector("Fourier representation is stated for real vectors")
    c = ctx.model.coords(f)
    lam = ctx.eigenvalues
    w = np.abs(c) ** 2 / ctx._denom
    n = np.arange(n_modes + 1)
    a = fourier_coeff(n[:, None], lam[None, :], ctx.beta) @ w
    a[0] += ctx.condensate_term(f, f)
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    cos = np.cos(2.0 * np.pi * np.outer(s_arr, n[1:]) / ctx.beta)
    out = a[0] + 2.0 * cos @ a[1:]
    return out if np.ndim(s) else float(out[0])


def kernel_P(rho, s: float, beta: float):
    r"""Strip Poisson kernel
    :math:`\mathfrak P(\rho,s) = \frac{1}{2\beta}\sin\frac{\pi s}{\beta}
    \big(\cosh\frac{\pi\rho}{\beta} - \cos\frac{\pi s}{\beta}\big)^{-1}`."""
    rho = np.asarray(rho, dtype=float)
    x = np.pi * np.abs(rho) / beta
    c = np.cos(np.pi * s / beta)
    # cosh(x) - c = e^x (1 + e^{-2x} - 2c e^{-x}) / 2, kept finite for large x
    e = np.exp(-x)
    out = np.sin(np.pi * s / beta) * e / (beta * (1.0 + e * e - 2.0 * c * e))
    return out if out.shape else float(out)


def _F_batch(ctx: ThermalContext, cf, cg, rho: np.ndarray, cond: float) -> np.ndarray:
    phase = np.exp(1j * np.outer(rho, ctx.eigenvalues))
    pair = np.conj(cf) * cg
    re = (phase @ (ctx.B_values * pair)).real + cond
    im = (phase @ pair).imag
    return re + 1j * im


def quadrature_S(ctx: ThermalContext, f, g, s: float, nodes_per_panel: int = 24) -> complex:
    r"""Evaluate ``S(f,g;s)`` from real-time data through the strip kernel.

    .. math::
        S(f,g;s) = \int [\mathfrak P(\rho,s)F(f,g;\rho)
                        + \mathfrak P(\rho,\beta-s)F(g,f;-\rho)]\,d\rho

    The integral is cut where :math:`\mathfrak P` drops below 1e-14 of its
    peak and evaluated with Gauss--Legendre panels that resolve both the
    kernel peak (width ~ ``min(s, beta - s)``) and the fastest oscillation.
    """
    beta = ctx.beta
    if ctx.is_ground:
        raise ValueError("the strip representation needs a finite beta")
    if not (0.0 < s < beta):
        raise EndpointSingularity(f"quadrature path needs 0 < s < beta, got s={s}")
    cf = ctx.model.coords(f)
    cg = ctx.model.coords(g)
    cond_fg = ctx.condensate_term(f, g)
    cond_gf = ctx.condensate_term(g, f)
    gap = min(s, beta - s)
    # peak ~ sin/(1-cos); tail ~ 2 sin e^{-x}
    c = math.cos(math.pi * gap / beta)
    rho_max = beta / math.pi * (math.log(1e14) + math.log(2.0 / max(1.0 - c, 1e-300)) + 1.0)
    lam_max = float(np.max(ctx.eigenvalues))
    width = min(gap / 2.0, beta / 8.0, 2.0 * math.pi / max(lam_max, 1e-300))
    n_panels = int(math.ceil(2.0 * rho_max / width))
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    edges = np.linspace(-rho_max, rho_max, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    rho = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    total = 0.0 + 0.0j
    chunk = 4096
    for k in range(0, rho.size, chunk):
        r = rho[k:k + chunk]
        vals = kernel_P(r, s, beta) * _F_batch(ctx, cf, cg, r, cond_fg)
        vals = vals + kernel_P(r, beta - s, beta) * _F_batch(ctx, cg, cf, -r, cond_gf)
        total += np.sum(wts[k:k + chunk] * vals)
    return complex(total)
