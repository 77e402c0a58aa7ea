"""Numerical certificates for the structural identities of quasi-free KMS states.

Each check returns a plain number (a residual or a smallest eigenvalue);
:mod:`kmsproc.report` turns those into pass/fail records.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SpectrumNotAboveOne, TimeOutOfRange
from .quasifree import (
    EuclideanWord,
    ThermalContext,
    S_kernel,
    merge_letters,
    multi_green_euclid,
)
from .spectral import SYMMETRY_TOL, MatrixModel, NonSymmetric, eigendecompose, is_real


def kms_reflection_check(ctx: ThermalContext, f, g, s_grid) -> float:
    r"""Max over the grid of :math:`|S(f,g;s) - S(g,f;\beta-s)|`."""
    if ctx.is_ground:
        raise ValueError("KMS reflection needs a finite beta")
    worst = 0.0
    for s in np.asarray(s_grid, dtype=float):
        r = abs(S_kernel(ctx, f, g, s) - S_kernel(ctx, g, f, ctx.beta - s))
        worst = max(worst, r)
    return worst


def real_symmetry_check(ctx: ThermalContext, f, g, s_grid) -> float:
    """Max of ``|S(f,g;s) - S(g,f;s)|`` for real ``f, g`` (C-real generator)."""
    if not (is_real(f) and is_real(g)):
        raise ValueError("symmetry of S holds on real vectors only")
    return max(abs(S_kernel(ctx, f, g, s) - S_kernel(ctx, g, f, s)) for s in np.asarray(s_grid, dtype=float))


@dataclass(frozen=True)
class GramResult:
    """Smallest eigenvalues of the reflection and stationary Gram matrices."""

    os_min: float
    os_norm: float
    stationary_min: float | None
    stationary_norm: float | None

    def margin(self) -> float:
        """Worst normalised eigenvalue (negative means a violation)."""
        vals = [self.os_min / max(self.os_norm, 1e-300)]
        if self.stationary_min is not None:
            vals.append(self.stationary_min / max(self.stationary_norm, 1e-300))
        return min(vals)


def _hermitian_min(M: np.ndarray):
    H = 0.5 * (M + M.conj().T)
    ev = np.linalg.eigvalsh(H)
    return float(ev[0]), float(np.max(np.abs(ev))) if ev.size else 0.0


def os_gram_check(ctx: ThermalContext, vectors: Sequence, times: Sequence[float]) -> GramResult:
    r"""Gram matrices :math:`S(f_k,f_l;s_k+s_l)` and :math:`S(f_k,f_l;|s_k-s_l|)`.

    The first is the reflection-positivity matrix (all ``s_k`` in
    ``[0, beta/2]``); the second, formed only when every vector is real,
    expresses positive definiteness of the periodic kernel.
    """
    n = len(vectors)
    times = [float(t) for t in times]
    if not ctx.is_ground:
        for t in times:
            if t < -1e-12 or t > ctx.beta / 2 + 1e-12:
                raise TimeOutOfRange(f"reflection Gram needs times in [0, beta/2], got {t}")
    M = np.empty((n, n), dtype=complex)
    for k in range(n):
        for l in range(n):
            M[k, l] = S_kernel(ctx, vectors[k], vectors[l], times[k] + times[l])
    os_min, os_norm = _hermitian_min(M)
    st_min = st_norm = None
    if all(is_real(v) for v in vectors):
        P = np.empty((n, n))
        for k in range(n):
            for l in range(n):
                d = abs(times[k] - times[l])
                if not ctx.is_ground:
                    d = float(np.mod(d, ctx.beta))
                P[k, l] = S_kernel(ctx, vectors[k], vectors[l], d).real
        st_min, st_norm = _hermitian_min(P)
    return GramResult(os_min, os_norm, st_min, st_norm)


def reflection_gram(ctx: ThermalContext, words: Sequence[EuclideanWord]) -> np.ndarray:
    r"""Matrix :math:`G^E(\underline W^{k*}, \underline W^{l})` over a family of words.

    Each word must carry times in ``[0, beta/2]``; the concatenated times
    lie in ``[-beta/2, beta/2]`` and are shifted by ``beta/2`` before
    evaluation.
    """
    half = 0.0 if ctx.is_ground else ctx.beta / 2
    for w in words:
        for t in w.times:
            if t < -1e-12 or (not ctx.is_ground and t > half + 1e-12):
                raise TimeOutOfRange(f"OS words need times in [0, beta/2], got {t}")
    n = len(words)
    M = np.empty((n, n), dtype=complex)
    for k in range(n):
        left = words[k].reflect()
        for l in range(n):
            joined = left + words[l]
            if ctx.is_ground and len(joined):
                joined = joined.shifted(-joined.times[0])
            else:
                joined = joined.shifted(half)
            M[k, l] = multi_green_euclid(ctx, joined)
    return M


def weyl_os_check(ctx: ThermalContext, words: Sequence[EuclideanWord]) -> tuple[float, float]:
    """Smallest eigenvalue and spectral norm of :func:`reflection_gram`."""
    return _hermitian_min(reflection_gram(ctx, words))


def shift_check(ctx: ThermalContext, word: EuclideanWord, shift: float) -> float:
    """``|G^E(word + shift) - G^E(word)|``; the shifted word must stay admissible."""
    return abs(multi_green_euclid(ctx, word.shifted(shift)) - multi_green_euclid(ctx, word))


def merge_check(ctx: ThermalContext, word: EuclideanWord, i: int) -> float:
    """Residual of fusing two letters that sit at the same time."""
    if abs(word.times[i] - word.times[i + 1]) > 0:
        raise ValueError("letters to merge must share a time")
    phase, merged = merge_letters(word, i)
    return abs(multi_green_euclid(ctx, word) - phase * multi_green_euclid(ctx, merged))


def eg4_cyclic_check(ctx: ThermalContext, word: EuclideanWord) -> float:
    r"""Weak KMS condition: cyclic move of the last letter.

    ``word`` holds letters ``W_0..W_n``; the first letter sits at time 0 and
    the rest at ``0 <= s_1 <= ... <= s_n <= beta``. The rotated word places
    ``W_n`` at 0 and ``W_0, .., W_{n-1}`` at
    ``beta - s_n, beta - s_n + s_1, ...``.
    """
    if ctx.is_ground:
        raise ValueError("the cyclic KMS condition needs a finite beta")
    if len(word) < 2:
        return 0.0
    beta = ctx.beta
    t = np.asarray(word.times) - word.times[0]
    sn = t[-1]
    if sn > beta * (1 + 1e-12):
        raise TimeOutOfRange("cyclic check needs s_n <= beta")
    lhs = multi_green_euclid(ctx, EuclideanWord(word.vectors, tuple(t)))
    rot_vecs = (word.vectors[-1],) + word.vectors[:-1]
    rot_times = (0.0,) + tuple(min(beta - sn + tk, beta) for tk in t[:-1])
    rhs = multi_green_euclid(ctx, EuclideanWord(rot_vecs, rot_times))
    return abs(lhs - rhs)


# --------------------------------------------------------------------------
# generator <-> thermal two-point operator
# --------------------------------------------------------------------------


def thermal_B(model: MatrixModel, beta: float) -> np.ndarray:
    """Dense thermal covariance ``(1 + e^{-beta h}) / (1 - e^{-beta h})``."""
    lam = model.eigenvalues
    if math.isinf(beta):
        b = np.ones_like(lam)
    else:
        b = 1.0 + 2.0 * np.exp(-beta * lam) / (-np.expm1(-beta * lam))
    Q = model.eigenvectors
    B = (Q * b) @ Q.T
    return 0.5 * (B + B.T)


def recover_generator(B_matrix, beta: float) -> MatrixModel:
    r"""Invert :func:`thermal_B`: :math:`h = -\beta^{-1}\log\frac{B-1}{B+1}`.

    Conditioning: the recovered eigenvalue carries an absolute error of about
    ``eps * exp(beta * lambda) / beta``, so the roundtrip is only accurate to
    1e-10 while ``beta * lambda`` stays below ~16.
    """
    B = np.array(B_matrix, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise NonSymmetric(f"B must be square, got shape {B.shape}")
    scale = max(1.0, float(np.max(np.abs(B))))
    if float(np.max(np.abs(B - B.T))) > SYMMETRY_TOL * scale:
        raise NonSymmetric("B is not symmetric")
    if not (beta > 0) or math.isinf(beta):
        raise ValueError("recovering h needs a finite positive beta")
    b, Q = np.linalg.eigh(0.5 * (B + B.T))
    if b[0] <= 1.0:
        raise SpectrumNotAboveOne(f"B must have spectrum strictly above 1, smallest eigenvalue {b[0]!r}")
    lam = -np.log1p(-2.0 / (b + 1.0)) / beta
    h = (Q * lam) @ Q.T
    return eigendecompose(0.5 * (h + h.T))
