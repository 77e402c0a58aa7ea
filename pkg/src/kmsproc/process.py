r"""The periodic Gaussian thermal process attached to a quasi-free KMS state.

For real test vectors the process :math:`\xi_s` on the circle of length
:math:`\beta` is centred Gaussian with

.. math::
    \mathbb E\,\langle\xi_{s_1},f\rangle\langle\xi_{s_2},g\rangle
        = \tfrac12\langle f, R_\beta(s_2-s_1)\,g\rangle,\qquad
    R_\beta(d) = \frac{e^{-dh} + e^{-(\beta-d)h}}{1-e^{-\beta h}},

and :math:`R_\infty(d) = e^{-|d|h}` for the ground state. Its characteristic
functional reproduces the Euclidean Green functions of the state.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateConditioning,
    EmptyEnsemble,
    NonRealVector,
    QuadratureModelUnsupported,
)
from .quasifree import EuclideanWord, S_kernel, ThermalContext, fourier_coeff, validate_word
from .rng import block_generator
from .spectral import is_real


def circle_lag(ctx: ThermalContext, s1: float, s2: float) -> float:
    """Lag ``(s2 - s1) mod beta``; ``|s2 - s1|`` for the ground state."""
    if ctx.is_ground:
        return abs(s2 - s1)
    return float(np.mod(s2 - s1, ctx.beta))


def covariance(ctx: ThermalContext, d: float) -> np.ndarray:
    r"""Covariance operator :math:`R_\beta(d)`.

    A dense matrix for matrix models; for quadrature models the multiplier
    on the momentum nodes.
    """
    d = circle_lag(ctx, 0.0, d)
    vals = ctx.R_values(d)
    if ctx.model.kind != "matrix":
        return vals
    Q = ctx.model.eigenvectors
    return (Q * vals) @ Q.T


def cov_pair(ctx: ThermalContext, f, g, s1: float, s2: float) -> float:
    r""":math:`\mathbb E\,\langle\xi_{s_1},f\rangle\langle\xi_{s_2},g\rangle`."""
    if not (is_real(f) and is_real(g)):
        raise NonRealVector("the thermal process is indexed by real vectors")
    return 0.5 * S_kernel(ctx, f, g, circle_lag(ctx, s1, s2)).real


def image_sum(ctx: ThermalContext, d: float, n_images: int) -> np.ndarray:
    r"""Eigenvalues of :math:`\sum_{|n|\le N} R_\infty(d + n\beta)`."""
    lam = ctx.eigenvalues
    out = np.zeros_like(lam)
    for n in range(-n_images, n_images + 1):
        out += np.exp(-abs(d + n * ctx.beta) * lam)
    return out


def image_sum_check(ctx: ThermalContext, d: float, n_images: int) -> float:
    """Operator-norm distance between the truncated image sum and ``R_beta(d)``."""
    if ctx.is_ground:
        raise ValueError("the image sum needs a finite beta")
    return float(np.max(np.abs(image_sum(ctx, d, n_images) - ctx.R_values(d))))


def image_sum_tail(ctx: ThermalContext, d: float, n_images: int) -> float:
    r"""Exact norm of the omitted images,
    :math:`\max_\lambda 2\cosh(d\lambda)e^{-(N+1)\beta\lambda}/(1-e^{-\beta\lambda})`."""
    lam = ctx.eigenvalues
    b = ctx.beta
    tail = (np.exp(-(d + (n_images + 1) * b) * lam) + np.exp(-((n_images + 1) * b - d) * lam)) / (
        -np.expm1(-b * lam)
    )
    return float(np.max(tail))


def gaussian_covariance(ctx: ThermalContext, word: EuclideanWord) -> np.ndarray:
    """Covariance matrix of ``(<xi_{s_k}, f_k>)_k`` for a real word."""
    n = len(word)
    C = np.empty((n, n))
    for k in range(n):
        for l in range(k, n):
            C[k, l] = C[l, k] = cov_pair(ctx, word.vectors[k], word.vectors[l], word.times[k], word.times[l])
    return C


def char_functional(ctx: ThermalContext, word: EuclideanWord) -> float:
    r""":math:`\mathbb E\exp(i\sum_k\langle\xi_{s_k},f_k\rangle)` in closed Gaussian form."""
    if not word.is_real():
        raise NonRealVector("characteristic functional needs real vectors")
    validate_word(ctx, word)
    if len(word) == 0:
        return 1.0
    C = gaussian_covariance(ctx, word)
    return math.exp(-0.5 * float(np.sum(C)))


# --------------------------------------------------------------------------
# Fourier synthesis sampler
# --------------------------------------------------------------------------


def mode_std(ctx: ThermalContext, n_modes: int) -> np.ndarray:
    r"""Standard deviations of the cosine/sine amplitudes, shape ``(dim, N+1)``.

    Each eigenmode carries :math:`x(s) = \sum_n a_n\cos(2\pi ns/\beta) + b_n\sin(2\pi ns/\beta)`
    with :math:`\mathrm{Var}\,a_n = \mathrm{Var}\,b_n = \tfrac12\gamma_n/(1-e^{-\beta\lambda})`,
    :math:`\gamma_0 = c_0`, :math:`\gamma_n = 2c_n`; this reproduces
    :math:`\tfrac12 R_\beta` exactly as ``N`` grows.
    """
    lam = ctx.eigenvalues
    n = np.arange(n_modes + 1)
    gamma = fourier_coeff(n[None, :], lam[:, None], ctx.beta)
    gamma[:, 1:] *= 2.0
    return np.sqrt(0.5 * gamma / ctx._denom[:, None])


def truncation_bias(ctx: ThermalContext, f, n_modes: int) -> float:
    """Exact lag-0 variance missing from the ``n_modes`` truncation."""
    c = ctx.model.coords(f)
    lam = ctx.eigenvalues
    n = np.arange(n_modes + 1)
    cn = fourier_coeff(n[None, :], lam[:, None], ctx.beta)
    kept = cn[:, 0] + 2.0 * cn[:, 1:].sum(axis=1)
    full = 1.0 + np.exp(-ctx.beta * lam)
    return float(0.5 * np.sum(np.abs(c) ** 2 * (full - kept) / ctx._denom))


def truncation_bound(ctx: ThermalContext, f, n_modes: int) -> float:
    r"""Upper bound :math:`\sum_i |c_i|^2\beta\lambda_i/(2\pi^2N)` on :func:`truncation_bias`."""
    c = ctx.model.coords(f)
    return float(np.sum(np.abs(c) ** 2 * ctx.beta * ctx.eigenvalues) / (2.0 * math.pi**2 * max(n_modes, 1)))


@dataclass
class PathEnsemble:
    """Sampled coordinate paths ``values[sample, time, coord]``."""

    times: np.ndarray
    coords: list
    values: np.ndarray
    seed: int
    n_modes: int
    beta: float
    model_id: str = "model"
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def grid_size(self) -> int:
        return self.times.size

    def metadata(self) -> dict:
        return {
            "seed": self.seed,
            "n_modes": self.n_modes,
            "grid_size": self.grid_size,
            "n_samples": self.n_samples,
            "beta": self.beta,
            "model_id": self.model_id,
            **self.meta,
        }

    def write_csv(self, path, comment: str | None = None):
        S, M, K = self.values.shape
        idx = np.indices((S, M, K)).reshape(3, -1)
        table = np.column_stack([idx[0], self.times[idx[1]], idx[2], self.values.reshape(-1)])
        with open(path, "w", newline="\n") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            fh.write("sample,s,coord,value\n")
            np.savetxt(fh, table, fmt=["%d", "%.17g", "%d", "%.17g"], delimiter=",", newline="\n")


def _block_size(dim: int, n_modes: int) -> int:
    return int(max(16, min(1024, 4_000_000 // max(1, dim * (n_modes + 1)))))


def sample_paths(
    ctx: ThermalContext,
    grid_size: int,
    coords: Sequence,
    n_samples: int,
    n_modes: int,
    seed: int,
    workers: int = 1,
) -> PathEnsemble:
    """Draw paths of ``<xi_s, f_j>`` on ``grid_size`` equally spaced circle points.

    Deterministic in ``(seed, grid_size, n_modes, model)``: the random
    amplitudes are generated block by block from :func:`kmsproc.rng.block_generator`
    and ``workers`` only changes how blocks are scheduled.
    """
    if ctx.model.kind != "matrix":
        raise QuadratureModelUnsupported("path sampling needs a finite-dimensional model")
    if ctx.is_ground:
        raise ValueError("path sampling on the circle needs a finite beta")
    if grid_size < 1 or n_modes < 0 or n_samples < 0:
        raise ValueError("grid_size >= 1, n_modes >= 0 and n_samples >= 0 required")
    for f in coords:
        if not is_real(f):
            raise NonRealVector("sampled coordinates must be real vectors")
    beta = ctx.beta
    times = beta * np.arange(grid_size) / grid_size
    dim = ctx.model.dim
    P = np.array([np.real(ctx.model.coords(f)) for f in coords]).reshape(len(coords), dim)
    std = mode_std(ctx, n_modes)
    n = np.arange(n_modes + 1)
    phase = 2.0 * np.pi * np.outer(n, times) / beta
    cos, sin = np.cos(phase), np.sin(phase)
    block = _block_size(dim, n_modes)
    n_blocks = -(-n_samples // block)
    values = np.empty((n_samples, grid_size, len(coords)))

    def run(b: int):
        lo = b * block
        hi = min(n_samples, lo + block)
        z = block_generator(seed, b).standard_normal((hi - lo, dim, n_modes + 1, 2))
        a = np.einsum("ji,bin->bjn", P, z[..., 0] * std)
        c = np.einsum("ji,bin->bjn", P, z[..., 1] * std)
        values[lo:hi] = np.transpose(a @ cos + c @ sin, (0, 2, 1))

    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(n_blocks)))
    else:
        for b in range(n_blocks):
            run(b)
    return PathEnsemble(
        times=times,
        coords=list(coords),
        values=values,
        seed=seed,
        n_modes=n_modes,
        beta=beta,
        model_id=ctx.model_id,
    )


def empirical_covariance(ensemble: PathEnsemble, j: int, k: int, lag: int, n_groups: int = 50):
    """Estimate ``E <xi_t, f_j><xi_{t+lag}, f_k>`` with a grouped jackknife error.

    ``lag`` counts grid steps around the circle. Every sample contributes
    the average over all base times, which is unbiased by stationarity.
    """
    if ensemble.n_samples == 0:
        raise EmptyEnsemble("cannot estimate a covariance from zero samples")
    x = ensemble.values[:, :, j]
    y = np.roll(ensemble.values[:, :, k], -lag, axis=1)
    per_sample = np.mean(x * y, axis=1)
    est = float(np.mean(per_sample))
    g = min(n_groups, per_sample.size)
    if g < 2:
        return est, float("nan")
    groups = np.array_split(per_sample, g)
    sums = np.array([grp.sum() for grp in groups])
    counts = np.array([grp.size for grp in groups])
    loo = (sums.sum() - sums) / (counts.sum() - counts)
    se = math.sqrt((g - 1) / g * float(np.sum((loo - loo.mean()) ** 2)))
    return est, se


# --------------------------------------------------------------------------
# Markov property
# --------------------------------------------------------------------------


def _logsinh(z: np.ndarray) -> np.ndarray:
    # z > 0
    return z + np.log(-np.expm1(-2.0 * z)) - math.log(2.0)


def _R_diff(ctx: ThermalContext, a: float, b: float) -> np.ndarray:
    """Per-mode ``R(a) - R(b)`` for lags ``a, b`` without cancellation."""
    lam = ctx.eigenvalues
    if a == b:
        return np.zeros_like(lam)
    if ctx.is_ground:
        lo, hi, sign = (a, b, 1.0) if a < b else (b, a, -1.0)
        return sign * np.exp(-lo * lam) * (-np.expm1(-(hi - lo) * lam))
    beta = ctx.beta
    x = 0.5 * lam * (beta - a - b)
    y = 0.5 * lam * (b - a)
    sign = np.sign(x) * np.sign(y)
    with np.errstate(divide="ignore"):
        logmag = (
            math.log(4.0)
            - 0.5 * beta * lam
            + _logsinh(np.abs(x))
            + _logsinh(np.abs(y))
            - np.log(ctx._denom)
        )
    return np.where(sign == 0, 0.0, sign * np.exp(logmag))


def _lag(ctx, x, y):
    if ctx.is_ground:
        return abs(x - y)
    d = float(np.mod(y - x, ctx.beta))
    return min(d, ctx.beta - d)


def mode_conditional_cov(ctx: ThermalContext, r: float, s: float, u: float, v: float) -> np.ndarray:
    r"""Per-mode :math:`\mathrm{Cov}(x_u, x_v \mid x_r, x_s)` of the unit-weight mode processes.

    The conditioning pair is rotated to :math:`m = (x_r+x_s)/2`,
    :math:`q = (x_s-x_r)/2` and the probes are centred on :math:`m`;
    every covariance then becomes a difference of :math:`R` values, which
    :func:`_R_diff` evaluates in product form. This keeps the Schur
    complement accurate even for nearly constant (small ``beta * lambda``)
    modes.
    """
    if ctx.b_override is not None:
        raise ValueError("stable conditioning assumes the exact thermal kernel")
    L = lambda x, y: _lag(ctx, x, y)  # noqa: E731
    d = L(r, s)
    var_q = 0.5 * _R_diff(ctx, 0.0, d)
    if d == 0.0 or np.any(var_q <= 0):
        raise DegenerateConditioning(f"conditioning times r={r}, s={s} give a singular covariance")
    var_m = 0.5 * (ctx.R_values(0.0) + ctx.R_values(d))
    D = lambda a, b: _R_diff(ctx, a, b)  # noqa: E731
    uv, ur, us, vr, vs = L(u, v), L(u, r), L(u, s), L(v, r), L(v, s)
    c_uv = 0.5 * (D(uv, ur) + D(uv, vs) + D(0.0, us) + D(d, vr))
    c_um = 0.5 * (D(ur, 0.0) + D(us, d))
    c_vm = 0.5 * (D(vr, 0.0) + D(vs, d))
    c_uq = 0.5 * D(us, ur)
    c_vq = 0.5 * D(vs, vr)
    return c_uv - c_um * c_vm / var_m - c_uq * c_vq / var_q


def markov_check(ctx: ThermalContext, r: float, s: float, u: float, v: float, f, g=None) -> float:
    r"""Conditional covariance of :math:`\langle\xi_u,f\rangle, \langle\xi_v,g\rangle`
    given the full process at times ``r`` and ``s``.

    The two-sided Markov property on the circle makes this vanish whenever
    ``u`` and ``v`` lie in different arcs cut out by ``r`` and ``s``. A
    condensate contributes a time-constant mode that is fixed by the
    conditioning and therefore adds nothing.
    """
    g = f if g is None else g
    if not (is_real(f) and is_real(g)):
        raise NonRealVector("Markov check needs real vectors")
    cf = np.real(ctx.model.coords(f))
    cg = np.real(ctx.model.coords(g))
    return float(0.5 * np.sum(cf * cg * mode_conditional_cov(ctx, r, s, u, v)))


def markov_check_dense(ctx: ThermalContext, r: float, s: float, u: float, v: float, f, g=None) -> float:
    """Same quantity as :func:`markov_check` by a dense Schur complement.

    Conditions on every basis coordinate of ``xi_r`` and ``xi_s`` (matrix
    models only); numerically fragile when some ``beta * lambda`` is small.
    """
    if ctx.model.kind != "matrix":
        raise QuadratureModelUnsupported("dense conditioning needs a matrix model")
    g = f if g is None else g
    dim = ctx.model.dim
    basis = [ctx.model.basis(i) for i in range(dim)]
    items = [(f, u), (g, v)] + [(e, r) for e in basis] + [(e, s) for e in basis]
    n = len(items)
    C = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            C[a, b] = C[b, a] = cov_pair(ctx, items[a][0], items[b][0], items[a][1], items[b][1])
    pp, pc, cc = C[:2, :2], C[:2, 2:], C[2:, 2:]
    try:
        sol = np.linalg.solve(cc, pc.T)
    except np.linalg.LinAlgError:
        raise DegenerateConditioning("conditioning covariance is singular") from None
    return float((pp - pc @ sol)[0, 1])


def arc_contains(beta: float, r: float, s: float, x: float) -> bool:
    """True when ``x`` lies strictly inside the arc running forward from ``r`` to ``s``."""
    a = np.mod(x - r, beta)
    b = np.mod(s - r, beta)
    return bool(0.0 < a < b)


# --------------------------------------------------------------------------
# Hölder continuity
# --------------------------------------------------------------------------


@dataclass
class HolderReport:
    h: np.ndarray
    increment: np.ndarray  # |S(f,f;h) - S(f,f;0)|
    bound: np.ndarray  # 2 m(f) |h|
    moment: float
    sampled: list = field(default_factory=list)  # (h, estimate, se, exact)

    @property
    def slack(self) -> np.ndarray:
        return self.bound - self.increment

    @property
    def ok(self) -> bool:
        return bool(np.all(self.slack >= 0))


def first_moment(ctx: ThermalContext, f) -> float:
    r""":math:`m(f) = \sum_i \lambda_i |c_i|^2 / (1 - e^{-\beta\lambda_i})`."""
    c = ctx.model.coords(f)
    denom = 1.0 if ctx.is_ground else ctx._denom
    return float(np.sum(ctx.eigenvalues * np.abs(c) ** 2 / denom))


def holder_check(ctx: ThermalContext, f, h_grid, ensemble: PathEnsemble | None = None, coord: int = 0) -> HolderReport:
    """Increment bound ``|S(f,f;h) - S(f,f;0)| <= 2 m(f) |h|`` on a grid of ``h``.

    With an ensemble, also estimates ``E (xi_{s+h} - xi_s)^2`` at every grid
    lag and pairs it with the exact ``S(f,f;0) - S(f,f;h)``.
    """
    m = first_moment(ctx, f)
    h = np.asarray(h_grid, dtype=float)
    s0 = S_kernel(ctx, f, f, 0.0).real
    inc = np.array([abs(S_kernel(ctx, f, f, abs(x)).real - s0) for x in h])
    rep = HolderReport(h=h, increment=inc, bound=2.0 * m * np.abs(h), moment=m)
    if ensemble is not None and ensemble.n_samples:
        x = ensemble.values[:, :, coord]
        M = ensemble.grid_size
        for lag in range(1, M // 2 + 1):
            diff2 = np.mean((np.roll(x, -lag, axis=1) - x) ** 2, axis=1)
            est = float(diff2.mean())
            se = float(diff2.std(ddof=1) / math.sqrt(diff2.size)) if diff2.size > 1 else float("nan")
            hh = ensemble.times[lag]
            exact = s0 - S_kernel(ctx, f, f, hh).real
            rep.sampled.append((float(hh), est, se, float(exact)))
    return rep
