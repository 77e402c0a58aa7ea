r"""Catalog of example systems compiled into :class:`ThermalContext` objects.

* relativistic free field, :math:`\omega(p) = \sqrt{p^2+m^2}` (quadrature);
* ideal Bose gas, :math:`\mathcal E(p) = p^2+\mu` or :math:`\sqrt{p^2+m^2}`,
  optionally with a condensate (quadrature);
* harmonic crystal on a periodic lattice, :math:`h = \tfrac12 + A` (matrix);
* boost generator on a wedge, :math:`h = A^{1/2}`,
  :math:`A = -\partial_x^2 + m^2e^{2x}` on a Dirichlet box (matrix).
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import GaplessDispersion, NonPSDCoupling
from .process import cov_pair, sample_paths
from .quasifree import ThermalContext, thermal_context
from .spectral import MatrixModel, eigendecompose, model_from_spectrum, quadrature_model

TWO_PI = 2.0 * math.pi


def model_hash(params: dict) -> str:
    """Content digest of a parameter dictionary (stable key order)."""
    blob = json.dumps(params, sort_keys=True, default=repr, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _context(model, beta, params: dict, model_id: str, **meta) -> ThermalContext:
    digest = model_hash({**params, "beta": repr(float(beta))})
    return thermal_context(model, beta, model_id=model_id, meta={"hash": digest, "params": params, **meta})


# --------------------------------------------------------------------------
# continuum models
# --------------------------------------------------------------------------


def build_minkowski(
    space_dim: int = 3,
    mass: float = 1.0,
    beta: float = 1.0,
    process: str = "field",
    n_nodes: int = 256,
    width_max: float = 2.0,
) -> ThermalContext:
    r"""Free scalar field of mass ``m`` on :math:`\mathbb R^{1+d}`.

    ``process="field"`` weights the covariance density by :math:`\omega^{-1}`,
    ``"momentum"`` by :math:`\omega`; both enter through the index power of
    the Gaussian test functions.
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    power = {"field": -0.5, "momentum": 0.5}.get(process)
    if power is None:
        raise ValueError(f"process must be 'field' or 'momentum', got {process!r}")
    model = quadrature_model(
        space_dim,
        lambda p: np.sqrt(p**2 + mass**2),
        n_nodes=n_nodes,
        width_max=width_max,
        index_power=power,
    )
    params = dict(variant="minkowski", space_dim=space_dim, mass=mass, process=process, n_nodes=n_nodes)
    return _context(model, beta, params, f"minkowski-d{space_dim}-{process}")


def build_bose_gas(
    dispersion: str = "standard",
    space_dim: int = 3,
    mu: float = 0.5,
    mass: float = 1.0,
    condensate: float = 0.0,
    beta: float = 1.0,
    n_nodes: int = 256,
    width_max: float = 2.0,
) -> ThermalContext:
    r"""Ideal Bose gas with :math:`\mathcal E = p^2+\mu` or :math:`\sqrt{p^2+m^2}`.

    A gapless standard gas (:math:`\mu = 0`) is accepted only with a
    condensate in :math:`d\ge 3`, where the zero mode is integrable; the
    condensate adds the lag-independent term :math:`c\,\mathrm{Re}\,\overline{\hat f(0)}\hat g(0)`.
    """
    if condensate < 0:
        raise ValueError("condensate density must be non-negative")
    if dispersion == "standard":
        if mu < 0:
            raise GaplessDispersion(f"chemical potential term must be >= 0, got {mu}")
        if mu == 0 and (condensate <= 0 or space_dim < 3):
            raise GaplessDispersion("p^2 dispersion is gapless; needs a condensate and d >= 3")
        disp = lambda p: p**2 + mu  # noqa: E731
    elif dispersion == "semirelativistic":
        if not mass > 0:
            raise GaplessDispersion("semirelativistic dispersion needs m > 0")
        disp = lambda p: np.sqrt(p**2 + mass**2)  # noqa: E731
    else:
        raise ValueError(f"unknown dispersion {dispersion!r}")
    model = quadrature_model(space_dim, disp, n_nodes=n_nodes, width_max=width_max, condensate=condensate)
    params = dict(
        variant="bose",
        dispersion=dispersion,
        space_dim=space_dim,
        mu=mu,
        mass=mass,
        condensate=condensate,
        n_nodes=n_nodes,
    )
    return _context(model, beta, params, f"bose-{dispersion}-d{space_dim}" + ("-cond" if condensate else ""))


def bose_kernels(ctx: ThermalContext, tau: float):
    r"""Per-node :math:`\hat C^\beta(p)` and :math:`\hat S^\beta(\tau,p)`."""
    return ctx.B_values, ctx.R_values(abs(tau))


# --------------------------------------------------------------------------
# lattice and wedge models
# --------------------------------------------------------------------------


def torus_laplacian(L: int, space_dim: int = 1) -> np.ndarray:
    r"""Graph Laplacian :math:`-\Delta` of the periodic lattice :math:`(\mathbb Z/L)^d` (PSD)."""
    if L < 1:
        raise ValueError("lattice side must be >= 1")
    n = L**space_dim
    sites = list(itertools.product(range(L), repeat=space_dim))
    index = {s: i for i, s in enumerate(sites)}
    lap = np.zeros((n, n))
    for s, i in index.items():
        for axis in range(space_dim):
            for step in (1, -1):
                t = list(s)
                t[axis] = (t[axis] + step) % L
                j = index[tuple(t)]
                lap[i, i] += 1.0
                lap[i, j] -= 1.0
    return lap


def torus_laplacian_spectrum(L: int, space_dim: int = 1) -> np.ndarray:
    r"""Eigenvalues :math:`\sum_i (2 - 2\cos(2\pi k_i/L))` of :func:`torus_laplacian`."""
    one = 2.0 - 2.0 * np.cos(TWO_PI * np.arange(L) / L)
    total = np.zeros(())
    for _ in range(space_dim):
        total = np.add.outer(total, one)
    return np.sort(total.ravel())


def build_crystal(
    L: int = 2,
    space_dim: int = 1,
    coupling=None,
    kappa: float = 0.0,
    beta: float = 1.0,
) -> ThermalContext:
    r"""Harmonic crystal on :math:`(\mathbb Z/L)^d` with :math:`h = \tfrac12\mathbb 1 + A`.

    ``coupling`` is an explicit PSD matrix; otherwise
    :math:`A = \kappa(-\Delta)`. ``A = 0`` gives independent periodised
    Ornstein--Uhlenbeck processes with per-site variance
    :math:`\tfrac12\coth(\beta/4)`.
    """
    n = L**space_dim
    if coupling is None:
        if kappa < 0:
            raise NonPSDCoupling(f"kappa must be >= 0, got {kappa}")
        A = kappa * torus_laplacian(L, space_dim)
    else:
        A = np.asarray(coupling, dtype=float)
        if A.shape != (n, n):
            raise NonPSDCoupling(f"coupling must be {n}x{n}, got {A.shape}")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise NonPSDCoupling("coupling matrix is not symmetric")
        A = 0.5 * (A + A.T)
        ev = np.linalg.eigvalsh(A)
        if ev[0] < -1e-12 * max(1.0, np.abs(ev).max()):
            raise NonPSDCoupling(f"coupling matrix has negative eigenvalue {ev[0]!r}")
    model = eigendecompose(0.5 * np.eye(n) + A)
    params = dict(
        variant="crystal",
        L=L,
        space_dim=space_dim,
        kappa=kappa,
        coupling=None if coupling is None else np.asarray(coupling, dtype=float).round(17).tolist(),
    )
    tag = "decoupled" if not np.any(A) else "coupled"
    return _context(model, beta, params, f"crystal-{tag}-L{L}-d{space_dim}", coupling=A)


def rindler_operator(mass: float, half_width: float, grid: int):
    r"""Central-difference :math:`-\partial_x^2 + m^2e^{2x}` on the interior of
    ``[-half_width, half_width]`` with Dirichlet ends; returns ``(A, x)``."""
    if grid < 3:
        raise ValueError("need at least 3 grid points")
    if not (mass > 0 and half_width > 0):
        raise ValueError("mass and half-width must be positive")
    x = np.linspace(-half_width, half_width, grid + 2)[1:-1]
    dx = x[1] - x[0]
    A = (2.0 * np.eye(grid) - np.eye(grid, k=1) - np.eye(grid, k=-1)) / dx**2
    A += np.diag(mass**2 * np.exp(2.0 * x))
    return A, x


def build_rindler(
    mass: float = 1.0,
    half_width: float = 5.0,
    grid: int = 64,
    beta: float = TWO_PI,
    index: str = "raw",
) -> ThermalContext:
    r"""Boost generator :math:`h = A^{1/2}` of the wedge, default :math:`\beta = 2\pi`.

    The boost-process covariance carries the extra weight :math:`A^{-1/2}`;
    ``index="boost"`` records that test vectors should be passed through
    :func:`index_vector`, which applies :math:`A^{-1/4} = h^{-1/2}`.
    ``index="raw"`` uses vectors as given.
    """
    if index not in ("raw", "boost"):
        raise ValueError(f"index must be 'raw' or 'boost', got {index!r}")
    A, x = rindler_operator(mass, half_width, grid)
    a = eigendecompose(A)
    model = model_from_spectrum(np.sqrt(a.eigenvalues), a.eigenvectors)
    params = dict(variant="rindler", mass=mass, half_width=half_width, grid=grid, index=index)
    return _context(
        model,
        beta,
        params,
        f"rindler-M{grid}",
        grid_points=x,
        index_power=-0.5 if index == "boost" else 0.0,
        default_beta=TWO_PI,
    )


def index_vector(ctx: ThermalContext, f):
    """Apply the model's index map ``h^{index_power}`` (identity when unset)."""
    power = ctx.meta.get("index_power", 0.0)
    if not power:
        return f
    m = ctx.model
    return m.from_coords(m.eigenvalues**power * m.coords(f))


def random_generator(rng: np.random.Generator, dim: int = 4, lo: float = 0.2, hi: float = 1.5) -> MatrixModel:
    """Random real symmetric generator with spectrum uniform in ``[lo, hi]``."""
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    lam = rng.uniform(lo, hi, dim)
    h = (Q * lam) @ Q.T
    return eigendecompose(0.5 * (h + h.T))


def build_random(dim: int = 4, seed: int = 0, beta: float = 1.0, lo: float = 0.2, hi: float = 1.5) -> ThermalContext:
    model = random_generator(np.random.default_rng(seed), dim, lo, hi)
    params = dict(variant="random", dim=dim, seed=seed, lo=lo, hi=hi)
    return _context(model, beta, params, f"random{dim}-s{seed}")


def build_matrix(h, beta: float = 1.0, model_id: str = "matrix") -> ThermalContext:
    model = eigendecompose(h)
    params = dict(variant="matrix", h=np.asarray(h, dtype=float).tolist())
    return _context(model, beta, params, model_id)


# --------------------------------------------------------------------------
# test vectors
# --------------------------------------------------------------------------


def random_vector(ctx: ThermalContext, rng: np.random.Generator, real: bool = True, scale: float = 1.0):
    """Random test vector; Gaussian profiles (widths in [0.3, 2]) for quadrature models."""
    m = ctx.model
    if m.kind == "matrix":
        v = rng.standard_normal(m.dim)
        if not real:
            v = v + 1j * rng.standard_normal(m.dim)
        return scale * v / math.sqrt(m.dim)
    amp = rng.standard_normal() + (0.0 if real else 1j * rng.standard_normal())
    return m.gaussian(scale * amp, rng.uniform(0.3, 2.0))


# --------------------------------------------------------------------------
# finite-volume Gibbs reweighting
# --------------------------------------------------------------------------


@dataclass
class GibbsResult:
    lags: np.ndarray
    estimate: np.ndarray
    se: np.ndarray
    exact: np.ndarray  # reweighted Gaussian, frequency (1/4 + A)^{1/2}
    shifted_generator: np.ndarray  # h = 1/2 + A
    truncation: float
    ess: float

    def max_z(self) -> float:
        err = np.abs(self.estimate - self.exact) - self.truncation
        return float(np.max(np.maximum(err, 0.0) / self.se))


def gibbs_exact(A, beta: float, lag: float, j: int = 0, k: int = 0) -> float:
    r"""Covariance of the decoupled process reweighted by :math:`e^{-\int x^TAx}`.

    The decoupled law has covariance :math:`\tfrac12(-\partial_s^2+\tfrac14)^{-1}`
    on the circle; the density turns it into
    :math:`\tfrac12(-\partial_s^2+\tfrac14+A)^{-1}`, i.e. per eigenvalue
    :math:`a` of ``A`` a mode of frequency :math:`\Omega = (\tfrac14+a)^{1/2}`
    with covariance :math:`\tfrac12 R_\Omega(d)/(2\Omega)`.
    """
    a, Q = np.linalg.eigh(np.asarray(A, dtype=float))
    om = np.sqrt(0.25 + a)
    d = float(np.mod(lag, beta))
    R = (np.exp(-d * om) + np.exp(-(beta - d) * om)) / (-np.expm1(-beta * om))
    return float(0.5 * np.sum(Q[j] * Q[k] * R / (2.0 * om)))


def gibbs_reweighting_check(
    A,
    beta: float = 1.0,
    n_samples: int = 20000,
    n_modes: int = 127,
    seed: int = 0,
    lags=(0, 8, 32, 64),
    j: int = 0,
    k: int = 0,
) -> GibbsResult:
    r"""Reweight decoupled crystal paths by :math:`\exp(-\int_0^\beta x_s^TAx_s\,ds)`.

    The grid has ``2 * (n_modes + 1)`` points so the Riemann sum integrates
    the truncated trigonometric paths exactly. Estimates are self-normalised
    importance averages with a grouped jackknife error.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    free = build_crystal(L=n, space_dim=1, coupling=np.zeros((n, n)), beta=beta)
    M = 2 * (n_modes + 1)
    basis = [np.eye(n)[i] for i in range(n)]
    ens = sample_paths(free, M, basis, n_samples, n_modes, seed)
    x = ens.values  # (S, M, n)
    ds = beta / M
    action = ds * np.einsum("smi,ij,smj->s", x, A, x)
    w = np.exp(-(action - action.min()))
    ess = float(w.sum() ** 2 / np.sum(w**2))
    lags = np.asarray(lags, dtype=int)
    per = np.array([np.mean(x[:, :, j] * np.roll(x[:, :, k], -lag, axis=1), axis=1) for lag in lags])  # (L, S)
    est = per @ w / w.sum()
    groups = np.array_split(np.arange(n_samples), 50)
    num = np.array([[per[l, g] @ w[g] for g in groups] for l in range(len(lags))])
    den = np.array([w[g].sum() for g in groups])
    loo = (num.sum(axis=1, keepdims=True) - num) / (den.sum() - den)
    G = len(groups)
    se = np.sqrt((G - 1) / G * np.sum((loo - loo.mean(axis=1, keepdims=True)) ** 2, axis=1))
    times = lags * ds
    exact = np.array([gibbs_exact(A, beta, t, j, k) for t in times])
    coupled = build_crystal(L=n, space_dim=1, coupling=A, beta=beta)
    ej, ek = basis[j], basis[k]
    shifted = np.array([cov_pair(coupled, ej, ek, 0.0, t) for t in times])
    # truncation removes at most sum_i beta*Omega_i/(2 pi^2 N) of variance per mode
    om_max = math.sqrt(0.25 + max(0.0, float(np.linalg.eigvalsh(A)[-1])))
    trunc = beta * max(0.5, om_max) / (2.0 * math.pi**2 * n_modes)
    return GibbsResult(lags=times, estimate=est, se=se, exact=exact, shifted_generator=shifted, truncation=trunc, ess=ess)


# --------------------------------------------------------------------------
# catalog
# --------------------------------------------------------------------------


def catalog(include_quadrature: bool = True) -> list[ThermalContext]:
    """The standard set of contexts every invariant suite runs on."""
    out = [
        build_crystal(L=2, space_dim=1, beta=1.0),
        build_crystal(L=4, space_dim=1, kappa=0.3, beta=1.0),
        build_crystal(L=3, space_dim=2, kappa=0.2, beta=2.0),
        build_rindler(mass=1.0, half_width=5.0, grid=48),
        build_random(dim=4, seed=7, beta=1.0),
        build_random(dim=4, seed=11, beta=math.inf),
    ]
    if include_quadrature:
        out += [
            build_minkowski(space_dim=3, mass=1.0, beta=1.0, process="field", n_nodes=128),
            build_bose_gas("standard", space_dim=3, mu=0.5, beta=1.0, n_nodes=128),
            build_bose_gas("semirelativistic", space_dim=1, mass=1.0, beta=2.0, n_nodes=128),
            build_bose_gas("standard", space_dim=3, mu=0.0, condensate=0.7, beta=1.0, n_nodes=128),
        ]
    return out
