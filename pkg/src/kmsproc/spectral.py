r"""One-particle structures and their functional calculus.

Two concrete backends carry a positive generator :math:`h` with the
entrywise complex conjugation:

* :class:`MatrixModel` -- a real symmetric positive-definite matrix, stored
  together with its eigendecomposition :math:`h = Q\,\mathrm{diag}(\lambda)\,Q^T`.
  Test vectors are complex numpy arrays.
* :class:`QuadratureModel` -- a rotation invariant operator
  :math:`h = \mathcal E(-i\nabla)` on :math:`L^2(\mathbb R^d)`, reduced to a
  radial Gauss--Legendre rule in momentum space. Test vectors are
  :class:`MomentumVector` objects holding the momentum-space profile on the
  nodes.

Both expose ``eigenvalues`` and ``coords(f)``: the coordinates of ``f`` in an
orthonormal (generalised) eigenbasis, so that every spectral quantity reduces
to :math:`\sum_i \overline{c_i(f)}\,\varphi(\lambda_i)\,c_i(g)`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatch,
    FunctionSingularAtSpectrum,
    NonPositiveSpectrum,
    NonSymmetric,
)

SYMMETRY_TOL = 1e-12
SPECTRAL_FLOOR = 1e-12
REAL_TOL = 1e-14


# --------------------------------------------------------------------------
# matrix backend
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MatrixModel:
    """Finite dimensional generator with a cached eigenbasis."""

    h: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    condensate: float = 0.0
    kind: str = field(default="matrix", init=False)

    @property
    def dim(self) -> int:
        return self.h.shape[0]

    def coords(self, f) -> np.ndarray:
        f = np.asarray(f)
        if f.shape != (self.dim,):
            raise DimensionMismatch(
                f"vector of shape {f.shape} does not live in dimension {self.dim}"
            )
        return self.eigenvectors.T @ f

    def from_coords(self, c) -> np.ndarray:
        return self.eigenvectors @ c

    def zero_value(self, f) -> complex:
        return 0.0

    def zero_vector(self) -> np.ndarray:
        return np.zeros(self.dim)

    def basis(self, i: int) -> np.ndarray:
        e = np.zeros(self.dim)
        e[i] = 1.0
        return e

    def matrix_function(self, phi: Callable) -> np.ndarray:
        """Dense matrix :math:`\\varphi(h)`."""
        vals = _evaluate(phi, self.eigenvalues)
        Q = self.eigenvectors
        return (Q * vals) @ Q.T


def eigendecompose(h_matrix) -> MatrixModel:
    """Validate a real symmetric positive-definite matrix and diagonalise it.

    Raises :class:`NonSymmetric` when ``h`` is not symmetric to 1e-12 (relative
    to its largest entry) and :class:`NonPositiveSpectrum` when the smallest
    eigenvalue does not clear the spectral floor, i.e. when the generator has
    a kernel or is indefinite.
    """
    h = np.array(h_matrix, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] == 0:
        raise NonSymmetric(f"generator must be a non-empty square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h))))
    asym = float(np.max(np.abs(h - h.T)))
    if asym > SYMMETRY_TOL * scale:
        raise NonSymmetric(f"generator is not symmetric: max |h - h^T| = {asym:.3e}")
    h = 0.5 * (h + h.T)
    lam, Q = np.linalg.eigh(h)
    if lam[0] <= SPECTRAL_FLOOR:
        raise NonPositiveSpectrum(
            f"generator spectrum must be strictly positive: smallest eigenvalue {lam[0]:.3e}"
        )
    return MatrixModel(h=h, eigenvalues=lam, eigenvectors=Q)


def model_from_spectrum(eigenvalues, eigenvectors=None) -> MatrixModel:
    """Build a matrix model from a prescribed spectrum (and optional basis)."""
    lam = np.asarray(eigenvalues, dtype=float)
    order = np.argsort(lam)
    lam = lam[order]
    if lam[0] <= SPECTRAL_FLOOR:
        raise NonPositiveSpectrum(
            f"generator spectrum must be strictly positive: smallest eigenvalue {lam[0]:.3e}"
        )
    if eigenvectors is None:
        Q = np.eye(lam.size)
    else:
        Q = np.asarray(eigenvectors, dtype=float)[:, order]
    h = (Q * lam) @ Q.T
    return MatrixModel(h=0.5 * (h + h.T), eigenvalues=lam, eigenvectors=Q)


def parse_matrix(text: str) -> np.ndarray:
    """Parse the plain-text matrix format.

    First line ``dim``, then ``dim`` rows of ``dim`` whitespace separated
    reals. Blank lines are ignored.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("matrix text is empty: expected a dimension line")
    try:
        dim = int(lines[0])
    except ValueError:
        raise ValueError(f"first line must be an integer dimension, got {lines[0]!r}") from None
    if dim <= 0:
        raise ValueError(f"dimension must be positive, got {dim}")
    rows = lines[1:]
    if len(rows) != dim:
        raise ValueError(f"expected {dim} matrix rows, found {len(rows)}")
    out = np.empty((dim, dim))
    for i, row in enumerate(rows):
        parts = row.split()
        if len(parts) != dim:
            raise ValueError(f"row {i + 1} has {len(parts)} entries, expected {dim}")
        try:
            out[i] = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"row {i + 1} contains a non-numeric entry") from None
    return out


def read_matrix(path) -> MatrixModel:
    """Load a generator from the plain-text format and diagonalise it."""
    return eigendecompose(parse_matrix(Path(path).read_text()))


def format_matrix(h) -> str:
    h = np.asarray(h, dtype=float)
    rows = [" ".join(format(x, ".17g") for x in row) for row in h]
    return "\n".join([str(h.shape[0]), *rows]) + "\n"


# --------------------------------------------------------------------------
# momentum quadrature backend
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentumVector:
    """Momentum-space profile sampled on the radial nodes of a model.

    ``zero`` carries the value at ``p = 0`` which only matters for models
    with a condensate.
    """

    values: np.ndarray
    zero: complex
    weights: np.ndarray

    def _check(self, other: "MomentumVector"):
        if not isinstance(other, MomentumVector) or other.weights is not self.weights:
            raise DimensionMismatch("momentum vectors belong to different models")

    def __add__(self, other):
        self._check(other)
        return MomentumVector(self.values + other.values, self.zero + other.zero, self.weights)

    def __sub__(self, other):
        self._check(other)
        return MomentumVector(self.values - other.values, self.zero - other.zero, self.weights)

    def __neg__(self):
        return MomentumVector(-self.values, -self.zero, self.weights)

    def __mul__(self, scalar):
        return MomentumVector(scalar * self.values, scalar * self.zero, self.weights)

    __rmul__ = __mul__

    def conj(self):
        return MomentumVector(np.conj(self.values), np.conj(self.zero), self.weights)


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def default_p_max(space_dim: int, width_max: float, rel_tail: float = 1e-12) -> float:
    """Radial cutoff for Gaussian profiles ``exp(-a x^2)`` with ``a <= width_max``.

    The squared transform decays like ``exp(-p^2 / (2a))``; the cutoff is
    pushed out until ``p^(d+1) exp(-p^2/(2a))`` is below ``rel_tail`` times
    its maximum, which leaves room for polynomial dispersion weights.
    """
    a = width_max
    k = space_dim + 1
    peak_p = math.sqrt(k * a)
    log_peak = k * math.log(peak_p) - peak_p**2 / (2 * a)
    p = peak_p
    while k * math.log(p) - p**2 / (2 * a) - log_peak > math.log(rel_tail):
        p *= 1.05
    return p


@dataclass(frozen=True, eq=False)
class QuadratureModel:
    r"""Rotation invariant generator :math:`\mathcal E(|p|)` on :math:`L^2(\mathbb R^d)`.

    ``weights`` already include the radial measure
    :math:`|S^{d-1}|\,p^{d-1}\,dp`. ``index_power`` folds a factor
    :math:`\mathcal E(p)^{\mathrm{index\_power}}` into every test function
    built by :meth:`gaussian` (``-1/2`` realises the field index map of a
    Klein--Gordon one-particle structure, ``+1/2`` the momentum one).
    """

    space_dim: int
    dispersion: Callable
    nodes: np.ndarray
    weights: np.ndarray
    energies: np.ndarray
    energy_at_zero: float
    condensate: float = 0.0
    index_power: float = 0.0
    kind: str = field(default="quadrature", init=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.energies

    @property
    def dim(self) -> int:
        return self.nodes.size

    def coords(self, f: MomentumVector) -> np.ndarray:
        if not isinstance(f, MomentumVector) or f.weights is not self.weights:
            raise DimensionMismatch("test vector does not belong to this quadrature model")
        return np.sqrt(self.weights) * f.values

    def zero_value(self, f: MomentumVector) -> complex:
        return f.zero

    def zero_vector(self) -> MomentumVector:
        return MomentumVector(np.zeros(self.dim), 0.0, self.weights)

    def vector(self, values, zero=0.0) -> MomentumVector:
        values = np.asarray(values)
        if values.shape != self.nodes.shape:
            raise DimensionMismatch(f"expected {self.dim} node values, got shape {values.shape}")
        return MomentumVector(values, zero, self.weights)

    def gaussian(self, amplitude: complex = 1.0, width: float = 1.0) -> MomentumVector:
        r"""Test function :math:`f(x) = A e^{-a|x|^2}` in momentum space.

        Uses the unitary transform
        :math:`\hat f(p) = A (2a)^{-d/2} e^{-p^2/(4a)}`, then applies the
        model's index weight.
        """
        if width <= 0:
            raise ValueError("Gaussian width must be positive")
        d = self.space_dim
        pref = amplitude * (2.0 * width) ** (-d / 2)
        values = pref * np.exp(-self.nodes**2 / (4.0 * width))
        zero = pref
        if self.index_power:
            values = values * self.energies**self.index_power
            zero = zero * self.energy_at_zero**self.index_power if self.energy_at_zero > 0 else 0.0
        return MomentumVector(values, zero, self.weights)


def quadrature_model(
    space_dim: int,
    dispersion: Callable,
    n_nodes: int = 256,
    p_max: float | None = None,
    width_max: float = 2.0,
    condensate: float = 0.0,
    index_power: float = 0.0,
) -> QuadratureModel:
    """Gauss--Legendre radial rule on ``[0, p_max]`` for a dispersion relation."""
    if space_dim < 1:
        raise ValueError("space dimension must be >= 1")
    if n_nodes < 2:
        raise ValueError("need at least two quadrature nodes")
    if p_max is None:
        p_max = default_p_max(space_dim, width_max)
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    nodes = 0.5 * p_max * (x + 1.0)
    weights = 0.5 * p_max * w * sphere_area(space_dim) * nodes ** (space_dim - 1)
    energies = np.asarray(dispersion(nodes), dtype=float)
    e0 = float(dispersion(np.array([0.0]))[0])
    if np.any(energies < 0) or e0 < 0:
        raise NonPositiveSpectrum("dispersion must be non-negative")
    if np.any(energies <= 0):
        raise NonPositiveSpectrum("dispersion vanishes on a quadrature node")
    return QuadratureModel(
        space_dim=space_dim,
        dispersion=dispersion,
        nodes=nodes,
        weights=weights,
        energies=energies,
        energy_at_zero=e0,
        condensate=float(condensate),
        index_power=float(index_power),
    )


# --------------------------------------------------------------------------
# generic operations
# --------------------------------------------------------------------------


def _evaluate(phi: Callable, lam: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        vals = np.asarray(phi(lam))
    if vals.shape == ():
        vals = np.full(lam.shape, vals)
    if not np.all(np.isfinite(vals)):
        bad = lam[~np.isfinite(vals)]
        raise FunctionSingularAtSpectrum(f"function is not finite at spectral points {bad[:4]}")
    return vals


def apply_function(model, phi: Callable, f):
    r"""Return :math:`\varphi(h) f` through the spectral resolution of ``h``."""
    vals = _evaluate(phi, model.eigenvalues)
    if model.kind == "matrix":
        return model.from_coords(vals * model.coords(f))
    zero = f.zero
    if zero != 0:
        z = _evaluate(phi, np.array([model.energy_at_zero]))[0] if model.energy_at_zero > 0 else 0.0
        zero = z * zero
    return MomentumVector(vals * f.values, zero, f.weights)


def inner(f, g) -> complex:
    """Hermitian product, conjugate-linear in the first slot."""
    if isinstance(f, MomentumVector) or isinstance(g, MomentumVector):
        if not (isinstance(f, MomentumVector) and isinstance(g, MomentumVector)):
            raise DimensionMismatch("cannot pair a momentum vector with an array")
        f._check(g)
        return complex(np.sum(f.weights * np.conj(f.values) * g.values))
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != g.shape:
        raise DimensionMismatch(f"shapes {f.shape} and {g.shape} differ")
    return complex(np.vdot(f, g))


def symplectic(f, g) -> float:
    return inner(f, g).imag


def conjugate(f):
    if isinstance(f, MomentumVector):
        return f.conj()
    return np.conj(np.asarray(f))


def is_real(f) -> bool:
    """Membership in the real subspace (fixed points of the conjugation)."""
    if isinstance(f, MomentumVector):
        return bool(np.all(np.abs(np.imag(f.values)) <= REAL_TOL) and abs(np.imag(f.zero)) <= REAL_TOL)
    return bool(np.all(np.abs(np.imag(np.asarray(f))) <= REAL_TOL))


def spectral_form(model, values: np.ndarray, f, g) -> complex:
    r""":math:`\langle f, \varphi(h) g\rangle` for precomputed :math:`\varphi(\lambda_i)`."""
    cf = model.coords(f)
    cg = model.coords(g)
    return complex(np.sum(np.conj(cf) * values * cg))
