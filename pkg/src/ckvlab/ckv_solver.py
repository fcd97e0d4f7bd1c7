"""Numerical nullity of the conformal Killing operator over polynomial fields.

The unknown field is expanded in monomial fields ``e_k x^alpha`` of total
degree at most ``d``.  The operator ``X -> T(X)`` (or ``X -> L_X g`` in
killing mode) is sampled at the nodes of a midpoint tensor grid, giving an
overdetermined dense matrix.  Its columns are whitened against the discrete
L2 Gram matrix of the basis so that singular values do not depend on how the
monomials happen to be scaled, and the nullity is the number of singular
values below ``rel_tol * sigma_max``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import qr, solve_triangular

from .errors import RowDeficient, ValidationError
from .tensor_core import (
    MetricProvider,
    Patch,
    VectorFieldPoly,
    christoffel_from_arrays,
    covariant_jacobians,
    deformation_from_covariant,
    lie_from_covariant,
)

MODES = ("conformal-killing", "killing")
_MODE_ALIASES = {"conformal": "conformal-killing", "ckv": "conformal-killing", "conformal-killing": "conformal-killing",
                 "killing": "killing"}

# a singular value this close to the threshold (either side) makes the count unreliable
TIE_FACTOR = 10.0


def normalize_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise ValidationError(f"unknown mode {mode!r}; choose from {sorted(_MODE_ALIASES)}") from None


def graded_exponents(n: int, d: int) -> list[tuple[int, ...]]:
    """All exponents with ``|alpha| <= d``, by degree then lexicographically descending."""
    out = []
    for deg in range(d + 1):
        level = [a for a in itertools.product(range(deg + 1), repeat=n) if sum(a) == deg]
        out.extend(sorted(level, reverse=True))
    return out


@dataclass(frozen=True)
class PolyVectorBasis:
    dim: int
    degree: int
    exponents: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return self.dim * len(self.exponents)

    def index(self, component: int, alpha) -> int:
        return component * len(self.exponents) + self.exponents.index(tuple(alpha))

    @cached_property
    def fields(self) -> list[VectorFieldPoly]:
        return [VectorFieldPoly.monomial(self.dim, k, a) for k in range(self.dim) for a in self.exponents]

    def coefficients(self, X: VectorFieldPoly) -> np.ndarray:
        """Coordinates of ``X`` in this basis; raises if X has terms outside it."""
        c = np.zeros(len(self))
        for k, comp in enumerate(X.coeffs):
            for alpha, v in comp.items():
                if alpha not in self.exponents:
                    raise ValidationError(f"term x^{alpha} of component {k} is outside the degree-{self.degree} basis")
                c[self.index(k, alpha)] = v
        return c

    def _powers(self, points: np.ndarray) -> np.ndarray:
        # pw[p, axis, e] = x_axis^e
        return points[:, :, None] ** np.arange(self.degree + 1)[None, None, :]

    def monomials(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Monomial values ``(P, M)`` and gradients ``(P, M, n)`` at ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.dim
        pw = self._powers(points)
        alphas = np.array(self.exponents)
        axes = np.arange(n)
        # factors[p, m, axis] = x_axis^alpha_axis
        factors = pw[:, axes[None, :], alphas]
        vals = np.prod(factors, axis=2)
        grads = np.empty(vals.shape + (n,))
        for i in range(n):
            lowered = np.clip(alphas[:, i] - 1, 0, None)
            f = factors.copy()
            f[:, :, i] = alphas[:, i][None, :] * pw[:, i, lowered]
            grads[:, :, i] = np.prod(f, axis=2)
        return vals, grads

    def field_values(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values ``(P, B, n)`` and Jacobians ``(P, B, n, n)`` of every basis field."""
        vals, grads = self.monomials(points)
        P, M = vals.shape
        n = self.dim
        values = np.zeros((P, n, M, n))
        jac = np.zeros((P, n, M, n, n))
        for k in range(n):
            values[:, k, :, k] = vals
            jac[:, k, :, k, :] = grads
        return values.reshape(P, n * M, n), jac.reshape(P, n * M, n, n)


def build_basis(n: int, d: int) -> PolyVectorBasis:
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    if d < 0:
        raise ValidationError(f"degree must be >= 0, got {d}")
    return PolyVectorBasis(n, d, tuple(graded_exponents(n, d)))


@dataclass(frozen=True)
class CollocationGrid:
    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def midpoint(cls, patch: Patch, m: int) -> CollocationGrid:
        """Cell-midpoint tensor grid with ``m`` cells per axis."""
        if m < 1:
            raise ValidationError(f"grid resolution must be >= 1, got {m}")
        axes = [lo + (np.arange(m) + 0.5) * (hi - lo) / m for lo, hi in patch.box]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([a.ravel() for a in mesh], axis=1)
        weights = np.full(len(points), patch.volume / m ** patch.dim)
        return cls(points, weights)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SolverConfig:
    mode: str = "conformal-killing"
    degree: int = 3
    grid: int = 6
    rel_tol: float = 1e-8
    gap_min: float = 1e3

    def __post_init__(self):
        object.__setattr__(self, "mode", normalize_mode(self.mode))
        if self.degree < 2:
            raise ValidationError(f"degree must be >= 2, got {self.degree}")
        if self.grid < 1:
            raise ValidationError(f"grid must be >= 1, got {self.grid}")
        if not 0.0 < self.rel_tol < 1.0:
            raise ValidationError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if not self.gap_min > 1.0:
            raise ValidationError(f"gap_min must exceed 1, got {self.gap_min}")

    def check_rows(self, n: int) -> None:
        rows = self.grid ** n * n * (n + 1) // 2
        cols = n * math.comb(n + self.degree, self.degree)
        if rows < cols:
            raise RowDeficient(rows, cols)

    def as_dict(self) -> dict:
        return {"mode": self.mode, "d": self.degree, "m": self.grid, "rel_tol": self.rel_tol, "gap_min": self.gap_min}


@dataclass(frozen=True)
class CKVReport:
    metric: str
    n: int
    config: SolverConfig
    nullity: int
    singular_values: tuple[float, ...] = field(repr=False)
    gap_ratio: float
    ambiguous: bool

    def to_dict(self, expected_nullity: int | None = None) -> dict:
        """JSON-ready record; keeps the ``3 * expected`` smallest singular values."""
        keep = 3 * max(self.nullity if expected_nullity is None else expected_nullity, 1)
        sv = list(self.singular_values[-keep:])
        return {
            "metric": self.metric,
            "mode": self.config.mode,
            "n": self.n,
            "d": self.config.degree,
            "m": self.config.grid,
            "rel_tol": self.config.rel_tol,
            "gap_min": self.config.gap_min,
            "nullity": self.nullity,
            "gap_ratio": self.gap_ratio,
            "ambiguous": self.ambiguous,
            "sigma_max": self.singular_values[0] if self.singular_values else 0.0,
            "singular_values": sv,
        }


_SQRT2 = math.sqrt(2.0)


def _pack_upper(tensors: np.ndarray) -> np.ndarray:
    """``(B, n, n)`` -> ``(r, B)`` rows of upper-triangle components, off-diagonals times sqrt 2."""
    n = tensors.shape[-1]
    iu, ju = np.triu_indices(n)
    scale = np.where(iu == ju, 1.0, _SQRT2)
    return (tensors[:, iu, ju] * scale).T


def assemble_operator(g: MetricProvider, basis: PolyVectorBasis, grid: CollocationGrid, mode: str) -> np.ndarray:
    """Dense collocation matrix: one column per basis field, ``n(n+1)/2`` rows per node."""
    mode = normalize_mode(mode)
    n = basis.dim
    if g.dim != n:
        raise ValidationError(f"metric dimension {g.dim} does not match basis dimension {n}")
    r = n * (n + 1) // 2
    rows, cols = len(grid) * r, len(basis)
    if rows < cols:
        raise RowDeficient(rows, cols)
    values, jacs = basis.field_values(grid.points)
    A = np.empty((rows, cols))
    for p, (x, w) in enumerate(zip(grid.points, grid.weights)):
        x = g.patch.require(x)
        gx = g(x)
        gam = christoffel_from_arrays(gx, g.gradient(x), x)
        cov = covariant_jacobians(gam.gamma, values[p], jacs[p])
        if mode == "killing":
            tens = lie_from_covariant(gx, cov)
        else:
            tens = deformation_from_covariant(gx, cov)
        A[p * r:(p + 1) * r] = math.sqrt(w) * _pack_upper(tens)
    return A


def basis_mass_factor(basis: PolyVectorBasis, grid: CollocationGrid) -> np.ndarray:
    """Upper-triangular ``R`` with ``R^T R`` the weighted Gram matrix of the basis fields."""
    values, _ = basis.field_values(grid.points)
    # rows: (node, component), scaled by sqrt(weight)
    B = (np.sqrt(grid.weights)[:, None, None] * values).transpose(0, 2, 1).reshape(-1, len(basis))
    R = qr(B, mode="r")[0][: len(basis)]
    # fix signs so the diagonal is positive, matching the Cholesky factor of the Gram
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return signs[:, None] * R


def whitened_singular_values(A: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Singular values of ``A R^{-1}``, descending."""
    AR = solve_triangular(R, A.T, trans="T", lower=False).T
    return np.linalg.svd(AR, compute_uv=False)


def nullity(A: np.ndarray, R: np.ndarray, config: SolverConfig, metric: str = "", n: int = 0) -> CKVReport:
    sv = whitened_singular_values(A, R)
    return report_from_spectrum(sv, config, metric, n)


def report_from_spectrum(sv, config: SolverConfig, metric: str = "", n: int = 0) -> CKVReport:
    sv = np.sort(np.asarray(sv, dtype=float))[::-1]
    smax = float(sv[0]) if len(sv) else 0.0
    if smax == 0.0:
        return CKVReport(metric, n, config, len(sv), tuple(float(s) for s in sv), math.inf, True)
    thresh = config.rel_tol * smax
    null = sv < thresh
    k = int(np.count_nonzero(null))
    rank = len(sv) - k
    if k == 0:
        gap = math.inf
    else:
        gap = float(sv[rank - 1] / sv[rank]) if sv[rank] > 0 else math.inf
    near = (sv >= thresh / TIE_FACTOR) & (sv <= thresh * TIE_FACTOR)
    ambiguous = bool(gap < config.gap_min or np.any(near))
    return CKVReport(metric, n, config, k, tuple(float(s) for s in sv), gap, ambiguous)


def count_ckv(g: MetricProvider, config: SolverConfig) -> CKVReport:
    n = g.dim
    config.check_rows(n)
    basis = build_basis(n, config.degree)
    grid = CollocationGrid.midpoint(g.patch, config.grid)
    A = assemble_operator(g, basis, grid, config.mode)
    R = basis_mass_factor(basis, grid)
    return nullity(A, R, config, g.label, n)
