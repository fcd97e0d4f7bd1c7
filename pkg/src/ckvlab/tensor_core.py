"""Pointwise tensor calculus on a single coordinate patch.

Everything here works at one point ``x`` at a time: Christoffel symbols of a
metric, covariant derivatives of polynomial vector fields, the Lie derivative
of the metric, the metric divergence and the trace-free deformation tensor

    T(X) = L_X g - (2/n) div(X) g

whose kernel is the space of conformal Killing fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import OutOfPatch, SingularMetric, ValidationError

#: Metrics whose condition number exceeds this are treated as singular.
CONDITION_LIMIT = 1e12

Exponent = tuple[int, ...]


@dataclass(frozen=True)
class Patch:
    """Axis-aligned closed box in coordinate space."""

    box: tuple[tuple[float, float], ...]

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if len(box) < 2:
            raise ValidationError(f"patch dimension must be >= 2, got {len(box)}")
        for axis, (lo, hi) in enumerate(box):
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
                raise ValidationError(f"patch axis {axis} has empty interval [{lo}, {hi}]")
        object.__setattr__(self, "box", box)

    @classmethod
    def cube(cls, n: int, half_width: float = 0.5, center: Sequence[float] | None = None) -> Patch:
        c = [0.0] * n if center is None else list(center)
        return cls(tuple((ci - half_width, ci + half_width) for ci in c))

    @property
    def dim(self) -> int:
        return len(self.box)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.box])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.box])

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def edges(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.edges))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == (self.dim,) and bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def require(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValidationError(f"expected a point with {self.dim} coordinates, got shape {x.shape}")
        if not self.contains(x):
            raise OutOfPatch(x, self.box)
        return x

    def grid(self, m: int) -> np.ndarray:
        """Closed tensor grid with ``m`` equispaced nodes per axis, endpoints included."""
        axes = [np.linspace(lo, hi, m) for lo, hi in self.box]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([a.ravel() for a in mesh], axis=1)


@dataclass(frozen=True)
class MetricProvider:
    """A Riemannian metric on a patch: values ``eval(x)`` and partials ``deriv(x, l)``.

    Both callables receive a point already validated against the patch and
    must return ``n x n`` symmetric arrays.  They must not mutate shared state.
    """

    patch: Patch
    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray, int], np.ndarray]
    label: str

    @property
    def dim(self) -> int:
        return self.patch.dim

    def __call__(self, x) -> np.ndarray:
        x = self.patch.require(x)
        return np.asarray(self.eval(x), dtype=float)

    def partial(self, x, axis: int) -> np.ndarray:
        x = self.patch.require(x)
        return np.asarray(self.deriv(x, axis), dtype=float)

    def gradient(self, x) -> np.ndarray:
        """Array ``dg`` with ``dg[l, i, j] = d_l g_ij(x)``."""
        x = self.patch.require(x)
        return np.stack([np.asarray(self.deriv(x, l), dtype=float) for l in range(self.dim)])

    @classmethod
    def from_values(cls, patch: Patch, eval: Callable[[np.ndarray], np.ndarray], label: str) -> MetricProvider:
        """Wrap a provider that has no analytic derivatives.

        Partials come from a fourth-order central difference with step
        ``1e-4`` times the box edge along that axis.  Stencil points may leave
        the box by a few steps, so ``eval`` must tolerate that.
        """
        steps = 1e-4 * patch.edges

        def deriv(x: np.ndarray, axis: int) -> np.ndarray:
            h = steps[axis]
            e = np.zeros_like(x)
            e[axis] = h
            return (
                -np.asarray(eval(x + 2 * e)) + 8 * np.asarray(eval(x + e))
                - 8 * np.asarray(eval(x - e)) + np.asarray(eval(x - 2 * e))
            ) / (12 * h)

        return cls(patch, eval, deriv, label)


def _monomial_degree(alpha: Exponent) -> int:
    return sum(alpha)


@dataclass(frozen=True)
class VectorFieldPoly:
    """Polynomial vector field; ``coeffs[k]`` maps exponent tuples to coefficients of X^k."""

    dim: int
    coeffs: tuple[Mapping[Exponent, float], ...]

    def __post_init__(self):
        if len(self.coeffs) != self.dim:
            raise ValidationError(f"need {self.dim} component polynomials, got {len(self.coeffs)}")
        cleaned = []
        for comp in self.coeffs:
            terms = {}
            for alpha, c in comp.items():
                alpha = tuple(int(a) for a in alpha)
                if len(alpha) != self.dim or min(alpha) < 0:
                    raise ValidationError(f"bad exponent {alpha} for dimension {self.dim}")
                if c != 0:
                    terms[alpha] = terms.get(alpha, 0.0) + float(c)
            cleaned.append({a: c for a, c in terms.items() if c != 0})
        object.__setattr__(self, "coeffs", tuple(cleaned))

    @classmethod
    def monomial(cls, n: int, component: int, alpha: Exponent, coeff: float = 1.0) -> VectorFieldPoly:
        comps = [dict() for _ in range(n)]
        comps[component] = {tuple(alpha): coeff}
        return cls(n, tuple(comps))

    @classmethod
    def linear(cls, matrix, offset=None) -> VectorFieldPoly:
        """The affine field ``x -> M x + b``."""
        m = np.asarray(matrix, dtype=float)
        n = m.shape[0]
        b = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
        comps = []
        for k in range(n):
            terms = {(0,) * n: b[k]}
            for i in range(n):
                alpha = tuple(1 if j == i else 0 for j in range(n))
                terms[alpha] = m[k, i]
            comps.append(terms)
        return cls(n, tuple(comps))

    @property
    def degree(self) -> int:
        degs = [_monomial_degree(a) for comp in self.coeffs for a in comp]
        return max(degs, default=0)

    @cached_property
    def _terms(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        comp, exps, vals = [], [], []
        for k, terms in enumerate(self.coeffs):
            for a, c in terms.items():
                comp.append(k)
                exps.append(a)
                vals.append(c)
        return (np.array(comp, dtype=int), np.array(exps, dtype=int).reshape(-1, self.dim),
                np.array(vals, dtype=float))

    @cached_property
    def _partials(self) -> tuple[VectorFieldPoly, ...]:
        return tuple(self.partial(i) for i in range(self.dim))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        comp, exps, vals = self._terms
        return np.bincount(comp, weights=vals * np.prod(x ** exps, axis=1), minlength=self.dim)

    def partial(self, axis: int) -> VectorFieldPoly:
        """Exact partial derivative along ``axis``."""
        comps = []
        for comp in self.coeffs:
            terms = {}
            for alpha, c in comp.items():
                p = alpha[axis]
                if p == 0:
                    continue
                beta = alpha[:axis] + (p - 1,) + alpha[axis + 1:]
                terms[beta] = terms.get(beta, 0.0) + c * p
            comps.append(terms)
        return VectorFieldPoly(self.dim, tuple(comps))

    def jacobian(self, x) -> np.ndarray:
        """``J[k, i] = d_i X^k (x)``."""
        return np.stack([p(x) for p in self._partials], axis=1)

    def __add__(self, other: VectorFieldPoly) -> VectorFieldPoly:
        if not isinstance(other, VectorFieldPoly):
            return NotImplemented
        comps = []
        for a, b in zip(self.coeffs, other.coeffs):
            terms = dict(a)
            for alpha, c in b.items():
                terms[alpha] = terms.get(alpha, 0.0) + c
            comps.append(terms)
        return VectorFieldPoly(self.dim, tuple(comps))

    def __mul__(self, scalar: float) -> VectorFieldPoly:
        return VectorFieldPoly(self.dim, tuple({a: scalar * c for a, c in comp.items()} for comp in self.coeffs))

    __rmul__ = __mul__


@dataclass(frozen=True)
class SymTensor2:
    """Covariant symmetric 2-tensor at a point, stored as its upper triangle."""

    dim: int
    upper: tuple[float, ...] = field(repr=False)

    @classmethod
    def from_matrix(cls, m) -> SymTensor2:
        m = np.asarray(m, dtype=float)
        n = m.shape[0]
        iu = np.triu_indices(n)
        return cls(n, tuple(float(v) for v in m[iu]))

    def __getitem__(self, ij: tuple[int, int]) -> float:
        i, j = ij
        if i > j:
            i, j = j, i
        # row-major upper triangle offset
        return self.upper[i * self.dim - i * (i - 1) // 2 + (j - i)]

    @property
    def entries(self) -> np.ndarray:
        n = self.dim
        m = np.zeros((n, n))
        m[np.triu_indices(n)] = self.upper
        return m + np.triu(m, 1).T

    def max_abs(self) -> float:
        return max((abs(v) for v in self.upper), default=0.0)


@dataclass(frozen=True)
class Christoffel:
    """``gamma[k, i, j]`` holds the symbol with upper index k, symmetric in (i, j)."""

    dim: int
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        g = 0.5 * (g + g.transpose(0, 2, 1))
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)


def inverse_metric(gx: np.ndarray, x=None) -> np.ndarray:
    """Invert ``g(x)`` by a dense solve, guarding against near-degenerate metrics."""
    eig = np.linalg.eigvalsh(gx)
    point = np.zeros(gx.shape[0]) if x is None else x
    if eig[0] <= 0 or not np.all(np.isfinite(eig)):
        raise SingularMetric(point, math.inf)
    cond = eig[-1] / eig[0]
    if cond > CONDITION_LIMIT:
        raise SingularMetric(point, cond)
    return np.linalg.solve(gx, np.eye(gx.shape[0]))


def christoffel_from_arrays(gx: np.ndarray, dg: np.ndarray, x=None) -> Christoffel:
    ginv = inverse_metric(gx, x)
    # lowered[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    lowered = dg.transpose(2, 0, 1) + dg.transpose(2, 1, 0) - dg
    return Christoffel(gx.shape[0], 0.5 * np.einsum("kl,lij->kij", ginv, lowered))


def christoffel(g: MetricProvider, x) -> Christoffel:
    x = g.patch.require(x)
    return christoffel_from_arrays(g(x), g.gradient(x), x)


def covariant_jacobians(gamma: np.ndarray, values: np.ndarray, jacobians: np.ndarray) -> np.ndarray:
    """Batch covariant derivative: ``out[b, k, i] = J[b, k, i] + gamma[k, i, l] X_b^l``."""
    return jacobians + np.einsum("kil,bl->bki", gamma, values)


def lie_from_covariant(gx: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """``(L_X g)_ij = g_jk X^k_;i + g_ik X^k_;j`` for a batch of covariant derivatives."""
    gc = np.einsum("jk,bki->bji", gx, cov)
    return gc + gc.transpose(0, 2, 1)


def deformation_from_covariant(gx: np.ndarray, cov: np.ndarray) -> np.ndarray:
    n = gx.shape[0]
    div = np.trace(cov, axis1=1, axis2=2)
    return lie_from_covariant(gx, cov) - (2.0 / n) * div[:, None, None] * gx


def covariant_derivative(g: MetricProvider, X: VectorFieldPoly, x) -> np.ndarray:
    """Matrix with entry ``(k, i)`` equal to ``X^k_{;i}`` at ``x``."""
    gam = christoffel(g, x)
    return covariant_jacobians(gam.gamma, X(x)[None], X.jacobian(x)[None])[0]


def lie_derivative_metric(g: MetricProvider, X: VectorFieldPoly, x) -> SymTensor2:
    cov = covariant_derivative(g, X, x)
    return SymTensor2.from_matrix(lie_from_covariant(g(x), cov[None])[0])


def divergence(g: MetricProvider, X: VectorFieldPoly, x) -> float:
    return float(np.trace(covariant_derivative(g, X, x)))


def deformation_tensor(g: MetricProvider, X: VectorFieldPoly, x) -> SymTensor2:
    cov = covariant_derivative(g, X, x)
    return SymTensor2.from_matrix(deformation_from_covariant(g(x), cov[None])[0])
