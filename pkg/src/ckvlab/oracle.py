"""Exact-arithmetic count of polynomial (conformal) Killing fields.

Independent of the numerical path: the metric is symbolic, the Lie derivative
is taken in the Christoffel-free form

    (L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k,

the divergence as ``d_k X^k + X^k d_k(det g) / (2 det g)``, and the kernel
dimension comes from the rank of a rational coefficient matrix.
"""

from __future__ import annotations

from functools import lru_cache

import sympy as sp

from .ckv_solver import graded_exponents, normalize_mode
from .errors import ValidationError


def coordinates(n: int) -> tuple[sp.Symbol, ...]:
    return sp.symbols(f"x1:{n + 1}", real=True)


def symbolic_factor(label: str, xs) -> sp.Expr:
    r2 = sum(x ** 2 for x in xs)
    table = {
        "one": sp.Integer(1),
        "const-2": sp.Integer(2),
        "exp-x1": sp.exp(xs[0]),
        "exp-2x1": sp.exp(2 * xs[0]),
        "sphere": 4 / (1 + r2) ** 2,
        "hyperbolic": 4 / (1 - r2) ** 2,
    }
    try:
        return table[label]
    except KeyError:
        raise ValidationError(f"no symbolic form for factor {label!r}") from None


_CONFORMAL_MODELS = {"flat": "one", "conf-exp": "exp-2x1", "sphere-stereo": "sphere", "hyperbolic-ball": "hyperbolic"}


def symbolic_metric(label: str, n: int, factor: str = "one", amplitude=sp.Rational(1, 2)):
    """Return ``(G, c)``: a sympy metric matrix and a positive scalar to divide T by.

    Dividing by ``c`` removes transcendental factors so that what remains is
    rational in the coordinates.
    """
    xs = coordinates(n)
    extra = symbolic_factor(factor, xs)
    if label in _CONFORMAL_MODELS:
        c = symbolic_factor(_CONFORMAL_MODELS[label], xs) * extra
        return c * sp.eye(n), c
    if label == "diag-poly":
        entries = [1 + amplitude * xs[(i + 1) % n] ** 2 for i in range(n)]
        return extra * sp.diag(*entries), extra
    raise ValidationError(f"no symbolic form for metric {label!r}")


def _generic_field(n: int, d: int):
    exps = graded_exponents(n, d)
    xs = coordinates(n)
    unknowns = sp.symbols(f"a0:{n * len(exps)}")
    X = []
    for k in range(n):
        X.append(sum(unknowns[k * len(exps) + m] * sp.prod([x ** e for x, e in zip(xs, a)])
                     for m, a in enumerate(exps)))
    return xs, X, unknowns


def operator_entries(G: sp.Matrix, scale: sp.Expr, X, xs, mode: str) -> list[sp.Expr]:
    n = len(xs)
    det = G.det()
    half_dlogdet = [sp.cancel(sp.diff(det, x) / (2 * det)) for x in xs]
    div = sum(sp.diff(X[k], xs[k]) + X[k] * half_dlogdet[k] for k in range(n))
    out = []
    for i in range(n):
        for j in range(i, n):
            lie = sum(X[k] * sp.diff(G[i, j], xs[k]) + G[k, j] * sp.diff(X[k], xs[i])
                      + G[i, k] * sp.diff(X[k], xs[j]) for k in range(n))
            e = lie if mode == "killing" else lie - sp.Rational(2, n) * div * G[i, j]
            out.append(e / scale)
    return out


def coefficient_matrix(n: int, d: int, mode: str, label: str = "flat", factor: str = "one") -> sp.Matrix:
    """Rational matrix whose null space is the space of degree-``d`` polynomial solutions."""
    mode = normalize_mode(mode)
    G, scale = symbolic_metric(label, n, factor)
    xs, X, unknowns = _generic_field(n, d)
    rows = []
    for e in operator_entries(G, scale, X, xs, mode):
        num, _ = sp.fraction(sp.cancel(sp.together(e)))
        poly = sp.Poly(sp.expand(num), *xs)
        for coeff in poly.coeffs():
            rows.append([coeff.coeff(a) for a in unknowns])
    if not rows:
        return sp.zeros(0, len(unknowns))
    return sp.Matrix(rows)


@lru_cache(maxsize=None)
def exact_nullity(n: int, d: int, mode: str, label: str = "flat", factor: str = "one") -> int:
    """Dimension of polynomial fields of degree <= d solving the (conformal) Killing equation."""
    M = coefficient_matrix(n, d, mode, label, factor)
    return M.shape[1] - M.rank()
