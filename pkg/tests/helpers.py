"""Shared test fixtures: explicitly integrable flows and random polynomial fields."""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from ckvlab.ckv_solver import build_basis
from ckvlab.tensor_core import VectorFieldPoly

CATALOG = ("flat", "conf-exp", "sphere-stereo", "hyperbolic-ball", "diag-poly")


def random_field(n: int, degree: int, rng: np.random.Generator) -> VectorFieldPoly:
    basis = build_basis(n, degree)
    coeffs = rng.normal(size=len(basis))
    comps = [dict() for _ in range(n)]
    for c, (k, alpha) in zip(coeffs, ((k, a) for k in range(n) for a in basis.exponents)):
        comps[k][alpha] = c
    return VectorFieldPoly(n, tuple(comps))


def _poly(n, terms):
    return VectorFieldPoly(n, tuple(terms))


# Each flow: (field, jacobian of the time-t flow map at x).  All in R^3.
def flows(rng: np.random.Generator):
    M = rng.normal(size=(3, 3))
    return {
        "dilation": (
            VectorFieldPoly.linear(np.eye(3)),
            lambda t, x: np.exp(t) * np.eye(3),
        ),
        "shear": (
            _poly(3, [{(0, 1, 0): 1.0}, {}, {}]),
            lambda t, x: np.eye(3) + t * np.outer([1, 0, 0], [0, 1, 0]),
        ),
        "quadratic-shear": (
            _poly(3, [{(0, 2, 0): 1.0}, {}, {}]),
            lambda t, x: np.eye(3) + 2 * t * x[1] * np.outer([1, 0, 0], [0, 1, 0]),
        ),
        "triangular": (
            # X = (x2 x3, x3, 0); flow (x1 + t x2 x3 + t^2 x3^2 / 2, x2 + t x3, x3)
            _poly(3, [{(0, 1, 1): 1.0}, {(0, 0, 1): 1.0}, {}]),
            lambda t, x: np.array([
                [1.0, t * x[2], t * x[1] + t * t * x[2]],
                [0.0, 1.0, t],
                [0.0, 0.0, 1.0],
            ]),
        ),
        "linear": (
            VectorFieldPoly.linear(M),
            lambda t, x: expm(t * M),
        ),
    }


def flat_pullback_quotient(flow_jac, t: float, x) -> np.ndarray:
    """``(phi_t^* delta - delta) / t`` at ``x``, from the flow Jacobian."""
    J = flow_jac(t, np.asarray(x, dtype=float))
    return (J.T @ J - np.eye(len(x))) / t
