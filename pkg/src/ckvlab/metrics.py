"""Builtin metrics and conformal factors, addressable by label."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .tensor_core import Exponent, MetricProvider, Patch

METRIC_LABELS = ("flat", "conf-exp", "sphere-stereo", "hyperbolic-ball", "diag-poly")


@dataclass(frozen=True)
class ConformalFactor:
    """A positive function c(x) with its gradient."""

    label: str
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]


def _const2() -> ConformalFactor:
    return ConformalFactor("const-2", lambda x: 2.0, lambda x: np.zeros_like(x))


def _exp_x1(scale: float = 1.0) -> ConformalFactor:
    def value(x):
        return math.exp(scale * x[0])

    def grad(x):
        out = np.zeros_like(x)
        out[0] = scale * math.exp(scale * x[0])
        return out

    label = "exp-x1" if scale == 1.0 else f"exp-{scale:g}x1"
    return ConformalFactor(label, value, grad)


def _stereo(sign: float) -> ConformalFactor:
    # 4 / (1 + sign |x|^2)^2
    def value(x):
        return 4.0 / (1.0 + sign * float(x @ x)) ** 2

    def grad(x):
        return -16.0 * sign * x / (1.0 + sign * float(x @ x)) ** 3

    return ConformalFactor("sphere" if sign > 0 else "hyperbolic", value, grad)


FACTORS: Mapping[str, Callable[[], ConformalFactor]] = {
    "const-2": _const2,
    "exp-x1": _exp_x1,
    "sphere": lambda: _stereo(1.0),
}


def conformal_factor(label: str) -> ConformalFactor:
    try:
        return FACTORS[label]()
    except KeyError:
        raise ValidationError(f"unknown conformal factor {label!r}; choose from {sorted(FACTORS)}") from None


def conformally_flat(patch: Patch, factor: ConformalFactor, label: str) -> MetricProvider:
    """The metric ``c(x) * delta`` on ``patch``."""
    eye = np.eye(patch.dim)

    def eval(x):
        return factor.value(x) * eye

    def deriv(x, axis):
        return factor.grad(x)[axis] * eye

    return MetricProvider(patch, eval, deriv, label)


def scale_metric(g: MetricProvider, factor: ConformalFactor) -> MetricProvider:
    """The conformally related metric ``c * g`` (product rule for derivatives)."""

    def eval(x):
        return factor.value(x) * g.eval(x)

    def deriv(x, axis):
        return factor.grad(x)[axis] * g.eval(x) + factor.value(x) * g.deriv(x, axis)

    return MetricProvider(g.patch, eval, deriv, f"{factor.label}*{g.label}")


def flat(n: int, patch: Patch | None = None) -> MetricProvider:
    patch = patch or default_patch("flat", n)
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return MetricProvider(patch, lambda x: eye, lambda x, axis: zero, "flat")


def conf_exp(n: int, patch: Patch | None = None) -> MetricProvider:
    """``e^{2 x_1} delta``."""
    return conformally_flat(patch or default_patch("conf-exp", n), _exp_x1(2.0), "conf-exp")


def sphere_stereo(n: int, patch: Patch | None = None) -> MetricProvider:
    return conformally_flat(patch or default_patch("sphere-stereo", n), _stereo(1.0), "sphere-stereo")


def hyperbolic_ball(n: int, patch: Patch | None = None) -> MetricProvider:
    patch = patch or default_patch("hyperbolic-ball", n)
    corner = np.maximum(np.abs(patch.lower), np.abs(patch.upper))
    if float(corner @ corner) >= 1.0:
        raise ValidationError("hyperbolic-ball patch must lie strictly inside the unit ball")
    return conformally_flat(patch, _stereo(-1.0), "hyperbolic-ball")


Polynomial = Mapping[Exponent, float]


def _poly_value(poly: Polynomial, x: np.ndarray) -> float:
    return float(sum(c * np.prod(x ** np.array(a)) for a, c in poly.items()))


def _poly_partial(poly: Polynomial, axis: int) -> dict[Exponent, float]:
    out: dict[Exponent, float] = {}
    for a, c in poly.items():
        if a[axis]:
            b = a[:axis] + (a[axis] - 1,) + a[axis + 1:]
            out[b] = out.get(b, 0.0) + c * a[axis]
    return out


def default_diag_entries(n: int, amplitude: float = 0.5) -> list[dict[Exponent, float]]:
    """``g_ii = 1 + amplitude * x_{i+1}^2`` (indices cyclic)."""
    entries = []
    for i in range(n):
        sq = [0] * n
        sq[(i + 1) % n] = 2
        entries.append({(0,) * n: 1.0, tuple(sq): amplitude})
    return entries


def diag_poly(
    n: int,
    patch: Patch | None = None,
    entries: Sequence[Polynomial] | None = None,
    amplitude: float = 0.5,
) -> MetricProvider:
    """Diagonal metric whose entries are polynomials given as exponent maps."""
    patch = patch or default_patch("diag-poly", n)
    entries = default_diag_entries(n, amplitude) if entries is None else [dict(e) for e in entries]
    if len(entries) != n:
        raise ValidationError(f"diag-poly needs {n} diagonal entries, got {len(entries)}")
    entries = [{tuple(a): float(c) for a, c in e.items()} for e in entries]
    partials = [[_poly_partial(e, l) for e in entries] for l in range(n)]

    def eval(x):
        return np.diag([_poly_value(e, x) for e in entries])

    def deriv(x, axis):
        return np.diag([_poly_value(p, x) for p in partials[axis]])

    return MetricProvider(patch, eval, deriv, "diag-poly")


def default_patch(label: str, n: int) -> Patch:
    if n < 2:
        raise ValidationError(f"dimension n must be >= 2, got {n}")
    if label == "hyperbolic-ball":
        # corners at radius 0.8
        return Patch.cube(n, 0.8 / math.sqrt(n))
    return Patch.cube(n, 0.5)


_BUILDERS = {
    "flat": flat,
    "conf-exp": conf_exp,
    "sphere-stereo": sphere_stereo,
    "hyperbolic-ball": hyperbolic_ball,
    "diag-poly": diag_poly,
}


def get_metric(label: str, n: int, patch: Patch | None = None, **params) -> MetricProvider:
    if label not in _BUILDERS:
        raise ValidationError(f"unknown metric {label!r}; choose from {list(METRIC_LABELS)}")
    if n < 2:
        raise ValidationError(f"dimension n must be >= 2, got {n}")
    if patch is not None and patch.dim != n:
        raise ValidationError(f"patch dimension {patch.dim} does not match n={n}")
    return _BUILDERS[label](n, patch, **params)
