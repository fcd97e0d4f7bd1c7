"""Bump-function perturbations of a metric and symmetry-breaking trials."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ckv_solver import CKVReport, SolverConfig, count_ckv
from .errors import NotPositiveDefinite, ValidationError
from .metrics import conformal_factor, scale_metric
from .tensor_core import MetricProvider, Patch

#: Perturbed metrics must keep this fraction of the base metric's smallest eigenvalue.
PD_MARGIN = 1e-3
PD_GRID = 7
DEFAULT_EPS = 0.05


@dataclass(frozen=True)
class BumpSpec:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValidationError(f"bump radius must be positive, got {self.radius}")

    def check_inside(self, patch: Patch) -> None:
        c = np.array(self.center)
        if c.shape != (patch.dim,) or np.any(c - self.radius < patch.lower) or np.any(c + self.radius > patch.upper):
            raise ValidationError(f"bump ball (center {self.center}, radius {self.radius}) leaves patch {patch.box}")

    @classmethod
    def centered(cls, patch: Patch, fraction: float = 0.9) -> BumpSpec:
        return cls(tuple(patch.center), fraction * 0.5 * float(np.min(patch.edges)))


def bump(spec: BumpSpec, x) -> float:
    """``exp(1 / (|x - c|^2 / r^2 - 1))`` inside the ball, zero outside."""
    s = float(np.sum((np.asarray(x, dtype=float) - spec.center) ** 2)) / spec.radius ** 2
    if s >= 1.0:
        return 0.0
    return math.exp(1.0 / (s - 1.0))


def bump_gradient(spec: BumpSpec, x) -> np.ndarray:
    diff = np.asarray(x, dtype=float) - spec.center
    s = float(diff @ diff) / spec.radius ** 2
    if s >= 1.0:
        return np.zeros_like(diff)
    rho = math.exp(1.0 / (s - 1.0))
    return -rho / (s - 1.0) ** 2 * 2.0 * diff / spec.radius ** 2


def random_direction(n: int, seed: int) -> np.ndarray:
    """Symmetrized uniform [-1, 1] matrix rescaled to unit max-entry."""
    rng = np.random.default_rng(seed)
    U = rng.uniform(-1.0, 1.0, size=(n, n))
    S = 0.5 * (U + U.T)
    return S / np.max(np.abs(S))


@dataclass(frozen=True)
class PerturbationSpec:
    bump: BumpSpec
    direction: np.ndarray = field(repr=False)
    epsilon: float
    seed: int | None = None

    def __post_init__(self):
        S = np.array(self.direction, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or not np.array_equal(S, S.T):
            raise ValidationError("perturbation direction must be a symmetric square matrix")
        peak = np.max(np.abs(S))
        if peak > 0:
            S = S / peak
        S.setflags(write=False)
        object.__setattr__(self, "direction", S)

    @classmethod
    def random(cls, patch: Patch, epsilon: float, seed: int, bump: BumpSpec | None = None) -> PerturbationSpec:
        return cls(bump or BumpSpec.centered(patch), random_direction(patch.dim, seed), epsilon, seed)

    def as_dict(self) -> dict:
        return {
            "center": list(self.bump.center),
            "radius": self.bump.radius,
            "direction": self.direction.tolist(),
            "eps": self.epsilon,
            "seed": self.seed,
        }


def perturb_metric(g: MetricProvider, spec: PerturbationSpec, check_grid: int = PD_GRID) -> MetricProvider:
    """``g + eps * rho * S``, verified positive definite on a closed ``check_grid^n`` grid."""
    spec.bump.check_inside(g.patch)
    S = spec.direction
    if S.shape != (g.dim, g.dim):
        raise ValidationError(f"direction shape {S.shape} does not match dimension {g.dim}")
    eps = float(spec.epsilon)
    b = spec.bump

    def eval(x):
        return g.eval(x) + (eps * bump(b, x)) * S

    def deriv(x, axis):
        return g.deriv(x, axis) + (eps * bump_gradient(b, x)[axis]) * S

    for x in g.patch.grid(check_grid):
        base_min = np.linalg.eigvalsh(g.eval(x))[0]
        new_min = np.linalg.eigvalsh(eval(x))[0]
        if new_min < PD_MARGIN * base_min:
            raise NotPositiveDefinite(x, new_min, PD_MARGIN * base_min)

    label = f"{g.label}+bump(eps={eps:g},seed={spec.seed})" if eps else g.label
    return MetricProvider(g.patch, eval, deriv, label)


@dataclass(frozen=True)
class TrialRecord:
    base: str
    perturbation: PerturbationSpec
    before: CKVReport
    after: CKVReport | None
    error: str | None = None

    @property
    def valid(self) -> bool:
        return self.after is not None

    def to_dict(self) -> dict:
        expected = self.before.nullity
        return {
            "base": self.base,
            "seed": self.perturbation.seed,
            "perturbation": self.perturbation.as_dict(),
            "valid": self.valid,
            "error": self.error,
            "before": self.before.to_dict(expected),
            "after": self.after.to_dict(expected) if self.after else None,
        }

    def summary_row(self) -> dict:
        return {
            "seed": self.perturbation.seed,
            "eps": self.perturbation.epsilon,
            "before": self.before.nullity,
            "after": self.after.nullity if self.after else "",
            "ambiguous": self.after.ambiguous if self.after else "",
            "valid": self.valid,
        }


def run_genericity_trial(
    base: MetricProvider,
    config: SolverConfig,
    eps: float = DEFAULT_EPS,
    seed: int = 0,
    before: CKVReport | None = None,
    bump_spec: BumpSpec | None = None,
) -> TrialRecord:
    """Perturb ``base`` along a seeded random direction and recount.

    A failed positive-definiteness check yields an invalid record rather
    than an exception; the seed is never redrawn.
    """
    before = before if before is not None else count_ckv(base, config)
    spec = PerturbationSpec.random(base.patch, eps, seed, bump_spec)
    try:
        g = perturb_metric(base, spec)
    except NotPositiveDefinite as exc:
        return TrialRecord(base.label, spec, before, None, str(exc))
    return TrialRecord(base.label, spec, before, count_ckv(g, config))


def run_battery(
    base: MetricProvider,
    config: SolverConfig,
    eps: float = DEFAULT_EPS,
    seeds=range(20),
) -> list[TrialRecord]:
    before = count_ckv(base, config)
    return [run_genericity_trial(base, config, eps, s, before) for s in sorted(seeds)]


def conformal_invariance_check(
    g: MetricProvider, factor: str, config: SolverConfig
) -> tuple[CKVReport, CKVReport]:
    """Conformal-mode reports for ``g`` and ``c * g``."""
    c = conformal_factor(factor)
    if config.mode != "conformal-killing":
        config = SolverConfig("conformal-killing", config.degree, config.grid, config.rel_tol, config.gap_min)
    for x in g.patch.grid(PD_GRID):
        if not c.value(x) > 0:
            raise ValidationError(f"conformal factor {factor!r} is not positive at {tuple(x)}")
    return count_ckv(g, config), count_ckv(scale_metric(g, c), config)
