"""Exact jet-space dimension counts at a point.

For metrics on ``R^n`` near the origin, compares the dimension of the k-jets
of all metrics against the dimension of the parameter space of metrics of
the form ``c * psi^*(tau_y^* g)`` (conformal factor k-jet, origin-fixing
diffeomorphism (k+1)-jet, translation).  When the parameter count is
strictly smaller, the set of such jets has measure zero.

All arithmetic uses Python integers, so nothing overflows.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache
from math import comb

from .errors import ValidationError


def _check(n: int, k: int, n_min: int = 1) -> None:
    if n < n_min or k < 0:
        raise ValidationError(f"need n >= {n_min} and k >= 0, got n={n}, k={k}")


@lru_cache(maxsize=None)
def binom_pascal(a: int, b: int) -> int:
    """Binomial coefficient by Pascal's rule; an independent check on ``math.comb``."""
    if b < 0 or b > a:
        return 0
    if b == 0 or b == a:
        return 1
    return binom_pascal(a - 1, b - 1) + binom_pascal(a - 1, b)


def dim_factor_jets(n: int, k: int) -> int:
    """k-jets of scalar functions: ``C(n+k, k)``."""
    _check(n, k)
    return comb(n + k, k)


def dim_metric_jets(n: int, k: int) -> int:
    _check(n, k)
    return n * (n + 1) // 2 * comb(n + k, k)


def dim_diffeo_jets(n: int, k: int) -> int:
    """k-jets of diffeomorphisms fixing the origin."""
    _check(n, k)
    return n * comb(n + k, k) - n


def dim_domain(n: int, k: int) -> int:
    _check(n, k)
    return comb(n + k, k) + n * comb(n + k + 1, k + 1)


def sard_inequality_holds(n: int, k: int) -> bool:
    _check(n, k, n_min=2)
    return dim_domain(n, k) < dim_metric_jets(n, k)


@dataclass(frozen=True)
class JetDimensionRecord:
    n: int
    k: int
    dim_metric_jets: int
    dim_diffeo_jets: int
    dim_factor_jets: int
    dim_diffeo_jets_k_plus_1: int
    dim_domain: int
    holds: bool

    @property
    def margin(self) -> int:
        return self.dim_metric_jets - self.dim_domain

    def as_dict(self) -> dict:
        return asdict(self)


def jet_record(n: int, k: int) -> JetDimensionRecord:
    _check(n, k, n_min=2)
    return JetDimensionRecord(
        n=n,
        k=k,
        dim_metric_jets=dim_metric_jets(n, k),
        dim_diffeo_jets=dim_diffeo_jets(n, k),
        dim_factor_jets=dim_factor_jets(n, k),
        dim_diffeo_jets_k_plus_1=dim_diffeo_jets(n, k + 1),
        dim_domain=dim_domain(n, k),
        holds=sard_inequality_holds(n, k),
    )


CSV_COLUMNS = ("n", "k", "dim_metric_jets", "dim_factor_jets", "dim_diffeo_jets_k_plus_1", "dim_domain", "holds")


@dataclass(frozen=True)
class JetScan:
    rows: tuple[JetDimensionRecord, ...]
    n_values: tuple[int, ...]
    k_values: tuple[int, ...]

    @property
    def frontier(self) -> dict[int, int]:
        """Smallest scanned k with the inequality holding, per n (absent if none in range)."""
        out: dict[int, int] = {}
        for r in self.rows:
            if r.holds and r.n not in out:
                out[r.n] = r.k
        return out

    def monotone_after_frontier(self) -> dict[int, bool]:
        front = self.frontier
        return {n: all(r.holds for r in self.rows if r.n == n and r.k >= k0) for n, k0 in front.items()}

    def csv_rows(self) -> list[dict]:
        return [{c: getattr(r, c) for c in CSV_COLUMNS} for r in self.rows]

    def to_dict(self) -> dict:
        return {
            "n_range": [min(self.n_values), max(self.n_values)],
            "k_range": [min(self.k_values), max(self.k_values)],
            "rows": [r.as_dict() for r in self.rows],
            "frontier": {str(n): k for n, k in self.frontier.items()},
            "frontier_within_scan_bounds": True,
            "monotone_after_frontier": {str(n): v for n, v in self.monotone_after_frontier().items()},
        }


def scan(n_range, k_range) -> JetScan:
    """Tabulate records n-major then k, over finite iterables of n and k."""
    ns = tuple(sorted(set(n_range)))
    ks = tuple(sorted(set(k_range)))
    if not ns or not ks:
        raise ValidationError("scan ranges must be non-empty")
    rows = tuple(jet_record(n, k) for n in ns for k in ks)
    return JetScan(rows, ns, ks)
