"""Numerical detection of conformal Killing fields on coordinate patches."""

from .ckv_solver import CKVReport, CollocationGrid, PolyVectorBasis, SolverConfig, build_basis, count_ckv
from .errors import (
    CKVLabError,
    NotPositiveDefinite,
    NumericalError,
    OutOfPatch,
    RowDeficient,
    SingularMetric,
    ValidationError,
)
from .metrics import get_metric
from .tensor_core import MetricProvider, Patch, SymTensor2, VectorFieldPoly

__version__ = "0.1.0"
