"""Matrix measures (logarithmic norms) for weighted l1 / l-infinity norms."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DimensionError, NormKind, WeightedNorm

__all__ = [
    "MeasureKind",
    "MeasureReport",
    "NotMetzlerError",
    "is_metzler",
    "metzler_weight_condition",
    "mu1",
    "mu_inf",
    "mu_limit_oracle",
    "mu_weighted",
    "spectral_abscissa",
]


class NotMetzlerError(ValueError):
    pass


class MeasureKind(enum.Enum):
    L1 = "l1"
    LINF = "linf"
    L1_WEIGHTED = "l1_weighted"
    LINF_WEIGHTED = "linf_weighted"
    SIMILARITY = "similarity"


@dataclass(frozen=True)
class MeasureReport:
    value: float
    kind: MeasureKind
    argmax_index: int
    metzler: bool

    def to_dict(self) -> dict:
        return {"value": self.value, "kind": self.kind.value,
                "argmax_index": self.argmax_index, "metzler": self.metzler}


def _square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    return A


def is_metzler(A, tol: float = 0.0) -> bool:
    A = _square(A)
    off = A[~np.eye(A.shape[0], dtype=bool)]
    return bool(np.all(off >= -tol))


def column_measure(A: np.ndarray, j: int) -> float:
    """``A[j, j] + sum_{i != j} |A[i, j]|``."""
    col = np.abs(A[:, j])
    col[j] = A[j, j]
    return float(np.sum(col))


def _argmax(values: list) -> int:
    # first occurrence: ties break toward the smallest index
    return int(np.argmax(values))


def mu1(A) -> MeasureReport:
    A = _square(A)
    sums = [column_measure(A, j) for j in range(A.shape[0])]
    k = _argmax(sums)
    return MeasureReport(sums[k], MeasureKind.L1, k, is_metzler(A))


def mu_inf(A) -> MeasureReport:
    A = _square(A)
    sums = [column_measure(A.T, i) for i in range(A.shape[0])]
    k = _argmax(sums)
    return MeasureReport(sums[k], MeasureKind.LINF, k, is_metzler(A))


def scaled_matrix(A, norm: WeightedNorm) -> np.ndarray:
    """``P A P^-1`` with ``P = diag(norm.scaling)``."""
    A = _square(A)
    if norm.dim != A.shape[0]:
        raise DimensionError("norm and matrix dimensions differ")
    p = norm.scaling
    return p[:, None] * A / p[None, :]


def mu_weighted(A, norm: WeightedNorm) -> MeasureReport:
    """Measure induced by a weighted norm, via the diagonal similarity.

    For L1 weights ``v`` this is ``mu1(diag(v) A diag(v)^-1)``; for LINF
    weights ``w`` it is ``mu_inf(diag(w)^-1 A diag(w))``.
    """
    B = scaled_matrix(A, norm)
    if norm.kind is NormKind.L1:
        rep = mu1(B)
        kind = MeasureKind.L1_WEIGHTED
    else:
        rep = mu_inf(B)
        kind = MeasureKind.LINF_WEIGHTED
    return MeasureReport(rep.value, kind, rep.argmax_index, is_metzler(A))


def _induced_norm(M: np.ndarray, kind: NormKind) -> float:
    if kind is NormKind.L1:
        return float(np.max(np.sum(np.abs(M), axis=0)))
    return float(np.max(np.sum(np.abs(M), axis=1)))


DEFAULT_H_SCHEDULE = (1e-4, 1e-5, 1e-6, 1e-7, 1e-8)


def mu_limit_oracle(A, norm: WeightedNorm, h_schedule: Sequence[float] = DEFAULT_H_SCHEDULE) -> float:
    """Evaluate ``lim_{h->0+} (||I + hA|| - 1) / h`` from the definition.

    Test-only: the certification code uses the closed forms. The difference
    quotient is taken for every ``h``; the last three are combined by
    polynomial (Richardson) extrapolation to ``h = 0``.
    """
    h = np.asarray(h_schedule, dtype=float)
    if h.size == 0 or np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise ValueError("h_schedule must be nonempty, positive and strictly decreasing")
    B = scaled_matrix(A, norm)
    eye = np.eye(B.shape[0])
    q = np.array([(_induced_norm(eye + hk * B, norm.kind) - 1.0) / hk for hk in h])
    if h.size == 1:
        return float(q[0])
    hs, qs = h[-3:], q[-3:]
    # Lagrange interpolation through (hs, qs), evaluated at zero
    total = 0.0
    for i in range(hs.size):
        wgt = 1.0
        for j in range(hs.size):
            if j != i:
                wgt *= hs[j] / (hs[j] - hs[i])
        total += wgt * qs[i]
    return float(total)


def metzler_weight_condition(A, norm: WeightedNorm, c: float) -> bool:
    """Strict weighted column/row-sum test for a Metzler matrix.

    L1 weights ``v``: ``v^T A < c v^T``. LINF weights ``w``: ``A w < c w``.
    Both inequalities are elementwise and exact (no tolerance).
    """
    A = _square(A)
    if norm.dim != A.shape[0]:
        raise DimensionError("norm and matrix dimensions differ")
    if not is_metzler(A, 1e-12):
        raise NotMetzlerError("weight condition is only an equivalence for Metzler matrices")
    w = norm.weights
    if norm.kind is NormKind.L1:
        return bool(np.all(w @ A < c * w))
    return bool(np.all(A @ w < c * w))


def spectral_abscissa(A) -> float:
    return float(np.max(np.linalg.eigvals(_square(A)).real))
