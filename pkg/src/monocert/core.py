"""Shared domain types: system models, domain boxes, weighted norms, trajectories."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "DimensionError",
    "DomainBox",
    "NormKind",
    "SystemModel",
    "Trajectory",
    "WeightedNorm",
    "as_vector",
    "check_jacobian",
    "norm_eval",
    "partial_order_leq",
]

DEFAULT_TRUNCATION = 10.0


class DimensionError(ValueError):
    """Raised when vector or matrix dimensions do not agree."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def as_vector(x, dim: Optional[int] = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {x.shape[0]}")
    return x


@dataclass(frozen=True)
class DomainBox:
    """Hard state bounds plus the finite box used for sampling.

    ``lower``/``upper`` may contain infinities; ``trunc_lower``/``trunc_upper``
    are always finite and nested inside them.
    """

    lower: np.ndarray
    upper: np.ndarray
    trunc_lower: np.ndarray
    trunc_upper: np.ndarray

    def __post_init__(self):
        for name in ("lower", "upper", "trunc_lower", "trunc_upper"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        shapes = {a.shape for a in (self.lower, self.upper, self.trunc_lower, self.trunc_upper)}
        if len(shapes) != 1 or self.lower.ndim != 1:
            raise DimensionError("domain bounds must be vectors of equal length")
        if not (np.all(np.isfinite(self.trunc_lower)) and np.all(np.isfinite(self.trunc_upper))):
            raise ValueError("truncation bounds must be finite")
        if not (np.all(self.lower <= self.trunc_lower)
                and np.all(self.trunc_lower <= self.trunc_upper)
                and np.all(self.trunc_upper <= self.upper)):
            raise ValueError("need lower <= trunc_lower <= trunc_upper <= upper")

    @classmethod
    def from_bounds(cls, lower, upper, truncation=None) -> "DomainBox":
        """Build a box; the default truncation is ``[-10, 10]^n`` clipped to the bounds."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if truncation is None:
            tl = np.maximum(lower, -DEFAULT_TRUNCATION)
            tu = np.minimum(upper, DEFAULT_TRUNCATION)
        else:
            tl, tu = (np.asarray(b, dtype=float) for b in truncation)
        return cls(lower, upper, tl, tu)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def in_truncation(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.trunc_lower - tol) and np.all(x <= self.trunc_upper + tol))

    def to_dict(self) -> dict:
        # The certificate is only claimed on the truncation box.
        return {"lower": self.trunc_lower.tolist(), "upper": self.trunc_upper.tolist()}


@dataclass(frozen=True)
class SystemModel:
    """An ODE ``x' = f(t, x)`` with analytic Jacobian.

    ``field`` must accept states of shape ``(n,)`` or ``(batch, n)``;
    ``jacobian`` takes a single state and returns an ``(n, n)`` matrix.
    ``kinks``, when given, returns the switching-function values of a
    piecewise-smooth field (zero on a switching surface).
    """

    dim: int
    field: Callable[[float, np.ndarray], np.ndarray]
    jacobian: Callable[[float, np.ndarray], np.ndarray]
    domain: DomainBox
    autonomous: bool = True
    period: Optional[float] = None
    name: str = "model"
    kinks: Optional[Callable[[np.ndarray], np.ndarray]] = None
    equilibrium: Optional[np.ndarray] = None
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.domain.dim != self.dim:
            raise DimensionError("domain dimension does not match model dimension")
        if not self.autonomous and (self.period is None or not self.period > 0):
            raise ValueError("time-varying models need a positive period")
        if self.equilibrium is not None:
            object.__setattr__(self, "equilibrium", _frozen(self.equilibrium))

    def f(self, x, t: float = 0.0) -> np.ndarray:
        return np.asarray(self.field(t, np.asarray(x, dtype=float)), dtype=float)

    def J(self, x, t: float = 0.0) -> np.ndarray:
        return np.asarray(self.jacobian(t, as_vector(x, self.dim)), dtype=float)


class NormKind(enum.Enum):
    L1 = "l1"
    LINF = "linf"


@dataclass(frozen=True)
class WeightedNorm:
    """Weighted norm: ``sum(v*|x|)`` for L1 and ``max(|x|/w)`` for LINF."""

    kind: NormKind
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size == 0:
            raise DimensionError("weights must be a non-empty vector")
        if not np.all(w > 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and strictly positive")
        object.__setattr__(self, "kind", NormKind(self.kind))
        object.__setattr__(self, "weights", w)

    @classmethod
    def unit(cls, kind, dim: int) -> "WeightedNorm":
        return cls(NormKind(kind), np.ones(dim))

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def scaling(self) -> np.ndarray:
        """Diagonal of the similarity ``P`` with ``|x|_w = |P x|``."""
        return self.weights if self.kind is NormKind.L1 else 1.0 / self.weights

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionError(f"expected dimension {self.dim}, got {x.shape[-1]}")
        if self.kind is NormKind.L1:
            return np.sum(self.weights * np.abs(x), axis=-1)
        return np.max(np.abs(x) / self.weights, axis=-1)


def norm_eval(norm: WeightedNorm, x) -> float:
    return float(norm(as_vector(x, norm.dim)))


def partial_order_leq(x, y) -> bool:
    """Elementwise order on the positive orthant."""
    x = as_vector(x)
    y = as_vector(y, x.shape[0])
    return bool(np.all(x <= y))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    step: float

    def __post_init__(self):
        object.__setattr__(self, "times", _frozen(self.times))
        object.__setattr__(self, "states", _frozen(self.states))
        if self.states.shape[0] != self.times.shape[0]:
            raise DimensionError("states and times differ in length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return self.times.shape[0]


def check_jacobian(model: SystemModel, points, times=None) -> float:
    """Largest scaled mismatch between the analytic Jacobian and central differences.

    Points closer than two difference steps to a switching surface are
    skipped. Returns the worst ``|J - J_fd| / (1 + |J|)`` entry.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if times is None:
        times = np.zeros(len(points))
    worst = 0.0
    eye = np.eye(model.dim)
    for t, x in zip(times, points):
        h = 1e-6 * (1.0 + np.abs(x))
        if model.kinks is not None and np.min(np.abs(model.kinks(x))) < 4 * np.max(h) * (1 + np.max(np.abs(x))):
            continue
        fd = np.empty((model.dim, model.dim))
        for j in range(model.dim):
            step = h[j] * eye[j]
            fd[:, j] = (model.f(x + step, t) - model.f(x - step, t)) / (2 * h[j])
        J = model.J(x, t)
        worst = max(worst, float(np.max(np.abs(J - fd) / (1.0 + np.abs(J)))))
    return worst
