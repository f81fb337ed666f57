"""Separable Lyapunov functions implied by weight certificates.

Sum certificates give ``sum_i v_i |x_i - x*_i|`` and ``sum_i v_i |f_i(x)|``;
max certificates give ``max_i |x_i - x*_i| / w_i`` and ``max_i |f_i(x)| / w_i``.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from .certify import CertKind, CertStatus, WeightCertificate
from .core import DimensionError, SystemModel, as_vector
from .simulate import IntegrationError, integrate_batch

__all__ = ["DecreaseReport", "LyapunovError", "LyapunovForm", "LyapunovFunction", "build",
           "decrease_along", "decrease_along_many", "write_series_csv"]

JUMP_TOL = 1e-6
SCALE_FLOOR = 1e-9


class LyapunovError(ValueError):
    pass


class LyapunovForm(enum.Enum):
    STATE_SUM = "state_sum"
    FLOW_SUM = "flow_sum"
    STATE_MAX = "state_max"
    FLOW_MAX = "flow_max"

    @property
    def is_sum(self) -> bool:
        return self in (LyapunovForm.STATE_SUM, LyapunovForm.FLOW_SUM)

    @property
    def is_state(self) -> bool:
        return self in (LyapunovForm.STATE_SUM, LyapunovForm.STATE_MAX)


@dataclass(frozen=True)
class LyapunovFunction:
    form: LyapunovForm
    weights: np.ndarray
    equilibrium: Optional[np.ndarray] = None
    model: Optional[SystemModel] = None

    def __post_init__(self):
        form = LyapunovForm(self.form)
        object.__setattr__(self, "form", form)
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or not np.all(w > 0):
            raise LyapunovError("weights must be a positive vector")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if form.is_state:
            if self.equilibrium is None:
                raise LyapunovError(f"{form.value} needs an equilibrium")
            object.__setattr__(self, "equilibrium", as_vector(self.equilibrium, w.size))
        elif self.model is None:
            raise LyapunovError(f"{form.value} needs a model")
        elif self.model.dim != w.size:
            raise DimensionError("model and weight dimensions differ")

    @property
    def dim(self) -> int:
        return self.weights.size

    def _components(self, x: np.ndarray, t) -> np.ndarray:
        if self.form.is_state:
            return np.abs(x - self.equilibrium)
        return np.abs(self.model.field(t, x))

    def __call__(self, x, t=0.0):
        """Evaluate at a state or a batch of states ``(..., n)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise DimensionError(f"expected states of dimension {self.dim}, got shape {x.shape}")
        comp = self._components(x, t)
        if self.form.is_sum:
            return comp @ self.weights
        return np.max(comp / self.weights, axis=-1)

    def eval(self, x, t=0.0) -> float:
        return float(self(as_vector(x, self.dim), t))


def build(cert: WeightCertificate, form, equilibrium=None, model: Optional[SystemModel] = None) -> LyapunovFunction:
    """Lyapunov function of the requested form from a usable certificate."""
    form = LyapunovForm(form)
    want = CertKind.SUM_L1 if form.is_sum else CertKind.MAX_LINF
    if cert.kind is not want:
        raise LyapunovError(f"{form.value} needs a {want.value} certificate, got {cert.kind.value}")
    if cert.status is CertStatus.FAILED or not cert.usable:
        raise LyapunovError(f"certificate status {cert.status.value} does not give a Lyapunov function")
    if equilibrium is None:
        equilibrium = cert.equilibrium
    if equilibrium is None and model is not None:
        equilibrium = model.equilibrium
    if form.is_state and equilibrium is None:
        raise LyapunovError(f"{form.value} needs an equilibrium")
    return LyapunovFunction(form, cert.weights, equilibrium if form.is_state else None,
                            model if not form.is_state else None)


@dataclass
class DecreaseReport:
    passed: bool
    max_jump: float
    scale: float
    initial: float
    final: float
    times: np.ndarray
    states: np.ndarray
    values: np.ndarray
    left_box_at: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {"passed": self.passed, "max_jump": self.max_jump, "scale": self.scale,
                "initial": self.initial, "final": self.final,
                "left_box_at": self.left_box_at, "error": self.error}


def decrease_along(V: LyapunovFunction, model: SystemModel, x0, horizon: float = 100.0,
                   step: float = 1e-2) -> DecreaseReport:
    """Integrate from ``x0`` and check that ``V`` never increases by more than ``1e-6 * scale``.

    ``scale`` is ``max(V(x0), 1e-9)``. Passing also needs ``V(end) < V(start)``
    unless ``V(start) == 0``. Leaving the truncation box is recorded, not fatal.
    """
    x0 = as_vector(x0, model.dim)
    if not model.domain.contains(x0):
        raise ValueError("x0 lies outside the model domain")
    try:
        times, states = integrate_batch(model, x0, 0.0, horizon, step)
    except IntegrationError as exc:
        return DecreaseReport(False, np.inf, 1.0, V.eval(x0), np.nan, np.zeros(1), x0[None],
                              np.array([V.eval(x0)]), None, str(exc))
    return _report(V, model, times, states)


def _report(V: LyapunovFunction, model: SystemModel, times, states) -> DecreaseReport:
    if V.form.is_state or model.autonomous:
        values = V(states)
    else:
        values = np.array([V(x, t) for t, x in zip(times, states)])
    initial, final = float(values[0]), float(values[-1])
    scale = max(initial, SCALE_FLOOR)
    max_jump = float(max(np.diff(values).max(initial=0.0), 0.0))
    box = model.domain
    inside = np.all((states >= box.trunc_lower) & (states <= box.trunc_upper), axis=-1)
    outside = np.flatnonzero(~inside)
    left = float(times[outside[0]]) if outside.size else None
    passed = max_jump <= JUMP_TOL * scale and (final < initial or initial == 0.0)
    return DecreaseReport(bool(passed), max_jump, scale, initial, final, times, states, values, left)


def decrease_along_many(V: LyapunovFunction, model: SystemModel, starts, horizon: float = 100.0,
                        step: float = 1e-2) -> List[DecreaseReport]:
    """:func:`decrease_along` for several starts, integrated as one batch."""
    starts = np.asarray(starts, dtype=float)
    if starts.ndim != 2 or starts.shape[1] != model.dim:
        raise DimensionError(f"expected starts of shape (k, {model.dim})")
    if not all(model.domain.contains(x) for x in starts):
        raise ValueError("a start lies outside the model domain")
    times, states = integrate_batch(model, starts, 0.0, horizon, step)
    return [_report(V, model, times, states[:, k]) for k in range(starts.shape[0])]


def write_series_csv(path, report: DecreaseReport) -> Path:
    """Write ``t, x_1..x_n, V`` rows at 17 significant digits."""
    path = Path(path)
    n = report.states.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x_{i + 1}" for i in range(n)] + ["V"])
        for t, x, v in zip(report.times, report.states, report.values):
            w.writerow([f"{t:.17g}"] + [f"{xi:.17g}" for xi in x] + [f"{v:.17g}"])
    return path
