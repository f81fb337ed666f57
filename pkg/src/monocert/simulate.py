"""Fixed-step integration and empirical checks of the certified properties.

All checks integrate with classical RK4 on a uniform grid, so results are
reproducible bit-for-bit for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import SystemModel, Trajectory, WeightedNorm, as_vector

__all__ = [
    "EnvelopeReport",
    "EquilibriumError",
    "IntegrationError",
    "MonotonicityReport",
    "PoincareRecord",
    "check_entrainment",
    "check_flow_decay",
    "check_monotonicity",
    "check_pair_contraction",
    "find_equilibrium",
    "integrate",
    "integrate_batch",
    "poincare_map",
]

DEFAULT_STEP = 1e-2
DEFAULT_HORIZON = 100.0
ENVELOPE_SLACK = 1e-4
# distances below this are roundoff, not dynamics
ROUNDOFF_FLOOR = 1e-12
CLAMP_TOL = 1e-9


class IntegrationError(RuntimeError):
    def __init__(self, msg: str, time: float):
        super().__init__(msg)
        self.time = time


class EquilibriumError(RuntimeError):
    def __init__(self, msg: str, last_iterate: np.ndarray):
        super().__init__(msg)
        self.last_iterate = last_iterate


def _time_grid(t0: float, horizon: float, step: float) -> np.ndarray:
    if not step > 0:
        raise ValueError("step must be positive")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    n = int(np.ceil(horizon / step - 1e-9))
    times = t0 + step * np.arange(n + 1, dtype=float)
    times[-1] = t0 + horizon
    return times


def _clamp(model: SystemModel, x: np.ndarray, t: float) -> np.ndarray:
    lo, hi = model.domain.lower, model.domain.upper
    below = lo - x
    above = x - hi
    worst = max(float(np.max(below)), float(np.max(above)))
    if worst <= 0:
        return x
    if worst > CLAMP_TOL:
        raise IntegrationError(f"state left the domain by {worst:.3g} at t={t:.6g}", t)
    return np.clip(x, lo, hi)


def integrate_batch(model: SystemModel, x0, t0: float = 0.0, horizon: float = DEFAULT_HORIZON,
                    step: float = DEFAULT_STEP):
    """RK4 for a batch of initial states.

    Returns ``(times, states)`` with ``states`` of shape ``(len(times),) + x0.shape``.
    """
    x = np.array(x0, dtype=float)
    if x.shape[-1] != model.dim:
        raise ValueError(f"initial state has dimension {x.shape[-1]}, model has {model.dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("initial state must be finite")
    times = _time_grid(t0, horizon, step)
    out = np.empty((times.size,) + x.shape)
    out[0] = x
    f = model.field
    for k in range(times.size - 1):
        t = times[k]
        h = times[k + 1] - t
        k1 = f(t, x)
        k2 = f(t + h / 2, x + h / 2 * k1)
        k3 = f(t + h / 2, x + h / 2 * k2)
        k4 = f(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state at t={times[k + 1]:.6g}", float(times[k + 1]))
        x = _clamp(model, x, float(times[k + 1]))
        out[k + 1] = x
    return times, out


def integrate(model: SystemModel, x0, t0: float = 0.0, horizon: float = DEFAULT_HORIZON,
              step: float = DEFAULT_STEP) -> Trajectory:
    x0 = as_vector(x0, model.dim)
    times, states = integrate_batch(model, x0, t0, horizon, step)
    return Trajectory(times, states, step)


def find_equilibrium(model: SystemModel, x0_guess, step: float = DEFAULT_STEP,
                     chunk: float = 10.0, horizon_cap: float = 1e4,
                     settle_tol: float = 1e-6, tol: float = 1e-10) -> np.ndarray:
    """Integrate toward an equilibrium, then polish with Newton steps."""
    if not model.autonomous:
        raise ValueError("equilibria are only defined for autonomous models")
    x = as_vector(x0_guess, model.dim).copy()
    elapsed = 0.0
    while np.max(np.abs(model.f(x))) >= settle_tol:
        if elapsed >= horizon_cap:
            raise EquilibriumError("trajectory did not settle within the horizon cap", x)
        _, states = integrate_batch(model, x, elapsed, chunk, step)
        x = states[-1]
        elapsed += chunk
    for _ in range(50):
        fx = model.f(x)
        if np.max(np.abs(fx)) < tol:
            return x
        try:
            dx = np.linalg.solve(model.J(x), fx)
        except np.linalg.LinAlgError:
            raise EquilibriumError("singular Jacobian during Newton polish", x) from None
        x = x - dx
    if np.max(np.abs(model.f(x))) < tol:
        return x
    raise EquilibriumError("Newton polish did not reach the tolerance", x)


@dataclass(frozen=True)
class MonotonicityReport:
    passed: bool
    worst_violation: float
    time: Optional[float] = None
    component: Optional[int] = None


def check_monotonicity(model: SystemModel, x0, y0, horizon: float = DEFAULT_HORIZON,
                       step: float = DEFAULT_STEP, tol: float = 1e-9) -> MonotonicityReport:
    x0 = as_vector(x0, model.dim)
    y0 = as_vector(y0, model.dim)
    if np.any(x0 > y0):
        raise ValueError("initial conditions must satisfy x0 <= y0")
    times, states = integrate_batch(model, np.stack([x0, y0]), 0.0, horizon, step)
    gap = states[:, 0, :] - states[:, 1, :]
    k, i = np.unravel_index(int(np.argmax(gap)), gap.shape)
    worst = float(gap[k, i])
    if worst <= tol:
        return MonotonicityReport(True, worst)
    return MonotonicityReport(False, worst, float(times[k]), int(i))


@dataclass(frozen=True)
class EnvelopeReport:
    """Outcome of an ``lhs(t) <= exp(c t) * lhs(0)`` check on the grid."""

    passed: bool
    worst_excess: float
    time: Optional[float] = None
    lhs: np.ndarray = field(default=None, repr=False)
    times: np.ndarray = field(default=None, repr=False)


def _envelope(times, lhs, c: float, slack: float) -> EnvelopeReport:
    bound = np.exp(c * (times - times[0])) * lhs[0] * (1.0 + slack) + ROUNDOFF_FLOOR
    excess = lhs - bound
    k = int(np.argmax(excess))
    ok = bool(excess[k] <= 0)
    return EnvelopeReport(ok, float(excess[k]), None if ok else float(times[k]), lhs, times)


def check_pair_contraction(model: SystemModel, x0, y0, norm: WeightedNorm, c: float,
                           horizon: float = DEFAULT_HORIZON, step: float = DEFAULT_STEP,
                           slack: float = ENVELOPE_SLACK) -> EnvelopeReport:
    """``|x(t) - y(t)| <= e^{ct} |x0 - y0| (1 + slack)`` in the weighted norm."""
    x0 = as_vector(x0, model.dim)
    y0 = as_vector(y0, model.dim)
    times, states = integrate_batch(model, np.stack([x0, y0]), 0.0, horizon, step)
    dist = norm(states[:, 0, :] - states[:, 1, :])
    return _envelope(times, dist, c, slack)


def check_flow_decay(model: SystemModel, x0, norm: WeightedNorm, c: float,
                     horizon: float = DEFAULT_HORIZON, step: float = DEFAULT_STEP,
                     slack: float = ENVELOPE_SLACK) -> EnvelopeReport:
    """``|f(x(t))| <= e^{ct} |f(x0)| (1 + slack)`` in the weighted norm."""
    if not model.autonomous:
        raise ValueError("flow decay is only claimed for autonomous models")
    x0 = as_vector(x0, model.dim)
    times, states = integrate_batch(model, x0, 0.0, horizon, step)
    flows = norm(model.field(0.0, states))
    return _envelope(times, flows, c, slack)


# ---------------------------------------------------------------- periodic

def _period_steps(model: SystemModel, step: float) -> float:
    if model.autonomous or model.period is None:
        raise ValueError("Poincare map needs a periodic (non-autonomous) model")
    n = max(1, int(round(model.period / step)))
    return model.period / n


def poincare_map(model: SystemModel, xi, step: float = DEFAULT_STEP) -> np.ndarray:
    """Flow over one full period starting at ``t = 0``."""
    h = _period_steps(model, step)
    _, states = integrate_batch(model, as_vector(xi, model.dim), 0.0, model.period, h)
    return states[-1]


@dataclass
class PoincareRecord:
    """Poincare iterates from one start and their distances to the fixed point.

    ``epsilon``, ``delta`` and ``contraction_factor`` are fitted so that
    distances above ``epsilon`` drop by at least ``delta`` per period and
    distances at or below it shrink by ``contraction_factor``.
    """

    iterates: List[np.ndarray]
    distances: List[float]
    epsilon: float
    delta: float
    contraction_factor: float
    fixed_point: np.ndarray
    fixed_point_iterations: int
    passed: bool
    excursions: int = 0
    violations: List[str] = field(default_factory=list)

    def first_within(self, tol: float) -> Optional[int]:
        for k, d in enumerate(self.distances):
            if d <= tol:
                return k
        return None

    def to_dict(self) -> dict:
        return {
            "iterates": [list(map(float, x)) for x in self.iterates],
            "distances": [float(d) for d in self.distances],
            "epsilon": self.epsilon,
            "delta": self.delta,
            "contraction_factor": self.contraction_factor,
            "fixed_point": [float(v) for v in self.fixed_point],
            "fixed_point_iterations": self.fixed_point_iterations,
            "passed": self.passed,
            "excursions": self.excursions,
            "violations": list(self.violations),
        }


def fit_piecewise_decrease(distances, floor: float = ROUNDOFF_FLOOR):
    """Fit ``(epsilon, delta, factor)`` for the two-regime decrease of a distance sequence.

    Among thresholds ``epsilon`` drawn from the sequence itself, keeps those
    for which the head (above ``epsilon``) decreases by a positive ``delta``
    with ``delta >= (1 - factor) * epsilon`` and the tail ratio ``factor`` is
    below one; returns the one with the smallest factor. ``None`` when no
    threshold works.
    """
    d = np.asarray(distances, dtype=float)
    live = d > floor
    if not live.any():
        return floor, floor, 0.0
    pairs = [(d[k], d[k + 1]) for k in range(d.size - 1) if live[k]]
    if not pairs:
        return float(d[live].max()), floor, 0.0
    best = None
    for eps in sorted({float(x) for x in d[live]}, reverse=True):
        head = [a - b for a, b in pairs if a > eps]
        tail = [max(b, 0.0) / a for a, b in pairs if a <= eps]
        factor = max(tail) if tail else 0.0
        delta = min(head) if head else (1.0 - factor) * eps
        if factor >= 1.0 or delta <= 0 or delta < (1.0 - factor) * eps * (1 - 1e-6):
            continue
        if best is None or factor < best[2]:
            best = (eps, delta, factor)
    return best


def check_entrainment(model: SystemModel, xi0, k_max: int, norm: WeightedNorm,
                      step: float = DEFAULT_STEP, fixed_point_tol: float = 1e-12,
                      max_fixed_iter: int = 5000) -> PoincareRecord:
    """Locate the periodic orbit by Picard iteration and check the decrease structure.

    The caller is responsible for having certified a nonexpansive norm with
    strictness somewhere along the orbit; ``norm`` should be that
    certificate's norm.
    """
    xi = as_vector(xi0, model.dim).copy()
    iterates = [xi.copy()]
    n_iter = 0
    while True:
        nxt = poincare_map(model, xi, step)
        n_iter += 1
        if len(iterates) <= k_max:
            iterates.append(nxt.copy())
        if float(norm(nxt - xi)) < fixed_point_tol:
            xi = nxt
            break
        if n_iter >= max_fixed_iter:
            raise IntegrationError(f"no fixed point after {n_iter} Poincare iterations", n_iter * model.period)
        xi = nxt
    gamma = xi
    while len(iterates) <= k_max:
        iterates.append(poincare_map(model, iterates[-1], step))

    distances = [float(norm(x - gamma)) for x in iterates]
    excursions = sum(not model.domain.in_truncation(x) for x in iterates)
    floor = ROUNDOFF_FLOOR * (1.0 + float(np.max(np.abs(gamma))))
    violations = []
    fit = fit_piecewise_decrease(distances, floor)
    if fit is None:
        violations.append("no (epsilon, delta, factor) reproduces the two-regime decrease")
        eps, delta, factor = np.nan, np.nan, np.nan
    else:
        eps, delta, factor = fit
    d = np.asarray(distances)
    for k in range(d.size - 1):
        if d[k + 1] > d[k] + floor:
            violations.append(f"distance increased at iterate {k + 1}")
        elif d[k] > 1e-8 and not d[k + 1] < d[k]:
            violations.append(f"distance stalled at iterate {k + 1}")
    return PoincareRecord(iterates, distances, float(eps), float(delta), float(factor), gamma,
                          n_iter, not violations, excursions, violations)
