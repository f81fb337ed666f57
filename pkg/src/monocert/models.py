"""Built-in monotone example systems with analytic Jacobians.

Every constructor validates its parameters and returns an immutable
:class:`~monocert.core.SystemModel`. Fields accept batched states
``(..., n)`` so that several initial conditions integrate together.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import DomainBox, SystemModel
from .measures import is_metzler

__all__ = [
    "ModelError",
    "ModelName",
    "ModelSpec",
    "comparison",
    "linear",
    "multiagent",
    "multiagent_forced",
    "traffic",
    "traffic_equilibrium",
    "traffic_limit_weights",
]


class ModelError(ValueError):
    """Invalid model parameters."""


class ModelName(enum.Enum):
    LINEAR = "linear"
    COMPARISON = "comparison"
    MULTIAGENT = "multiagent"
    TRAFFIC = "traffic"
    MULTIAGENT_FORCED = "multiagent_forced"


# ---------------------------------------------------------------- linear

def linear(A) -> SystemModel:
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ModelError("A must be square")
    if not is_metzler(A, 1e-12):
        raise ModelError("A must be Metzler")
    A.setflags(write=False)
    n = A.shape[0]

    def f(t, x):
        return x @ A.T

    def jac(t, x):
        return A.copy()

    eq = np.zeros(n) if abs(np.linalg.det(A)) > 1e-12 else None
    return SystemModel(
        dim=n, field=f, jacobian=jac,
        domain=DomainBox.from_bounds(np.full(n, -np.inf), np.full(n, np.inf)),
        name="linear", equilibrium=eq, params={"A": A.tolist()},
    )


# ------------------------------------------------------------ comparison

def comparison(scale: float = 0.5) -> SystemModel:
    """Two-state comparison system with ``gamma(s) = scale * s / (1 + s)``."""
    s = float(scale)
    if not 0.0 < s < 1.0:
        raise ModelError("scale must lie in (0, 1) so that sup gamma < 1")

    def beta(sig):
        return sig / (1.0 + sig)

    def gamma(sig):
        return s * sig / (1.0 + sig)

    def f(t, x):
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        sig = np.expm1(x1)
        return np.stack([-beta(sig) + x2, -2.0 * x2 - x2**2 + gamma(sig) ** 2], axis=-1)

    def jac(t, x):
        x1, x2 = x
        e = np.exp(x1)
        sig = np.expm1(x1)
        dbeta = 1.0 / (1.0 + sig) ** 2
        dgamma = s / (1.0 + sig) ** 2
        return np.array([
            [-e * dbeta, 1.0],
            [2.0 * e * gamma(sig) * dgamma, -2.0 - 2.0 * x2],
        ])

    return SystemModel(
        dim=2, field=f, jacobian=jac,
        domain=DomainBox.from_bounds([0.0, 0.0], [np.inf, np.inf], truncation=([0.0, 0.0], [5.0, 5.0])),
        name="comparison", equilibrium=np.zeros(2), params={"scale": s},
    )


# ------------------------------------------------------------ multiagent

BOUND_NAMES = ("c0_lower", "c1_upper", "c2_lower", "c3_upper", "c4_lower")


def _bounds(bounds: Mapping[str, float] | None) -> dict:
    b = {k: 1.0 for k in BOUND_NAMES}
    if bounds:
        unknown = set(bounds) - set(BOUND_NAMES)
        if unknown:
            raise ModelError(f"unknown multiagent bounds: {sorted(unknown)}")
        b.update({k: float(v) for k, v in bounds.items()})
    for k, v in b.items():
        if not (v > 0 and np.isfinite(v)):
            raise ModelError(f"bound {k} must be positive, got {v}")
    return b


def _multiagent(bounds, amplitude: float, period: float | None) -> SystemModel:
    b = _bounds(bounds)
    c0, c1, c2, c3, c4 = (b[k] for k in BOUND_NAMES)
    forced = period is not None
    omega = 2.0 * np.pi / period if forced else 0.0

    def dtanh(c, z):
        return c / np.cosh(z) ** 2

    def f(t, x):
        x = np.asarray(x, dtype=float)
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        dx1 = -c0 * x1 + c1 * np.tanh(x3 - x1)
        if forced:
            dx1 = dx1 + amplitude * np.sin(omega * t)
        dx2 = c2 * (x1 - x2) + c3 * np.tanh(x3 - x2)
        dx3 = c4 * (x2 - x3)
        return np.stack([dx1, dx2, dx3], axis=-1)

    def jac(t, x):
        x1, x2, x3 = x
        r1 = dtanh(c1, x3 - x1)
        r3 = dtanh(c3, x3 - x2)
        return np.array([
            [-c0 - r1, 0.0, r1],
            [c2, -c2 - r3, r3],
            [0.0, c4, -c4],
        ])

    params = {"bounds": b}
    if forced:
        params.update(amplitude=float(amplitude), period=float(period))
    return SystemModel(
        dim=3, field=f, jacobian=jac,
        domain=DomainBox.from_bounds(np.full(3, -np.inf), np.full(3, np.inf)),
        autonomous=not forced, period=period,
        name="multiagent_forced" if forced else "multiagent",
        equilibrium=None if forced and amplitude != 0 else np.zeros(3),
        params=params,
    )


def multiagent(bounds: Mapping[str, float] | None = None) -> SystemModel:
    """Three-agent rendezvous with ``alpha_1 = c0*s``, ``rho_{1,3} = c*tanh``, ``rho_{2,4} = c*s``."""
    return _multiagent(bounds, 0.0, None)


def multiagent_forced(bounds: Mapping[str, float] | None = None,
                      amplitude: float = 0.1, period: float = 1.0) -> SystemModel:
    """Multiagent field plus ``amplitude * sin(2 pi t / period)`` on the first agent."""
    if not np.isfinite(amplitude):
        raise ModelError("amplitude must be finite")
    if not period > 0:
        raise ModelError("period must be positive")
    return _multiagent(bounds, float(amplitude), float(period))


# --------------------------------------------------------------- traffic

def _per_link(value, n: int, name: str) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
    if not np.all(arr > 0):
        raise ModelError(f"{name} must be positive")
    return arr


def traffic(n: int = 3, beta=0.9, xbar=1.0, delta1: float = 0.3,
            demand_slope=1.0, supply_slope=1.0) -> SystemModel:
    """Freeway of ``n`` links with linear demand ``d*x`` and supply ``s*(xbar - x)``.

    ``beta`` is the fraction of link ``i`` outflow entering link ``i+1``.
    Raises :class:`ModelError` when the inflow ``delta1`` is infeasible.
    """
    n = int(n)
    if n < 2:
        raise ModelError("traffic needs at least two links")
    beta = np.broadcast_to(np.asarray(beta, dtype=float), (n - 1,)).copy()
    if not np.all((beta > 0) & (beta < 1)):
        raise ModelError("beta entries must lie in (0, 1)")
    xbar = _per_link(xbar, n, "xbar")
    d = _per_link(demand_slope, n, "demand_slope")
    s = _per_link(supply_slope, n, "supply_slope")
    delta1 = float(delta1)
    if not delta1 > 0:
        raise ModelError("delta1 must be positive")
    delta = delta1 * np.concatenate([[1.0], np.cumprod(beta)])
    xstar = delta / d
    upper_ok = xbar - delta / s
    for i in range(n):
        if not xstar[i] < upper_ok[i]:
            raise ModelError(
                f"infeasible delta1={delta1}: link {i} needs demand preimage "
                f"{xstar[i]:.6g} < supply preimage {upper_ok[i]:.6g}")

    def f(t, x):
        x = np.asarray(x, dtype=float)
        dem = d * x
        sup = s * (xbar - x)
        g0 = np.minimum(delta1, sup[..., 0])
        g = np.minimum(beta * dem[..., :-1], sup[..., 1:])
        inflow = np.concatenate([g0[..., None], g], axis=-1)
        outflow = np.concatenate([g / beta, dem[..., -1:]], axis=-1)
        return inflow - outflow

    def jac(t, x):
        J = np.zeros((n, n))
        # d g0 / d x1
        if s[0] * (xbar[0] - x[0]) < delta1:
            J[0, 0] += -s[0]
        for i in range(n - 1):
            # g_i couples links i and i+1; ties resolve to the demand branch
            if beta[i] * d[i] * x[i] <= s[i + 1] * (xbar[i + 1] - x[i + 1]):
                di, dj = beta[i] * d[i], 0.0
            else:
                di, dj = 0.0, -s[i + 1]
            J[i, i] -= di / beta[i]
            J[i, i + 1] -= dj / beta[i]
            J[i + 1, i] += di
            J[i + 1, i + 1] += dj
        J[n - 1, n - 1] -= d[n - 1]
        return J

    def kinks(x):
        x = np.asarray(x, dtype=float)
        sup = s * (xbar - x)
        first = delta1 - sup[..., :1]
        rest = beta * d[:-1] * x[..., :-1] - sup[..., 1:]
        return np.concatenate([first, rest], axis=-1)

    return SystemModel(
        dim=n, field=f, jacobian=jac,
        domain=DomainBox.from_bounds(np.zeros(n), xbar, truncation=(np.zeros(n), xbar)),
        name="traffic", kinks=kinks, equilibrium=xstar,
        params={"n": n, "beta": beta.tolist(), "xbar": xbar.tolist(), "delta1": delta1,
                "demand_slope": d.tolist(), "supply_slope": s.tolist()},
    )


def traffic_limit_weights(beta) -> np.ndarray:
    """``(1, 1/b1, 1/(b1 b2), ...)``: the weights making every column sum vanish."""
    beta = np.asarray(beta, dtype=float)
    return np.concatenate([[1.0], 1.0 / np.cumprod(beta)])


def traffic_equilibrium(model: SystemModel) -> np.ndarray:
    p = model.params
    beta = np.asarray(p["beta"])
    delta = p["delta1"] * np.concatenate([[1.0], np.cumprod(beta)])
    return delta / np.asarray(p["demand_slope"])


# ------------------------------------------------------------ model spec

_BUILDERS = {
    ModelName.LINEAR: lambda p: linear(p["A"]),
    ModelName.COMPARISON: lambda p: comparison(p.get("scale", p.get("gamma_params", {}).get("scale", 0.5))),
    ModelName.MULTIAGENT: lambda p: multiagent(p.get("bounds")),
    ModelName.TRAFFIC: lambda p: traffic(**p),
    ModelName.MULTIAGENT_FORCED: lambda p: multiagent_forced(
        p.get("bounds"), p.get("amplitude", 0.1), p.get("period", 1.0)),
}


@dataclass(frozen=True)
class ModelSpec:
    """JSON-facing model description: ``{"name": ..., "params": {...}}``."""

    name: ModelName
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ModelSpec":
        if "name" not in data:
            raise ModelError("model spec needs a 'name'")
        try:
            name = ModelName(str(data["name"]).lower())
        except ValueError:
            raise ModelError(f"unknown model {data['name']!r}") from None
        params = dict(data.get("params", {}))
        return cls(name, params)

    @classmethod
    def from_json(cls, path) -> "ModelSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def build(self) -> SystemModel:
        try:
            return _BUILDERS[self.name](self.params)
        except (KeyError, TypeError) as exc:
            raise ModelError(f"bad parameters for {self.name.value}: {exc}") from exc

    def to_dict(self) -> dict:
        return {"name": self.name.value, "params": self.params}
