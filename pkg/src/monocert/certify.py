"""Weight-vector certificates for weighted l1 / l-infinity contraction.

A sum certificate is a vector ``v >= 1`` with ``v^T J(x) <= c v^T`` at every
sampled Jacobian; a max certificate is ``w >= 1`` with ``J(x) w <= c w``.
For Metzler Jacobians these are exactly ``mu(J(x)) <= c`` in the norms
``sum_i v_i |x_i|`` and ``max_i |x_i| / w_i``. The best ``c`` is found by
bisection over linear feasibility problems solved with
:func:`monocert.simplex.linprog_simplex`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .core import DomainBox, NormKind, SystemModel, WeightedNorm, as_vector
from .measures import NotMetzlerError
from .simplex import linprog_simplex

__all__ = [
    "CertKind",
    "CertStatus",
    "JacobianSampleSet",
    "RefinementError",
    "SampleStrategy",
    "VerificationReport",
    "WeightCertificate",
    "certificate_for_weights",
    "certify_model",
    "certify_nonexpansive_strict",
    "find_max_weights",
    "find_sum_weights",
    "refine_weight_sequence",
    "sample_jacobians",
    "verify_certificate",
]

DEFAULT_MARGIN = 1e-6
DEFAULT_SAMPLES = 2000
DEFAULT_GRID = 5
MAX_SAMPLES = 100_000
METZLER_TOL = 1e-9
VERIFY_TOL = 1e-9


class SampleStrategy(enum.Enum):
    GRID = "grid"
    RANDOM = "random"
    MIXED = "mixed"


class CertKind(enum.Enum):
    SUM_L1 = "sum_l1"
    MAX_LINF = "max_linf"

    @property
    def norm_kind(self) -> NormKind:
        return NormKind.L1 if self is CertKind.SUM_L1 else NormKind.LINF

    @classmethod
    def for_norm(cls, kind) -> "CertKind":
        return cls.SUM_L1 if NormKind(kind) is NormKind.L1 else cls.MAX_LINF


class CertStatus(enum.Enum):
    CONTRACTIVE = "contractive"
    NONEXPANSIVE_STRICT_AT_EQ = "nonexpansive_strict_at_eq"
    NONEXPANSIVE_ONLY = "nonexpansive_only"
    FAILED = "failed"


class RefinementError(RuntimeError):
    def __init__(self, msg: str, epsilon: float):
        super().__init__(msg)
        self.epsilon = epsilon


# ------------------------------------------------------------------ sampling

@dataclass(frozen=True)
class JacobianSampleSet:
    times: np.ndarray
    states: np.ndarray
    matrices: np.ndarray
    strategy: SampleStrategy
    seed: int
    kink_margin: float
    domain: DomainBox

    def __len__(self) -> int:
        return self.matrices.shape[0]

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    @classmethod
    def from_matrices(cls, matrices, seed: int = 0) -> "JacobianSampleSet":
        """Wrap explicit matrices (e.g. a linear model's constant Jacobian)."""
        M = np.asarray(matrices, dtype=float)
        if M.ndim == 2:
            M = M[None]
        if M.ndim != 3 or M.shape[1] != M.shape[2]:
            raise ValueError("expected a stack of square matrices")
        n = M.shape[1]
        box = DomainBox(np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))
        return cls(np.zeros(len(M)), np.zeros((len(M), n)), M, SampleStrategy.GRID, seed, 0.0, box)

    def subset(self, index) -> "JacobianSampleSet":
        index = np.asarray(index)
        return replace(self, times=self.times[index], states=self.states[index],
                       matrices=self.matrices[index])


def _grid(lo: np.ndarray, hi: np.ndarray, per_axis: int) -> np.ndarray:
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _kink_gradient(model: SystemModel, x: np.ndarray, q: int) -> np.ndarray:
    h = 1e-6
    g = np.empty(model.dim)
    for i in range(model.dim):
        e = np.zeros(model.dim)
        e[i] = h
        g[i] = (model.kinks(x + e)[q] - model.kinks(x - e)[q]) / (2 * h)
    return g


def _push(model: SystemModel, x: np.ndarray, q: int, target: float) -> Optional[np.ndarray]:
    """Move ``x`` inside the box so that switching function ``q`` equals ``target``.

    Uses projected gradient steps: coordinates pinned at a bound that the
    step would push outward are frozen. Returns None when the target side of
    the surface cannot be reached from ``x`` inside the truncation box.
    """
    lo, hi = model.domain.trunc_lower, model.domain.trunc_upper
    y = np.clip(x, lo, hi)
    for _ in range(10):
        gap = target - model.kinks(y)[q]
        if abs(gap) <= 1e-3 * max(abs(target), 1e-12):
            return y
        g = _kink_gradient(model, y, q) * np.sign(gap)
        g[((y <= lo) & (g < 0)) | ((y >= hi) & (g > 0))] = 0.0
        gg = float(g @ g)
        if gg == 0.0:
            return None
        y = np.clip(y + abs(gap) * g / gg, lo, hi)
    s = model.kinks(y)[q]
    if target != 0.0 and np.sign(s) == np.sign(target) and abs(s) >= 0.5 * abs(target):
        return y
    return None


def _split_kinks(model: SystemModel, points: np.ndarray, margin: float, both_sides: bool) -> np.ndarray:
    if model.kinks is None or margin <= 0:
        return points
    out = []
    for x in points:
        s = np.asarray(model.kinks(x))
        near = np.flatnonzero(np.abs(s) < 0.99 * margin)
        if near.size == 0:
            out.append(x)
            continue
        candidates = [x]
        for q in near:
            signs = (1.0, -1.0) if both_sides else (1.0 if s[q] >= 0 else -1.0,)
            new = []
            for base in candidates:
                for sg in signs:
                    y = _push(model, base, q, sg * margin)
                    if y is not None:
                        new.append(y)
            candidates = new or candidates
        out.extend(candidates)
    return np.array(out)


def _surface_points(model: SystemModel, seeds: np.ndarray, margin: float) -> List[np.ndarray]:
    """Project seed points onto every switching surface and keep both sides."""
    extra = []
    n_kinks = len(model.kinks(seeds[0]))
    for x in seeds:
        for q in range(n_kinks):
            on = _push(model, x, q, 0.0)
            if on is None:
                continue
            for sg in (1.0, -1.0):
                y = _push(model, on, q, sg * margin)
                if y is not None:
                    extra.append(y)
    return extra


def sample_jacobians(model: SystemModel, count: int = DEFAULT_SAMPLES,
                     strategy: SampleStrategy = SampleStrategy.MIXED, seed: int = 42,
                     kink_margin: float = 1e-4, grid_per_axis: int = DEFAULT_GRID,
                     surface_seeds: int = 200) -> JacobianSampleSet:
    """Sample Jacobians over the model's truncation box.

    GRID uses ``ceil(count ** (1/n))`` points per axis, RANDOM draws ``count``
    uniform points, MIXED combines ``count`` random points with a
    ``grid_per_axis`` grid and adds both one-sided Jacobians next to every
    switching surface of a piecewise-smooth field. The total is capped at
    ``MAX_SAMPLES``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    strategy = SampleStrategy(strategy)
    rng = np.random.default_rng(seed)
    lo, hi = model.domain.trunc_lower, model.domain.trunc_upper
    n = model.dim
    parts = []
    if strategy is SampleStrategy.GRID:
        per_axis = math.ceil(count ** (1.0 / n) - 1e-9)
        parts.append(_grid(lo, hi, max(per_axis, 1)))
    else:
        rand = lo + (hi - lo) * rng.random((count, n))
        parts.append(rand)
        if strategy is SampleStrategy.MIXED:
            parts.append(_grid(lo, hi, grid_per_axis))
    points = np.concatenate(parts)
    if strategy is SampleStrategy.MIXED and model.kinks is not None:
        extra = _surface_points(model, parts[0][:surface_seeds], kink_margin)
        if extra:
            points = np.concatenate([points, np.array(extra)])
    # pushing off one surface can land near another, so repeat a few times
    for _ in range(3):
        points = _split_kinks(model, points, kink_margin, strategy is SampleStrategy.MIXED)
    points = points[:MAX_SAMPLES]
    if model.autonomous:
        times = np.zeros(len(points))
    else:
        times = model.period * rng.random(len(points))
    matrices = np.array([model.J(x, t) for t, x in zip(times, points)])
    return JacobianSampleSet(times, points, matrices, strategy, int(seed), float(kink_margin), model.domain)


def _check_metzler(matrices: np.ndarray):
    n = matrices.shape[1]
    off = matrices[:, ~np.eye(n, dtype=bool)]
    if off.size and off.min() < -METZLER_TOL:
        raise NotMetzlerError(f"sampled Jacobian has off-diagonal entry {off.min():.3g} < 0")


# -------------------------------------------------------------- certificate

@dataclass(frozen=True)
class WeightCertificate:
    """Weights ``>= 1`` plus the rate they certify on the sampled box.

    ``rate_c`` bounds the weighted matrix measure at every sample. For the
    nonexpansive statuses ``rate_c`` is 0 and ``strictness`` records the
    margin of ``mu(J(x*)) <= -strictness`` when an equilibrium is attached.
    """

    kind: CertKind
    weights: np.ndarray
    rate_c: float
    margin: float
    domain: DomainBox
    sample_count: int
    status: CertStatus
    seed: int = 0
    equilibrium: Optional[np.ndarray] = None
    strictness: Optional[float] = None
    limit_of_valid_sequence: bool = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "kind", CertKind(self.kind))
        object.__setattr__(self, "status", CertStatus(self.status))
        if self.equilibrium is not None:
            eq = np.array(self.equilibrium, dtype=float)
            eq.setflags(write=False)
            object.__setattr__(self, "equilibrium", eq)
        if self.status is CertStatus.CONTRACTIVE and not self.rate_c < 0:
            raise ValueError("a contractive certificate needs rate_c < 0")
        if self.status is CertStatus.NONEXPANSIVE_STRICT_AT_EQ and self.equilibrium is None:
            raise ValueError("strict-at-equilibrium certificates need an equilibrium")

    @property
    def norm(self) -> WeightedNorm:
        return WeightedNorm(self.kind.norm_kind, self.weights)

    @property
    def usable(self) -> bool:
        return (self.status in (CertStatus.CONTRACTIVE, CertStatus.NONEXPANSIVE_STRICT_AT_EQ)
                or self.limit_of_valid_sequence)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind.value,
            "weights": self.weights.tolist(),
            "rate_c": float(self.rate_c),
            "margin": float(self.margin),
            "status": self.status.value,
            "domain": self.domain.to_dict(),
            "sample_count": int(self.sample_count),
            "seed": int(self.seed),
        }
        if self.equilibrium is not None:
            out["equilibrium"] = self.equilibrium.tolist()
        if self.strictness is not None:
            out["strictness"] = float(self.strictness)
        if self.limit_of_valid_sequence:
            out["limit_of_valid_sequence"] = True
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "WeightCertificate":
        lo = np.asarray(data["domain"]["lower"], dtype=float)
        hi = np.asarray(data["domain"]["upper"], dtype=float)
        return cls(
            kind=CertKind(data["kind"]), weights=data["weights"], rate_c=data["rate_c"],
            margin=data["margin"], domain=DomainBox(lo, hi, lo, hi),
            sample_count=data["sample_count"], status=CertStatus(data["status"]),
            seed=data.get("seed", 0), equilibrium=data.get("equilibrium"),
            strictness=data.get("strictness"),
            limit_of_valid_sequence=data.get("limit_of_valid_sequence", False),
        )


def _oriented(matrices: np.ndarray, kind: CertKind) -> np.ndarray:
    # the max/row condition on J is the sum/column condition on J^T
    return matrices if kind is CertKind.SUM_L1 else np.transpose(matrices, (0, 2, 1))


def _sample_rates(matrices: np.ndarray, weights: np.ndarray, kind: CertKind) -> np.ndarray:
    """Per-sample ``max_j (v^T J)_j / v_j`` (sum) or ``max_i (J w)_i / w_i`` (max)."""
    M = _oriented(matrices, kind)
    return np.max(np.einsum("i,kij->kj", weights, M) / weights, axis=1)


def _rows(matrices: np.ndarray, kind: CertKind):
    """Constraint rows ``a = M_k[:, j]`` with column index ``j``, minus dominated rows.

    A row dominated elementwise by another row with the same ``j`` is implied
    by it for nonnegative weights, whatever diagonal shift is applied later.
    """
    M = _oriented(matrices, kind)
    n = M.shape[1]
    rows, cols = [], []
    for j in range(n):
        group = np.unique(M[:, :, j], axis=0)
        order = np.argsort(-group.sum(axis=1), kind="stable")
        kept: List[np.ndarray] = []
        for r in group[order]:
            if kept and np.any(np.all(np.array(kept) >= r, axis=1)):
                continue
            kept.append(r)
        rows.append(np.array(kept))
        cols.append(np.full(len(kept), j))
    return np.concatenate(rows), np.concatenate(cols)


def _feasible_weights(A: np.ndarray) -> Optional[np.ndarray]:
    """Find ``v >= 1`` with ``A v <= 0``, or ``None``.

    Solves the bounded dual ``max d^T y`` s.t. ``A^T y >= 0``, ``1^T y <= 1``,
    ``y >= 0`` with ``d = A 1 + 1``; its multipliers are ``u`` and ``sigma``
    of the primal ``A (1 + u) <= (sigma - 1) 1``, feasible iff ``sigma <= 1``.
    """
    m, n = A.shape
    G = np.vstack([-A.T, np.ones((1, m))])
    h = np.concatenate([np.zeros(n), [1.0]])
    d = A.sum(axis=1) + 1.0
    res = linprog_simplex(-d, A_ub=G, b_ub=h)
    if not res.success:
        return None
    lam = np.maximum(-res.ineqlin_marginals, 0.0)
    sigma = lam[n]
    if sigma > 1.0 + 1e-9:
        return None
    v = 1.0 + lam[:n]
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(A @ v) > 1e-9 * scale * float(np.max(v)):
        return None
    return v


def _optimal_rate(A: np.ndarray, cols: np.ndarray, n: int, max_iter: int = 80):
    """Smallest ``c`` with some ``v >= 1`` satisfying ``a_r . v <= c v_{j_r}``; bisection."""
    shift = np.zeros_like(A)
    shift[np.arange(len(cols)), cols] = 1.0

    def rate(v):
        return float(np.max((A @ v) / v[cols]))

    best_v = np.ones(n)
    hi = rate(best_v)
    lo = float(np.max(A[np.arange(len(cols)), cols]))
    for _ in range(max_iter):
        if hi - lo <= 1e-10 * max(1.0, abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        v = _feasible_weights(A - mid * shift)
        if v is not None and rate(v) <= mid + 1e-12 * max(1.0, abs(mid)):
            best_v, hi = v, min(hi, rate(v))
        else:
            lo = mid
    return hi, best_v


def _normalized(v: np.ndarray) -> np.ndarray:
    return v / np.min(v)


def _search(samples: JacobianSampleSet, kind: CertKind, margin: float) -> WeightCertificate:
    if not margin > 0:
        raise ValueError("margin must be positive")
    _check_metzler(samples.matrices)
    A, cols = _rows(samples.matrices, kind)
    n = samples.dim
    c, v = _optimal_rate(A, cols, n)
    v = _normalized(v)
    c = float(np.max(_sample_rates(samples.matrices, v, kind)))
    common = dict(kind=kind, margin=margin, domain=samples.domain,
                  sample_count=len(samples), seed=samples.seed)
    if c <= -margin:
        return WeightCertificate(weights=v, rate_c=c, status=CertStatus.CONTRACTIVE, **common)
    v0 = _feasible_weights(A)
    if v0 is not None:
        v0 = _normalized(v0)
        return WeightCertificate(weights=v0, rate_c=0.0, status=CertStatus.NONEXPANSIVE_ONLY, **common)
    return WeightCertificate(weights=v, rate_c=c, status=CertStatus.FAILED, **common)


def find_sum_weights(samples: JacobianSampleSet, margin: float = DEFAULT_MARGIN) -> WeightCertificate:
    """Best ``v`` for the column condition ``v^T J_k <= c v^T`` over all samples.

    CONTRACTIVE when the optimal ``c <= -margin``; otherwise NONEXPANSIVE_ONLY
    if ``v^T J_k <= 0`` is feasible, else FAILED.
    """
    return _search(samples, CertKind.SUM_L1, margin)


def find_max_weights(samples: JacobianSampleSet, margin: float = DEFAULT_MARGIN) -> WeightCertificate:
    """Best ``w`` for the row condition ``J_k w <= c w`` over all samples."""
    return _search(samples, CertKind.MAX_LINF, margin)


def _strictness(J_eq: np.ndarray, weights: np.ndarray, kind: CertKind) -> float:
    return -float(_sample_rates(J_eq[None], weights, kind)[0])


def certify_nonexpansive_strict(model: SystemModel, samples: JacobianSampleSet, norm_kind,
                                equilibrium, margin: float = DEFAULT_MARGIN) -> WeightCertificate:
    """Weights with ``mu(J) <= 0`` on the samples and the largest strictness at ``equilibrium``.

    Strictness ``s`` means ``mu(J(x*)) <= -s`` in the weighted norm, which for
    weights ``>= 1`` also gives ``v^T J(x*) <= -s 1^T``.
    """
    kind = CertKind.for_norm(norm_kind)
    eq = as_vector(equilibrium, model.dim)
    residual = float(np.max(np.abs(model.f(eq))))
    if residual > 1e-8:
        raise ValueError(f"|f(equilibrium)| = {residual:.3g} exceeds 1e-8")
    _check_metzler(samples.matrices)
    J_eq = model.J(eq)
    A, cols = _rows(samples.matrices, kind)
    Ae, colse = _rows(J_eq[None], kind)
    shift = np.zeros_like(Ae)
    shift[np.arange(len(colse)), colse] = 1.0
    common = dict(kind=kind, margin=margin, domain=samples.domain,
                  sample_count=len(samples), seed=samples.seed, equilibrium=eq)

    def attempt(s):
        v = _feasible_weights(np.vstack([A, Ae + s * shift]))
        if v is None or np.max(_sample_rates(samples.matrices, v, kind)) > VERIFY_TOL:
            return None
        return v

    v = attempt(0.0)
    if v is None:
        rate = float(np.max(_sample_rates(samples.matrices, np.ones(samples.dim), kind)))
        return WeightCertificate(weights=np.ones(samples.dim), rate_c=rate,
                                 status=CertStatus.FAILED, **common)
    best = v
    lo = max(0.0, _strictness(J_eq, v, kind))
    hi = max(lo, -float(np.max(np.diag(J_eq))))
    for _ in range(60):
        if hi - lo <= 1e-10 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        v = attempt(mid)
        if v is not None and _strictness(J_eq, v, kind) >= mid * (1 - 1e-12):
            best, lo = v, max(lo, _strictness(J_eq, v, kind))
        else:
            hi = mid
    best = _normalized(best)
    s = _strictness(J_eq, best, kind)
    status = CertStatus.NONEXPANSIVE_STRICT_AT_EQ if s >= margin else CertStatus.NONEXPANSIVE_ONLY
    return WeightCertificate(weights=best, rate_c=0.0, status=status, strictness=s, **common)


def certificate_for_weights(samples: JacobianSampleSet, kind, weights, margin: float = DEFAULT_MARGIN,
                            equilibrium=None, J_eq=None) -> WeightCertificate:
    """Certificate for a given weight vector, e.g. one built by hand."""
    kind = CertKind(kind)
    w = np.asarray(weights, dtype=float)
    if not np.all(w > 0):
        raise ValueError("weights must be positive")
    w = _normalized(w)
    rate = float(np.max(_sample_rates(samples.matrices, w, kind)))
    common = dict(kind=kind, weights=w, margin=margin, domain=samples.domain,
                  sample_count=len(samples), seed=samples.seed, equilibrium=equilibrium)
    if rate <= -margin:
        return WeightCertificate(rate_c=rate, status=CertStatus.CONTRACTIVE, **common)
    if rate > VERIFY_TOL:
        return WeightCertificate(rate_c=rate, status=CertStatus.FAILED, **common)
    strict = None
    if equilibrium is not None and J_eq is not None:
        strict = _strictness(np.asarray(J_eq, dtype=float), w, kind)
        if strict >= margin:
            return WeightCertificate(rate_c=0.0, status=CertStatus.NONEXPANSIVE_STRICT_AT_EQ,
                                     strictness=strict, **common)
    return WeightCertificate(rate_c=0.0, status=CertStatus.NONEXPANSIVE_ONLY, strictness=strict, **common)


def refine_weight_sequence(base: WeightCertificate, epsilons: Sequence[float],
                           samples: JacobianSampleSet, limit=None, J_eq=None) -> List[WeightCertificate]:
    """Certificates along ``limit + eps * (base.weights - limit)`` and the limit itself.

    ``epsilons`` are decreasing scale factors in ``(0, 1]``; the schedule
    ``(1, 0.1, 0.01)`` applied to ``w = (1, 1.2, 1.3)`` with limit ``1``
    visits ``(1, 1.02, 1.03)`` and ``(1, 1.002, 1.003)``. Every intermediate
    certificate must be contractive (or strict at the equilibrium) on the
    samples; the last element carries the limit weights with status
    NONEXPANSIVE_ONLY and ``limit_of_valid_sequence=True``.
    """
    if base.status not in (CertStatus.CONTRACTIVE, CertStatus.NONEXPANSIVE_STRICT_AT_EQ):
        raise ValueError("refinement needs a contractive or strict-at-equilibrium base")
    eps = np.asarray(epsilons, dtype=float)
    if eps.size == 0 or np.any(eps <= 0) or np.any(eps > 1) or np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be strictly decreasing values in (0, 1]")
    limit = np.ones(base.weights.size) if limit is None else np.asarray(limit, dtype=float)
    if not np.all(limit > 0):
        raise ValueError("only strictly positive limit weights are supported")
    if np.allclose(base.weights / base.weights.min(), limit / limit.min(), rtol=1e-12, atol=0):
        return [base]
    out = []
    for e in eps:
        w = limit + e * (base.weights - limit)
        if not np.all(w > 0):
            raise RefinementError("interpolated weights lost positivity", float(e))
        cert = certificate_for_weights(samples, base.kind, w, base.margin, base.equilibrium, J_eq)
        if cert.status not in (CertStatus.CONTRACTIVE, CertStatus.NONEXPANSIVE_STRICT_AT_EQ):
            raise RefinementError(f"weights at eps={e:g} are not a valid certificate "
                                  f"(status {cert.status.value}, rate {cert.rate_c:.3g})", float(e))
        out.append(cert)
    final = certificate_for_weights(samples, base.kind, limit, base.margin, base.equilibrium, J_eq)
    if final.status is CertStatus.FAILED:
        raise RefinementError("limit weights violate the nonexpansion condition", 0.0)
    out.append(replace(final, status=CertStatus.NONEXPANSIVE_ONLY, rate_c=0.0,
                       limit_of_valid_sequence=True))
    return out


# ------------------------------------------------------------- verification

@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    worst_violation: float
    worst_point: np.ndarray
    status: CertStatus
    fresh_count: int
    seed: int
    strict_at_equilibrium: Optional[bool] = None

    def to_dict(self) -> dict:
        out = {"passed": self.passed, "worst_violation": self.worst_violation,
               "worst_point": [float(x) for x in self.worst_point],
               "status": self.status.value, "fresh_count": self.fresh_count, "seed": self.seed}
        if self.strict_at_equilibrium is not None:
            out["strict_at_equilibrium"] = self.strict_at_equilibrium
        return out


def verify_certificate(model: SystemModel, cert: WeightCertificate, fresh_count: int = DEFAULT_SAMPLES,
                       seed: Optional[int] = None, tol: float = VERIFY_TOL) -> VerificationReport:
    """Re-check a certificate on fresh random samples; never mutates ``cert``."""
    if cert.status is CertStatus.FAILED:
        raise ValueError("nothing to verify for a FAILED certificate")
    seed = cert.seed + 1 if seed is None else int(seed)
    if seed == cert.seed:
        raise ValueError("verification must use a seed different from the certificate's")
    fresh = sample_jacobians(model, fresh_count, SampleStrategy.RANDOM, seed)
    M = _oriented(fresh.matrices, cert.kind)
    w = cert.weights
    excess = np.max(np.einsum("i,kij->kj", w, M) - cert.rate_c * w, axis=1)
    k = int(np.argmax(excess))
    worst = float(excess[k])
    passed = worst <= tol
    strict = None
    if cert.status is CertStatus.NONEXPANSIVE_STRICT_AT_EQ:
        strict = _strictness(model.J(cert.equilibrium), w, cert.kind) >= cert.margin
        passed = passed and strict
    if passed:
        status = cert.status
    elif float(np.max(np.einsum("i,kij->kj", w, M))) <= tol:
        status = CertStatus.NONEXPANSIVE_ONLY
    else:
        status = CertStatus.FAILED
    return VerificationReport(passed, worst, fresh.states[k].copy(), status, fresh_count, seed, strict)


# ---------------------------------------------------------------- pipeline

def certify_model(model: SystemModel, kind, count: int = DEFAULT_SAMPLES, seed: int = 42,
                  margin: float = DEFAULT_MARGIN, equilibrium=None,
                  samples: Optional[JacobianSampleSet] = None) -> WeightCertificate:
    """Weight search with the nonexpansive-plus-strict-point fallback."""
    kind = CertKind(kind)
    if samples is None:
        samples = sample_jacobians(model, count, SampleStrategy.MIXED, seed)
    cert = _search(samples, kind, margin)
    if cert.status is CertStatus.CONTRACTIVE:
        return cert
    if equilibrium is None and model.autonomous:
        if model.equilibrium is not None:
            equilibrium = model.equilibrium
        else:
            from .simulate import EquilibriumError, find_equilibrium
            mid = 0.5 * (model.domain.trunc_lower + model.domain.trunc_upper)
            try:
                equilibrium = find_equilibrium(model, mid)
            except EquilibriumError:
                equilibrium = None
    if equilibrium is None:
        return cert
    strict = certify_nonexpansive_strict(model, samples, kind.norm_kind, equilibrium, margin)
    if strict.status is CertStatus.FAILED:
        return cert
    return strict
