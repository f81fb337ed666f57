import numpy as np
import pytest
from scipy.linalg import expm

from monocert import models
from monocert.core import DomainBox, NormKind, SystemModel, WeightedNorm
from monocert.simulate import (EquilibriumError, IntegrationError, check_entrainment, check_flow_decay,
                               check_monotonicity, check_pair_contraction, find_equilibrium,
                               fit_piecewise_decrease, integrate, integrate_batch, poincare_map)

L1 = WeightedNorm.unit(NormKind.L1, 2)
A_SYM = [[-1.0, 0.5], [0.5, -1.0]]


def forced_linear(A, b, period=1.0):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    box = DomainBox.from_bounds(np.full(n, -np.inf), np.full(n, np.inf))
    return SystemModel(n, lambda t, x: x @ A.T + np.sin(2 * np.pi * t / period) * b,
                       lambda t, x: A.copy(), box, autonomous=False, period=period)


def test_scalar_decay():
    traj = integrate(models.linear([[-1.0]]), [1.0], 0.0, 1.0, 1e-3)
    assert abs(traj.final[0] - np.exp(-1.0)) < 1e-9
    assert traj.times[-1] == pytest.approx(1.0, abs=1e-15)


def test_linear_matches_matrix_exponential():
    A = np.array([[-1.0, 0.3, 0.1], [0.2, -0.8, 0.0], [0.4, 0.1, -1.5]])
    x0 = np.array([1.0, -2.0, 0.5])
    times, states = integrate_batch(models.linear(A), x0, 0.0, 10.0, 1e-2)
    for t, x in zip(times[::100], states[::100]):
        assert np.max(np.abs(x - expm(A * t) @ x0)) < 1e-7


def test_equilibrium_start_stays_put():
    m = models.traffic()
    traj = integrate(m, m.equilibrium, 0.0, 20.0, 1e-2)
    assert np.max(np.abs(traj.states - m.equilibrium)) < 1e-10


def test_rk4_order():
    rng = np.random.default_rng(0)
    A = rng.uniform(0, 0.3, size=(3, 3))
    np.fill_diagonal(A, [-1.0, -0.7, -1.2])
    x0 = np.ones(3)
    exact = expm(2.0 * A) @ x0
    errs = [np.max(np.abs(integrate_batch(models.linear(A), x0, 0.0, 2.0, h)[1][-1] - exact))
            for h in (0.2, 0.1, 0.05)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 12.0 <= coarse / fine <= 20.0


def test_horizon_not_a_multiple_of_step():
    times, _ = integrate_batch(models.linear([[-1.0]]), [1.0], 0.0, 0.25, 0.1)
    assert times[-1] == pytest.approx(0.25) and np.all(np.diff(times) > 0)


def test_blow_up_and_domain_exit_raise():
    box = DomainBox.from_bounds([-np.inf], [np.inf])
    blow = SystemModel(1, lambda t, x: x ** 2, lambda t, x: 2 * x[None], box)
    with pytest.raises(IntegrationError), np.errstate(over="ignore", invalid="ignore"):
        integrate(blow, [1.0], 0.0, 5.0, 1e-2)
    escape = SystemModel(1, lambda t, x: np.ones_like(x), lambda t, x: np.zeros((1, 1)),
                         DomainBox.from_bounds([0.0], [1.0]))
    with pytest.raises(IntegrationError):
        integrate(escape, [0.5], 0.0, 2.0, 1e-2)


def test_bad_arguments():
    m = models.linear([[-1.0]])
    with pytest.raises(ValueError):
        integrate(m, [1.0], 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate(m, [np.nan], 0.0, 1.0, 0.1)


@pytest.mark.parametrize("model, expected", [
    (models.traffic(), [0.3, 0.27, 0.243]),
    (models.linear(A_SYM), [0.0, 0.0]),
    (models.multiagent(), [0.0, 0.0, 0.0]),
])
def test_find_equilibrium(model, expected):
    x = find_equilibrium(model, model.domain.trunc_upper * 0.4)
    assert np.max(np.abs(model.f(x))) < 1e-10
    assert x == pytest.approx(expected, abs=1e-8)


def test_find_equilibrium_gives_up():
    with pytest.raises(EquilibriumError) as info:
        find_equilibrium(models.linear([[0.0, 1.0], [1.0, 0.0]]), [1.0, 1.0], horizon_cap=20.0)
    assert info.value.last_iterate.shape == (2,)


def test_monotonicity_examples():
    m = models.traffic()
    assert check_monotonicity(m, [0.1] * 3, [0.2] * 3, 50.0).passed
    assert check_monotonicity(m, [0.4] * 3, [0.4] * 3, 5.0).passed
    with pytest.raises(ValueError):
        check_monotonicity(m, [0.3] * 3, [0.2] * 3)


def test_rotation_breaks_order():
    box = DomainBox.from_bounds([-np.inf, -np.inf], [np.inf, np.inf])
    rot = SystemModel(2, lambda t, x: np.stack([-x[..., 1], x[..., 0]], axis=-1),
                      lambda t, x: np.array([[0.0, -1.0], [1.0, 0.0]]), box)
    rep = check_monotonicity(rot, [0.0, 0.0], [1.0, 1.0], 5.0)
    assert not rep.passed and rep.worst_violation > 0.1


@pytest.mark.parametrize("model", [models.linear(A_SYM), models.comparison(), models.multiagent(),
                                   models.traffic(), models.multiagent_forced()], ids=lambda m: m.name)
def test_order_preserved_on_built_ins(model):
    rng = np.random.default_rng(1)
    lo, hi = model.domain.trunc_lower, model.domain.trunc_upper
    for _ in range(5):
        a, b = lo + (hi - lo) * rng.random((2, model.dim))
        assert check_monotonicity(model, np.minimum(a, b), np.maximum(a, b), 20.0).passed


def test_pair_contraction_linear():
    m = models.linear(A_SYM)
    rep = check_pair_contraction(m, [1.0, 0.0], [0.0, 0.0], L1, -0.5, 20.0)
    assert rep.passed
    # the closed form e^{At}(x0 - y0) in the l1 norm
    expected = [np.abs(expm(np.asarray(A_SYM) * t) @ [1.0, 0.0]).sum() for t in rep.times[::200]]
    assert np.allclose(rep.lhs[::200], expected, rtol=1e-9)
    same = check_pair_contraction(m, [0.3, 0.3], [0.3, 0.3], L1, -0.5, 5.0)
    assert same.passed and np.all(same.lhs == 0)
    assert not check_pair_contraction(m, [1.0, 0.0], [0.0, 0.0], L1, -0.6, 20.0).passed


def test_nonexpansion_in_certificate_norms():
    rng = np.random.default_rng(2)
    comp = models.comparison()
    traffic = models.traffic()
    cases = [(comp, WeightedNorm(NormKind.L1, [1.1, 1.0])),
             (traffic, WeightedNorm(NormKind.L1, models.traffic_limit_weights([0.9, 0.9])))]
    for model, norm in cases:
        lo, hi = model.domain.trunc_lower, model.domain.trunc_upper
        for _ in range(10):
            a, b = lo + (hi - lo) * rng.random((2, model.dim))
            assert check_pair_contraction(model, a, b, norm, 0.0, 30.0).passed
            assert check_flow_decay(model, a, norm, 0.0, 30.0).passed


def test_flow_decay():
    m = models.linear(A_SYM)
    assert check_flow_decay(m, [1.0, -0.3], L1, -0.5, 20.0).passed
    zero = check_flow_decay(m, [0.0, 0.0], L1, -0.5, 5.0)
    assert zero.passed and np.all(zero.lhs == 0)
    with pytest.raises(ValueError):
        check_flow_decay(models.multiagent_forced(), np.zeros(3), WeightedNorm.unit(NormKind.L1, 3), -0.1)


def test_poincare_map_of_forced_linear_system():
    A = np.array([[-1.0, 0.5], [0.2, -0.8]])
    m = forced_linear(A, [1.0, 0.0])
    P0 = poincare_map(m, [0.0, 0.0])
    xi = np.array([0.7, -0.4])
    # variation of constants: P(xi) = e^{AT} xi + P(0)
    assert poincare_map(m, xi) == pytest.approx(expm(A) @ xi + P0, abs=1e-9)


def test_poincare_map_of_forced_multiagent():
    m = models.multiagent_forced(amplitude=0.1, period=1.0)
    P0 = poincare_map(m, np.zeros(3))
    assert np.any(P0 != 0)
    # |P(0)| is at most the forcing integral over one period
    assert np.abs(P0).sum() <= 0.1 * 2 / np.pi + 1e-12
    unforced = models.multiagent_forced(amplitude=0.0)
    assert np.array_equal(poincare_map(unforced, np.zeros(3)), np.zeros(3))
    with pytest.raises(ValueError):
        poincare_map(models.multiagent(), np.zeros(3))


def test_entrainment_record():
    m = models.multiagent_forced(amplitude=0.1, period=1.0)
    norm = WeightedNorm(NormKind.LINF, [1.0, 1.54, 1.84])
    rec = check_entrainment(m, [5.0, 5.0, 5.0], 60, norm)
    d = np.array(rec.distances)
    assert len(rec.iterates) == len(rec.distances) == 61
    assert rec.passed and not rec.violations
    assert np.all(np.diff(d) < 0)
    assert 0 < rec.contraction_factor < 1 and rec.delta > 0
    assert np.max(np.abs(poincare_map(m, rec.fixed_point) - rec.fixed_point)) < 1e-11
    again = check_entrainment(m, rec.fixed_point, 5, norm)
    assert max(again.distances) < 1e-11


def test_unforced_entrainment_is_equilibrium_convergence():
    m = models.multiagent_forced(amplitude=0.0)
    rec = check_entrainment(m, [2.0, -1.0, 3.0], 30, WeightedNorm.unit(NormKind.LINF, 3))
    assert np.max(np.abs(rec.fixed_point)) < 1e-10 and rec.passed


@pytest.mark.parametrize("distances, ok", [
    ([10.0, 8.0, 6.0, 3.0, 1.5, 0.75], True),
    ([1.0, 0.5, 0.25, 0.125], True),
    ([1.0, 1.2, 0.5], False),
    ([1.0, 1.0, 1.0], False),
])
def test_fit_piecewise_decrease(distances, ok):
    fit = fit_piecewise_decrease(distances)
    assert (fit is not None) is ok
    if ok:
        eps, delta, factor = fit
        d = np.asarray(distances)
        for a, b in zip(d, d[1:]):
            if a > eps:
                assert b <= a - delta * (1 - 1e-6)
            else:
                assert b <= factor * a * (1 + 1e-12)
