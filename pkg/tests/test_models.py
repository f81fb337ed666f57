import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monocert import models
from monocert.measures import is_metzler
from monocert.models import ModelError, ModelSpec
from monocert.simulate import find_equilibrium

BUILT_INS = [
    models.linear([[-1.0, 0.5], [0.5, -1.0]]),
    models.comparison(),
    models.multiagent(),
    models.traffic(),
    models.multiagent_forced(),
]


def random_points(model, count, seed=0):
    rng = np.random.default_rng(seed)
    lo, hi = model.domain.trunc_lower, model.domain.trunc_upper
    return lo + (hi - lo) * rng.random((count, model.dim))


@pytest.mark.parametrize("model", BUILT_INS, ids=lambda m: m.name)
def test_jacobians_are_metzler(model):
    for x in random_points(model, 1000):
        assert is_metzler(model.J(x, 0.3), 1e-12)


@pytest.mark.parametrize("model", BUILT_INS, ids=lambda m: m.name)
def test_field_accepts_batches(model):
    X = random_points(model, 7)
    batched = model.field(0.25, X)
    assert batched.shape == X.shape
    assert np.allclose(batched, [model.field(0.25, x) for x in X], rtol=0, atol=1e-15)


def test_linear_requires_metzler_square():
    with pytest.raises(ModelError):
        models.linear([[-1.0, -0.1], [0.0, -1.0]])
    with pytest.raises(ModelError):
        models.linear([[1.0, 2.0]])
    assert np.array_equal(models.linear(-np.eye(3)).equilibrium, np.zeros(3))


def test_comparison_examples():
    m = models.comparison(0.5)
    assert np.array_equal(m.f([0.0, 0.0]), [0.0, 0.0])
    v = np.array([1.1, 1.0])
    for x in random_points(m, 500, seed=1):
        assert np.all(v @ m.J(x) <= 0)
    assert np.all(v @ m.J([0.0, 0.0]) < 0)
    with pytest.raises(ModelError):
        models.comparison(1.0)


def test_comparison_column_one_vanishes_far_out():
    # the first column of v^T J decays like exp(-xi_1), so no global negative rate exists
    m = models.comparison(0.5)
    col = np.array([1.1, 1.0]) @ m.J([30.0, 0.0])
    assert -1e-12 < col[0] < 0


def test_multiagent_hand_weights():
    m = models.multiagent()
    w = np.array([1.0, 1.2, 1.3])
    rows = np.array([m.J(x) @ w for x in random_points(m, 1000, seed=2)])
    assert rows.max() <= -0.1 + 1e-12
    assert m.J(np.zeros(3)) @ w == pytest.approx([-0.7, -0.1, -0.1])
    ones = np.array([m.J(x) @ np.ones(3) for x in random_points(m, 1000, seed=3)])
    assert ones.max() <= 1e-15
    assert np.array_equal(m.f(np.zeros(3)), np.zeros(3))


def test_multiagent_bounds_validation():
    with pytest.raises(ModelError):
        models.multiagent({"c0_lower": -1.0})
    with pytest.raises(ModelError):
        models.multiagent({"nope": 1.0})


def test_forced_multiagent_matches_unforced_jacobian():
    plain = models.multiagent()
    forced = models.multiagent_forced(amplitude=0.1, period=1.0)
    zero = models.multiagent_forced(amplitude=0.0)
    for x in random_points(plain, 50, seed=4):
        assert np.array_equal(forced.J(x, 0.37), plain.J(x))
        assert np.array_equal(zero.f(x, 0.37), plain.f(x))
    assert forced.f(np.zeros(3), 0.25) == pytest.approx([0.1, 0.0, 0.0])
    assert forced.equilibrium is None and not forced.autonomous
    with pytest.raises(ModelError):
        models.multiagent_forced(period=0.0)


def test_traffic_equilibrium_and_limit_weights():
    m = models.traffic(n=3, beta=0.9, delta1=0.3)
    assert m.equilibrium == pytest.approx([0.3, 0.27, 0.243], abs=1e-15)
    assert np.max(np.abs(m.f(m.equilibrium))) < 1e-12
    v = models.traffic_limit_weights([0.9, 0.9])
    assert v == pytest.approx([1.0, 1.0 / 0.9, 1.0 / 0.81], rel=1e-15)
    worst = max(float(np.max(v @ m.J(x))) for x in random_points(m, 1000, seed=5))
    assert worst <= 1e-12


def test_traffic_jacobian_picks_demand_branch_on_ties():
    m = models.traffic(n=2, beta=0.5, delta1=0.1)
    # beta*d*x1 = s*(xbar - x2) at x = (1, 0.5)
    J = m.J([1.0, 0.5])
    assert J[1, 0] == pytest.approx(0.5) and J[0, 1] == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.floats(0.3, 0.95), st.floats(0.05, 1.5), st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_traffic_feasibility_rule(n, beta, delta1, d, s):
    delta = delta1 * beta ** np.arange(n)
    feasible = bool(np.all(delta / d < 1.0 - delta / s))
    if feasible:
        m = models.traffic(n=n, beta=beta, delta1=delta1, demand_slope=d, supply_slope=s)
        assert m.equilibrium == pytest.approx(delta / d)
    else:
        with pytest.raises(ModelError, match="link"):
            models.traffic(n=n, beta=beta, delta1=delta1, demand_slope=d, supply_slope=s)


def test_traffic_equilibrium_matches_simulation():
    rng = np.random.default_rng(6)
    for _ in range(10):
        beta = rng.uniform(0.5, 0.95, size=2)
        m = models.traffic(n=3, beta=beta, delta1=rng.uniform(0.05, 0.3))
        x = find_equilibrium(m, np.full(3, 0.5))
        assert np.max(np.abs(x - models.traffic_equilibrium(m))) < 1e-8


def test_traffic_validation():
    with pytest.raises(ModelError):
        models.traffic(n=1)
    with pytest.raises(ModelError):
        models.traffic(beta=1.0)
    with pytest.raises(ModelError):
        models.traffic(delta1=0.9)


def test_model_spec_round_trip(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"name": "traffic", "params": {"n": 4, "beta": 0.8, "delta1": 0.2}}))
    spec = ModelSpec.from_json(path)
    m = spec.build()
    assert m.dim == 4 and m.name == "traffic"
    assert ModelSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("data", [
    {"params": {}},
    {"name": "pendulum"},
    {"name": "traffic", "params": {"lanes": 3}},
    {"name": "linear", "params": {}},
])
def test_model_spec_errors(data):
    with pytest.raises(ModelError):
        ModelSpec.from_dict(data).build()
