import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from monocert.core import DimensionError, NormKind, WeightedNorm
from monocert.measures import (MeasureKind, NotMetzlerError, is_metzler, metzler_weight_condition, mu1,
                               mu_inf, mu_limit_oracle, mu_weighted, spectral_abscissa)

L1_UNIT = WeightedNorm.unit(NormKind.L1, 2)
LINF_UNIT = WeightedNorm.unit(NormKind.LINF, 2)
A_EX = [[-2.0, 1.0], [1.0, -3.0]]


def square(n_min=1, n_max=6, lo=-5.0, hi=5.0):
    return st.integers(n_min, n_max).flatmap(
        lambda n: arrays(float, (n, n), elements=st.floats(lo, hi)))


@pytest.mark.parametrize("A, tol, expected", [
    (A_EX, 0.0, True),
    ([[-1.0, -0.5], [0.0, -1.0]], 0.0, False),
    ([[-1.0, -1e-14], [0.0, -1.0]], 1e-12, True),
])
def test_is_metzler(A, tol, expected):
    assert is_metzler(A, tol) is expected


# closed-form values frozen after cross-checking with mu_limit_oracle
@pytest.mark.parametrize("A, expected, index", [
    ([[-1.0, -2.0], [0.0, -1.0]], 1.0, 1),
    ([[-2.0, 1.0], [0.0, -1.0]], 0.0, 1),
    (np.zeros((3, 3)), 0.0, 0),
])
def test_mu1_examples(A, expected, index):
    rep = mu1(A)
    assert rep.value == expected and rep.argmax_index == index and rep.kind is MeasureKind.L1
    assert abs(mu_limit_oracle(A, WeightedNorm.unit(NormKind.L1, len(A))) - expected) < 1e-6


@pytest.mark.parametrize("A, expected", [
    ([[-1.0, -2.0], [0.0, -1.0]], 1.0),
    (A_EX, -1.0),
    (np.eye(4), 1.0),
])
def test_mu_inf_examples(A, expected):
    assert mu_inf(A).value == expected
    assert abs(mu_limit_oracle(A, WeightedNorm.unit(NormKind.LINF, len(A))) - expected) < 1e-6


@pytest.mark.parametrize("norm, expected", [
    (WeightedNorm(NormKind.L1, [1.0, 2.0]), 0.0),
    (WeightedNorm(NormKind.LINF, [2.0, 1.0]), -1.0),
])
def test_mu_weighted_examples(norm, expected):
    assert mu_weighted(A_EX, norm).value == pytest.approx(expected, abs=1e-15)
    assert mu_limit_oracle(A_EX, norm) == pytest.approx(expected, abs=1e-6)


def test_argmax_ties_break_low():
    assert mu1([[-1.0, 0.0], [0.0, -1.0]]).argmax_index == 0
    assert mu_inf(np.zeros((3, 3))).argmax_index == 0


def test_mu_weighted_with_unit_weights_is_plain_measure():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(4, 4))
    assert mu_weighted(A, WeightedNorm.unit(NormKind.L1, 4)).value == mu1(A).value
    assert mu_weighted(A, WeightedNorm.unit(NormKind.LINF, 4)).value == mu_inf(A).value


@pytest.mark.parametrize("A, norm, expected", [
    (np.diag([-1.0, -2.0]), L1_UNIT, -1.0),
    (np.zeros((2, 2)), LINF_UNIT, 0.0),
    ([[-1.0, -2.0], [0.0, -1.0]], L1_UNIT, 1.0),
])
def test_limit_oracle_examples(A, norm, expected):
    # roundoff in the h = 1e-8 quotient limits the oracle to about 1e-8
    assert mu_limit_oracle(A, norm) == pytest.approx(expected, abs=1e-7)


def test_limit_oracle_rejects_bad_schedule():
    with pytest.raises(ValueError):
        mu_limit_oracle(np.eye(2), L1_UNIT, (1e-6, 1e-4))
    with pytest.raises(ValueError):
        mu_limit_oracle(np.eye(2), L1_UNIT, ())


def test_closed_forms_match_oracle_on_random_matrices():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(2, 9))
        A = rng.uniform(-5, 5, size=(n, n))
        w = rng.uniform(0.2, 5.0, size=n)
        for kind in NormKind:
            norm = WeightedNorm(kind, w)
            assert abs(mu_weighted(A, norm).value - mu_limit_oracle(A, norm)) <= 1e-6
        assert abs(mu1(A).value - mu_limit_oracle(A, WeightedNorm.unit(NormKind.L1, n))) <= 1e-6
        assert abs(mu_inf(A).value - mu_limit_oracle(A, WeightedNorm.unit(NormKind.LINF, n))) <= 1e-6


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.tuples(
    arrays(float, (n, n), elements=st.floats(-5, 5)), arrays(float, (n, n), elements=st.floats(-5, 5)),
    arrays(float, n, elements=st.floats(0.2, 5)))),
    st.floats(0, 10), st.sampled_from(list(NormKind)))
def test_measure_properties(data, alpha, kind):
    A, B, w = data
    norm = WeightedNorm(kind, w)
    mu = lambda M: mu_weighted(M, norm).value  # noqa: E731
    assert mu(A + B) <= mu(A) + mu(B) + 1e-12
    assert mu(alpha * A) == pytest.approx(alpha * mu(A), rel=1e-12, abs=1e-12)
    p = norm.scaling
    S = p[:, None] * A / p[None, :]
    induced = np.abs(S).sum(axis=0).max() if kind is NormKind.L1 else np.abs(S).sum(axis=1).max()
    assert -induced - 1e-12 <= mu(A) <= induced + 1e-12
    assert mu(A) >= spectral_abscissa(A) - 1e-9


@settings(max_examples=100)
@given(square(lo=0.0, hi=5.0), st.lists(st.floats(-5, 0), min_size=6, max_size=6))
def test_metzler_measures_are_plain_sums(A, diag):
    A = A.copy()
    np.fill_diagonal(A, diag[: len(A)])
    assert mu1(A).value == A.sum(axis=0).max()
    assert mu_inf(A).value == A.sum(axis=1).max()


@pytest.mark.parametrize("norm, c, expected", [
    (WeightedNorm(NormKind.L1, [1.0, 2.0]), 0.1, True),
    (WeightedNorm(NormKind.L1, [1.0, 2.0]), 0.0, False),
    # A w = (-1, -2) lies strictly below -0.5 but not below -1
    (WeightedNorm(NormKind.LINF, [1.0, 1.0]), -0.5, True),
    (WeightedNorm(NormKind.LINF, [1.0, 1.0]), -1.0, False),
])
def test_metzler_weight_condition_examples(norm, c, expected):
    assert metzler_weight_condition(A_EX, norm, c) is expected


def test_metzler_weight_condition_errors():
    with pytest.raises(NotMetzlerError):
        metzler_weight_condition([[-1.0, -1.0], [0.0, -1.0]], L1_UNIT, 0.0)
    with pytest.raises(DimensionError):
        metzler_weight_condition(np.eye(3), L1_UNIT, 0.0)


def test_metzler_weight_condition_is_the_strict_measure_test():
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(2, 9))
        A = rng.uniform(0, 1, size=(n, n))
        np.fill_diagonal(A, rng.uniform(-3, 0.5, size=n))
        for kind in NormKind:
            norm = WeightedNorm(kind, rng.uniform(0.2, 5.0, size=n))
            c = mu_weighted(A, norm).value + rng.uniform(-1, 1)
            assert metzler_weight_condition(A, norm, c) == (mu_weighted(A, norm).value < c)


def test_non_square_input_rejected():
    with pytest.raises(DimensionError):
        mu1(np.ones((2, 3)))
