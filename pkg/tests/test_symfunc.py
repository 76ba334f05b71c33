import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from warpcheck import symfunc
from warpcheck.errors import ConeViolation, EmptyInput

from conftest import brute_pm

finite = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)
spectra = st.integers(min_value=1, max_value=6).flatmap(
    lambda n: arrays(np.float64, (n,), elements=finite))


def test_pm_of_ones_is_one():
    assert symfunc.eval_pm([1, 1, 1], 2) == pytest.approx(1.0, abs=1e-15)


def test_pm_conventions():
    assert symfunc.eval_pm([3.0, -7.0], 0) == 1.0
    assert symfunc.eval_pm([3.0, -7.0], 3) == 0.0
    with pytest.raises(ValueError):
        symfunc.eval_pm([1.0], -1)


def test_pm_hand_value(kernel_backend):
    # pairwise products 2, 3, 6 over C(3,2) = 3
    assert symfunc.eval_pm([1, 2, 3], 2) == pytest.approx(11 / 3, abs=1e-14)


def test_grad_mean():
    np.testing.assert_allclose(symfunc.grad_pm([1, 1, 1], 1), [1 / 3] * 3, atol=1e-15)


def test_grad_two_variables_matches_finite_difference(kernel_backend):
    x = np.array([2.0, 5.0])
    grad = symfunc.grad_pm(x, 2)
    step = 1e-6
    fd = []
    for i in range(2):
        e = np.zeros(2)
        e[i] = step
        fd.append((symfunc.eval_pm(x + e, 2) - symfunc.eval_pm(x - e, 2)) / (2 * step))
    np.testing.assert_allclose(grad, [5.0, 2.0], atol=1e-14)
    np.testing.assert_allclose(grad, fd, atol=1e-8)


def test_euler_identity_example():
    x = np.array([1.0, 2.0, 3.0])
    assert np.dot(x, symfunc.grad_pm(x, 2)) == pytest.approx(2 * 11 / 3, abs=1e-13)


def test_cone_examples():
    assert symfunc.cone_membership([1, 1, 1], 3).member
    assert symfunc.cone_membership([-1, 2, 2], 1).member
    rep = symfunc.cone_membership([-1, 2, 2], 3)
    assert not rep.member
    assert rep.p_values[2] < 0
    # p_2 vanishes exactly here, so order 2 is the first to fail
    assert rep.first_failing_order == 2
    for k in (1, 2, 3, 4):
        rep = symfunc.cone_membership([0.0] * 4, k)
        assert not rep.member and rep.first_failing_order == 1


def test_newton_maclaurin_examples():
    assert symfunc.newton_maclaurin_gap([2.5] * 4, 2) == pytest.approx(0.0, abs=1e-12)
    assert symfunc.newton_maclaurin_gap([1, 2, 3], 2) == pytest.approx(1 / 3, abs=1e-14)
    # p1 = 4/3, p2 = 5/3, p3 = 2 -> 20/9 - 2
    assert symfunc.newton_maclaurin_gap([1, 1, 2], 3) == pytest.approx(2 / 9, abs=1e-14)
    with pytest.raises(ConeViolation):
        symfunc.newton_maclaurin_gap([-1, 2, 2], 3)


def test_shift():
    np.testing.assert_array_equal(symfunc.shift_spectrum([1, 1], 1), [0, 0])
    np.testing.assert_array_equal(symfunc.shift_spectrum([2, 3], -1), [3, 4])
    x = np.array([0.3, -1.7, 2.2])
    np.testing.assert_allclose(symfunc.shift_spectrum(symfunc.shift_spectrum(x, 0.7), -0.7), x,
                               atol=1e-15)


def test_strict_shifted_k_convex():
    assert symfunc.strict_shifted_k_convex([(2, 2)] * 5, 2, 1.0)
    # p_2(-0.5, 2) = -1
    assert not symfunc.strict_shifted_k_convex([(0.5, 3), (2, 2)], 2, 1.0)
    kappa = 1.0 / np.tanh(1.0)
    for k in (1, 2):
        assert symfunc.strict_shifted_k_convex([(kappa, kappa)] * 3, k, -1.0)
    with pytest.raises(EmptyInput):
        symfunc.strict_shifted_k_convex([], 1, 0.0)


def test_sufficient_condition_implies_direct_on_connected_samples(rng):
    # dense samples of a closed curve of spectra stand in for a connected surface
    s = np.linspace(0.0, 2 * np.pi, 2000, endpoint=False)[:, None]
    hits = 0
    for _ in range(200):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, n + 1))
        a, b, c = rng.normal(1.0, 0.6, size=(3, n))
        samples = a + 0.5 * b * np.cos(s) + 0.5 * c * np.sin(s)
        if symfunc.strict_shifted_k_convex(samples, k, 0.0):
            hits += 1
            assert symfunc.in_cone_direct(samples, k, 0.0)
    assert hits > 20


@settings(max_examples=300, deadline=None)
@given(spectra, st.data())
def test_permutation_symmetry(x, data):
    m = data.draw(st.integers(min_value=0, max_value=len(x)))
    perm = data.draw(st.permutations(list(range(len(x)))))
    assert symfunc.eval_pm(x[list(perm)], m) == pytest.approx(symfunc.eval_pm(x, m),
                                                              abs=1e-10, rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(spectra, st.data())
def test_euler_and_trace_identities(x, data):
    n = len(x)
    m = data.draw(st.integers(min_value=1, max_value=n))
    grad = symfunc.grad_pm(x, m)
    assert np.dot(x, grad) == pytest.approx(m * symfunc.eval_pm(x, m), abs=1e-10)
    assert grad.sum() == pytest.approx(m * symfunc.eval_pm(x, m - 1), abs=1e-10)


@settings(max_examples=300, deadline=None)
@given(spectra, st.data())
def test_brute_force_oracle(x, data):
    m = data.draw(st.integers(min_value=0, max_value=len(x) + 1))
    assert symfunc.eval_pm(x, m) == pytest.approx(brute_pm(list(x), m), abs=1e-12, rel=1e-12)


def _cone_samples(rng, count):
    out = []
    while len(out) < count:
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, n + 1))
        x = rng.normal(0.8, 1.0, size=n)
        if symfunc.cone_membership(x, m).member:
            out.append((x, m))
    return out


def test_gradient_positive_on_cone(rng):
    for x, m in _cone_samples(rng, 300):
        assert np.all(symfunc.grad_pm(x, m) > 0)


def test_newton_maclaurin_on_cone(rng):
    for x, m in _cone_samples(rng, 300):
        gap = symfunc.newton_maclaurin_gap(x, m)
        assert gap >= -1e-12
        if gap < 1e-12 and m >= 2:
            assert x.max() - x.min() < 1e-5
