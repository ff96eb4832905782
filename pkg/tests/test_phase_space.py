import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugekerr.phase_space import (
    Ensemble,
    NormalizationError,
    estimate_moment,
    init_coherent,
    quadratures,
    to_lab_frame,
)


def test_init_coherent_points():
    e = init_coherent(100, 3)
    assert len(e) == 3
    np.testing.assert_allclose(e.alpha, 10)
    np.testing.assert_allclose(e.beta, 10)
    np.testing.assert_array_equal(e.omega, 1)
    assert e.t == 0 and e.frame == "lab"
    p = e.point(0)
    assert p.log_omega == 0
    assert p.n == pytest.approx(100)


def test_init_unit_amplitude():
    e = init_coherent(1, 1)
    assert e.alpha[0] == 1 and e.beta[0] == 1 and e.omega[0] == 1


@pytest.mark.parametrize("n_bar,count", [(0, 3), (-1, 3), (10, 0), (10, 2.5)])
def test_init_rejects_bad_arguments(n_bar, count):
    with pytest.raises(ValueError):
        init_coherent(n_bar, count)


def test_number_of_delta_state_has_no_variance():
    est = estimate_moment(init_coherent(100, 100_000), 1, 1)
    assert est.value == 100
    assert est.stderr_re == 0 and est.stderr_im == 0


def test_single_point_number():
    e = Ensemble.from_amplitudes(10.0, 10.0, 1.0, n_bar=100)
    assert estimate_moment(e, 1, 1).value == pytest.approx(100, rel=1e-14)


def test_two_point_average():
    e = Ensemble.from_amplitudes([1.0, 3.0], [1.0, 3.0], [1.0, 1.0])
    assert estimate_moment(e, 1, 1).value == pytest.approx(5.0, rel=1e-14)


def test_imaginary_weight_is_degenerate():
    e = Ensemble.from_amplitudes(2.0, 0.5, 1j)
    with pytest.raises(NormalizationError):
        estimate_moment(e, 1, 0)


def random_ensemble(seed, size, spread):
    rng = np.random.default_rng(seed)
    la = rng.normal(0, spread, size) + 1j * rng.uniform(-3, 3, size)
    ln = rng.normal(0, spread, size) + 1j * rng.uniform(-3, 3, size)
    lw = rng.normal(0, spread, size) + 1j * rng.uniform(-1, 1, size)
    return Ensemble(la, ln, lw, n_bar=float(rng.uniform(0.5, 200)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 200), st.floats(0.0, 3.0))
def test_normalization_identity(seed, size, spread):
    e = random_ensemble(seed, size, spread)
    try:
        est = estimate_moment(e, 0, 0)
    except NormalizationError:
        return
    assert est.value == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 100), st.integers(0, 3), st.integers(0, 3))
def test_hermiticity_is_exact(seed, size, m, n):
    e = random_ensemble(seed, size, 1.0)
    try:
        a = estimate_moment(e, m, n)
    except NormalizationError:
        return
    b = estimate_moment(e, n, m)
    assert a.value == b.value.conjugate()
    np.testing.assert_array_equal([a.stderr_re, a.stderr_im], [b.stderr_re, b.stderr_im])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 1e6), st.integers(1, 500))
def test_coherent_number_exact_for_any_size(n_bar, count):
    est = estimate_moment(init_coherent(n_bar, count), 1, 1)
    assert est.value.real == pytest.approx(n_bar, rel=1e-13)
    assert est.stderr_re == 0 or math.isnan(est.stderr_re)


@pytest.mark.parametrize("log_w", [300.0, -300.0])
def test_extreme_weights_stay_finite(log_w):
    e = Ensemble.from_amplitudes([1.0, 2.0], [1.0, 2.0])
    e = e.replace(log_omega=np.array([log_w, log_w + 0.5], dtype=complex))
    est = estimate_moment(e, 1, 1)
    w1, w2 = 1.0, math.exp(0.5)
    assert est.value.real == pytest.approx((w1 * 1 + w2 * 4) / (w1 + w2), rel=1e-12)


def test_weights_beyond_float_range():
    # individual weights would overflow; the ratio does not
    e = Ensemble.from_amplitudes([1.0, 3.0], [1.0, 3.0])
    e = e.replace(log_omega=np.array([690.0, 690.0], dtype=complex))
    assert estimate_moment(e, 1, 1).value.real == pytest.approx(5.0)


def test_diverged_points_excluded_and_counted():
    e = Ensemble.from_amplitudes([1.0, 3.0, 2.0], [1.0, 3.0, 2.0])
    e = e.replace(log_omega=np.array([0, 0, 800], dtype=complex))
    assert e.diverged.tolist() == [False, False, True]
    est = estimate_moment(e, 1, 1)
    assert est.value.real == pytest.approx(5.0)
    assert est.excluded == 1


def test_quadratures_of_coherent_state():
    x, y = quadratures(init_coherent(100, 10))
    assert x.value == 10 and y.value == 0


def test_quadratures_after_quarter_turn():
    # alpha -> i alpha with beta = alpha^*
    n_bar = 49.0
    a = 1j * math.sqrt(n_bar)
    e = Ensemble.from_amplitudes([a] * 4, [a.conjugate()] * 4, n_bar=n_bar)
    x, y = quadratures(e)
    assert x.value.real == pytest.approx(0, abs=1e-12)
    assert y.value.real == pytest.approx(7.0, rel=1e-14)


def test_to_lab_frame_identity_at_zero():
    e = init_coherent(100, 4, frame="rotating")
    lab = to_lab_frame(e)
    assert lab.frame == "lab"
    np.testing.assert_array_equal(lab.alpha, e.alpha)


def test_to_lab_frame_full_turn():
    n_bar = 100.0
    e = init_coherent(n_bar, 4, frame="rotating").replace(kt=2 * math.pi / n_bar, t=2 * math.pi / n_bar)
    lab = to_lab_frame(e)
    np.testing.assert_allclose(lab.alpha, e.alpha, rtol=1e-13)
    np.testing.assert_allclose(lab.beta, e.beta, rtol=1e-13)


def test_to_lab_frame_quarter_turn_rotates_x_into_y():
    n_bar = 100.0
    e = init_coherent(n_bar, 4, frame="rotating").replace(kt=math.pi / 2 / n_bar)
    x, y = quadratures(e)
    # alpha e^{-i pi/2} = -i sqrt(n)
    assert x.value.real == pytest.approx(0, abs=1e-12)
    assert y.value.real == pytest.approx(-10.0)


def test_to_lab_frame_requires_rotating():
    with pytest.raises(ValueError):
        to_lab_frame(init_coherent(10, 1))


def test_empty_ensemble_rejected():
    with pytest.raises(ValueError):
        Ensemble(np.array([]), np.array([]), np.array([]), n_bar=1.0)


def test_tau_from_clock():
    e = init_coherent(100, 1).replace(t=2 * math.pi / 10)
    assert e.tau == pytest.approx(1.0)
