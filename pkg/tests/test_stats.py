import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugekerr.phase_space import Ensemble, init_coherent
from gaugekerr.stats import (
    BatchSpec,
    batch_sums,
    histogram_values,
    log_amplitude_values,
    log_weight_histogram,
    ratio_stderr,
)


def test_batch_sums_cover_everything():
    v = np.arange(10.0)
    s = batch_sums(v, 3)
    assert s.tolist() == [0 + 1 + 2 + 3, 4 + 5 + 6, 7 + 8 + 9]


def test_batch_count_floor():
    with pytest.raises(ValueError):
        BatchSpec(1)
    assert BatchSpec(32).effective(5) == 5


def test_constant_ratio_has_zero_error():
    num = np.full(64, 3.0 + 1.0j)
    den = np.ones(64)
    assert ratio_stderr(num, den) == (0.0, 0.0)


def test_two_batch_example():
    # batch ratios 1 and 3: std = sqrt(2), stderr = 1
    num = np.array([1.0, 1.0, 3.0, 3.0])
    den = np.ones(4)
    re, im = ratio_stderr(num, den, BatchSpec(2))
    assert re == pytest.approx(1.0) and im == 0.0


def test_single_sample_is_nan():
    re, im = ratio_stderr(np.array([1.0]), np.array([1.0]))
    assert math.isnan(re) and math.isnan(im)


def test_vanishing_batch_denominator_skipped():
    num = np.array([1.0, 1.0, 2.0, 2.0, 5.0, 5.0])
    den = np.array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0])
    with pytest.warns(RuntimeWarning):
        re, _ = ratio_stderr(num, den, BatchSpec(3))
    # remaining batch ratios 1 and 2
    assert re == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 100.0))
def test_error_scales_linearly(seed, c):
    rng = np.random.default_rng(seed)
    num = rng.normal(size=256) + 1j * rng.normal(size=256)
    den = rng.uniform(0.5, 1.5, 256)
    a = ratio_stderr(num, den)
    b = ratio_stderr(c * num, den)
    assert b[0] == pytest.approx(c * a[0], rel=1e-10)
    assert b[1] == pytest.approx(c * a[1], rel=1e-10)


def test_calibrated_against_replicate_scatter():
    # mean reported error should match the spread of independent replicates
    rng = np.random.default_rng(12)
    reps, size = 400, 2048
    values, errors = [], []
    for _ in range(reps):
        den = rng.lognormal(0, 0.5, size)
        num = den * (2.0 + rng.normal(size=size))
        values.append(num.sum() / den.sum())
        errors.append(ratio_stderr(num, den)[0])
    scatter = np.std(values, ddof=1)
    assert np.mean(errors) == pytest.approx(scatter, rel=0.2)


def test_histogram_conserves_samples():
    v = np.array([-np.inf, 0.05, 0.15, 0.15, 1.0, np.nan, np.inf])
    h = histogram_values(v, 0.1)
    assert h.total == len(v)
    assert h.underflow == 1 and h.overflow == 2


def test_histogram_edges_on_grid():
    h = histogram_values([-0.31, 0.27], 0.1)
    np.testing.assert_allclose(h.bin_edges[[0, -1]], [-0.4, 0.3])
    ratio = h.bin_edges / 0.1
    np.testing.assert_allclose(ratio, np.round(ratio), atol=1e-9)


def test_histogram_explicit_range():
    h = histogram_values([-5.0, 0.05, 5.0], 0.1, lo=-1, hi=1)
    assert h.underflow == 1 and h.overflow == 1 and h.counts.sum() == 1
    assert len(h.counts) == 20


def test_histogram_bad_width():
    with pytest.raises(ValueError):
        histogram_values([1.0], 0.0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=200), st.sampled_from([0.05, 0.1, 0.5]))
def test_histogram_total_property(values, width):
    h = histogram_values(values, width)
    assert h.total == len(values)
    assert h.underflow == 0 and h.overflow == 0


def test_span_of_delta_is_one_bin():
    h = log_weight_histogram(init_coherent(100, 1000), 0.1)
    assert len(h.occupied()) == 1
    assert h.span() == pytest.approx(0.1)
    # log10 sqrt(100) = 1 sits on a bin edge
    lo, hi, c = h.rows()[h.occupied()[0]]
    assert lo <= 1.0 < hi and c == 1000


def test_log_amplitude_marks_diverged():
    e = Ensemble.from_amplitudes([1.0, 10.0], [1.0, 10.0])
    e = e.replace(log_omega=np.array([0, 900], dtype=complex))
    v = log_amplitude_values(e)
    assert v[0] == 0 and math.isnan(v[1])
