import numpy as np
import pytest

from gaugekerr.noise import philox4x64, standard_normal_pair, wiener_increments


@pytest.mark.parametrize("trial", range(6))
def test_philox_matches_numpy(trial):
    rng = np.random.default_rng(trial)
    key = rng.integers(0, 2**64, size=2, dtype=np.uint64)
    ctr = rng.integers(0, 2**64 - 1, size=4, dtype=np.uint64)
    # numpy bumps the counter before producing its first block
    ref = np.random.Philox(key=key, counter=ctr).random_raw(4)
    c = ctr.copy()
    c[0] += np.uint64(1)
    assert np.array_equal(philox4x64(c.reshape(4, 1), key)[:, 0], ref)


def test_same_key_same_values():
    a = standard_normal_pair(7, np.arange(100), 3)
    b = standard_normal_pair(7, np.arange(100), 3)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_subset_of_trajectories_sees_same_noise():
    full = standard_normal_pair(11, np.arange(50), 9)
    part = standard_normal_pair(11, np.arange(20, 30), 9)
    assert np.array_equal(full[0][20:30], part[0])


@pytest.mark.parametrize("change", ["seed", "trajectory", "step", "slot"])
def test_each_counter_field_changes_output(change):
    base = dict(seed=1, trajectories=np.array([5]), step=10, slot=0)
    other = dict(base)
    if change == "trajectory":
        other["trajectories"] = np.array([6])
    else:
        other[change] += 1
    x = standard_normal_pair(**base)[0]
    y = standard_normal_pair(**other)[0]
    assert x[0] != y[0]


def test_gaussian_moments():
    n = 10**6
    z1, z2 = standard_normal_pair(3, np.arange(n), 0)
    for z in (z1, z2):
        assert abs(z.mean()) / (1 / np.sqrt(n)) < 4
        # var of the sample variance is 2/n for a unit Gaussian
        assert abs(z.var() - 1) / np.sqrt(2 / n) < 4
    assert abs(np.mean(z1 * z2)) * np.sqrt(n) < 4


def test_wiener_variance_is_dt():
    n = 200_000
    dt = 1e-3
    dw1, dw2 = wiener_increments(5, np.arange(n), 4, dt)
    assert abs(dw1.var() / dt - 1) < 4 * np.sqrt(2 / n)
    assert abs(dw2.mean()) / np.sqrt(dt / n) < 4


def test_substeps_sum_fine_increments():
    idx = np.arange(64)
    dt = 0.01
    coarse = wiener_increments(9, idx, 3, dt, substeps=4)
    fine = [wiener_increments(9, idx, 12 + j, dt / 4) for j in range(4)]
    np.testing.assert_allclose(coarse[0], sum(f[0] for f in fine), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(coarse[1], sum(f[1] for f in fine), rtol=1e-12, atol=1e-15)


def test_consecutive_steps_uncorrelated():
    n = 100_000
    a = standard_normal_pair(2, np.arange(n), 100)[0]
    b = standard_normal_pair(2, np.arange(n), 101)[0]
    assert abs(np.corrcoef(a, b)[0, 1]) * np.sqrt(n) < 4
