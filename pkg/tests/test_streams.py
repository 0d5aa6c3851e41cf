"""Random stream and direction sampler tests.

Oracle strategy: geometric invariants (unit norms, sign values) are exact;
distributional facts (ball second moment, sphere isotropy) are Monte Carlo
against closed-form moments with explicit standard-error tolerances.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zoresid.streams import (
    Distribution,
    DimensionError,
    RandomStream,
    sample_ball,
    sample_ball_batch,
    sample_gaussian_batch,
    sample_rademacher_batch,
    sample_sphere,
    sample_sphere_batch,
)


def test_same_seed_reproduces_bit_for_bit():
    a = RandomStream(42).normal((100,))
    b = RandomStream(42).normal((100,))
    np.testing.assert_array_equal(a, b)


def test_different_seeds_differ():
    a = RandomStream(1).normal((100,))
    b = RandomStream(2).normal((100,))
    assert not np.array_equal(a, b)


def test_counter_tracks_consumption():
    s = RandomStream(0)
    s.normal((3, 4))
    s.uniform(5)
    assert s.counter == 17


def test_fork_is_deterministic_and_disjoint():
    parent = RandomStream(7)
    parent.normal(1000)  # consuming the parent must not move the children
    child_a = parent.fork(3).normal(50)
    child_b = RandomStream(7).fork(3).normal(50)
    np.testing.assert_array_equal(child_a, child_b)
    sibling = parent.fork(4).normal(50)
    assert not np.array_equal(child_a, sibling)


def test_sphere_unit_norm_exact():
    u = sample_sphere_batch(RandomStream(0), 1000, 6)
    np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-12)


def test_ball_inside_unit_ball():
    u = sample_ball_batch(RandomStream(0), 1000, 6)
    assert np.all(np.linalg.norm(u, axis=1) <= 1.0 + 1e-12)


def test_rademacher_signs_exact():
    u = sample_rademacher_batch(RandomStream(0), 500, 7)
    assert set(np.unique(u)) == {-1.0, 1.0}


def test_single_draw_wrappers_tag_distribution():
    assert sample_sphere(RandomStream(0), 3).distribution is Distribution.UNIT_SPHERE
    assert sample_ball(RandomStream(0), 3).distribution is Distribution.UNIT_BALL


@pytest.mark.parametrize("d", [2, 8, 32])
def test_ball_second_moment_matches_closed_form(d):
    # E||u||^2 = d/(d+2) for the uniform ball: r^2 with r = U^(1/d) has mean d/(d+2)
    n = 200_000
    u = sample_ball_batch(RandomStream(11), n, d)
    sq = np.sum(u * u, axis=1)
    se = sq.std(ddof=1) / np.sqrt(n)
    assert abs(sq.mean() - d / (d + 2.0)) <= 3.5 * se


@pytest.mark.parametrize("d", [1, 4, 16])
def test_sphere_isotropy_second_moment(d):
    # E[(u^T a)^2] = ||a||^2 / d for any fixed a
    n = 200_000
    a = RandomStream(5).normal(d)
    u = sample_sphere_batch(RandomStream(12), n, d)
    vals = (u @ a) ** 2
    se = vals.std(ddof=1) / np.sqrt(n)
    assert abs(vals.mean() - a @ a / d) <= 3.5 * se + 1e-12


def test_gaussian_batch_shape_and_moments():
    z = sample_gaussian_batch(RandomStream(3), 100_000, 4)
    assert z.shape == (100_000, 4)
    assert abs(z.mean()) < 0.02
    assert abs(z.var() - 1.0) < 0.02


@pytest.mark.parametrize("sampler", [sample_sphere_batch, sample_ball_batch,
                                     sample_gaussian_batch, sample_rademacher_batch])
def test_invalid_dimension_raises(sampler):
    with pytest.raises(DimensionError):
        sampler(RandomStream(0), 10, 0)


@given(seed=st.integers(0, 2**31 - 1), d=st.integers(1, 40))
@settings(max_examples=30, deadline=None)
def test_sphere_norm_property(seed, d):
    u = sample_sphere_batch(RandomStream(seed), 8, d)
    assert np.allclose(np.linalg.norm(u, axis=1), 1.0, atol=1e-10)


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_fork_reproducibility_property(seed):
    a = RandomStream(seed).fork(1).uniform(16)
    b = RandomStream(seed).fork(1).uniform(16)
    np.testing.assert_array_equal(a, b)
