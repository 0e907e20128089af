import numpy as np
import pytest

from dlopt import latin_hypercube, rng_streams
from dlopt.sampling import STREAM_NAMES, as_generator


def strata_counts(points, n):
    idx = np.floor(points * n).astype(int)
    idx = np.minimum(idx, n - 1)
    return np.array([np.bincount(idx[:, j], minlength=n) for j in range(points.shape[1])])


def test_single_point():
    pts = latin_hypercube(1, 3, np.random.default_rng(0))
    assert pts.shape == (1, 3)
    assert (pts >= 0).all() and (pts < 1).all()


def test_n4_d2_strata():
    pts = latin_hypercube(4, 2, np.random.default_rng(1))
    for j in range(2):
        assert sorted(np.floor(pts[:, j] * 4).astype(int)) == [0, 1, 2, 3]


def test_occupancy_histogram_all_ones():
    pts = latin_hypercube(20, 10, np.random.default_rng(42))
    counts = strata_counts(pts, 20)
    assert (counts == 1).all()


def test_stratification_full_grid():
    rng = np.random.default_rng(7)
    for n in range(1, 51):
        for d in (1, 2, 5, 11, 20):
            pts = latin_hypercube(n, d, rng)
            assert (strata_counts(pts, n) == 1).all(), (n, d)


def test_determinism_byte_identical():
    a = latin_hypercube(17, 4, np.random.default_rng(123))
    b = latin_hypercube(17, 4, np.random.default_rng(123))
    assert a.tobytes() == b.tobytes()


def test_preconditions():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        latin_hypercube(0, 2, rng)
    with pytest.raises(ValueError):
        latin_hypercube(2, 0, rng)


def test_rng_streams_reproducible_and_distinct():
    s1 = rng_streams(9)
    s2 = rng_streams(9)
    assert tuple(s1) == STREAM_NAMES
    for name in STREAM_NAMES:
        assert s1[name].random() == s2[name].random()
    fresh = rng_streams(9)
    draws = {name: fresh[name].random() for name in STREAM_NAMES}
    assert len(set(draws.values())) == len(STREAM_NAMES)


def test_as_generator_passthrough():
    g = np.random.default_rng(3)
    assert as_generator(g) is g
    assert as_generator(5).random() == np.random.default_rng(5).random()
    assert isinstance(as_generator(None), np.random.Generator)
