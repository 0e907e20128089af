import numpy as np
import pytest

from dlopt import EvaluationLog


def test_append_and_best():
    log = EvaluationLog(2)
    log.append([[0.1, 0.2], [0.5, 0.5]], [1.0, 3.0])
    log.append([[0.9, 0.9]], [2.0])
    assert len(log) == 3
    assert log.best_index == 1
    assert log.best_value == 3.0
    np.testing.assert_array_equal(log.best_point, [0.5, 0.5])
    np.testing.assert_array_equal(log.call_indices, [0, 1, 2])


def test_best_tie_first_occurrence():
    log = EvaluationLog(1)
    log.append([[0.1], [0.2], [0.3]], [5.0, 5.0, 1.0])
    assert log.best_index == 0


def test_rejects_points_outside_cube():
    log = EvaluationLog(2)
    with pytest.raises(ValueError):
        log.append([[1.2, 0.0]], [0.0])
    with pytest.raises(ValueError):
        log.append([[-0.1, 0.0]], [0.0])


def test_rejects_shape_mismatch():
    log = EvaluationLog(2)
    with pytest.raises(ValueError):
        log.append([[0.1, 0.2]], [1.0, 2.0])
    with pytest.raises(ValueError):
        log.append([[0.1, 0.2, 0.3]], [1.0])


def test_empty_log_guards():
    log = EvaluationLog(1)
    assert len(log) == 0
    assert log.points.shape == (0, 1)
    with pytest.raises(ValueError):
        _ = log.best_index


def test_raw_values_are_copies_not_views():
    log = EvaluationLog(1)
    pts = np.array([[0.5]])
    log.append(pts, [1.0])
    pts[0, 0] = 0.9
    assert log.points[0, 0] == 0.5
