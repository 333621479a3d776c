import math

import numpy as np
import pytest

from uipt_percolation import dist_util


def test_split_samples():
    assert dist_util.split_samples(25_000) == [10_000, 10_000, 5_000]
    assert dist_util.split_samples(20_000) == [10_000, 10_000]
    assert dist_util.split_samples(0) == []
    assert dist_util.split_samples(7, task_size=3) == [3, 3, 1]
    with pytest.raises(ValueError):
        dist_util.split_samples(-1)
    with pytest.raises(ValueError):
        dist_util.split_samples(5, task_size=0)


def test_task_streams_are_reproducible_and_distinct():
    a = dist_util.task_rng(11, 3).random(4)
    b = dist_util.task_rng(11, 3).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, dist_util.task_rng(11, 4).random(4))
    assert not np.array_equal(a, dist_util.task_rng(11, 3, stream=1).random(4))
    assert not np.array_equal(a, dist_util.task_rng(12, 3).random(4))
    with pytest.raises(ValueError):
        dist_util.task_seed(-1, 0)


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv(dist_util.WORKERS_ENV, raising=False)
    assert dist_util.resolve_workers() == 1
    monkeypatch.setenv(dist_util.WORKERS_ENV, "3")
    assert dist_util.resolve_workers() == 3
    assert dist_util.resolve_workers(2) == 2
    with pytest.raises(ValueError):
        dist_util.resolve_workers(0)


def test_no_mpi_without_launcher(monkeypatch):
    monkeypatch.delenv("PMI_RANK", raising=False)
    monkeypatch.delenv("OMPI_COMM_WORLD_RANK", raising=False)
    assert dist_util.mpi_comm() is None
    assert dist_util.is_main_process()


@pytest.mark.parametrize("workers", [1, 2])
def test_run_tasks_keeps_order(monkeypatch, workers):
    monkeypatch.delenv("PMI_RANK", raising=False)
    monkeypatch.delenv("OMPI_COMM_WORLD_RANK", raising=False)
    tasks = list(range(8))
    assert dist_util.run_tasks(math.factorial, tasks, workers=workers) == [
        math.factorial(t) for t in tasks
    ]


def test_merge_counts():
    merged = dist_util.merge_counts(
        [
            {"black": 2, "weight_max": 0.5, "counts": np.array([1, 2])},
            {"black": 3, "weight_max": 0.25, "counts": np.array([0, 5])},
        ]
    )
    assert merged["black"] == 5
    assert merged["weight_max"] == 0.5
    np.testing.assert_array_equal(merged["counts"], [1, 7])
    assert dist_util.merge_counts([]) == {}
