"""
Helpers for fanning sample tasks out over processes or MPI ranks.

Samples are cut into fixed-size tasks and every task draws from its own
stream derived from (master seed, stream, task index). Which worker runs a task
never enters its seed, so merged results do not depend on the worker count.
"""

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from tqdm.auto import tqdm

from . import logger

WORKERS_ENV = "UIPT_WORKERS"
DEFAULT_TASK_SIZE = 10_000


def task_seed(master_seed, task_index, stream=0):
    """
    Seed sequence of one task.

    :param master_seed: non-negative 64-bit integer from the experiment spec.
    :param task_index: position of the task in the experiment's task list.
    :param stream: separates independent sample sets drawn under one seed.
    """
    if master_seed < 0:
        raise ValueError(f"seed must be non-negative, got {master_seed}")
    return np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=(int(stream), int(task_index))
    )


def task_rng(master_seed, task_index, stream=0):
    return np.random.Generator(np.random.PCG64(task_seed(master_seed, task_index, stream)))


def split_samples(samples, task_size=DEFAULT_TASK_SIZE):
    """
    Cut ``samples`` into a list of task sizes, all equal to task_size except
    possibly the last.
    """
    if samples < 0:
        raise ValueError(f"samples must be non-negative, got {samples}")
    if task_size < 1:
        raise ValueError(f"task_size must be >= 1, got {task_size}")
    full, rest = divmod(int(samples), int(task_size))
    return [task_size] * full + ([rest] if rest else [])


def resolve_workers(requested=None):
    """
    Worker count: the explicit value, else $UIPT_WORKERS, else 1.
    """
    if requested is None:
        requested = int(os.getenv(WORKERS_ENV, "1"))
    if requested < 1:
        raise ValueError(f"workers must be >= 1, got {requested}")
    return int(requested)


def mpi_comm():
    """
    MPI.COMM_WORLD when launched under an MPI launcher with more than one
    rank, else None. mpi4py is only imported in that case.
    """
    if not any(v in os.environ for v in ("PMI_RANK", "OMPI_COMM_WORLD_RANK")):
        return None
    from mpi4py import MPI

    comm = MPI.COMM_WORLD
    return comm if comm.Get_size() > 1 else None


def is_main_process():
    return logger.get_rank_without_mpi_import() == 0


def run_tasks(fn, tasks, workers=1, progress=False, desc=None):
    """
    Apply a picklable function to every task and return results in task order.

    :param fn: module-level function of one task.
    :param tasks: list of task arguments.
    :param workers: processes to use when not running under MPI.
    :param progress: show a tqdm bar.
    """
    tasks = list(tasks)
    comm = mpi_comm()
    if comm is not None:
        mine = [(i, fn(t)) for i, t in enumerate(tasks) if i % comm.size == comm.rank]
        results = [None] * len(tasks)
        for chunk in comm.allgather(mine):
            for i, res in chunk:
                results[i] = res
        return results

    show = progress and len(tasks) > 1
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tqdm(tasks, desc=desc, disable=not show)]
    logger.debug(f"running {len(tasks)} tasks on {workers} processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(tqdm(pool.map(fn, tasks), total=len(tasks), desc=desc, disable=not show))


def merge_counts(results):
    """
    Sum a list of dicts key by key; values may be numbers or numpy arrays.
    Maxima are kept for keys ending in "_max".
    """
    merged = {}
    for res in results:
        for key, val in res.items():
            if key not in merged:
                merged[key] = np.array(val, copy=True) if isinstance(val, np.ndarray) else val
            elif key.endswith("_max"):
                merged[key] = max(merged[key], val)
            else:
                merged[key] = merged[key] + val
    return merged
