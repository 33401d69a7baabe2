from __future__ import annotations

import enum
import hashlib
import json
import math
from logging import getLogger as get_logger
from typing import Any, Callable, Iterable, Mapping, Sequence, TypeVar

import numpy as np
from joblib import Parallel, delayed
from scipy.special import logsumexp

logger = get_logger(__name__)

T = TypeVar("T")
OutT = TypeVar("OutT")


class Stream(enum.IntEnum):
    """Tags of the independent random streams derived from a single user seed."""

    FIELD = 0
    PATHS = 1
    BRIDGES = 2
    ANNEALED = 3
    FLOW = 4
    BOOTSTRAP = 5
    SOLVER = 6
    STRATA = 7


def substream(seed: int, stream: Stream, *keys: int) -> np.random.Generator:
    """Returns the generator of the sub-stream `(seed, stream, *keys)`.

    The sub-stream only depends on its key, never on the order in which tasks are scheduled, so
    any worker count gives the same numbers.
    """
    spawn_key = (int(stream), *(int(k) for k in keys))
    if any(k < 0 for k in spawn_key):
        raise ValueError(f"Stream keys must be non-negative integers, got {spawn_key}")
    sequence = np.random.SeedSequence(int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.PCG64(sequence))


def log_mean_exp(log_weights: np.ndarray) -> tuple[float, float, float]:
    """Log-domain mean of `exp(log_weights)`.

    Returns `(log_mean, std_error, ess)` where `std_error` is the delta-method standard error of
    the log-mean and `ess = (sum w)^2 / sum w^2` is the effective sample size.
    """
    log_weights = np.asarray(log_weights, dtype=float).ravel()
    n = log_weights.size
    if n == 0 or not np.isfinite(log_weights.max(initial=-np.inf)):
        return -math.inf, math.inf, 0.0
    log_sum = logsumexp(log_weights)
    log_mean = float(log_sum - math.log(n))
    scaled = np.exp(log_weights - log_weights.max())
    mean = scaled.mean()
    std = scaled.std(ddof=1) if n > 1 else 0.0
    std_error = float(std / (math.sqrt(n) * mean))
    ess = float(np.exp(2 * log_sum - logsumexp(2 * log_weights)))
    return log_mean, std_error, ess


def trapezoid_weights(n_steps: int, dt: float) -> np.ndarray:
    """Quadrature weights of the trapezoid rule on `n_steps + 1` equally spaced times."""
    weights = np.full(n_steps + 1, dt)
    weights[0] = weights[-1] = dt / 2
    return weights


def stable_hash(config: Mapping[str, Any]) -> str:
    """Returns an md5 hex digest of the canonical JSON representation of `config`."""
    config_str = json.dumps(config, sort_keys=True, default=str)
    return hashlib.md5(config_str.encode("utf-8")).hexdigest()


def block_sizes(total: int, block_size: int) -> list[int]:
    """Splits `total` items into consecutive blocks of at most `block_size` items."""
    full, remainder = divmod(total, block_size)
    return [block_size] * full + ([remainder] if remainder else [])


def parallel_map(
    function: Callable[..., OutT], tasks: Iterable[Sequence[Any]], workers: int = 1
) -> list[OutT]:
    """Maps `function` over the argument tuples in `tasks`, keeping the order of the tasks."""
    tasks = list(tasks)
    if workers == 1 or len(tasks) <= 1:
        return [function(*task) for task in tasks]
    return Parallel(n_jobs=workers)(delayed(function)(*task) for task in tasks)
