"""
The boundary random walk of the half-plane peeling process.

A step is +1 with probability 1/3, 0 with probability 1/2 and -k with
probability p_k. Hitting probabilities do not depend on the lazy 0-step, so
the simulators below run the non-lazy chain (+1 w.p. 2/3, -k w.p. 2 p_k) and
reattach lazy time only where a time is reported.
"""

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_toeplitz

from . import combinatorics as comb

DEFAULT_BUDGET = 10 ** 8
DEFAULT_HEAD_SIZE = 1024
DEFAULT_TRUNCATION = 2000

# Block shapes for the vectorized simulators: about BLOCK_TARGET draws per
# block, spread over the runs that are still alive.
BLOCK_TARGET = 1 << 17
MAX_BLOCK_WIDTH = 1 << 20


class PassageStatus(enum.IntEnum):
    HIT = 0
    EXHAUSTED = 1
    CEILING = 2


class StepDistribution:
    """
    Law of one step of the boundary walk.

    The head holds exact probabilities for +1, 0 (lazy only) and -k with
    k <= head_size; the remaining mass sits in ``tail_mass``. Jump sizes are
    drawn by inverse CDF on the head and by inverting the closed-form tail
    survival beyond it, so there is no truncation bias.

    :param head_size: number of exact jump probabilities in the head.
    :param lazy: include the probability-1/2 zero step.
    :param table: EnumerationTable to read p_k from.
    """

    def __init__(self, head_size=DEFAULT_HEAD_SIZE, lazy=True, table=None):
        if head_size < 1:
            raise ValueError(f"head_size must be >= 1, got {head_size}")
        table = table or comb.default_table()
        self.head_size = int(head_size)
        self.lazy = bool(lazy)

        scale = 1 if lazy else 2
        self.up_prob = Fraction(scale, 3)
        self.stay_prob = Fraction(1, 2) if lazy else Fraction(0)
        self.jump_scale = scale

        head = [(1, self.up_prob)]
        if lazy:
            head.append((0, self.stay_prob))
        head.extend((-k, scale * table.p(k)) for k in range(1, self.head_size + 1))
        self.head = tuple(head)
        self.tail_mass = scale * table.tail(self.head_size)
        assert sum(prob for _, prob in self.head) + self.tail_mass == 1, (
            "step probabilities must sum to one"
        )

        # Conditional law of a jump size given a jump: 6 p_k.
        self._jump_cdf = np.array(
            [float(1 - 6 * table.tail(k)) for k in range(1, self.head_size + 1)]
        )
        self._log_tail_head = float(comb.log_tail_mass(self.head_size))
        self._up_float = float(self.up_prob)
        self._stay_float = float(self.stay_prob)

    def probability(self, step):
        """
        Exact probability of a step value.
        """
        if step == 1:
            return self.up_prob
        if step == 0:
            return self.stay_prob
        if step < 0:
            return self.jump_scale * comb.halfplane_pk(-step)
        return Fraction(0)

    def mean_head(self):
        """
        Exact mean of the step restricted to the head; tends to 0 with the
        head size since the missing part is -jump_scale * mean_tail(head_size).
        """
        return self.up_prob - self.jump_scale * sum(
            k * comb.halfplane_pk(k) for k in range(1, self.head_size + 1)
        )

    def sample_jumps(self, rng, size):
        """
        Draw jump sizes k >= 1 with law 6 p_k.

        :param rng: numpy Generator.
        :param size: output shape.
        :return: int64 array of the given shape.
        """
        u = rng.random(size)
        idx = np.searchsorted(self._jump_cdf, u, side="right")
        jumps = (idx + 1).astype(np.int64)
        in_tail = idx >= self.head_size
        if np.any(in_tail):
            jumps[in_tail] = self._sample_tail(rng, int(in_tail.sum()))
        return jumps

    def _sample_tail(self, rng, count):
        # Smallest K > head_size with T_K <= (1 - v) T_head, found by doubling
        # then bisection on the closed-form log tail.
        target = self._log_tail_head + np.log1p(-rng.random(count))
        lo = np.full(count, self.head_size, dtype=np.int64)
        hi = np.full(count, 2 * self.head_size, dtype=np.int64)
        while True:
            above = comb.log_tail_mass(hi) > target
            if not np.any(above):
                break
            lo = np.where(above, hi, lo)
            hi = np.where(above, 2 * hi, hi)
        while np.any(hi - lo > 1):
            mid = (lo + hi) // 2
            below = comb.log_tail_mass(mid) <= target
            hi = np.where(below, mid, hi)
            lo = np.where(below, lo, mid)
        return hi

    def sample(self, rng, size=None):
        """
        Draw steps (+1, 0 or -k).
        """
        u = rng.random(1 if size is None else size)
        steps = np.where(u < self._up_float, 1, 0).astype(np.int64)
        jumping = u >= self._up_float + self._stay_float
        if np.any(jumping):
            steps[jumping] = -self.sample_jumps(rng, int(np.sum(jumping)))
        if size is None:
            return int(steps[0])
        return steps

    def __repr__(self):
        return f"StepDistribution(head_size={self.head_size}, lazy={self.lazy})"


_DEFAULT_DISTRIBUTION = None


def default_distribution():
    global _DEFAULT_DISTRIBUTION
    if _DEFAULT_DISTRIBUTION is None:
        _DEFAULT_DISTRIBUTION = StepDistribution()
    return _DEFAULT_DISTRIBUTION


def sample_step(dist, rng):
    """
    Draw one step of the walk.

    :param dist: a StepDistribution.
    :param rng: numpy Generator.
    :return: an int in {+1, 0, -1, -2, ...}.
    """
    return dist.sample(rng)


@dataclass(frozen=True)
class FirstPassageRecord:
    """
    One run of the walk from ``start`` until it is <= 0.

    ``hit_time`` counts steps of the walk's own law (lazy steps included for a
    lazy distribution); ``overshoot`` is |S_{T_-}|. Both are None when the
    budget ran out first.
    """

    start: int
    hit_time: int
    overshoot: int
    max_height: int
    exhausted: bool = False


@dataclass
class FirstPassageBatch:
    starts: np.ndarray
    status: np.ndarray
    hit_time: np.ndarray
    overshoot: np.ndarray
    max_height: np.ndarray
    position: np.ndarray

    @property
    def hit(self):
        return self.status == PassageStatus.HIT

    @property
    def exhausted(self):
        return self.status == PassageStatus.EXHAUSTED

    @property
    def at_ceiling(self):
        return self.status == PassageStatus.CEILING


def first_true(mask):
    """
    Index of the first True per row, or the row width when there is none.
    """
    width = mask.shape[1]
    idx = mask.argmax(axis=1)
    return np.where(mask[np.arange(mask.shape[0]), idx], idx, width)


def _lazy_time(rng, nonlazy_steps, lazy):
    if not lazy:
        return nonlazy_steps.copy()
    out = nonlazy_steps.copy()
    positive = nonlazy_steps > 0
    if np.any(positive):
        out[positive] += rng.negative_binomial(nonlazy_steps[positive], 0.5)
    return out


def first_passage_batch(starts, rng, dist=None, budget=DEFAULT_BUDGET, ceiling=None):
    """
    Run independent walks until each is <= 0.

    The walk is advanced by its jump chain: a geometric number of +1 steps
    followed by one jump, since only jumps can reach Z^-. Blocks of cycles are
    drawn for every alive run, with wider blocks as runs finish.

    :param starts: array of starting heights >= 1.
    :param rng: numpy Generator.
    :param dist: StepDistribution; decides jump sizes and laziness of the
                 reported time.
    :param budget: cap on non-lazy steps per run.
    :param ceiling: if given, a run stops with status CEILING when it
                    reaches this height (exactly, since up-steps are +1).
    :return: a FirstPassageBatch.
    """
    dist = dist or default_distribution()
    starts = np.atleast_1d(np.asarray(starts, dtype=np.int64))
    n = starts.size
    if n and starts.min() < 1:
        raise ValueError(f"starting heights must be >= 1, got {starts.min()}")
    if ceiling is not None and n and ceiling <= starts.max():
        raise ValueError(f"ceiling {ceiling} must exceed every start")

    position = starts.copy()
    steps = np.zeros(n, dtype=np.int64)
    max_height = starts.copy()
    overshoot = np.zeros(n, dtype=np.int64)
    status = np.full(n, -1, dtype=np.int8)
    alive = np.arange(n)

    while alive.size:
        m = alive.size
        width = int(np.clip(BLOCK_TARGET // m, 1, MAX_BLOCK_WIDTH))
        rows = np.arange(m)
        ups = rng.geometric(1.0 / 3.0, size=(m, width)).astype(np.int64) - 1
        jumps = dist.sample_jumps(rng, (m, width))

        x0 = position[alive][:, None]
        used0 = steps[alive][:, None]
        after = x0 + np.cumsum(ups - jumps, axis=1)
        peak = after + jumps
        used = used0 + np.cumsum(ups + 1, axis=1)

        e_hit = first_true(after <= 0)
        e_over = first_true(used > budget)
        if ceiling is not None:
            e_top = first_true(peak >= ceiling)
        else:
            e_top = np.full(m, width)
        event = np.minimum(np.minimum(e_hit, e_over), e_top)
        done = event < width

        cols = np.arange(width)[None, :]
        upto = cols <= np.minimum(event, width - 1)[:, None]
        block_peak = np.where(upto, peak, 0).max(axis=1)
        max_height[alive] = np.maximum(max_height[alive], block_peak)

        running = alive[~done]
        position[running] = after[~done, -1]
        steps[running] = used[~done, -1]

        if np.any(done):
            ev = event[done]
            r = rows[done]
            idx = alive[done]
            after_ext = np.concatenate([x0, after], axis=1)
            used_ext = np.concatenate([used0, used], axis=1)
            prev_pos = after_ext[r, ev]
            prev_used = used_ext[r, ev]

            over = e_over[done] <= np.minimum(e_hit[done], e_top[done])
            top = ~over & (e_top[done] <= e_hit[done])
            hit = ~over & ~top

            status[idx[over]] = PassageStatus.EXHAUSTED
            steps[idx[over]] = prev_used[over]
            position[idx[over]] = prev_pos[over]

            if np.any(top):
                status[idx[top]] = PassageStatus.CEILING
                steps[idx[top]] = prev_used[top] + (ceiling - prev_pos[top])
                position[idx[top]] = ceiling
                max_height[idx[top]] = ceiling

            status[idx[hit]] = PassageStatus.HIT
            steps[idx[hit]] = used[r[hit], ev[hit]]
            position[idx[hit]] = after[r[hit], ev[hit]]
            overshoot[idx[hit]] = -after[r[hit], ev[hit]]

        alive = running

    return FirstPassageBatch(
        starts=starts,
        status=status,
        hit_time=_lazy_time(rng, steps, dist.lazy),
        overshoot=overshoot,
        max_height=max_height,
        position=position,
    )


def run_first_passage(a, dist, rng, budget=DEFAULT_BUDGET):
    """
    Simulate the walk from a until it first becomes <= 0.

    :param a: starting height, at least 1.
    :param dist: StepDistribution.
    :param rng: numpy Generator.
    :param budget: cap on non-lazy steps; exceeding it gives a record with
                   ``exhausted=True`` instead of looping forever.
    :return: a FirstPassageRecord.
    """
    if a < 1:
        raise ValueError(f"a must be >= 1, got {a}")
    batch = first_passage_batch([a], rng, dist=dist, budget=budget)
    if batch.exhausted[0]:
        return FirstPassageRecord(
            start=int(a),
            hit_time=None,
            overshoot=None,
            max_height=int(batch.max_height[0]),
            exhausted=True,
        )
    return FirstPassageRecord(
        start=int(a),
        hit_time=int(batch.hit_time[0]),
        overshoot=int(batch.overshoot[0]),
        max_height=int(batch.max_height[0]),
    )


@dataclass(frozen=True)
class HittingDistribution:
    """
    Law of the overshoot |S_{T_-}| from ``start``, computed on states 1..N.

    ``mass[j]`` is P(overshoot = j) for j < len(mass), ``tail_mass`` is
    P(overshoot >= len(mass)), and ``escape_mass`` the probability of climbing
    above N first, which bounds the error of every entry.
    """

    start: int
    truncation: int
    mass: np.ndarray
    tail_mass: float
    escape_mass: float

    def survival(self, b):
        """
        P(overshoot >= b), up to escape_mass.
        """
        if b < 0:
            raise ValueError(f"b must be >= 0, got {b}")
        if b > len(self.mass):
            raise ValueError(f"b={b} beyond the computed support {len(self.mass)}")
        return math.fsum(self.mass[b:]) + self.tail_mass

    def cdf(self, b):
        """
        P(overshoot < b), up to escape_mass.
        """
        return math.fsum(self.mass[:b])

    def total(self):
        return math.fsum(self.mass) + self.tail_mass + self.escape_mass


class HittingProbability(NamedTuple):
    value: float
    error_bound: float


@lru_cache(maxsize=64)
def _green_row(a, N):
    # Expected visits to each state in 1..N before absorption, starting at a:
    # solves (I - P)^T g = e_a with the Toeplitz structure of I - P.
    pk2 = 2.0 * np.exp(comb.log_halfplane_pk(np.arange(1, N)))
    col = np.concatenate([[1.0], -pk2])
    row = np.zeros(N)
    row[0] = 1.0
    if N > 1:
        row[1] = -2.0 / 3.0
    rhs = np.zeros(N)
    rhs[a - 1] = 1.0
    green = solve_toeplitz((row, col), rhs)
    # Levinson leaves a residual well above rounding; two rounds of
    # refinement against a direct product bring it down to it.
    for _ in range(2):
        green = green + solve_toeplitz((row, col), rhs - _toeplitz_apply(pk2, green))
    green.setflags(write=False)
    return green


def _toeplitz_apply(pk2, g):
    # (I - P)^T g, computed directly: g(y) - 2/3 g(y - 1) - sum_k 2 p_k g(y + k).
    N = len(g)
    out = g.copy()
    out[1:] -= (2.0 / 3.0) * g[:-1]
    if N > 1:
        down = np.convolve(pk2, g[::-1])
        out[: N - 1] -= down[N - 2 :: -1][: N - 1]
    return out


def _check_truncation(a, N):
    if N < 1:
        raise ValueError(f"truncation N must be >= 1, got {N}")
    if a < 1:
        raise ValueError(f"a must be >= 1, got {a}")
    if N < a:
        raise ValueError(f"truncation N={N} must be at least the start a={a}")


def overshoot_distribution_exact(a, N=DEFAULT_TRUNCATION, support=None):
    """
    Law of the overshoot from a, for the walk killed when it exceeds N.

    :param a: starting height, 1 <= a <= N.
    :param N: truncation level.
    :param support: number of explicit entries in ``mass``; defaults to N.
    :return: a HittingDistribution.
    """
    _check_truncation(a, N)
    support = N if support is None else int(support)
    if support < 1:
        raise ValueError(f"support must be >= 1, got {support}")

    green = _green_row(int(a), int(N))
    # Jumping from x by k = x + j lands at -j.
    k = np.arange(1, N + support)
    pk2 = 2.0 * np.exp(comb.log_halfplane_pk(k))
    landing = np.convolve(pk2, green[::-1])
    mass = np.clip(landing[N - 1 : N - 1 + support], 0.0, None)

    x = np.arange(1, N + 1)
    tail2 = 2.0 * np.exp(comb.log_tail_mass(x + support - 1))
    tail = float(math.fsum(green * tail2))
    escape = float(green[-1] * 2.0 / 3.0)
    return HittingDistribution(
        start=int(a), truncation=int(N), mass=mass, tail_mass=tail, escape_mass=escape
    )


def hitting_prob_exact(a, b, N=DEFAULT_TRUNCATION):
    """
    Q_{a,b} = P_a(|S_{T_-}| >= b) from the truncated first-passage system.

    :return: HittingProbability(value, error_bound) with error_bound the
             escape mass above N.
    """
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    dist = overshoot_distribution_exact(a, N, support=max(N, b + 1))
    return HittingProbability(dist.survival(b), dist.escape_mass)


def ladder_step_pmf(j, table=None):
    """
    P(D = j) = 3 tail(j - 1), exact, where D is the depth gained between two
    successive strict descending ladder epochs of the walk. The law has mean
    infinity and sums to one.
    """
    j = comb.check_index("j", j, 1)
    return 3 * comb.tail_mass(j - 1, table)


def ladder_step_survival(n, table=None):
    """
    P(D >= n), exact: 1 for n = 1 and 6 n tail(n - 1) beyond.
    """
    n = comb.check_index("n", n, 1)
    if n == 1:
        return Fraction(1)
    return 6 * n * comb.tail_mass(n - 1, table)


def _ladder_survival_float(n):
    n = np.asarray(n, dtype=np.float64)
    out = np.ones(n.shape)
    big = n >= 2
    m = n[big]
    out[big] = np.exp(np.log(2.0 * m * (2.0 * m - 3.0)) + comb.log_halfplane_pk(m - 1.0))
    return out


@lru_cache(maxsize=8)
def _ladder_renewal(size):
    # u[y] = P(some strict ladder epoch lies exactly y below the start).
    u = np.zeros(size)
    u[0] = 1.0
    if size > 1:
        j = np.arange(2, size, dtype=np.float64)
        f = np.concatenate([[0.5], np.exp(np.log(2.0 * j - 3.0) + comb.log_halfplane_pk(j - 1.0))])
        for y in range(1, size):
            u[y] = np.dot(f[:y], u[y - 1 :: -1])
    u.setflags(write=False)
    return u


def _renewal_size(a):
    return 1 << max(int(a) - 1, 1).bit_length()


def hitting_prob_ladder(a, b, exact=False, table=None):
    """
    Q_{a,b} with no truncation, from the descending ladder of the walk.

    Upward steps are +1, so each strict ladder epoch below the start is a
    renewal with step law ``ladder_step_pmf``. The walk enters Z^- on the jump
    out of its last ladder position a - y >= 1, which gives

        Q_{a,b} = sum_{y < a} u(y) P(D >= a - y + b)

    with u the renewal mass. The sum is finite, so the only error is float
    rounding; ``exact=True`` evaluates it in rationals.

    :param a: starting height, at least 1.
    :param b: overshoot threshold, at least 1.
    :return: a float, or a Fraction when ``exact``.
    """
    a = comb.check_index("a", a, 1)
    b = comb.check_index("b", b, 1)
    if exact:
        u = [Fraction(1)]
        f = [ladder_step_pmf(j, table) for j in range(1, a)]
        for y in range(1, a):
            u.append(sum(f[j] * u[y - 1 - j] for j in range(y)))
        return sum(u[y] * ladder_step_survival(a - y + b, table) for y in range(a))
    u = _ladder_renewal(_renewal_size(a))[:a]
    return float(np.dot(u, _ladder_survival_float(a + b - np.arange(a))))


def hitting_probs_ladder(a, b):
    """
    Vectorized float ``hitting_prob_ladder`` over paired arrays of starts and
    thresholds, evaluating each distinct pair once.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return np.zeros(a.shape)
    if a.min() < 1 or b.min() < 1:
        raise ValueError("starts and thresholds must be >= 1")
    pairs, inverse = np.unique(np.stack([a.ravel(), b.ravel()], axis=1), axis=0, return_inverse=True)
    u = _ladder_renewal(_renewal_size(pairs[:, 0].max()))
    values = np.array(
        [np.dot(u[:x], _ladder_survival_float(x + y - np.arange(x))) for x, y in pairs]
    )
    return values[np.ravel(inverse)].reshape(a.shape)


@dataclass(frozen=True)
class RaceOutcome:
    """
    Result of racing two walks to Z^-.

    ``loser`` is 1 or 2 (the walk that hit first), ``overshoot`` its depth
    below 0, ``survivor`` the other walk's height at that moment.
    """

    loser: int
    overshoot: int
    survivor: int
    events: int
    exhausted: bool = False


@dataclass
class RaceBatch:
    """
    Arrays of a race batch. ``loser`` is 0 for pairs that did not finish;
    those stopped at the ceiling keep their heights in ``position1`` and
    ``position2``.
    """

    loser: np.ndarray
    overshoot: np.ndarray
    survivor: np.ndarray
    events: np.ndarray
    time: np.ndarray
    at_ceiling: np.ndarray = None
    position1: np.ndarray = None
    position2: np.ndarray = None

    @property
    def exhausted(self):
        if self.at_ceiling is None:
            return self.loser == 0
        return (self.loser == 0) & ~self.at_ceiling


def _per_run(value, n, dtype):
    return np.broadcast_to(np.asarray(value, dtype=dtype), (n,)).copy()


def race_batch(a, b, n, rng, dist=None, rate_ratio=1.0, rate_fn=None,
               budget=DEFAULT_BUDGET, max_width=MAX_BLOCK_WIDTH, ceiling=None,
               space_scale=1.0, time_scale=1.0, time_offset=0.0):
    """
    Race n independent pairs of walks from (a, b) to Z^-.

    Each event moves walk 1 with probability r1 / (r1 + r2), by a non-lazy
    step; with equal rates this is the fair coin of two rate-1 clocks.

    :param a: start of walk 1, scalar or array of length n.
    :param b: start of walk 2, scalar or array of length n.
    :param n: number of pairs.
    :param rng: numpy Generator.
    :param rate_ratio: constant r1 / r2.
    :param rate_fn: optional callable (t, y1, y2) -> (r1, r2) of arrays,
                    evaluated at the start of each block; overrides rate_ratio.
                    It sees t = time_offset + time_scale * clock and
                    y = space_scale * height, so callers can pass it
                    quantities in their own units.
    :param budget: cap on events per pair, scalar or per pair.
    :param max_width: cap on events per block.
    :param ceiling: if given, a pair stops unfinished (``at_ceiling``) once
                    either height reaches it; scalar or per pair.
    :return: a RaceBatch; ``time`` is filled only when rate_fn is given.
    """
    dist = dist or default_distribution()
    if rate_ratio <= 0:
        raise ValueError(f"rate_ratio must be positive, got {rate_ratio}")
    x1 = _per_run(a, n, np.int64)
    x2 = _per_run(b, n, np.int64)
    if n and (x1.min() < 1 or x2.min() < 1):
        raise ValueError("race starts must be >= 1")
    budget = _per_run(budget, n, np.int64)
    top = _per_run(np.iinfo(np.int64).max if ceiling is None else ceiling, n, np.int64)
    if n and np.any(top <= np.maximum(x1, x2)):
        raise ValueError("ceiling must exceed both starts")
    space_scale = _per_run(space_scale, n, np.float64)
    time_scale = _per_run(time_scale, n, np.float64)
    time_offset = _per_run(time_offset, n, np.float64)

    loser = np.zeros(n, dtype=np.int8)
    overshoot = np.zeros(n, dtype=np.int64)
    survivor = np.zeros(n, dtype=np.int64)
    events = np.zeros(n, dtype=np.int64)
    clock = np.zeros(n, dtype=np.float64)
    at_ceiling = np.zeros(n, dtype=bool)
    p_first = rate_ratio / (1.0 + rate_ratio)
    alive = np.arange(n)

    while alive.size:
        m = alive.size
        width = int(np.clip(BLOCK_TARGET // m, 1, max_width))
        rows = np.arange(m)
        if rate_fn is not None:
            t = time_offset[alive] + time_scale[alive] * clock[alive]
            r1, r2 = rate_fn(t, space_scale[alive] * x1[alive], space_scale[alive] * x2[alive])
            r1 = np.broadcast_to(np.asarray(r1, dtype=np.float64), (m,))
            r2 = np.broadcast_to(np.asarray(r2, dtype=np.float64), (m,))
            if not (np.all(np.isfinite(r1)) and np.all(np.isfinite(r2))
                    and np.all(r1 > 0) and np.all(r2 > 0)):
                raise ValueError("rate function must return finite positive rates")
            first = rng.random((m, width)) < (r1 / (r1 + r2))[:, None]
            dt = np.cumsum(rng.standard_exponential((m, width)), axis=1) / (r1 + r2)[:, None]
        else:
            first = rng.random((m, width)) < p_first
            dt = None

        up = rng.random((m, width)) < 2.0 / 3.0
        step = np.ones((m, width), dtype=np.int64)
        n_jumps = int(np.sum(~up))
        if n_jumps:
            step[~up] = -dist.sample_jumps(rng, n_jumps)
        d1 = np.where(first, step, 0)
        p1 = x1[alive][:, None] + np.cumsum(d1, axis=1)
        p2 = x2[alive][:, None] + np.cumsum(step - d1, axis=1)
        used = events[alive][:, None] + np.arange(1, width + 1)[None, :]

        e_hit = first_true((p1 <= 0) | (p2 <= 0))
        e_top = first_true(np.maximum(p1, p2) >= top[alive][:, None])
        e_over = first_true(used > budget[alive][:, None])
        event = np.minimum(np.minimum(e_hit, e_top), e_over)
        done = event < width

        running = alive[~done]
        x1[running] = p1[~done, -1]
        x2[running] = p2[~done, -1]
        events[running] = used[~done, -1]
        if dt is not None:
            clock[running] += dt[~done, -1]

        if np.any(done):
            r = rows[done]
            idx = alive[done]
            ev = event[done]
            over = e_over[done] == ev
            reached = ~over & (e_top[done] == ev)
            h1 = p1[r, ev]
            h2 = p2[r, ev]
            events[idx] = np.where(over, budget[idx], used[r, ev])
            if dt is not None:
                clock[idx] += dt[r, ev]
            x1[idx] = h1
            x2[idx] = h2
            at_ceiling[idx[reached]] = True
            first_lost = ~over & ~reached & (h1 <= 0)
            second_lost = ~over & ~reached & (h2 <= 0)
            loser[idx[first_lost]] = 1
            overshoot[idx[first_lost]] = -h1[first_lost]
            survivor[idx[first_lost]] = h2[first_lost]
            loser[idx[second_lost]] = 2
            overshoot[idx[second_lost]] = -h2[second_lost]
            survivor[idx[second_lost]] = h1[second_lost]

        alive = running

    return RaceBatch(
        loser=loser,
        overshoot=overshoot,
        survivor=survivor,
        events=events,
        time=time_offset + time_scale * clock if rate_fn is not None else np.full(n, np.nan),
        at_ceiling=at_ceiling,
        position1=x1,
        position2=x2,
    )


def two_walk_race(a, b, dist, rng, budget=DEFAULT_BUDGET):
    """
    Race two independent walks from a and b at equal rates.

    :return: a RaceOutcome.
    """
    if a < 1 or b < 1:
        raise ValueError(f"race starts must be >= 1, got ({a}, {b})")
    batch = race_batch(a, b, 1, rng, dist=dist, budget=budget)
    if batch.exhausted[0]:
        return RaceOutcome(loser=0, overshoot=None, survivor=None,
                           events=int(batch.events[0]), exhausted=True)
    return RaceOutcome(
        loser=int(batch.loser[0]),
        overshoot=int(batch.overshoot[0]),
        survivor=int(batch.survivor[0]),
        events=int(batch.events[0]),
    )


def race_by_clocks(a, b, n, rng, dist=None, budget=DEFAULT_BUDGET):
    """
    Race decided by explicit exponential clocks: each walk is run alone to
    Z^- and its lazy step count is turned into a continuous time by a sum of
    rate-1 exponentials. The survivor height is not observed (-1).
    """
    dist = dist or default_distribution()
    first = first_passage_batch(np.full(n, a), rng, dist=dist, budget=budget)
    second = first_passage_batch(np.full(n, b), rng, dist=dist, budget=budget)
    t1 = rng.standard_gamma(np.maximum(first.hit_time, 1).astype(np.float64))
    t2 = rng.standard_gamma(np.maximum(second.hit_time, 1).astype(np.float64))
    decided = first.hit & second.hit
    loser = np.where(t1 < t2, 1, 2).astype(np.int8)
    loser[~decided] = 0
    overshoot = np.where(loser == 1, first.overshoot, second.overshoot)
    return RaceBatch(
        loser=loser,
        overshoot=overshoot,
        survivor=np.full(n, -1, dtype=np.int64),
        events=first.hit_time + second.hit_time,
        time=np.minimum(t1, t2),
    )
