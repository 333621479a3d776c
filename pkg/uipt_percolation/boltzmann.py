"""
Crossing probabilities in free (Boltzmann) triangulations of a polygon.

The boundary is four segments a, b, c, d, alternately black and white with
a and c black. Two estimators are provided: a direct exploration inside
the polygon, and a half-plane race reweighted by p_l / p_{m-1}. The second
half of the module follows the exploration chain (A_n, B_n) of a polygon
with one uncolored segment.
"""

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import asp, logger, peeling
from . import combinatorics as comb
from .estimates import binomial_estimate, nonincreasing_within, weighted_estimate
from .walk import DEFAULT_BUDGET, race_batch

POLYGON_BUDGET = 10 ** 6

# Free peeling laws of larger polygons are built from log-gamma floats.
EXACT_PEEL_LIMIT = 256

# Exponent of the polynomial correction in Z_n ~ gamma' 9^n n^{-5/2}.
CRITICAL_EXPONENT = 2.5


@dataclass(frozen=True)
class PolygonConfig:
    """
    Boundary of a free m-gon: black a, white b, black c, white d.
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"segment {name} must be a positive integer, got {value!r}")

    @property
    def m(self):
        return self.a + self.b + self.c + self.d

    def rotated(self):
        """
        The same polygon read from the next segment: (b, c, d, a). Its black
        crossing is the complement of this one's.
        """
        return PolygonConfig(self.b, self.c, self.d, self.a)

    def reflected(self):
        return PolygonConfig(self.c, self.b, self.a, self.d)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: int(d[k]) for k in ("a", "b", "c", "d")})


@dataclass(frozen=True)
class BoltzmannChainState:
    """
    Exploration state with a black segment A, a white segment B and c
    uncolored vertices between them.
    """

    A: int
    B: int
    c: int

    def __post_init__(self):
        if self.A < 1 or self.B < 1:
            raise ValueError(f"chain state needs A, B >= 1, got ({self.A}, {self.B})")
        if self.c < 1:
            raise ValueError(f"uncolored length must be >= 1, got {self.c}")

    @property
    def M(self):
        return self.A + self.B + self.c


@dataclass(frozen=True)
class ChainTermination:
    """
    The chain hit the uncolored vertex at ``w_position`` (1 next to the
    black segment, c next to the white one).
    """

    w_position: int


class BayesCheck(NamedTuple):
    lhs: Fraction
    rhs: Fraction
    equal: bool


def bayes_event_check(m):
    """
    Probability that the triangle on a boundary edge of a free m-gon has an
    inner vertex, computed from half-plane quantities, p_m (2/3) / p_{m-1},
    and directly, Z_{m+1} / (ALPHA Z_m).
    """
    m = comb.check_index("m", m, 2)
    table = comb.default_table()
    lhs = table.p(m) * Fraction(2, 3) / table.p(m - 1)
    rhs = table.z(m + 1) / (comb.ALPHA * table.z(m))
    return BayesCheck(lhs, rhs, lhs == rhs)


# ---------------------------------------------------------------------------
# Reweighted half-plane estimator


def _weight_table(ls, m):
    # p_l / p_{m-1} for each distinct l; exact rationals rounded once where
    # cached, log-gamma beyond.
    table = comb.default_table()
    out = {}
    for l in ls:
        l = int(l)
        if max(l, m - 1) <= table.max_index:
            out[l] = float(table.p(l) / table.p(m - 1))
        else:
            out[l] = float(np.exp(comb.log_halfplane_pk(l) - comb.log_halfplane_pk(m - 1)))
    return out


def reweighted_sums(cfg, samples, rng, dist=None, budget=DEFAULT_BUDGET):
    """
    Weight sums of the reweighted estimator over ``samples`` races, as a
    dict that dist_util.merge_counts can add across tasks.
    """
    race = race_batch(cfg.a, cfg.b, samples, rng, dist=dist, budget=budget)
    decided = race.loser > 0
    event = (race.loser == 2) & (race.overshoot < cfg.c)
    l = race.survivor[event] - race.overshoot[event] + cfg.c + cfg.d - 1
    if l.size and l.min() < cfg.d + 1:
        raise ValueError(f"weight index l={int(l.min())} below d+1={cfg.d + 1} on the event")
    weights = _weight_table(np.unique(l), cfg.m)
    w = np.array([weights[int(x)] for x in l], dtype=np.float64)
    n = int(decided.sum())
    return {
        "weight_sum": float(math.fsum(w)),
        "weight_sq_sum": float(math.fsum(w * w)),
        "weight_max": float(w.max()) if w.size else 0.0,
        "determined": n,
        "undetermined": samples - n,
    }


def reweighted_estimate(sums, seed=None):
    return weighted_estimate(
        sums["weight_sum"], sums["weight_sq_sum"], sums["determined"], sums["weight_max"],
        seed=seed, undetermined=sums["undetermined"],
    )


def crossing_prob_reweighted(cfg, samples, rng, dist=None, budget=DEFAULT_BUDGET, seed=None):
    """
    Estimate the black crossing probability of a free polygon by racing two
    half-plane walks from (a, b) and weighting the event {white walk hits
    first with overshoot < c} by p_l / p_{m-1}, where
    l = S_tau + S'_tau + c + d - 1 is the distance from the peeled edge to
    the apex vertex of the enclosing triangle.

    :return: a WeightedEstimate over the determined races.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    logger.debug(f"reweighted estimator for {cfg}, samples={samples}")
    with logger.profile_kv("boltzmann_reweighted"):
        sums = reweighted_sums(cfg, samples, rng, dist=dist, budget=budget)
    logger.logkv("reweighted_runs", sums["determined"])
    logger.logkv("reweighted_undetermined", sums["undetermined"])
    return reweighted_estimate(sums, seed=seed)


# ---------------------------------------------------------------------------
# Direct exploration inside the polygon


@lru_cache(maxsize=1024)
def _free_peel_cdf(M):
    # Index 0: inner vertex. Index s in 1..M-2: the apex is s vertices behind
    # the peeled edge's black end-point.
    table = comb.default_table()
    if M <= EXACT_PEEL_LIMIT:
        probs = [float(comb.peel_internal_free(M))]
        probs.extend(float(table.z(s + 1) * table.z(M - s) / table.z(M)) for s in range(1, M - 1))
        probs = np.array(probs)
        tol = 1e-12
    else:
        s = np.arange(1, M - 1)
        log_z_m = comb.log_partition_function(M)
        probs = np.concatenate([
            [np.exp(comb.log_partition_function(M + 1) - log_z_m) / float(comb.ALPHA)],
            np.exp(comb.log_partition_function(s + 1) + comb.log_partition_function(M - s) - log_z_m),
        ])
        tol = 1e-9 + 1e-14 * M
    total = math.fsum(probs)
    assert abs(total - 1.0) < tol, f"free peeling law of the {M}-gon sums to {total}"
    cdf = np.cumsum(probs)
    cdf.setflags(write=False)
    return cdf


def _draw_index(cdf, rng):
    return min(int(np.searchsorted(cdf, rng.random(), side="right")), len(cdf) - 1)


def explore_polygon(cfg, rng, budget=POLYGON_BUDGET):
    """
    Follow the interface from the edge joining the last vertex of a to the
    first vertex of b, inside a free triangulation of the polygon.

    An inner vertex extends a or b by one according to its fair color. A
    triangle reaching back s vertices shortens a (s < A), lands in d (white
    crossing), lands in c (black crossing), or shortens b.

    :return: a peeling.CrossingOutcome.
    """
    A, B, C, D = cfg.a, cfg.b, cfg.c, cfg.d
    for step in range(1, budget + 1):
        M = A + B + C + D
        s = _draw_index(_free_peel_cdf(M), rng)
        if s == 0:
            if rng.random() < 0.5:
                A += 1
            else:
                B += 1
        elif s < A:
            A -= s
        elif s < A + D:
            return peeling.CrossingOutcome(peeling.CrossingResult.WHITE, step)
        elif s < A + D + C:
            return peeling.CrossingOutcome(peeling.CrossingResult.BLACK, step)
        else:
            B -= M - 1 - s
        assert A >= 1 and B >= 1, "segments of the explored polygon must stay non-empty"
    return peeling.CrossingOutcome(peeling.CrossingResult.UNDETERMINED, budget)


def direct_counts(cfg, samples, rng, budget=POLYGON_BUDGET):
    """
    Outcome counts of ``samples`` explore_polygon runs, as a mergeable dict.
    """
    counts = {"black": 0, "white": 0, "undetermined": 0, "steps": 0}
    for _ in range(samples):
        outcome = explore_polygon(cfg, rng, budget)
        counts[outcome.result.name.lower()] += 1
        counts["steps"] += outcome.steps_used
    return counts


def crossing_prob_direct(cfg, samples, rng, budget=POLYGON_BUDGET, seed=None):
    """
    Frequency of black crossings over independent explore_polygon runs.

    :return: an EstimateWithCI over the determined runs.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    with logger.profile_kv("boltzmann_direct"):
        counts = direct_counts(cfg, samples, rng, budget)
    logger.logkv("direct_runs", counts["black"] + counts["white"])
    return binomial_estimate(
        counts["black"], counts["black"] + counts["white"], seed=seed,
        undetermined=counts["undetermined"],
    )


# ---------------------------------------------------------------------------
# Scaling limit


def continuum_weight(y_sum, a, b, c, d):
    """
    Limit weight ((Y_tau + Y'_tau + c + d) / (a + b + c + d))^{-5/2}.
    """
    y_sum = np.asarray(y_sum, dtype=np.float64)
    base = (y_sum + c + d) / (a + b + c + d)
    if np.any(base <= 0):
        raise ValueError("continuum weight needs Y_tau + Y'_tau + c + d > 0")
    return base ** (-CRITICAL_EXPONENT)


def continuum_reweighted(a, b, c, d, samples, config, rng):
    """
    Monte Carlo value of the scaling limit of the reweighted formula.
    """
    race = asp.continuum_race(a, b, samples, config, rng)
    event = (race.loser == 2) & (race.overshoot < c)
    w = continuum_weight(race.survivor[event] - race.overshoot[event], a, b, c, d)
    n = int(race.decided.sum())
    return weighted_estimate(
        float(math.fsum(w)), float(math.fsum(w * w)), n,
        float(w.max()) if w.size else 0.0, undetermined=samples - n,
    )


def scaled_reweighted_limit(a, b, c, d, lambdas, samples, rng, config=None,
                            terminal_tolerance=0.05, budget=DEFAULT_BUDGET):
    """
    Discrete reweighted estimates at lengths ceil(lambda x) for each lambda,
    against a continuum estimate of the limit.

    :return: an asp.IdentityReport; passes when deviations are
             non-increasing up to 3 sigma and the last is within
             ``terminal_tolerance``.
    """
    config = config or asp.AspSamplerConfig()
    limit = continuum_reweighted(a, b, c, d, samples, config, rng)
    rows = []
    for lam in lambdas:
        cfg = PolygonConfig(*(max(1, math.ceil(lam * x)) for x in (a, b, c, d)))
        est = crossing_prob_reweighted(cfg, samples, rng, budget=budget)
        rows.append({
            "lambda": lam,
            "config": cfg.to_dict(),
            "estimate": est.to_dict(),
            "deviation": abs(est.value - limit.value),
            "sigma": math.hypot(est.stderr, limit.stderr),
        })
    trend = nonincreasing_within([r["deviation"] for r in rows], [r["sigma"] for r in rows])
    last = rows[-1]
    return asp.IdentityReport(
        identity="boltzmann-scaling",
        parameters={"a": a, "b": b, "c": c, "d": d, "lambdas": list(lambdas), "samples": samples},
        estimate=last["estimate"]["value"],
        stderr=last["estimate"]["stderr"],
        closed_form=limit.value,
        tolerance=terminal_tolerance,
        passed=bool(trend and last["deviation"] <= terminal_tolerance),
        details={"rows": rows, "continuum": limit.to_dict(), "trend": trend},
    )


# ---------------------------------------------------------------------------
# The (A_n, B_n) chain


def chain_transition_law(state):
    """
    Exact one-step law of the chain as (outcome, Fraction) pairs, where an
    outcome is the next BoltzmannChainState or a ChainTermination.

    Each side grows w.p. Z_{M+1} / (2 ALPHA Z_M), shrinks by k < A (or < B)
    w.p. Z_{M-k} Z_{k+1} / Z_M, and the chain stops on the uncolored vertex
    j = 0..c-1 steps from the black side w.p. Z_{A+j+1} Z_{B+c-j} / Z_M.
    """
    table = comb.default_table()
    A, B, c, M = state.A, state.B, state.c, state.M
    z_m = table.z(M)
    grow = table.z(M + 1) / (2 * comb.ALPHA * z_m)
    law = [
        (BoltzmannChainState(A + 1, B, c), grow),
        (BoltzmannChainState(A, B + 1, c), grow),
    ]
    for k in range(1, A):
        law.append((BoltzmannChainState(A - k, B, c), table.z(M - k) * table.z(k + 1) / z_m))
    for k in range(1, B):
        law.append((BoltzmannChainState(A, B - k, c), table.z(M - k) * table.z(k + 1) / z_m))
    for j in range(c):
        law.append((ChainTermination(j + 1), table.z(A + j + 1) * table.z(B + c - j) / z_m))
    return law


@lru_cache(maxsize=4096)
def _chain_cdf(A, B, c):
    law = chain_transition_law(BoltzmannChainState(A, B, c))
    probs = np.array([float(p) for _, p in law])
    total = math.fsum(probs)
    assert abs(total - 1.0) <= 1e-15, f"chain step mass at ({A}, {B}, {c}) is {total}"
    return tuple(outcome for outcome, _ in law), np.cumsum(probs)


def chain_step(state, rng):
    """
    Sample one step of the chain.

    :return: the next BoltzmannChainState, or a ChainTermination.
    """
    outcomes, cdf = _chain_cdf(state.A, state.B, state.c)
    return outcomes[_draw_index(cdf, rng)]


@dataclass
class WDistribution:
    """
    Histogram of the termination position over 1..c.
    """

    counts: np.ndarray
    undetermined: int = 0

    @property
    def total(self):
        return int(self.counts.sum())

    def rows(self):
        return [(i + 1, int(n)) for i, n in enumerate(self.counts)]


def w_distribution(a, b, c, samples, rng, budget=POLYGON_BUDGET):
    """
    Run the chain from (a, b, c) ``samples`` times and histogram where it
    stops on the uncolored segment.
    """
    start = BoltzmannChainState(a, b, c)
    counts = np.zeros(c, dtype=np.int64)
    undetermined = 0
    with logger.profile_kv("w_distribution"):
        for _ in range(samples):
            state = start
            for _ in range(budget):
                state = chain_step(state, rng)
                if isinstance(state, ChainTermination):
                    counts[state.w_position - 1] += 1
                    break
            else:
                undetermined += 1
    logger.logkv("w_runs", samples)
    return WDistribution(counts=counts, undetermined=undetermined)


# ---------------------------------------------------------------------------
# Jump rates of the scaled chain


def _log_triple(n1, n2, n3):
    return (
        comb.log_partition_function(n1)
        + comb.log_partition_function(n2)
        - comb.log_partition_function(n3)
    )


def jump_rate_asymptotics_check(X, Y, c, k_fracs, lambdas, z_fracs=(), tolerance=0.02):
    """
    Compare one-step probabilities of the chain at the state
    (lambda X, lambda Y, lambda c) with 9 gamma' lambda^{-5/2} times the
    limiting rate densities: (k (M - k) / M)^{-5/2} for a shrink by lambda k,
    ((X + z)(Y + c - z) / M)^{-5/2} for a stop at lambda z, with M = X + Y + c.

    :return: dict with per-lambda ratios and a pass flag for the last lambda.
    """
    for name, value in (("X", X), ("Y", Y), ("c", c)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    for k in k_fracs:
        if not 0 < k < X:
            raise ValueError(f"shrink fraction k must be in (0, {X}), got {k}")
    for z in z_fracs:
        if not 0 < z < c:
            raise ValueError(f"stop fraction z must be in (0, {c}), got {z}")
    gp = comb.gamma_prime()
    M = X + Y + c
    rows = []
    for lam in lambdas:
        n_m = round(lam * M)
        row = {"lambda": lam, "jump": {}, "stop": {}}
        for k in k_fracs:
            n_k = round(lam * k)
            exact = float(np.exp(_log_triple(n_m - n_k, n_k + 1, n_m)))
            approx = 9.0 * gp * lam ** -CRITICAL_EXPONENT * (k * (M - k) / M) ** -CRITICAL_EXPONENT
            row["jump"][str(k)] = exact / approx
        for z in z_fracs:
            n_x, n_z = round(lam * X), round(lam * z)
            exact = float(np.exp(_log_triple(n_x + n_z + 1, n_m - n_x - n_z, n_m)))
            approx = 9.0 * gp * lam ** -CRITICAL_EXPONENT * ((X + z) * (Y + c - z) / M) ** -CRITICAL_EXPONENT
            row["stop"][str(z)] = exact / approx
        rows.append(row)
    final = list(rows[-1]["jump"].values()) + list(rows[-1]["stop"].values())
    return {
        "parameters": {"X": X, "Y": Y, "c": c, "k": list(k_fracs), "z": list(z_fracs),
                       "lambdas": list(lambdas)},
        "rows": rows,
        "tolerance": tolerance,
        "pass": all(abs(r - 1.0) <= tolerance for r in final),
    }


def gamma_prime_estimate(n):
    """
    Z_n 9^{-n} n^{5/2}, which tends to gamma' = 1/(36 sqrt(pi)).
    """
    n = comb.check_index("n", n, 2)
    return float(np.exp(comb.log_partition_function(n) - n * comb.LOG_9
                        + CRITICAL_EXPONENT * math.log(n)))
