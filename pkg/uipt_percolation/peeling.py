"""
Boundary-level simulation of percolation explorations on the half-plane UIPT.

The boundary is a sequence of colored segments. Each peel step at an
interface end-point either inserts a new vertex of a fair color, or swallows
k vertices to one side (probability p_k per side) and discards the enclosed
polygon, whose contents cannot affect crossings outside it.

Two code paths share these rules: ``peel_step`` on an explicit
``SegmentBoundary`` (single runs, trajectory dumps), and vectorized batches
that only track the finite segment lengths.
"""

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import boltzmann
from .walk import BLOCK_TARGET, DEFAULT_BUDGET, MAX_BLOCK_WIDTH, default_distribution, first_true

INFINITE = math.inf

TRACE_HEADER = "step_index,event_kind,k,black_len,white_len"


class Color(enum.Enum):
    BLACK = enum.auto()
    WHITE = enum.auto()

    def flip(self):
        return Color.WHITE if self == Color.BLACK else Color.BLACK


class EventKind(enum.Enum):
    INTERNAL = enum.auto()
    SPLIT_LEFT = enum.auto()
    SPLIT_RIGHT = enum.auto()


class CrossingResult(enum.Enum):
    BLACK = enum.auto()
    WHITE = enum.auto()
    UNDETERMINED = enum.auto()


class ThreeSegmentMode(enum.Enum):
    """
    Which interface end-point a three-segment exploration follows.
    """

    RACE = enum.auto()  # between the first black segment and the white one
    MIRRORED = enum.auto()  # between the white segment and the second black one
    OUTER = enum.auto()  # between the left infinite white segment and the first black one


@dataclass(frozen=True)
class Segment:
    color: Color
    length: float

    @property
    def finite(self):
        return self.length != INFINITE


@dataclass(frozen=True)
class SegmentBoundary:
    """
    Colored boundary of an exploration, listed left to right.
    """

    segments: tuple

    def __post_init__(self):
        segs = self.segments
        if len(segs) < 2:
            raise ValueError("a boundary needs at least two segments")
        for i, seg in enumerate(segs):
            if seg.finite and (seg.length < 1 or int(seg.length) != seg.length):
                raise ValueError(f"segment {i} has invalid length {seg.length}")
            if not seg.finite and 0 < i < len(segs) - 1:
                raise ValueError(f"only the extreme segments may be infinite (segment {i})")
        for left, right in zip(segs, segs[1:]):
            if left.color == right.color:
                raise ValueError("adjacent segments must have opposite colors")

    @classmethod
    def from_pattern(cls, *pairs):
        """
        Build from (color, length) pairs; use INFINITE for unbounded ends.
        """
        return cls(tuple(Segment(color, length) for color, length in pairs))

    @property
    def active_edges(self):
        """
        Interface end-points: indices i of the edges joining segment i to i+1.
        """
        return tuple(range(len(self.segments) - 1))

    @property
    def num_end_points(self):
        return len(self.segments) - 1

    def lengths(self):
        return tuple(seg.length for seg in self.segments)

    def with_length(self, index, length):
        segs = list(self.segments)
        segs[index] = replace(segs[index], length=length)
        return SegmentBoundary(tuple(segs))

    def apply(self, edge, event):
        """
        Apply a peel event at an edge.

        :return: (event, boundary). When a split swallows the whole adjacent
                 finite segment, the event comes back with ``overshoot`` set
                 (how far past that segment the third vertex lies) and the
                 boundary is returned unchanged; the caller decides the outcome.
        """
        left, right = self.segments[edge], self.segments[edge + 1]
        if event.kind == EventKind.INTERNAL:
            index = edge if left.color == event.color else edge + 1
            return event, self.with_length(index, self.segments[index].length + 1)
        index = edge if event.kind == EventKind.SPLIT_LEFT else edge + 1
        seg = self.segments[index]
        if not seg.finite:
            return event, self
        if event.k < seg.length:
            return event, self.with_length(index, seg.length - event.k)
        return replace(event, overshoot=int(event.k - seg.length)), self


@dataclass(frozen=True)
class PeelEvent:
    kind: EventKind
    color: Color = None
    k: int = 0
    overshoot: int = None

    @property
    def enclosed_boundary_size(self):
        if self.kind == EventKind.INTERNAL:
            return None
        return self.k + 1

    @property
    def label(self):
        if self.kind == EventKind.INTERNAL:
            return f"internal_{self.color.name.lower()}"
        return self.kind.name.lower()


@dataclass(frozen=True)
class CrossingOutcome:
    result: CrossingResult
    steps_used: int
    terminal_overshoot: int = None


def draw_peel_event(rng, dist=None):
    """
    Draw one half-plane peel event: inner vertex w.p. 2/3 (fair color), or a
    split of k vertices to the left or to the right, w.p. p_k each.
    """
    u = rng.random()
    if u < 1.0 / 3.0:
        return PeelEvent(EventKind.INTERNAL, color=Color.BLACK)
    if u < 2.0 / 3.0:
        return PeelEvent(EventKind.INTERNAL, color=Color.WHITE)
    k = int((dist or default_distribution()).sample_jumps(rng, 1)[0])
    kind = EventKind.SPLIT_LEFT if u < 5.0 / 6.0 else EventKind.SPLIT_RIGHT
    return PeelEvent(kind, k=k)


def peel_step(boundary, edge, rng, dist=None):
    """
    Reveal the triangle at an interface end-point.

    :param boundary: current SegmentBoundary.
    :param edge: index of an end-point (edge between segments edge, edge+1)
                 next to at least one finite segment.
    :param rng: numpy Generator.
    :return: (PeelEvent, SegmentBoundary).
    """
    if edge not in boundary.active_edges:
        raise ValueError(f"edge {edge} is not an interface end-point of the boundary")
    left, right = boundary.segments[edge], boundary.segments[edge + 1]
    if not (left.finite or right.finite):
        raise ValueError(f"edge {edge} lies between two infinite segments")
    event = draw_peel_event(rng, dist)
    event, new_boundary = boundary.apply(edge, event)
    assert new_boundary.num_end_points <= boundary.num_end_points, (
        "peeling must not create interface end-points"
    )
    return event, new_boundary


def _write_trace(trace, step, event, black_len, white_len):
    if trace is not None:
        trace.write(f"{step},{event.label},{event.k},{black_len},{white_len}\n")


def _explore(boundary, pick_edge, decide, rng, dist, budget, trace, black_index, white_index):
    # Generic single-run loop: pick_edge(boundary) -> edge, decide(edge, event,
    # boundary) -> CrossingResult once a split overshoots.
    if trace is not None:
        trace.write(TRACE_HEADER + "\n")
    for step in range(1, budget + 1):
        edge = pick_edge(boundary)
        event, boundary = peel_step(boundary, edge, rng, dist)
        _write_trace(
            trace,
            step,
            event,
            boundary.segments[black_index].length,
            boundary.segments[white_index].length,
        )
        if event.overshoot is not None:
            result, extra = decide(edge, event, boundary)
            return CrossingOutcome(result, step + extra, event.overshoot)
    return CrossingOutcome(CrossingResult.UNDETERMINED, budget)


def _two_segment_boundary(a, b):
    return SegmentBoundary.from_pattern(
        (Color.WHITE, INFINITE), (Color.BLACK, a), (Color.WHITE, b), (Color.BLACK, INFINITE)
    )


def _check_lengths(**lengths):
    for name, value in lengths.items():
        if value < 1 or int(value) != value:
            raise ValueError(f"{name} must be a positive integer, got {value}")


def run_two_segment(a, b, rng, dual=False, dist=None, budget=DEFAULT_BUDGET, trace=None):
    """
    Decide whether the black segment of length a and the infinite black
    segment beyond b white vertices are connected.

    The primary mode follows the interface at the edge between the left
    infinite white segment and the black segment; the black length performs
    the boundary walk and there is a black crossing iff its overshoot is at
    least b. The dual mode follows the edge between the white segment and
    the infinite black one, with colors and sides exchanged: black crossing
    iff the white walk's overshoot is below a.

    :param trace: optional text stream for the trajectory dump.
    :return: a CrossingOutcome.
    """
    _check_lengths(a=a, b=b)
    boundary = _two_segment_boundary(a, b)
    edge = 2 if dual else 0

    def decide(edge, event, boundary):
        if dual:
            black = event.overshoot < boundary.segments[1].length
        else:
            black = event.overshoot >= boundary.segments[2].length
        return (CrossingResult.BLACK if black else CrossingResult.WHITE), 0

    return _explore(boundary, lambda _: edge, decide, rng, dist, budget, trace, 1, 2)


def run_three_segment(a, b, c, rng, mode=ThreeSegmentMode.RACE, dist=None,
                      budget=DEFAULT_BUDGET, trace=None):
    """
    Decide whether two finite black segments a and c, separated by b white
    vertices and otherwise surrounded by white, are connected.

    RACE explores from the a/b end-point, MIRRORED from the b/c end-point;
    both are two-walk races decided at the first swallow of a finite segment.
    OUTER explores from the left infinite white segment; a jump past a, b and
    c encloses a free polygon whose own crossing is then explored.
    """
    _check_lengths(a=a, b=b, c=c)
    boundary = SegmentBoundary.from_pattern(
        (Color.WHITE, INFINITE), (Color.BLACK, a), (Color.WHITE, b), (Color.BLACK, c),
        (Color.WHITE, INFINITE),
    )
    if mode == ThreeSegmentMode.RACE:
        edge, black_index = 1, 1
    elif mode == ThreeSegmentMode.MIRRORED:
        edge, black_index = 2, 3
    elif mode == ThreeSegmentMode.OUTER:
        edge, black_index = 0, 1
    else:
        raise NotImplementedError(f"unknown three-segment mode: {mode}")

    def decide(edge, event, boundary):
        a_len, b_len, c_len = (boundary.segments[i].length for i in (1, 2, 3))
        j = event.overshoot
        if mode == ThreeSegmentMode.OUTER:
            if j < b_len:
                return CrossingResult.WHITE, 0
            if j < b_len + c_len:
                return CrossingResult.BLACK, 0
            cfg = boltzmann.PolygonConfig(a_len, b_len, c_len, j - b_len - c_len + 1)
            inner = boltzmann.explore_polygon(cfg, rng, budget=budget)
            return inner.result, inner.steps_used
        swallowed_white = (event.kind == EventKind.SPLIT_RIGHT) == (mode == ThreeSegmentMode.RACE)
        if not swallowed_white:
            return CrossingResult.WHITE, 0
        far = c_len if mode == ThreeSegmentMode.RACE else a_len
        return (CrossingResult.BLACK if j < far else CrossingResult.WHITE), 0

    return _explore(boundary, lambda _: edge, decide, rng, dist, budget, trace, black_index, 2)


def run_mixed_growth(a, b, rate_ratio, rng, dist=None, budget=DEFAULT_BUDGET, trace=None):
    """
    Explore both interfaces that end on an infinite segment, the left one at
    rate ``rate_ratio`` relative to the right one. With S, S' the black and
    white lengths, there is a black crossing iff the black walk hits first
    with |S| >= S', or the white walk hits first with |S'| < S.
    """
    _check_lengths(a=a, b=b)
    if not rate_ratio > 0:
        raise ValueError(f"rate_ratio must be positive, got {rate_ratio}")
    boundary = _two_segment_boundary(a, b)
    p_left = rate_ratio / (1.0 + rate_ratio)

    def pick(_):
        return 0 if rng.random() < p_left else 2

    def decide(edge, event, boundary):
        if edge == 0:
            black = event.overshoot >= boundary.segments[2].length
        else:
            black = event.overshoot < boundary.segments[1].length
        return (CrossingResult.BLACK if black else CrossingResult.WHITE), 0

    return _explore(boundary, pick, decide, rng, dist, budget, trace, 1, 2)


# ---------------------------------------------------------------------------
# Vectorized batches. Events are coded as 0 inner black, 1 inner white,
# 2 split left, 3 split right; mappers turn them into a change of one of two
# tracked finite lengths.


@dataclass
class PeelingBatch:
    """
    Per-run results of a batch: ``result`` codes 0 undetermined, 1 black,
    2 white; ``loser`` is the tracked length (1 or 2) that was swallowed,
    ``other`` the remaining tracked length and ``before`` the swallowed
    length just before the final split. Runs stopped at the ceiling are
    ``escaped`` and count as undetermined; their tracked lengths at that
    moment are kept in ``height1`` and ``height2``.
    """

    result: np.ndarray
    loser: np.ndarray
    overshoot: np.ndarray
    other: np.ndarray
    before: np.ndarray
    steps: np.ndarray
    escaped: np.ndarray = None
    height1: np.ndarray = None
    height2: np.ndarray = None

    def counts(self):
        escaped = 0 if self.escaped is None else int(np.sum(self.escaped))
        return CrossingCounts(
            black=int(np.sum(self.result == 1)),
            white=int(np.sum(self.result == 2)),
            undetermined=int(np.sum(self.result == 0)),
            steps=int(np.sum(self.steps)),
            escaped=escaped,
        )


@dataclass(frozen=True)
class CrossingCounts:
    black: int
    white: int
    undetermined: int
    steps: int = 0
    escaped: int = 0

    @property
    def determined(self):
        return self.black + self.white

    def to_dict(self):
        return {
            "black": self.black,
            "white": self.white,
            "undetermined": self.undetermined,
            "steps": self.steps,
            "escaped": self.escaped,
        }


def _draw_events(rng, shape, dist):
    u = rng.random(shape)
    kind = np.where(u < 1.0 / 3.0, 0, np.where(u < 2.0 / 3.0, 1, np.where(u < 5.0 / 6.0, 2, 3)))
    k = np.zeros(shape, dtype=np.int64)
    split = kind >= 2
    n_split = int(np.sum(split))
    if n_split:
        k[split] = dist.sample_jumps(rng, n_split)
    return kind.astype(np.int8), k


def _primary_map(kind, k):
    # edge between an infinite segment and tracked length 1 on its right
    which = np.where((kind == 0) | (kind == 3), 1, 0)
    delta = np.where(kind == 0, 1, -k)
    return which, delta


def _dual_map(kind, k):
    # edge between tracked length 2 and an infinite segment on its right
    which = np.where((kind == 1) | (kind == 2), 2, 0)
    delta = np.where(kind == 1, 1, -k)
    return which, delta


def _race_map(kind, k, left_black):
    # edge between two tracked lengths: black 1 and white 2, with black on
    # the left when left_black
    which = np.where(kind == 0, 1, np.where(kind == 1, 2, 0))
    left = 1 if left_black else 2
    right = 2 if left_black else 1
    which = np.where(kind == 2, left, np.where(kind == 3, right, which))
    delta = np.where(kind <= 1, 1, -k)
    return which, delta


def _peeling_batch(n, start1, start2, rng, mapper, dist, budget, ceiling=None):
    # Advance n runs of two tracked lengths until one becomes <= 0, the
    # budget runs out, or one grows to the ceiling (escaped).
    x1 = np.full(n, start1, dtype=np.int64)
    x2 = np.full(n, start2, dtype=np.int64)
    top = np.iinfo(np.int64).max if ceiling is None else int(ceiling)
    if top <= 1:
        raise ValueError(f"ceiling must be > 1, got {ceiling}")
    loser = np.zeros(n, dtype=np.int8)
    overshoot = np.zeros(n, dtype=np.int64)
    other = np.zeros(n, dtype=np.int64)
    before = np.zeros(n, dtype=np.int64)
    steps = np.zeros(n, dtype=np.int64)
    escaped = np.zeros(n, dtype=bool)
    height1 = np.zeros(n, dtype=np.int64)
    height2 = np.zeros(n, dtype=np.int64)
    alive = np.arange(n)

    while alive.size:
        m = alive.size
        width = int(np.clip(BLOCK_TARGET // m, 1, MAX_BLOCK_WIDTH))
        rows = np.arange(m)
        kind, k = _draw_events(rng, (m, width), dist)
        which, delta = mapper(kind, k, rng)
        d1 = np.where(which == 1, delta, 0)
        d2 = np.where(which == 2, delta, 0)
        p1 = x1[alive][:, None] + np.cumsum(d1, axis=1)
        p2 = x2[alive][:, None] + np.cumsum(d2, axis=1)
        used = steps[alive][:, None] + np.arange(1, width + 1)[None, :]

        e_hit = first_true((p1 <= 0) | (p2 <= 0))
        e_top = first_true(((d1 > 0) & (p1 >= top)) | ((d2 > 0) & (p2 >= top)))
        e_over = first_true(used > budget)
        event = np.minimum(np.minimum(e_hit, e_top), e_over)
        done = event < width

        running = alive[~done]
        x1[running] = p1[~done, -1]
        x2[running] = p2[~done, -1]
        steps[running] = used[~done, -1]

        if np.any(done):
            r = rows[done]
            idx = alive[done]
            ev = event[done]
            over = e_over[done] == ev
            reached = ~over & (e_top[done] == ev)
            h1 = p1[r, ev]
            h2 = p2[r, ev]
            steps[idx] = np.where(over, budget, used[r, ev])
            escaped[idx[reached]] = True
            height1[idx[reached]] = h1[reached]
            height2[idx[reached]] = h2[reached]
            first = ~over & ~reached & (h1 <= 0)
            second = ~over & ~reached & (h2 <= 0)
            loser[idx[first]] = 1
            overshoot[idx[first]] = -h1[first]
            other[idx[first]] = h2[first]
            before[idx[first]] = (h1 - d1[r, ev])[first]
            loser[idx[second]] = 2
            overshoot[idx[second]] = -h2[second]
            other[idx[second]] = h1[second]
            before[idx[second]] = (h2 - d2[r, ev])[second]

        alive = running

    return PeelingBatch(
        result=np.zeros(n, dtype=np.int8),
        loser=loser,
        overshoot=overshoot,
        other=other,
        before=before,
        steps=steps,
        escaped=escaped,
        height1=height1,
        height2=height2,
    )


def _finish(runs, black):
    runs.result = np.where(runs.loser == 0, 0, np.where(black, 1, 2)).astype(np.int8)
    return runs


def two_segment_batch(a, b, n, rng, dual=False, dist=None, budget=DEFAULT_BUDGET, ceiling=None):
    """
    n independent runs of run_two_segment, vectorized.

    :param ceiling: if given, runs where a tracked length grows to it stop
                    and are reported as escaped.
    :return: a PeelingBatch; its overshoot array is the terminal overshoot of
             the explored segment's length.
    """
    _check_lengths(a=a, b=b)
    dist = dist or default_distribution()
    mapper = _dual_map if dual else _primary_map
    runs = _peeling_batch(n, a, b, rng, lambda kind, k, _: mapper(kind, k), dist, budget, ceiling)
    if dual:
        black = runs.overshoot < runs.other
    else:
        black = runs.overshoot >= runs.other
    return _finish(runs, black)


def three_segment_batch(a, b, c, n, rng, mode=ThreeSegmentMode.RACE, dist=None,
                        budget=DEFAULT_BUDGET, ceiling=None):
    """
    n independent runs of run_three_segment, vectorized. In OUTER mode the
    polygons enclosed by a long jump are explored one run at a time.
    """
    _check_lengths(a=a, b=b, c=c)
    dist = dist or default_distribution()
    if mode == ThreeSegmentMode.RACE:
        runs = _peeling_batch(n, a, b, rng, lambda kind, k, _: _race_map(kind, k, True), dist, budget, ceiling)
        return _finish(runs, (runs.loser == 2) & (runs.overshoot < c))
    if mode == ThreeSegmentMode.MIRRORED:
        runs = _peeling_batch(n, c, b, rng, lambda kind, k, _: _race_map(kind, k, False), dist, budget, ceiling)
        return _finish(runs, (runs.loser == 2) & (runs.overshoot < a))
    if mode != ThreeSegmentMode.OUTER:
        raise NotImplementedError(f"unknown three-segment mode: {mode}")

    runs = _peeling_batch(n, a, b, rng, lambda kind, k, _: _primary_map(kind, k), dist, budget, ceiling)
    black = (runs.overshoot >= b) & (runs.overshoot < b + c)
    for i in np.flatnonzero((runs.loser == 1) & (runs.overshoot >= b + c)):
        cfg = boltzmann.PolygonConfig(int(runs.before[i]), b, c, int(runs.overshoot[i]) - b - c + 1)
        inner = boltzmann.explore_polygon(cfg, rng, budget=budget)
        black[i] = inner.result == CrossingResult.BLACK
        runs.steps[i] += inner.steps_used
        if inner.result == CrossingResult.UNDETERMINED:
            runs.loser[i] = 0
    return _finish(runs, black)


def mixed_growth_batch(a, b, rate_ratio, n, rng, dist=None, budget=DEFAULT_BUDGET,
                       ceiling=None):
    """
    n independent runs of run_mixed_growth, vectorized.
    """
    _check_lengths(a=a, b=b)
    if not rate_ratio > 0:
        raise ValueError(f"rate_ratio must be positive, got {rate_ratio}")
    dist = dist or default_distribution()
    p_left = rate_ratio / (1.0 + rate_ratio)

    def mapper(kind, k, rng):
        left = rng.random(kind.shape) < p_left
        w1, d1 = _primary_map(kind, k)
        w2, d2 = _dual_map(kind, k)
        return np.where(left, w1, w2), np.where(left, d1, d2)

    runs = _peeling_batch(n, a, b, rng, mapper, dist, budget, ceiling)
    black = np.where(runs.loser == 1, runs.overshoot >= runs.other, runs.overshoot < runs.other)
    return _finish(runs, black)
