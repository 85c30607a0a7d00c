"""
Non-autonomous grid iterated function systems.

A GridIFS subdivides the unit cube [0,1]^d into n_1 x ... x n_d boxes at every
level and keeps the boxes named by the level's index set. Everything here is
exact: cells are integer lattice boxes, witnesses are eventually periodic digit
streams with rational values.
"""
import itertools
import logging
import warnings
from fractions import Fraction
from functools import cached_property

import attr
import numpy as np

from .errors import HorizonExceededError, InvalidSystemError, InvalidWordError
from .streams import DigitStream
from .utils import format_word, lattice_points, prod

logger = logging.getLogger(__name__)

TAIL_FULL = "full"
TAIL_PERIODIC = "periodic"
TAIL_TRUNCATE = "truncate"
TAIL_KINDS = {TAIL_FULL, TAIL_PERIODIC, TAIL_TRUNCATE}


def _check_tail_kind(instance, attribute, value):
    if value not in TAIL_KINDS:
        raise InvalidSystemError(f"unknown tail kind {value!r}")


@attr.s(frozen=True)
class Tail:
    """
    What happens to the levels beyond the stored horizon H.
    """

    kind = attr.ib(validator=_check_tail_kind)
    period = attr.ib(default=None)

    @period.validator
    def _check_period(self, attribute, value):
        if self.kind == TAIL_PERIODIC:
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise InvalidSystemError(f"invalid period {value!r}")
        elif value is not None:
            raise InvalidSystemError(f"a {self.kind} tail takes no period")

    @classmethod
    def full(cls):
        return cls(TAIL_FULL)

    @classmethod
    def periodic(cls, period):
        return cls(TAIL_PERIODIC, period)

    @classmethod
    def truncate(cls):
        return cls(TAIL_TRUNCATE)

    def to_json(self):
        if self.kind == TAIL_PERIODIC:
            return {"kind": self.kind, "period": self.period}
        return {"kind": self.kind}


def _freeze_levels(levels):
    return tuple(frozenset(tuple(int(x) for x in digit) for digit in level) for level in levels)


@attr.s(frozen=True)
class GridIFS:
    n = attr.ib(converter=lambda n: tuple(int(x) for x in n))
    levels = attr.ib(converter=_freeze_levels)
    tail = attr.ib(factory=Tail.full)

    def __attrs_post_init__(self):
        if not self.n:
            raise InvalidSystemError("dimension must be positive")
        for nk in self.n:
            if nk < 2:
                raise InvalidSystemError(f"subdivision count {nk} must be at least 2")
        for t, level in enumerate(self.levels, start=1):
            if not level:
                raise InvalidSystemError(f"level {t} is empty")
            for digit in level:
                if len(digit) != self.d or not all(0 <= x < nk for x, nk in zip(digit, self.n)):
                    raise InvalidSystemError(f"digit {digit} at level {t} out of range for n={self.n}")
        if self.tail.kind == TAIL_PERIODIC and self.tail.period > self.horizon:
            raise InvalidSystemError(f"invalid period {self.tail.period} for {self.horizon} stored levels")

    @property
    def d(self):
        return len(self.n)

    @property
    def horizon(self):
        return len(self.levels)

    @property
    def contraction(self):
        # c = max_k 1/n_k
        return Fraction(1, min(self.n))

    @cached_property
    def index_set(self):
        return frozenset(lattice_points(self.n))

    @cached_property
    def sorted_levels(self):
        return tuple(sorted(level) for level in self.levels) + (sorted(self.index_set),)

    # Positions are the canonical names of levels: two levels t, t' with the
    # same position have identical futures. A Full tail adds the sentinel
    # position H + 1 (the full index set, its own successor).

    def position(self, t):
        if t < 1:
            raise ValueError(f"levels start at 1, got {t}")
        H = self.horizon
        if t <= H:
            return t
        if self.tail.kind == TAIL_FULL:
            return H + 1
        if self.tail.kind == TAIL_PERIODIC:
            p = self.tail.period
            return H - p + 1 + (t - H - 1) % p
        return None

    def next_position(self, pos):
        H = self.horizon
        if pos < H:
            return pos + 1
        if self.tail.kind == TAIL_FULL:
            return H + 1
        if self.tail.kind == TAIL_PERIODIC:
            return H - self.tail.period + 1
        return None

    def level_at_position(self, pos):
        if pos <= self.horizon:
            return self.levels[pos - 1]
        return self.index_set

    def sorted_level_at_position(self, pos):
        return self.sorted_levels[min(pos, self.horizon + 1) - 1]

    def level(self, t):
        """
        The index set I^(t), or None beyond the horizon of a Truncate tail.
        """
        pos = self.position(t)
        return None if pos is None else self.level_at_position(pos)

    def require_level(self, t):
        level = self.level(t)
        if level is None:
            raise HorizonExceededError(f"level {t} is beyond the truncation horizon {self.horizon}")
        return level

    def walk(self, j):
        """
        Positions visited from level j on, split as (prefix, cycle). Under a
        Truncate tail the cycle is empty and the prefix stops at the horizon.
        """
        seen = {}
        order = []
        pos = self.position(j)
        while pos is not None and pos not in seen:
            seen[pos] = len(order)
            order.append(pos)
            pos = self.next_position(pos)
        if pos is None:
            return order, []
        start = seen[pos]
        return order[:start], order[start:]

    def future_levels(self, j):
        prefix, cycle = self.walk(j)
        return [self.level_at_position(pos) for pos in prefix + cycle]

    def words(self, j, k):
        """
        All words (i_j, ..., i_{k-1}) in lexicographic order.
        """
        return itertools.product(*(sorted(self.require_level(t)) for t in range(j, k)))

    def word_count(self, j, k):
        return prod(len(self.require_level(t)) for t in range(j, k))

    def check_word(self, word):
        for offset, digit in enumerate(word.digits):
            t = word.start + offset
            if digit not in self.require_level(t):
                raise InvalidWordError(f"digit {digit} is not in level {t}")

    def to_json(self):
        return {
            "d": self.d,
            "n": list(self.n),
            "levels": [[list(digit) for digit in sorted(level)] for level in self.levels],
            "tail": self.tail.to_json(),
        }


@attr.s(frozen=True)
class Word:
    start = attr.ib(validator=attr.validators.instance_of(int))
    digits = attr.ib(converter=lambda ds: tuple(tuple(d) if not isinstance(d, str) else d for d in ds))

    @start.validator
    def _check_start(self, attribute, value):
        if value < 1:
            raise InvalidWordError(f"words start at level 1 or later, got {value}")

    @property
    def depth(self):
        return len(self.digits)

    @property
    def end(self):
        return self.start + len(self.digits)

    def __str__(self):
        return format_word(self.digits)


@attr.s(frozen=True)
class Cell:
    n = attr.ib(converter=tuple)
    depth = attr.ib()
    corner = attr.ib(converter=tuple)

    def box(self):
        """
        Exact box as a tuple of (low, high) pairs per axis.
        """
        return tuple(
            (Fraction(a, nk**self.depth), Fraction(a + 1, nk**self.depth)) for a, nk in zip(self.corner, self.n)
        )

    def contains(self, other):
        """
        True if `other` (a deeper or equal cell) lies inside this one.
        """
        if other.depth < self.depth:
            return False
        shift = other.depth - self.depth
        return all(b // nk**shift == a for a, b, nk in zip(self.corner, other.corner, self.n))

    def contains_point(self, point):
        return all(lo <= x <= hi for (lo, hi), x in zip(self.box(), point))


@attr.s(frozen=True)
class LevelSample:
    r = attr.ib()
    seed = attr.ib()
    levels = attr.ib(converter=_freeze_levels)


@attr.s(frozen=True)
class LineWitness:
    """
    A core line: the segment in direction `axis` at the coordinates given by
    `streams` (one stream per other axis) lies in the limit set J_start.
    """

    axis = attr.ib()
    start = attr.ib()
    streams = attr.ib()

    @property
    def truncated(self):
        return any(stream.truncated for stream in self.streams.values())

    def coordinates(self, n):
        return {axis: stream.value(n[axis]) for axis, stream in self.streams.items()}


@attr.s(frozen=True)
class SlabWitness:
    axis = attr.ib()
    start = attr.ib()
    stream = attr.ib()
    hypothesis_holds = attr.ib()

    @property
    def truncated(self):
        return self.stream.truncated

    def coordinate(self, n):
        return self.stream.value(n[self.axis])


def grid_ifs_new(d, n, levels, tail=None):
    if len(n) != d:
        raise InvalidSystemError(f"dimension {d} does not match n={tuple(n)}")
    return GridIFS(n=n, levels=levels, tail=tail if tail is not None else Tail.full())


def trial_rng(seed, trial_index):
    """
    Independent generator for one trial, derived from (seed, trial_index) by counter.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial_index,)))


def sample_levels(d, n, r, count, seed):
    """
    Draw `count` levels independently and uniformly from the r-element
    deletions of I. `seed` is an int or a numpy Generator.
    """
    if len(n) != d:
        raise InvalidSystemError(f"dimension {d} does not match n={tuple(n)}")
    points = lattice_points(n)
    if not 1 <= r <= len(points) - 1:
        raise InvalidSystemError(f"r={r} out of range 1..{len(points) - 1}")
    if isinstance(seed, np.random.Generator):
        rng, seed_value = seed, None
    else:
        rng, seed_value = np.random.default_rng(seed), seed
    levels = []
    for _ in range(count):
        removed = {int(idx) for idx in rng.choice(len(points), size=r, replace=False)}
        levels.append(frozenset(p for idx, p in enumerate(points) if idx not in removed))
    return LevelSample(r=r, seed=seed_value, levels=levels)


def word_cell(ifs, word):
    ifs.check_word(word)
    return cell_of_digits(ifs.n, word.digits)


def cell_of_digits(n, digits):
    corner = [0] * len(n)
    for digit in digits:
        corner = [a * nk + i for a, nk, i in zip(corner, n, digit)]
    return Cell(n=n, depth=len(digits), corner=corner)


def approximation_cells(ifs, j, m):
    if m < 0:
        raise ValueError(f"depth must be non-negative, got {m}")
    return frozenset(cell_of_digits(ifs.n, digits) for digits in ifs.words(j, j + m))


def corner_digit(n, corner):
    return tuple(0 if c == 0 else nk - 1 for c, nk in zip(corner, n))


def corner_membership(ifs, j, corner):
    digit = corner_digit(ifs.n, corner)
    return all(digit in level for level in ifs.future_levels(j))


def no_corner_check(ifs):
    if ifs.d != 2:
        warnings.warn(
            f"no-corner condition generalised to all {2 ** ifs.d} corners for d={ifs.d}",
            stacklevel=2,
        )
    corners = list(itertools.product((0, 1), repeat=ifs.d))
    for j in range(1, max(ifs.horizon, 1) + 1):
        if any(corner_membership(ifs, j, corner) for corner in corners):
            return False
    return True


def detect_cut(level_set, n, axis):
    used = {digit[axis] for digit in level_set}
    for c in range(n[axis]):
        if c not in used:
            return c
    return None


def cut_schedule(ifs, upto):
    """
    For levels 1..upto, the cut digit on each axis (or None).
    """
    return [tuple(detect_cut(ifs.require_level(t), ifs.n, axis) for axis in range(ifs.d)) for t in range(1, upto + 1)]


def cuts_every_axis(ifs, upto=None):
    """
    Whether every axis is cut at some level. With a periodic tail this looks at
    the repeating block, so a True answer means cuts recur infinitely often.
    Otherwise it is finite-horizon evidence over levels 1..upto.
    """
    if ifs.tail.kind == TAIL_PERIODIC and upto is None:
        block = ifs.levels[ifs.horizon - ifs.tail.period :]
    else:
        block = [ifs.require_level(t) for t in range(1, (upto or ifs.horizon) + 1)]
    return all(any(detect_cut(level, ifs.n, axis) is not None for level in block) for axis in range(ifs.d))


def isolated_corner_events(ifs, upto):
    """
    Levels (d=2) keeping (0,0) while deleting both (1,0) and (0,1).
    """
    if ifs.d != 2:
        return []
    return [
        t
        for t in range(1, upto + 1)
        if (0, 0) in ifs.require_level(t) and not ({(1, 0), (0, 1)} & ifs.require_level(t))
    ]


def adjacent(u, v):
    """
    Equal-depth cells sharing a (d-1)-dimensional face.
    """
    if u.depth != v.depth:
        return False
    diffs = [abs(a - b) for a, b in zip(u.corner, v.corner)]
    return sorted(diffs)[-1] == 1 and sum(diffs) == 1


def contact_dimension(u, v):
    """
    Dimension of the intersection of two equal-depth cell boxes, or None if disjoint.
    """
    if u.depth != v.depth:
        raise ValueError("cells must have equal depth")
    diffs = [abs(a - b) for a, b in zip(u.corner, v.corner)]
    if any(x > 1 for x in diffs):
        return None
    return sum(1 for x in diffs if x == 0)


def _greedy_streams(ifs, j, choose):
    prefix, cycle = ifs.walk(j)
    picks = {}
    for pos in prefix + cycle:
        pick = choose(ifs.level_at_position(pos))
        if pick is None:
            return None
        picks[pos] = pick
    return [picks[pos] for pos in prefix], [picks[pos] for pos in cycle]


def core_line_witness(ifs, j, axis):
    others = [ell for ell in range(ifs.d) if ell != axis]
    budget = prod(ifs.n[ell] for ell in others)
    candidates = list(itertools.product(*(range(ifs.n[ell]) for ell in others)))

    def choose(level):
        removed = ifs.index_set - level
        if len(removed) >= budget:
            return None
        blocked = {tuple(i[ell] for ell in others) for i in removed}
        return next(c for c in candidates if c not in blocked)

    picked = _greedy_streams(ifs, j, choose)
    if picked is None:
        return None
    prefix, cycle = picked
    streams = {
        ell: DigitStream(prefix=[c[idx] for c in prefix], cycle=[c[idx] for c in cycle])
        for idx, ell in enumerate(others)
    }
    return LineWitness(axis=axis, start=j, streams=streams)


def core_slab_witness(ifs, j, axis):
    nk = ifs.n[axis]
    fiber = prod(ifs.n) // nk
    hypothesis = all(len(ifs.index_set - level) < nk for level in ifs.future_levels(j))

    def choose(level):
        for c in range(nk):
            if sum(1 for i in level if i[axis] == c) == fiber:
                return c
        return None

    picked = _greedy_streams(ifs, j, choose)
    if picked is None:
        return None
    prefix, cycle = picked
    return SlabWitness(axis=axis, start=j, stream=DigitStream(prefix, cycle), hypothesis_holds=hypothesis)
