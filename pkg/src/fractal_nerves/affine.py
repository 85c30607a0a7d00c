"""
Three-valued intersection oracle for one-dimensional rational-affine systems.

Levels are periodic: level t uses the maps of ``levels[(t - 1) % period]``.
Each map is x -> a*x + b with rational 0 < a < 1 and 0 <= b <= 1 - a.
"""
import itertools
import logging
from fractions import Fraction
from functools import cached_property
from math import lcm

import attr

from .contact import Empty, Nonempty, Unknown
from .errors import InvalidSystemError, InvalidWordError, TupleArityError
from .streams import DigitStream
from .utils import parse_fraction

logger = logging.getLogger(__name__)

IDENTITY = (Fraction(1), Fraction(0))


@attr.s(frozen=True)
class AffineMap:
    slope = attr.ib(converter=parse_fraction)
    offset = attr.ib(converter=parse_fraction)

    def __attrs_post_init__(self):
        if not 0 < self.slope < 1:
            raise InvalidSystemError(f"slope {self.slope} outside (0,1)")
        if not 0 <= self.offset <= 1 - self.slope:
            raise InvalidSystemError(f"offset {self.offset} does not keep [0,1] inside [0,1]")

    @property
    def pair(self):
        return (self.slope, self.offset)


def compose(outer, inner):
    """
    outer o inner, both as (slope, offset) pairs.
    """
    a, b = outer
    c, e = inner
    return (a * c, a * e + b)


def apply(pair, x):
    return pair[0] * x + pair[1]


def fixed_point(pair):
    a, b = pair
    return b / (1 - a)


def merge_intervals(intervals):
    merged = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return merged


def intersect_intervals(left, right):
    result = []
    i = k = 0
    while i < len(left) and k < len(right):
        lo = max(left[i][0], right[k][0])
        hi = min(left[i][1], right[k][1])
        if lo <= hi:
            result.append((lo, hi))
        if left[i][1] < right[k][1]:
            i += 1
        else:
            k += 1
    return result


def image_intervals(pair, intervals):
    return [(apply(pair, lo), apply(pair, hi)) for lo, hi in intervals]


def _freeze_level(level):
    if isinstance(level, dict):
        level = level.items()
    frozen = []
    for symbol, value in level:
        if not isinstance(value, AffineMap):
            value = AffineMap(*value)
        frozen.append((str(symbol), value))
    if not frozen:
        raise InvalidSystemError("level has no maps")
    return tuple(sorted(frozen))


@attr.s(frozen=True)
class AffineSystem:
    levels = attr.ib(converter=lambda levels: tuple(_freeze_level(level) for level in levels))

    def __attrs_post_init__(self):
        if not self.levels:
            raise InvalidSystemError("an affine system needs at least one level")

    @property
    def period(self):
        return len(self.levels)

    @property
    def d(self):
        return 1

    @property
    def contraction(self):
        return max(m.slope for level in self.levels for _, m in level)

    def phase(self, t):
        return (t - 1) % self.period

    def maps(self, t):
        return dict(self.levels[self.phase(t)])

    def symbols(self, t):
        return [symbol for symbol, _ in self.levels[self.phase(t)]]

    def words(self, j, k):
        return itertools.product(*(self.symbols(t) for t in range(j, k)))

    def word_count(self, j, k):
        count = 1
        for t in range(j, k):
            count *= len(self.levels[self.phase(t)])
        return count

    def word_map(self, j, digits):
        """
        f_{i_j} o ... o f_{i_{k-1}} as a (slope, offset) pair.
        """
        result = IDENTITY
        for offset, symbol in enumerate(digits):
            maps = self.maps(j + offset)
            if symbol not in maps:
                raise InvalidWordError(f"symbol {symbol!r} is not in level {j + offset}")
            result = compose(result, maps[symbol].pair)
        return result

    @cached_property
    def _covers(self):
        # depth -> per-phase merged outer approximation of J_t
        return [[[(Fraction(0), Fraction(1))] for _ in range(self.period)]]

    def outer_cover(self, t, m):
        """
        Union of the depth-m images of [0,1] starting at level t, merged.
        """
        covers = self._covers
        while len(covers) <= m:
            previous = covers[-1]
            covers.append(
                [
                    merge_intervals(
                        interval
                        for _, f in self.levels[phase]
                        for interval in image_intervals(f.pair, previous[(phase + 1) % self.period])
                    )
                    for phase in range(self.period)
                ]
            )
        return covers[m][self.phase(t)]

    def cover_is_stable(self, m):
        """
        True if depth m and m+1 covers agree at every phase, in which case they
        are the limit sets themselves.
        """
        self.outer_cover(1, m + 1)
        return self._covers[m] == self._covers[m + 1]

    def to_json(self):
        return {
            "kind": "affine",
            "levels": [
                {symbol: [str(m.slope), str(m.offset)] for symbol, m in level} for level in self.levels
            ],
        }


def _periodic_candidates(system, k, period_budget):
    """
    Points of J_k with an eventually periodic coding whose prefix and cycle are
    at most `period_budget` symbols long, mapped to their coding.
    """
    candidates = {}
    for a in range(period_budget + 1):
        for prefix in itertools.product(*(system.symbols(t) for t in range(k, k + a))):
            head = system.word_map(k, prefix)
            for c in range(1, period_budget + 1):
                block_length = lcm(c, system.period)
                start = k + a
                for cycle in itertools.product(*(system.symbols(start + s) for s in range(c))):
                    block = IDENTITY
                    valid = True
                    for s in range(block_length):
                        maps = system.maps(start + s)
                        symbol = cycle[s % c]
                        if symbol not in maps:
                            valid = False
                            break
                        block = compose(block, maps[symbol].pair)
                    if not valid:
                        continue
                    point = apply(head, fixed_point(block))
                    candidates.setdefault(point, DigitStream(prefix=prefix, cycle=cycle))
    return candidates


def affine1d_oracle(system, j, words, depth_budget=12, period_budget=2):
    words = [tuple(w) for w in words]
    if len(words) > 2:
        raise TupleArityError(f"{len(words)} intervals cannot share a point in general position, limit is 2")
    if len({len(w) for w in words}) != 1:
        raise InvalidWordError("words of a tuple must share start level and depth")
    k = j + len(words[0])
    maps = [system.word_map(j, w) for w in words]

    stable_depth = None
    common = None
    for m in range(depth_budget + 1):
        cover = system.outer_cover(k, m)
        pieces = [image_intervals(f, cover) for f in maps]
        common = pieces[0]
        for piece in pieces[1:]:
            common = intersect_intervals(common, piece)
        if not common:
            return Empty(m)
        if system.cover_is_stable(m):
            stable_depth = m
            break

    candidate_sets = [
        {apply(f, x): stream for x, stream in _periodic_candidates(system, k, period_budget).items()} for f in maps
    ]
    shared = set(candidate_sets[0])
    for candidates in candidate_sets[1:]:
        shared &= set(candidates)
    if shared:
        point = min(shared)
        return Nonempty(witness=[candidates[point] for candidates in candidate_sets], point=point)

    if stable_depth is not None:
        logger.debug("stable cover at depth %d decides %s", stable_depth, words)
        return Nonempty(point=common[0][0], certificate="stable-cover")
    return Unknown(persisted_to_depth=depth_budget)
