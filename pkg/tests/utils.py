import itertools
import os
import unittest

from hypothesis import strategies as st

from fractal_nerves.system import GridIFS, Tail
from fractal_nerves.utils import lattice_points

SLOW_TESTS_ENV = "FRACTAL_NERVES_SLOW_TESTS"

# Full-size Monte Carlo runs, minutes rather than seconds.
slow = unittest.skipUnless(os.environ.get(SLOW_TESTS_ENV), f"set {SLOW_TESTS_ENV}=1 to run")


def grid(n, *levels, period=None):
    """
    GridIFS from literal levels; a periodic tail repeating the last `period`
    levels when `period` is given, otherwise the full tail.
    """
    tail = Tail.periodic(period) if period is not None else Tail.full()
    return GridIFS(n, [set(level) for level in levels], tail)


def full_level(n):
    return set(lattice_points(n))


def without(n, *removed):
    return full_level(n) - set(removed)


def brute_force_alive(ifs, words, depth):
    """
    True if the pieces named by `words` (all starting at level words[0].start)
    still have pairwise touching descendants `depth` levels further down.

    Works on absolute lattice positions with no canonicalisation at all.
    """
    n = ifs.n
    cells = []
    for word in words:
        corner = [0] * len(n)
        for digit in word.digits:
            corner = [a * nk + i for a, nk, i in zip(corner, n, digit)]
        cells.append(tuple(corner))
    if not _touching(cells):
        return False
    frontier = {tuple(cells)}
    level_index = words[0].end
    for _ in range(depth):
        level = sorted(ifs.require_level(level_index))
        following = set()
        for tup in frontier:
            _extend(tup, 0, [], level, n, following)
        frontier = following
        if not frontier:
            return False
        level_index += 1
    return True


def _touching(cells):
    return all(max(abs(a - b) for a, b in zip(u, v)) <= 1 for u, v in itertools.combinations(cells, 2))


def _extend(tup, p, chosen, level, n, out):
    if p == len(tup):
        out.add(tuple(chosen))
        return
    for digit in level:
        cell = tuple(a * nk + i for a, nk, i in zip(tup[p], n, digit))
        if all(max(abs(a - b) for a, b in zip(cell, other)) <= 1 for other in chosen):
            chosen.append(cell)
            _extend(tup, p + 1, chosen, level, n, out)
            chosen.pop()


@st.composite
def grid_systems(draw, max_d=2, max_n=3, max_horizon=6):
    d = draw(st.integers(min_value=1, max_value=max_d))
    n = tuple(draw(st.integers(min_value=2, max_value=max_n)) for _ in range(d))
    points = lattice_points(n)
    horizon = draw(st.integers(min_value=1, max_value=max_horizon))
    levels = [
        draw(st.sets(st.sampled_from(points), min_size=1, max_size=len(points))) for _ in range(horizon)
    ]
    if draw(st.booleans()):
        tail = Tail.periodic(draw(st.integers(min_value=1, max_value=horizon)))
    else:
        tail = Tail.full()
    return GridIFS(n, levels, tail)


@st.composite
def word_tuples(draw, ifs, max_depth=2, max_size=4):
    """
    (j, distinct digit tuples of one depth) for a tuple-intersection query.
    """
    j = draw(st.integers(min_value=1, max_value=3))
    depth = draw(st.integers(min_value=1, max_value=max_depth))
    words = list(ifs.words(j, j + depth))
    size = draw(st.integers(min_value=1, max_value=min(max_size, 2**ifs.d, len(words))))
    chosen = draw(st.lists(st.sampled_from(words), min_size=size, max_size=size, unique=True))
    return j, chosen
