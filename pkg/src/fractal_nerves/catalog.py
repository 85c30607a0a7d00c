"""
Named systems shipped with the package.
"""
from fractions import Fraction

from .affine import AffineSystem
from .errors import ConfigError
from .system import GridIFS, Tail
from .utils import lattice_points

_FULL_2X2 = frozenset(lattice_points((2, 2)))
_FULL_3X3 = frozenset(lattice_points((3, 3)))


def two_generator():
    """
    Maps 5x/7 and 5x/7 + 2/7 at odd levels, 2x/5 and 2x/5 + 3/5 at even ones.
    J_j is [0,1] for odd j and [0,2/5] u [3/5,1] for even j.
    """
    return AffineSystem(
        [
            {"a": (Fraction(5, 7), Fraction(0)), "b": (Fraction(5, 7), Fraction(2, 7))},
            {"a": (Fraction(2, 5), Fraction(0)), "b": (Fraction(2, 5), Fraction(3, 5))},
        ]
    )


def carpet():
    return GridIFS((3, 3), [_FULL_3X3 - {(1, 1)}], Tail.periodic(1))


def cantor_dust():
    return GridIFS((3, 3), [{(0, 0), (0, 2), (2, 0), (2, 2)}], Tail.periodic(1))


def cantor_times_full():
    return GridIFS((3, 3), [{(x, y) for x in (0, 2) for y in range(3)}], Tail.periodic(1))


def full_2x2():
    return GridIFS((2, 2), [], Tail.full())


def _corner_rotation(full, corners):
    return [full - {corner} for corner in corners]


def no_corner_2x2():
    """
    One deletion per level, cycling through the four corners.
    """
    levels = _corner_rotation(_FULL_2X2, [(0, 0), (1, 1), (0, 1), (1, 0)])
    return GridIFS((2, 2), levels, Tail.periodic(len(levels)))


def no_corner_3x3():
    levels = _corner_rotation(_FULL_3X3, [(0, 0), (2, 2), (0, 2), (2, 0)])
    return GridIFS((3, 3), levels, Tail.periodic(len(levels)))


CATALOG = {
    "two-generator": two_generator,
    "carpet": carpet,
    "cantor-dust": cantor_dust,
    "cantor-x-full": cantor_times_full,
    "full-2x2": full_2x2,
    "no-corner-2x2": no_corner_2x2,
    "no-corner-3x3": no_corner_3x3,
}


def names():
    return sorted(CATALOG)


def load(name):
    try:
        factory = CATALOG[name]
    except KeyError:
        raise ConfigError(f"unknown system {name!r}, expected one of {', '.join(names())}")
    return factory()
