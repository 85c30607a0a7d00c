import itertools
import math
from fractions import Fraction

# Offsets of lattice neighbours, including the origin.
_NEIGHBOUR_CACHE = {}


def lattice_points(n):
    """
    All digit tuples of the box prod(range(n_k)), in lexicographic order.
    """
    return list(itertools.product(*(range(nk) for nk in n)))


def neighbour_offsets(d):
    """
    The 3**d - 1 non-zero offsets in {-1, 0, 1}^d, lexicographic.
    """
    try:
        return _NEIGHBOUR_CACHE[d]
    except KeyError:
        offsets = tuple(delta for delta in itertools.product((-1, 0, 1), repeat=d) if any(delta))
        _NEIGHBOUR_CACHE[d] = offsets
        return offsets


def forward_offsets(d):
    """
    Half of `neighbour_offsets`: those whose first non-zero entry is positive.
    """
    return tuple(delta for delta in neighbour_offsets(d) if next(x for x in delta if x) > 0)


def prod(values):
    return math.prod(values)


def parse_fraction(value):
    """
    Accept ints, Fractions and "p/q" strings (as found in JSON descriptors).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError(f"refusing inexact float {value!r}, use a 'p/q' string")
    return Fraction(value)


def fraction_to_json(value):
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_digit(digit):
    if len(digit) == 1:
        return str(digit[0])
    return "(" + ",".join(str(x) for x in digit) + ")"


def format_word(digits):
    """
    Human readable form of a word, e.g. '(1,0)(0,1)' or '021'.
    """
    if not digits:
        return "e"
    if all(isinstance(d, str) for d in digits):
        return "".join(digits)
    if all(len(d) == 1 for d in digits):
        return "".join(str(d[0]) for d in digits)
    return "".join(format_digit(d) for d in digits)


def display_location(filename, position):
    row, col = position
    return f"{filename if filename else '<string>'}:{row}:{col}"
