"""
Eventually periodic digit streams.

A stream is a finite prefix followed by a cycle repeated forever. An empty
cycle marks a stream cut off at a Truncate horizon: only the prefix is known.
"""
import itertools
from fractions import Fraction

import attr


@attr.s(frozen=True)
class DigitStream:
    prefix = attr.ib(converter=tuple, default=())
    cycle = attr.ib(converter=tuple, default=())

    @property
    def truncated(self):
        return not self.cycle

    def digits(self, count):
        """
        The first `count` digits (fewer if the stream is truncated).
        """
        source = itertools.chain(self.prefix, itertools.cycle(self.cycle) if self.cycle else ())
        return tuple(itertools.islice(source, count))

    def prepend(self, digits):
        return DigitStream(prefix=tuple(digits) + self.prefix, cycle=self.cycle)

    def value(self, base, axis=None):
        """
        Exact value of sum(d_t * base**-t). Entries are ints, or tuples read at `axis`.

        For a truncated stream this is the lower end of the box the prefix selects.
        """

        def entry(e):
            return e if axis is None else e[axis]

        base = Fraction(base)
        head = sum((Fraction(entry(e)) / base ** (t + 1) for t, e in enumerate(self.prefix)), Fraction(0))
        if not self.cycle:
            return head
        period = len(self.cycle)
        block = sum((Fraction(entry(e)) / base ** (t + 1) for t, e in enumerate(self.cycle)), Fraction(0))
        return head + block / (base ** len(self.prefix) * (1 - base**-period))

    def point(self, n):
        """
        Exact point of [0,1]^d addressed by a stream of digit tuples.
        """
        return tuple(self.value(nk, axis=axis) for axis, nk in enumerate(n))

    def to_json(self):
        def plain(e):
            return list(e) if isinstance(e, tuple) else e

        return {"prefix": [plain(e) for e in self.prefix], "cycle": [plain(e) for e in self.cycle]}

    @classmethod
    def from_json(cls, data):
        def restore(e):
            return tuple(e) if isinstance(e, list) else e

        return cls(prefix=[restore(e) for e in data["prefix"]], cycle=[restore(e) for e in data["cycle"]])
