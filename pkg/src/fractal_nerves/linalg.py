"""
Sparse integer matrices and Smith normal form.

Entries are Python ints, so elimination never overflows. Pivots prefer
+-1 entries with the smallest Markowitz cost (row length - 1) * (column length - 1);
when no unit entry remains, the entry of least magnitude is used and
Euclidean row/column steps shrink it until it divides its row and column.
"""
import heapq
import logging
from math import gcd

import attr

logger = logging.getLogger(__name__)


@attr.s(frozen=True)
class SmithResult:
    rank = attr.ib()
    divisors = attr.ib(converter=tuple)

    @property
    def torsion(self):
        return tuple(d for d in self.divisors if d > 1)


class SparseMatrix:
    """
    Column-major sparse matrix: ``columns[c]`` maps row index to a non-zero int.
    """

    def __init__(self, n_rows, n_cols, columns=None):
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.columns = columns if columns is not None else [dict() for _ in range(n_cols)]

    @classmethod
    def from_dense(cls, rows):
        rows = [list(r) for r in rows]
        n_rows = len(rows)
        n_cols = len(rows[0]) if rows else 0
        columns = [{r: rows[r][c] for r in range(n_rows) if rows[r][c]} for c in range(n_cols)]
        return cls(n_rows, n_cols, columns)

    def to_dense(self):
        dense = [[0] * self.n_cols for _ in range(self.n_rows)]
        for c, column in enumerate(self.columns):
            for r, value in column.items():
                dense[r][c] = value
        return dense

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return sum(len(column) for column in self.columns)

    def __matmul__(self, other):
        if self.n_cols != other.n_rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        columns = []
        for column in other.columns:
            result = {}
            for k, value in column.items():
                for r, entry in self.columns[k].items():
                    result[r] = result.get(r, 0) + entry * value
            columns.append({r: v for r, v in result.items() if v})
        return SparseMatrix(self.n_rows, other.n_cols, columns)

    def is_zero(self):
        return all(not column for column in self.columns)

    def hstack(self, other):
        if self.n_rows != other.n_rows:
            raise ValueError("row counts differ")
        return SparseMatrix(self.n_rows, self.n_cols + other.n_cols, [dict(c) for c in self.columns + other.columns])


def _normalize_divisors(values):
    # Turn any diagonal into the divisor chain d_1 | d_2 | ...
    values = sorted(abs(v) for v in values)
    for i in range(len(values)):
        for k in range(i + 1, len(values)):
            a, b = values[i], values[k]
            g = gcd(a, b)
            if g != a:
                values[i], values[k] = g, a * b // g
    return sorted(values)


def smith_ranks(matrix):
    """
    Rank and elementary divisors of an integer matrix (SparseMatrix or list of rows).
    """
    if not isinstance(matrix, SparseMatrix):
        matrix = SparseMatrix.from_dense(matrix)
    rows = {}
    cols = {}
    for c, column in enumerate(matrix.columns):
        for r, value in column.items():
            if value:
                rows.setdefault(r, {})[c] = value
                cols.setdefault(c, set()).add(r)

    heap = [(len(members), c) for c, members in cols.items()]
    heapq.heapify(heap)

    def touch(c):
        if cols.get(c):
            heapq.heappush(heap, (len(cols[c]), c))

    def set_entry(r, c, value):
        if value:
            rows.setdefault(r, {})[c] = value
            cols.setdefault(c, set()).add(r)
        else:
            row = rows.get(r)
            if row is not None and c in row:
                del row[c]
                if not row:
                    del rows[r]
            members = cols.get(c)
            if members is not None:
                members.discard(r)
                if not members:
                    del cols[c]

    def unit_pivot():
        while heap:
            length, c = heap[0]
            members = cols.get(c)
            if not members or len(members) != length:
                heapq.heappop(heap)
                continue
            best = None
            for r in members:
                if abs(rows[r][c]) == 1:
                    cost = len(rows[r])
                    if best is None or cost < best[0]:
                        best = (cost, r)
            if best is not None:
                return best[1], c
            return None
        return None

    def smallest_pivot():
        best = None
        for r, row in rows.items():
            for c, value in row.items():
                key = (abs(value), (len(row) - 1) * (len(cols[c]) - 1))
                if best is None or key < best[0]:
                    best = (key, r, c)
        return best[1], best[2]

    diagonal = []
    while rows:
        pivot = unit_pivot() or smallest_pivot()
        r, c = pivot
        p = rows[r][c]

        # Euclidean step on the column
        bad_row = next((r2 for r2 in cols[c] if r2 != r and rows[r2][c] % p), None)
        if bad_row is not None:
            q = rows[bad_row][c] // p
            for c2, value in list(rows[r].items()):
                set_entry(bad_row, c2, rows.get(bad_row, {}).get(c2, 0) - q * value)
                touch(c2)
            continue
        # Euclidean step on the row
        bad_col = next((c2 for c2 in rows[r] if c2 != c and rows[r][c2] % p), None)
        if bad_col is not None:
            q = rows[r][bad_col] // p
            for r2 in list(cols[c]):
                set_entry(r2, bad_col, rows[r2].get(bad_col, 0) - q * rows[r2][c])
            touch(bad_col)
            continue

        # p divides its row and column: clear the column, then drop row and column.
        pivot_row = dict(rows[r])
        for r2 in list(cols[c]):
            if r2 == r:
                continue
            q = rows[r2][c] // p
            for c2, value in pivot_row.items():
                set_entry(r2, c2, rows.get(r2, {}).get(c2, 0) - q * value)
        for c2 in pivot_row:
            set_entry(r, c2, 0)
            touch(c2)
        diagonal.append(p)

    divisors = _normalize_divisors(diagonal)
    logger.debug("smith form of %sx%s matrix: rank %d", matrix.n_rows, matrix.n_cols, len(divisors))
    return SmithResult(rank=len(divisors), divisors=divisors)

