"""
Exact intersection decisions for tuples of grid cells.

Given words w_0..w_{q-1} of equal depth, their limit pieces f_{w_p}(J_k)
intersect iff the cells can be refined forever while staying pairwise
touching. The relative lattice offsets o_p = a_p - a_0 of the cells form the
state of a finite automaton: a step picks one digit per word from the next
level and maps o_p to n*o_p + i_p - i_0, keeping the step only if every
pairwise difference stays in {-1,0,1}^d. Non-emptiness is existence of an
infinite run, computed as a greatest fixed point over the reachable graph.
"""
import logging
from collections import deque
from functools import lru_cache

import attr

from .errors import InvalidWordError, TupleArityError
from .streams import DigitStream
from .system import TAIL_TRUNCATE, Word, cell_of_digits

logger = logging.getLogger(__name__)

NONEMPTY = "nonempty"
EMPTY = "empty"
UNKNOWN = "unknown"


class _Horizon:
    def __repr__(self):
        return "<horizon>"


# Node standing for "the levels ran out at a Truncate horizon".
HORIZON = _Horizon()


class Verdict:
    kind = None

    def to_json(self):
        raise NotImplementedError()


@attr.s(frozen=True)
class Nonempty(Verdict):
    """
    The pieces share a point. `witness` holds, per word, the digit stream that
    continues the word to the common point. The 1-D affine oracle may instead
    give the common `point` directly.
    """

    kind = NONEMPTY
    witness = attr.ib(converter=tuple, default=())
    point = attr.ib(default=None)
    certificate = attr.ib(default="periodic-coding")

    def to_json(self):
        data = {"kind": self.kind, "certificate": self.certificate}
        if self.witness:
            data["witness"] = [stream.to_json() for stream in self.witness]
        if self.point is not None:
            data["point"] = str(self.point)
        return data


@attr.s(frozen=True)
class Empty(Verdict):
    """
    The depth-`depth` outer boxes of the pieces have no common point.
    """

    kind = EMPTY
    depth = attr.ib()

    def to_json(self):
        return {"kind": self.kind, "depth": self.depth}


@attr.s(frozen=True)
class Unknown(Verdict):
    kind = UNKNOWN
    persisted_to_depth = attr.ib()

    def to_json(self):
        return {"kind": self.kind, "persisted_to_depth": self.persisted_to_depth}


@attr.s(frozen=True)
class OffsetState:
    offsets = attr.ib(converter=lambda offsets: tuple(tuple(o) for o in offsets))

    @offsets.validator
    def _check_base(self, attribute, value):
        if not value or any(value[0]):
            raise ValueError("offsets are relative to the first cell, which must sit at the origin")


def is_bounded(offsets):
    """
    True if all pairwise differences lie in {-1,0,1}^d.
    """
    for axis in range(len(offsets[0])):
        column = [o[axis] for o in offsets]
        if max(column) - min(column) > 1:
            return False
    return True


def canonical_offsets(offsets):
    """
    Order- and base-free form of an offset tuple.

    Duplicated offsets can always take identical digits, so dropping them does
    not change whether an infinite run exists.
    """
    distinct = set(offsets)
    best = None
    for base in distinct:
        candidate = tuple(sorted(tuple(a - b for a, b in zip(o, base)) for o in distinct))
        if best is None or candidate < best:
            best = candidate
    return best


def refinements(offsets, digits, n):
    """
    Yield (chosen digits, new offsets) for every admissible step.

    `digits` is the (sorted) index set of the level being applied.
    """
    q = len(offsets)
    d = len(n)
    scaled = [tuple(o * nk for o, nk in zip(off, n)) for off in offsets]
    chosen = [None] * q
    placed = [None] * q

    def extend(p, lo, hi):
        if p == q:
            base = placed[0]
            yield tuple(chosen), tuple(tuple(z - b for z, b in zip(pos, base)) for pos in placed)
            return
        s = scaled[p]
        for digit in digits:
            z = tuple(si + i for si, i in zip(s, digit))
            if lo is not None and any(max(hi[k], z[k]) - min(lo[k], z[k]) > 1 for k in range(d)):
                continue
            chosen[p] = digit
            placed[p] = z
            if lo is None:
                yield from extend(p + 1, z, z)
            else:
                yield from extend(
                    p + 1,
                    tuple(min(a, b) for a, b in zip(lo, z)),
                    tuple(max(a, b) for a, b in zip(hi, z)),
                )

    yield from extend(0, None, None)


def transitions(state, level_set, n):
    return {OffsetState(new) for _, new in refinements(state.offsets, sorted(level_set), n)}


def initial_state(ifs, words):
    """
    Offset state of the cells of `words`, or None when the cells already fail
    to touch (so the pieces are disjoint at depth 0).
    """
    words = list(words)
    if not words:
        raise InvalidWordError("at least one word is needed")
    depth = words[0].depth
    start = words[0].start
    for word in words:
        if word.depth != depth or word.start != start:
            raise InvalidWordError("words of a tuple must share start level and depth")
        ifs.check_word(word)
    corners = [cell_of_digits(ifs.n, word.digits).corner for word in words]
    offsets = tuple(tuple(a - b for a, b in zip(corner, corners[0])) for corner in corners)
    if not is_bounded(offsets):
        return None
    return OffsetState(offsets)


class OffsetAutomaton:
    """
    Survival oracle for offset states of one GridIFS.

    Results are cached per (canonical offsets, position), so every nerve built
    from the same system shares the work.
    """

    def __init__(self, ifs):
        self.ifs = ifs
        # (canonical offsets, position) -> True for alive, or the longest run
        # length (an int) for dead states.
        self._status = {}
        self.explored = 0

    def _successors(self, node):
        offsets, pos = node
        level = self.ifs.sorted_level_at_position(pos)
        following = self.ifs.next_position(pos)
        for digits, new in refinements(offsets, level, self.ifs.n):
            if following is None:
                yield digits, HORIZON
            else:
                yield digits, (new, following)

    def _canonical_successors(self, node):
        targets = set()
        for _, target in self._successors(node):
            if target is HORIZON:
                targets.add(HORIZON)
            else:
                targets.add((canonical_offsets(target[0]), target[1]))
        return targets

    def status(self, offsets, pos):
        """
        True if an infinite run (or a run reaching a Truncate horizon) starts
        here, otherwise the length of the longest run.
        """
        root = (canonical_offsets(offsets), pos)
        try:
            return self._status[root]
        except KeyError:
            pass
        graph = self._explore(root)
        alive, _ = prune(graph)
        self._record(graph, alive)
        return self._status[root]

    def survives(self, offsets, pos):
        return self.status(offsets, pos) is True

    def _explore(self, root):
        graph = {}
        stack = [root]
        while stack:
            node = stack.pop()
            if node in graph or node is HORIZON:
                continue
            known = self._status.get(node)
            if known is not None:
                # Settled earlier: alive leaves point at the horizon, dead ones have no way out.
                graph[node] = {HORIZON} if known is True else set()
                continue
            targets = self._canonical_successors(node)
            graph[node] = targets
            stack.extend(t for t in targets if t is not HORIZON and t not in graph)
        self.explored += len(graph)
        return graph

    def _record(self, graph, alive):
        dead = [node for node in graph if node not in alive]
        for node in alive:
            self._status[node] = True
        # Dead nodes only reach dead nodes, so this part of the graph is acyclic.
        heights = {}
        for node in dead:
            if node in self._status:
                heights[node] = self._status[node]
        for node in dead:
            if node in heights:
                continue
            stack = [(node, False)]
            while stack:
                current, expanded = stack.pop()
                if current in heights:
                    continue
                if expanded:
                    heights[current] = 1 + max((heights[t] for t in graph[current]), default=-1)
                    continue
                stack.append((current, True))
                stack.extend((t, False) for t in graph[current] if t not in heights)
        for node in dead:
            self._status[node] = heights[node]

    def decide(self, j, words):
        words = [w if isinstance(w, Word) else Word(j, w) for w in words]
        if len(words) > 2**self.ifs.d:
            raise TupleArityError(f"{len(words)} words exceed the limit 2^d = {2 ** self.ifs.d}")
        if any(word.start != j for word in words):
            raise InvalidWordError(f"all words must start at level {j}")
        state = initial_state(self.ifs, words)
        if state is None:
            return Empty(0)
        k = words[0].end
        pos = self.ifs.position(k)
        if pos is None:
            return Unknown(persisted_to_depth=0)
        status = self.status(state.offsets, pos)
        if status is not True:
            return Empty(status + 1)
        if self.ifs.tail.kind == TAIL_TRUNCATE:
            return Unknown(persisted_to_depth=self.ifs.horizon - k + 1)
        return Nonempty(witness=self._lasso(state.offsets, pos))

    def _lasso(self, offsets, pos):
        # Follow the first surviving step until a node repeats.
        node = (offsets, pos)
        seen = {}
        labels = []
        while node not in seen:
            seen[node] = len(labels)
            for digits, target in self._successors(node):
                if self.survives(*target):
                    break
            else:
                raise AssertionError(f"surviving state {node} has no surviving successor")
            labels.append(digits)
            node = target
        start = seen[node]
        return tuple(
            DigitStream(prefix=[step[p] for step in labels[:start]], cycle=[step[p] for step in labels[start:]])
            for p in range(len(offsets))
        )


def prune(graph):
    """
    Greatest fixed point of "has a successor still alive".

    Returns the surviving nodes and the number alive after each round. Round
    t+1 deletes the nodes whose successors were all deleted by round t, so the
    counts never increase.
    """
    counts = {node: len(targets) for node, targets in graph.items()}
    predecessors = {}
    for node, targets in graph.items():
        for target in targets:
            if target is not HORIZON:
                predecessors.setdefault(target, []).append(node)
    alive = set(graph)
    rounds = [len(alive)]
    frontier = deque(node for node, count in counts.items() if count == 0)
    while frontier:
        next_frontier = deque()
        for node in frontier:
            alive.discard(node)
        for node in frontier:
            for pred in predecessors.get(node, ()):
                counts[pred] -= 1
                if counts[pred] == 0 and pred in alive:
                    next_frontier.append(pred)
        rounds.append(len(alive))
        frontier = next_frontier
    return alive, rounds


@lru_cache(maxsize=32)
def automaton_for(ifs):
    return OffsetAutomaton(ifs)


def decide_tuple_intersection(ifs, j, words):
    """
    Decide whether the limit pieces of `words` (all starting at level j) meet.
    """
    return automaton_for(ifs).decide(j, words)


def witness_points(ifs, words, verdict):
    """
    The exact common point named by each word's witness stream.
    """
    points = []
    for word, stream in zip(words, verdict.witness):
        digits = word.digits if isinstance(word, Word) else tuple(word)
        points.append(stream.prepend(digits).point(ifs.n))
    return points
