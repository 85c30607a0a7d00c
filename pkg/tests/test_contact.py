import unittest
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from fractal_nerves import catalog
from fractal_nerves.contact import (
    EMPTY,
    HORIZON,
    NONEMPTY,
    Empty,
    Nonempty,
    OffsetState,
    Unknown,
    automaton_for,
    canonical_offsets,
    decide_tuple_intersection,
    initial_state,
    prune,
    refinements,
    transitions,
    witness_points,
)
from fractal_nerves.errors import InvalidWordError, TupleArityError
from fractal_nerves.system import GridIFS, Tail, Word

from .utils import brute_force_alive, full_level, grid, grid_systems, word_tuples


class TestOffsets(unittest.TestCase):
    def test_state_is_relative(self):
        self.assertRaises(ValueError, OffsetState, [(1, 0), (0, 0)])
        self.assertEqual(OffsetState([[0, 0], [1, 0]]).offsets, ((0, 0), (1, 0)))

    def test_canonical_offsets(self):
        self.assertEqual(canonical_offsets(((0, 0), (1, 0))), canonical_offsets(((0, 0), (-1, 0))))
        self.assertEqual(canonical_offsets(((0, 0), (1, 0), (1, 0))), ((-1, 0), (0, 0)))
        self.assertNotEqual(canonical_offsets(((0, 0), (1, 0))), canonical_offsets(((0, 0), (0, 1))))

    def test_refinements(self):
        steps = list(refinements(((0,), (1,)), [(0,), (1,)], (2,)))
        self.assertEqual(steps, [(((1,), (0,)), ((0,), (1,)))])

    def test_refinements_none_when_faces_are_empty(self):
        self.assertEqual(list(refinements(((0,), (1,)), [(0,)], (2,))), [])

    def test_transitions(self):
        state = OffsetState(((0,), (1,)))
        self.assertEqual(transitions(state, {(0,), (1,)}, (2,)), {state})
        self.assertEqual(transitions(state, {(0,)}, (2,)), set())

    def test_initial_state(self):
        words = [Word(1, [(0, 0)]), Word(1, [(1, 1)])]
        self.assertEqual(initial_state(catalog.full_2x2(), words), OffsetState(((0, 0), (1, 1))))
        far = [Word(1, [(0, 0)]), Word(1, [(2, 0)])]
        self.assertIsNone(initial_state(catalog.cantor_dust(), far))
        self.assertRaises(InvalidWordError, initial_state, catalog.full_2x2(), [])


class TestPrune(unittest.TestCase):
    def test_rounds(self):
        graph = {"a": {"b"}, "b": {"a"}, "c": {"d"}, "d": set()}
        alive, rounds = prune(graph)
        self.assertEqual(alive, {"a", "b"})
        self.assertEqual(rounds, [4, 3, 2])

    def test_horizon_keeps_nodes_alive(self):
        alive, rounds = prune({"a": {HORIZON}, "b": {"a"}})
        self.assertEqual(alive, {"a", "b"})
        self.assertEqual(rounds, [2])

    def test_chain(self):
        graph = {i: {i + 1} for i in range(5)}
        graph[5] = set()
        alive, rounds = prune(graph)
        self.assertEqual(alive, set())
        self.assertEqual(rounds, [6, 5, 4, 3, 2, 1, 0])


class TestDecide(unittest.TestCase):
    def test_adjacent_full_cells(self):
        ifs = catalog.full_2x2()
        words = [((0, 0),), ((1, 0),)]
        verdict = decide_tuple_intersection(ifs, 1, words)
        self.assertEqual(verdict.kind, NONEMPTY)
        a, b = witness_points(ifs, words, verdict)
        self.assertEqual(a, b)
        self.assertEqual(a[0], Fraction(1, 2))

    def test_diagonal_contact(self):
        ifs = grid((2, 2), {(0, 0), (1, 1)}, period=1)
        words = [((0, 0),), ((1, 1),)]
        verdict = decide_tuple_intersection(ifs, 1, words)
        self.assertEqual(verdict.kind, NONEMPTY)
        self.assertEqual(witness_points(ifs, words, verdict), [(Fraction(1, 2), Fraction(1, 2))] * 2)

    def test_four_cells_meet_at_the_centre(self):
        ifs = catalog.full_2x2()
        words = [((0, 0),), ((0, 1),), ((1, 0),), ((1, 1),)]
        verdict = decide_tuple_intersection(ifs, 1, words)
        self.assertEqual(verdict.kind, NONEMPTY)
        self.assertEqual(set(witness_points(ifs, words, verdict)), {(Fraction(1, 2), Fraction(1, 2))})

    def test_far_apart(self):
        verdict = decide_tuple_intersection(catalog.cantor_dust(), 1, [((0, 0),), ((2, 0),)])
        self.assertEqual(verdict, Empty(0))

    def test_empty_after_one_step(self):
        # J lies in x <= 1/2, so the pieces at x = 0 and x = 1/3 never reach each other.
        ifs = grid((3, 3), {(0, 0), (1, 0)}, period=1)
        verdict = decide_tuple_intersection(ifs, 1, [((0, 0),), ((1, 0),)])
        self.assertEqual(verdict, Empty(1))

    def test_carpet_corner_contact(self):
        carpet = catalog.carpet()
        words = [((0, 0),), ((1, 0),), ((0, 1),)]
        verdict = decide_tuple_intersection(carpet, 1, words)
        self.assertEqual(verdict.kind, NONEMPTY)
        third = Fraction(1, 3)
        self.assertEqual(set(witness_points(carpet, words, verdict)), {(third, third)})

    def test_single_word(self):
        verdict = decide_tuple_intersection(catalog.carpet(), 2, [((1, 0), (2, 2))])
        self.assertEqual(verdict.kind, NONEMPTY)

    def test_arity(self):
        words = [((0, 0),)] * 5
        self.assertRaises(TupleArityError, decide_tuple_intersection, catalog.full_2x2(), 1, words)

    def test_mismatched_depths(self):
        ifs = catalog.full_2x2()
        self.assertRaises(
            InvalidWordError, automaton_for(ifs).decide, 1, [Word(1, [(0, 0)]), Word(1, [(0, 0), (0, 0)])]
        )

    def test_invalid_digit(self):
        ifs = catalog.cantor_dust()
        self.assertRaises(InvalidWordError, decide_tuple_intersection, ifs, 1, [((1, 1),), ((0, 0),)])

    def test_truncated_alive(self):
        ifs = GridIFS((2, 2), [full_level((2, 2))] * 3, Tail.truncate())
        verdict = decide_tuple_intersection(ifs, 1, [((0, 0),), ((1, 0),)])
        self.assertEqual(verdict, Unknown(persisted_to_depth=2))

    def test_truncated_dead(self):
        ifs = GridIFS((3, 3), [{(0, 0), (1, 0)}] * 3, Tail.truncate())
        verdict = decide_tuple_intersection(ifs, 1, [((0, 0),), ((1, 0),)])
        self.assertEqual(verdict, Empty(1))

    def test_beyond_horizon(self):
        ifs = GridIFS((2, 2), [full_level((2, 2))], Tail.truncate())
        verdict = decide_tuple_intersection(ifs, 1, [((0, 0),), ((1, 0),)])
        self.assertEqual(verdict, Unknown(persisted_to_depth=0))

    def test_cache_is_shared(self):
        ifs = catalog.no_corner_3x3()
        automaton = automaton_for(ifs)
        decide_tuple_intersection(ifs, 1, [((0, 1),), ((1, 1),)])
        explored = automaton.explored
        decide_tuple_intersection(ifs, 1, [((0, 1),), ((1, 1),)])
        self.assertEqual(automaton.explored, explored)

    def test_verdict_json(self):
        self.assertEqual(Empty(3).to_json(), {"kind": "empty", "depth": 3})
        self.assertEqual(Unknown(2).to_json(), {"kind": "unknown", "persisted_to_depth": 2})
        self.assertEqual(
            Nonempty(point=Fraction(2, 7), certificate="stable-cover").to_json(),
            {"kind": "nonempty", "certificate": "stable-cover", "point": "2/7"},
        )


class TestAgainstBruteForce(unittest.TestCase):
    DEPTH = 6

    @settings(max_examples=500, deadline=None)
    @given(st.data())
    def test_matches_brute_force(self, data):
        ifs = data.draw(grid_systems())
        j, digits = data.draw(word_tuples(ifs))
        words = [Word(j, w) for w in digits]
        verdict = decide_tuple_intersection(ifs, j, words)
        alive = brute_force_alive(ifs, words, self.DEPTH)
        if verdict.kind == NONEMPTY:
            self.assertTrue(alive)
            points = witness_points(ifs, words, verdict)
            self.assertEqual(len(set(points)), 1)
        else:
            self.assertEqual(verdict.kind, EMPTY)
            self.assertFalse(brute_force_alive(ifs, words, verdict.depth))
            if verdict.depth > 0:
                self.assertTrue(brute_force_alive(ifs, words, verdict.depth - 1))
            self.assertEqual(alive, verdict.depth > self.DEPTH)
