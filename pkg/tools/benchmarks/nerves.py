#!/usr/bin/env python

# Benchmarks for building nerves and deciding contacts.

# This should be run using pytest, see end of file

import os
import subprocess
import sys

from fractal_nerves import catalog
from fractal_nerves.contact import NONEMPTY, OffsetAutomaton
from fractal_nerves.nerve import NerveTower, build_nerve, components

this_file = os.path.abspath(__file__)
this_dir = os.path.dirname(this_file)


def test_automaton_carpet(benchmark):
    # A fresh automaton each round, so nothing is served from the cache.
    ifs = catalog.carpet()
    words = [((0, 0), (2, 2)), ((1, 0), (0, 2)), ((0, 1), (2, 0))]
    verdict = benchmark(lambda: OffsetAutomaton(ifs).decide(1, words))
    assert verdict.kind == NONEMPTY


def test_carpet_graph(benchmark):
    nerve = benchmark(build_nerve, catalog.carpet(), 1, 3, maxdim=1)
    assert len(nerve.vertices) == 64


def test_carpet_triangles(benchmark):
    nerve = benchmark(build_nerve, catalog.carpet(), 1, 3, maxdim=2)
    assert nerve.count(2) > 0


def test_no_corner_components(benchmark):
    def f():
        tower = NerveTower(catalog.no_corner_3x3())
        return components(tower.nerve(1, 4)).count

    assert benchmark(f) == 1


if __name__ == "__main__":
    # You can execute this file directly, and optionally add more py.test args
    # to the command line (e.g. -k for keyword matching certain tests).
    subprocess.check_call(["py.test", "--benchmark-warmup=on", "--benchmark-sort=name", this_file] + sys.argv[1:])
