#!/usr/bin/env python

# Benchmarks for boundary matrices and Smith normal form.

# This should be run using pytest, see end of file

import os
import subprocess
import sys

from fractal_nerves import catalog
from fractal_nerves.homology import METHOD_SNF, betti, boundary_matrix
from fractal_nerves.linalg import smith_ranks
from fractal_nerves.nerve import build_nerve

this_file = os.path.abspath(__file__)
this_dir = os.path.dirname(this_file)


def test_carpet_snf(benchmark):
    nerve = build_nerve(catalog.carpet(), 1, 3)
    report = benchmark(betti, nerve, method=METHOD_SNF)
    assert report.betti[0] == 1


def test_graph_betti(benchmark):
    # Union-find path, for comparison with the SNF one above.
    nerve = build_nerve(catalog.carpet(), 1, 3, maxdim=1)
    report = benchmark(betti, nerve)
    assert report.betti[0] == 1


def test_full_square_boundary(benchmark):
    nerve = build_nerve(catalog.full_2x2(), 1, 3)
    matrix = boundary_matrix(nerve, 2).matrix
    result = benchmark(smith_ranks, matrix)
    assert result.torsion == ()


if __name__ == "__main__":
    # You can execute this file directly, and optionally add more py.test args
    # to the command line (e.g. -k for keyword matching certain tests).
    subprocess.check_call(["py.test", "--benchmark-warmup=on", "--benchmark-sort=name", this_file] + sys.argv[1:])
