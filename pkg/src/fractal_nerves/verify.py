"""
Self-check suite run by ``fractal-nerves verify``.

Each check rebuilds something with a known answer from the bundled catalog
and compares. A check fails on a mismatch or on any NerveError raised on the
way; the suite itself never raises.
"""
import logging

import attr

from . import catalog
from .errors import NerveError
from .homology import betti, cross_edge_basis, exact_sequence_audit, rank_recursion_check
from .nerve import NerveTower, component_map
from .utils import format_word

logger = logging.getLogger(__name__)

# (j, k) -> (vertices, edges, betti) of the two-generator system.
TWO_GENERATOR_NERVES = {
    (1, 2): ({"a", "b"}, {("a", "b")}, (1, 0)),
    (1, 3): ({"aa", "ab", "ba", "bb"}, {("aa", "ba"), ("ab", "ba"), ("ab", "bb")}, (1, 0)),
    (2, 3): ({"a", "b"}, set(), (2, 0)),
    (2, 4): ({"aa", "ab", "ba", "bb"}, {("aa", "ab"), ("ba", "bb")}, (2, 0)),
}

RECURSION_INSTANCES = {
    "no-corner-2x2": 6,
    "no-corner-3x3": 4,
}


@attr.s(frozen=True)
class CheckResult:
    name = attr.ib()
    passed = attr.ib()
    detail = attr.ib(default="")


@attr.s(frozen=True)
class VerificationReport:
    results = attr.ib(converter=tuple)

    @property
    def passed(self):
        return all(result.passed for result in self.results)

    @property
    def failures(self):
        return [result for result in self.results if not result.passed]

    def to_json(self):
        return {"passed": self.passed, "results": [attr.asdict(result) for result in self.results]}


CHECKS = []


def check(func):
    CHECKS.append(func)
    return func


def _edge_labels(nerve):
    return {tuple(sorted((nerve.label(a), nerve.label(b)))) for a, b in nerve.edges}


@check
def two_generator_nerves():
    tower = NerveTower(catalog.two_generator())
    problems = []
    for (j, k), (vertices, edges, expected) in TWO_GENERATOR_NERVES.items():
        nerve = tower.nerve(j, k)
        got_vertices = {format_word(v) for v in nerve.vertices}
        if got_vertices != vertices:
            problems.append(f"N_{{{j},{k}}} vertices {sorted(got_vertices)}")
        if _edge_labels(nerve) != edges:
            problems.append(f"N_{{{j},{k}}} edges {sorted(_edge_labels(nerve))}")
        if nerve.dimension > 1:
            problems.append(f"N_{{{j},{k}}} has dimension {nerve.dimension}")
        got = betti(nerve, check=True).betti
        if tuple(got) != expected:
            problems.append(f"N_{{{j},{k}}} Betti {tuple(got)} != {expected}")
    return problems


@check
def two_by_two_cross_edges():
    ifs = catalog.no_corner_2x2()
    tower = NerveTower(ifs)
    problems = []
    for j in (1, 2, 3):
        for ell in range(j + 2, j + 6):
            count = len(cross_edge_basis(ifs, j, ell, tower))
            if count != 2:
                problems.append(f"j={j}, l={ell}: {count} cross edges")
    return problems


@check
def rank_recursion():
    problems = []
    for name, top in RECURSION_INSTANCES.items():
        ifs = catalog.load(name)
        tower = NerveTower(ifs)
        for j in range(1, top - 1):
            for ell in range(j + 2, top + 1):
                report = rank_recursion_check(ifs, j, ell, tower)
                if not report.hypothesis_holds or not report.holds:
                    problems.append(f"{name} j={j}, l={ell}: {report.lhs} != {report.rhs}")
    return problems


@check
def structural_invariants():
    problems = []
    for name in ("two-generator", "no-corner-2x2", "carpet"):
        tower = NerveTower(catalog.load(name))
        for k in (2, 3):
            phi = tower.phi(1, k)
            if not phi.is_simplex_surjective():
                problems.append(f"{name}: phi onto N_{{1,{k}}} is not surjective on simplices")
            if not component_map(phi).surjective:
                problems.append(f"{name}: component map onto N_{{1,{k}}} is not surjective")
        m, _ = tower.subcomplex_M(1, 2, 3)
        audit = exact_sequence_audit(tower.nerve(1, 3), m)
        if not audit.ok:
            problems.append(f"{name}: exact sequence sums {audit.six_term_sum}, {audit.full_sum}")
    return problems


def run_suite(checks=None):
    results = []
    for func in checks if checks is not None else CHECKS:
        try:
            problems = func()
        except NerveError as e:
            problems = [f"{type(e).__name__}: {e}"]
        passed = not problems
        logger.info("%s: %s", func.__name__, "ok" if passed else "FAILED")
        results.append(CheckResult(name=func.__name__, passed=passed, detail="; ".join(problems)))
    return VerificationReport(results)
