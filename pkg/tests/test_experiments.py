import json
import math
import os
import tempfile
import unittest
from fractions import Fraction
from unittest import mock

import attr

from fractal_nerves.config import TrialConfig
from fractal_nerves.errors import VerificationError
from fractal_nerves.experiments import (
    FIT_UNDEFINED,
    FIT_ZERO_RANK_EXCLUDED,
    QUANTITY_BETTI1,
    QUANTITY_RANK_DIFFERENCE,
    TrialRecord,
    TrialRow,
    connectivity_phase_table,
    csv_header,
    emit,
    growth_rate_fit,
    load_summary,
    records_to_csv,
    run_trial,
    run_trials,
    sample_system,
    summary,
)
from fractal_nerves.homology import betti, cross_edge_basis
from fractal_nerves.nerve import NerveTower
from fractal_nerves.system import TAIL_FULL, TAIL_PERIODIC, TAIL_TRUNCATE, corner_digit, cuts_every_axis, trial_rng

from .utils import slow


def row(k, betti0=1, betti1=0):
    return TrialRow(
        k=k,
        connected=betti0 == 1,
        components=betti0,
        betti0=betti0,
        betti1=betti1,
        cross_edges=0,
        cuts=(0, 0),
        certificate=Fraction(1, 2),
        widest_spans=(1, 1),
    )


def record(r, *rows):
    return TrialRecord(trial=0, seed=0, r=r, system={"n": [2, 2]}, rows=rows)


class TestSampling(unittest.TestCase):
    def test_periodic_block_misses_every_corner(self):
        config = TrialConfig(n=(3, 3), r=1, kmax=4)
        ifs = sample_system(config, trial_rng(0, 0))
        self.assertEqual(ifs.tail.kind, TAIL_PERIODIC)
        block = ifs.levels[ifs.horizon - ifs.tail.period :]
        for corner in [(0, 0), (0, 1), (1, 0), (1, 1)]:
            digit = corner_digit(ifs.n, corner)
            self.assertTrue(any(digit not in level for level in block))
        self.assertTrue(all(len(level) == 8 for level in ifs.levels))

    def test_other_tails(self):
        full = sample_system(TrialConfig(tail=TAIL_FULL, kmax=5), trial_rng(0, 0))
        self.assertEqual((full.horizon, full.tail.kind), (4, TAIL_FULL))
        truncated = sample_system(TrialConfig(tail=TAIL_TRUNCATE, verdict_mode="outer", kmax=5), trial_rng(0, 0))
        self.assertEqual((truncated.horizon, truncated.tail.kind), (4, TAIL_TRUNCATE))

    def test_block_cap(self):
        config = TrialConfig(n=(3, 3), r=1, kmax=2, max_tail_block=1)
        with self.assertLogs("fractal_nerves.experiments", level="WARNING"):
            ifs = sample_system(config, trial_rng(0, 0))
        self.assertEqual(ifs.tail.period, 1)

    def test_cuts_on_both_axes(self):
        # A column or a row of 2x2 goes with probability 1/3 each per level.
        config = TrialConfig(r=2, kmax=20)
        hits = sum(cuts_every_axis(sample_system(config, trial_rng(0, i)), upto=19) for i in range(100))
        self.assertGreaterEqual(hits, 99)


class TestTrials(unittest.TestCase):
    def test_one_deletion_on_two_by_two(self):
        records = run_trials(TrialConfig(n=(2, 2), r=1, kmax=5, trials=5, seed=3))
        self.assertEqual([rec.trial for rec in records], list(range(5)))
        for rec in records:
            self.assertEqual([row.k for row in rec.rows], [2, 3, 4, 5])
            self.assertTrue(all(row.connected for row in rec.rows))
            self.assertTrue(all(row.betti1 == 0 for row in rec.rows))
            self.assertTrue(rec.no_corner)
            self.assertTrue(rec.lower_bound_holds)
            self.assertFalse(rec.truncated)
            self.assertEqual(rec.row(3).cross_edges, 2)
            self.assertTrue(rec.bounds_hold)
            self.assertIsNone(rec.row(2).bound_triggered)
            for row in rec.rows[1:]:
                self.assertFalse(row.bound_triggered)
                self.assertTrue(row.triggered_bound_holds)
                self.assertTrue(row.upper_bound_holds)

    def test_line_trials(self):
        config = TrialConfig(d=1, n=(3,), r=1, kmax=4, trials=2)
        for rec in run_trials(config):
            self.assertEqual([row.k for row in rec.rows], [2, 3, 4])
            self.assertIsNone(rec.no_corner)
            self.assertEqual(rec.core_lines, (False,))
            for row in rec.rows:
                self.assertEqual(row.betti1, 0)
                # Every level of three with one deletion leaves a gap.
                self.assertEqual(row.cuts, (row.k - 1,))
                self.assertIsNone(row.upper_bound_holds)

    def test_two_deletions_skip_upper_bound(self):
        rec = run_trial(TrialConfig(n=(3, 3), r=2, kmax=4), 0)
        if rec.no_corner:
            self.assertIsNotNone(rec.row(3).triggered_bound_holds)
        self.assertTrue(rec.bounds_hold)
        self.assertTrue(all(row.upper_bound_holds is None for row in rec.rows))

    def test_check_homology(self):
        config = TrialConfig(n=(2, 2), r=1, kmax=4, check_homology=True)
        self.assertEqual(run_trial(config, 0), run_trial(attr.evolve(config, check_homology=False), 0))

    def test_component_count_mismatch(self):
        def shifted(nerve, check=False):
            report = betti(nerve, check=check)
            return attr.evolve(report, betti=(report.betti[0] + 1,) + report.betti[1:])

        with mock.patch("fractal_nerves.experiments.betti", shifted):
            self.assertRaises(VerificationError, run_trial, TrialConfig(n=(2, 2), r=1, kmax=3), 0)

    def test_three_dimensional_cube(self):
        records = run_trials(TrialConfig(d=3, n=(2, 2, 2), r=2, kmax=3, trials=3))
        for rec in records:
            self.assertEqual(len(rec.core_lines), 3)
            self.assertIsNone(rec.no_corner)
            self.assertTrue(all(row.connected for row in rec.rows))

    def test_deterministic(self):
        config = TrialConfig(n=(3, 3), r=2, kmax=3, trials=2, seed=11)
        self.assertEqual(run_trial(config, 1), run_trial(config, 1))
        self.assertNotEqual(run_trial(config, 0).system, run_trial(config, 1).system)

    def test_pool_matches_inline(self):
        config = TrialConfig(n=(2, 2), r=2, kmax=3, trials=3, seed=5)
        self.assertEqual(run_trials(config), run_trials(TrialConfig(**dict(config.to_json(), n=(2, 2), threads=2))))

    def test_budget_truncates(self):
        rec = run_trial(TrialConfig(n=(2, 2), r=1, kmax=6, cell_budget=10), 0)
        self.assertTrue(rec.truncated)
        self.assertEqual([row.k for row in rec.rows], [2, 3])

    def test_json_round_trip(self):
        rec = run_trial(TrialConfig(n=(3, 3), r=2, kmax=3), 0)
        self.assertEqual(TrialRecord.from_json(json.loads(json.dumps(rec.to_json()))), rec)


class TestGrowthFit(unittest.TestCase):
    def test_eight_fold_growth(self):
        records = run_trials(TrialConfig(n=(3, 3), r=1, kmax=6, trials=20, seed=0))
        fit = growth_rate_fit(records, (4, 6))
        self.assertEqual(fit.quantity, QUANTITY_BETTI1)
        self.assertTrue(fit.defined)
        self.assertGreaterEqual(fit.slope, math.log(8) - 0.25)
        self.assertLessEqual(fit.slope, math.log(8) + 0.10)
        self.assertTrue(all(rec.lower_bound_holds for rec in records if rec.no_corner))
        self.assertTrue(all(rec.bounds_hold for rec in records))
        triggered = [row for rec in records for row in rec.rows if row.bound_triggered]
        self.assertTrue(triggered)
        self.assertTrue(all(row.triggered_bound_holds for row in triggered))

    def test_no_loops_gives_no_fit(self):
        records = [record(1, row(2), row(3), row(4))]
        fit = growth_rate_fit(records, (2, 4))
        self.assertFalse(fit.defined)
        self.assertEqual(fit.flag, FIT_UNDEFINED)
        self.assertEqual(fit.excluded, 3)

    def test_exact_line(self):
        records = [record(1, *(row(k, betti1=2**k) for k in range(2, 6)))]
        fit = growth_rate_fit(records, (2, 5))
        self.assertAlmostEqual(fit.slope, math.log(2))
        self.assertAlmostEqual(fit.stderr, 0.0)
        self.assertIsNone(fit.flag)
        self.assertEqual(fit.to_json()["points"], 4)

    def test_rank_difference(self):
        records = [record(2, row(2, betti0=3), row(3, betti0=1, betti1=3), row(4, betti0=1, betti1=15))]
        fit = growth_rate_fit(records, (2, 4))
        self.assertEqual(fit.quantity, QUANTITY_RANK_DIFFERENCE)
        self.assertEqual(fit.flag, FIT_UNDEFINED)
        records.append(record(2, row(4, betti0=1, betti1=3)))
        fit = growth_rate_fit(records, (2, 4))
        self.assertEqual(fit.flag, FIT_ZERO_RANK_EXCLUDED)
        self.assertEqual(fit.points, 3)


class TestPhaseTable(unittest.TestCase):
    def test_connected_below_dimension(self):
        table = connectivity_phase_table(2, (2, 2), [1], trials=5, kmax=4, seed=1)
        self.assertEqual(table.row(1).connected_fraction, 1.0)
        self.assertEqual(table.to_json()["n"], [2, 2])

    def test_horizontal_components(self):
        # Two deletions never empty a column of three, so no cut normal to the x axis.
        table = connectivity_phase_table(2, (2, 3), [2], trials=10, kmax=4, seed=0)
        row = table.row(2)
        self.assertEqual(row.trials, 10)
        self.assertEqual(row.core_line_fractions[0], 1.0)
        self.assertEqual(row.mean_widest_spans[0], 1.0)
        self.assertEqual(row.all_axis_cut_fraction, 0.0)


class TestOutput(unittest.TestCase):
    def test_header(self):
        self.assertEqual(
            csv_header(3),
            ["trial", "k", "connected", "components", "betti1", "cross_edges", "cut_axis1", "cut_axis2", "cut_axis3"]
            + ["certificate"],
        )

    def test_empty(self):
        self.assertEqual(
            records_to_csv([], 2), "trial,k,connected,components,betti1,cross_edges,cut_axis1,cut_axis2,certificate\n"
        )

    def test_csv_rows(self):
        config = TrialConfig(n=(2, 2), r=1, kmax=4, trials=2)
        lines = records_to_csv(run_trials(config), 2).splitlines()
        self.assertEqual(len(lines), 7)
        self.assertTrue(lines[1].startswith("0,2,1,1,0,"))

    def test_summary(self):
        records = [record(1, row(2), row(3, betti0=2)), record(1, row(2))]
        data = summary(records)
        self.assertEqual(data["per_k"][0], {"k": 2, "connected": "1", "mean_components": "1", "mean_betti1": "0"})
        self.assertEqual(data["per_k"][1]["connected"], "0")
        self.assertIsNone(data["config"])

    def test_emit_and_load(self):
        config = TrialConfig(n=(2, 2), r=1, kmax=3, trials=2)
        records = run_trials(config)
        with tempfile.TemporaryDirectory() as out:
            csv_path, json_path = emit(records, os.path.join(out, "run"), config)
            self.assertEqual(os.path.basename(csv_path), "trials.csv")
            self.assertEqual(load_summary(json_path), records)
            with open(json_path, encoding="utf-8") as f:
                self.assertEqual(json.load(f)["config"]["kmax"], 3)


@slow
class TestFullRuns(unittest.TestCase):
    def test_one_deletion_on_two_by_two(self):
        config = TrialConfig(n=(2, 2), r=1, kmax=8, trials=100, seed=0, threads=4)
        records = run_trials(config)
        self.assertEqual(len(records), 100)
        for rec in records:
            self.assertTrue(rec.no_corner)
            self.assertFalse(rec.truncated)
            self.assertEqual([row.k for row in rec.rows], list(range(2, 9)))
            self.assertTrue(all(row.betti0 == 1 and row.betti1 == 0 for row in rec.rows))
            self.assertTrue(rec.bounds_hold)
            ifs = sample_system(config, trial_rng(config.seed, rec.trial))
            self.assertEqual(ifs.to_json(), rec.system)
            tower = NerveTower(ifs, maxdim=1)
            for j in range(1, 7):
                self.assertEqual(len(cross_edge_basis(ifs, j, j + 2, tower)), 2)

    def test_eight_fold_growth(self):
        records = run_trials(TrialConfig(n=(3, 3), r=1, kmax=7, trials=20, seed=0, threads=4))
        fit = growth_rate_fit(records, (5, 7))
        self.assertTrue(fit.defined)
        self.assertGreaterEqual(fit.slope, math.log(8) - 0.25)
        self.assertLessEqual(fit.slope, math.log(8) + 0.10)
        self.assertTrue(all(rec.bounds_hold for rec in records))
        triggered = [row for rec in records for row in rec.rows if row.bound_triggered]
        self.assertTrue(triggered)
        self.assertTrue(all(row.triggered_bound_holds for row in triggered))
        self.assertTrue(all(row.upper_bound_holds for rec in records for row in rec.rows if row.k >= 3))

    def test_connected_below_dimension(self):
        table = connectivity_phase_table(2, (2, 2), [1], trials=100, kmax=8, seed=1, threads=4)
        self.assertEqual(table.row(1).connected_fraction, 1.0)
        # Components only; the 2-skeleton of a cube nerve is too big for SNF at this depth.
        for r in (1, 2):
            config = TrialConfig(d=3, n=(2, 2, 2), r=r, kmax=6)
            for i in range(100):
                tower = NerveTower(sample_system(config, trial_rng(1, i)), maxdim=1)
                self.assertEqual(tower.components(1, 6).count, 1, (r, i))

    def test_certificates_decrease(self):
        # Two cells per level and contraction 1/2: a component at most doubles.
        records = run_trials(TrialConfig(n=(2, 2), r=2, kmax=12, trials=20, seed=0, threads=4))
        for rec in records:
            certificates = [row.certificate for row in rec.rows]
            self.assertTrue(all(b <= a for a, b in zip(certificates, certificates[1:])), rec.trial)
            self.assertTrue(rec.bounds_hold)
