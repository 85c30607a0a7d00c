import contextlib
import io
import json
import os
import tempfile
import unittest
from unittest import mock

from fractal_nerves.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, cli_main
from fractal_nerves.config import CELL_BUDGET_ENV
from fractal_nerves.resource import SystemResource

from .test_render import golden


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._directory = tempfile.TemporaryDirectory()
        self.out = self._directory.name
        self.addCleanup(self._directory.cleanup)

    def run_cli(self, *argv):
        stdout = io.StringIO()
        stderr = io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            code = cli_main(list(argv) + ["--out", self.out])
        return code, stdout.getvalue(), stderr.getvalue()

    def load(self, name):
        with open(os.path.join(self.out, name), encoding="utf-8") as f:
            return json.load(f)


class TestCommands(CliTestCase):
    def test_verify(self):
        code, stdout, _ = self.run_cli("verify")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("rank_recursion: ok", stdout)
        self.assertTrue(self.load("verify.json")["passed"])
        manifest = self.load("manifest.json")
        self.assertEqual(manifest["command"], "verify")
        self.assertEqual(manifest["outputs"], ["verify.json"])
        self.assertIn("numpy", manifest["versions"])

    def test_homology(self):
        code, stdout, _ = self.run_cli("homology", "--system", "two-generator", "--j", "1", "--k", "3")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("betti: 1 0", stdout)
        data = self.load("homology_1_3.json")
        self.assertEqual(data["betti"]["betti"], [1, 0])
        self.assertTrue(data["exact_sequence"]["ok"])
        self.assertNotIn("recursion", data)

    def test_homology_recursion(self):
        code, _, _ = self.run_cli("homology", "--system", "no-corner-2x2", "--j", "1", "--k", "4")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(self.load("homology_1_4.json")["recursion"]["holds"])

    def test_nerve(self):
        code, stdout, _ = self.run_cli("nerve", "--system", "full-2x2")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("simplices: [4, 6, 4, 1]", stdout)
        self.assertEqual(len(self.load("nerve_1_2.json")["vertices"]), 4)
        self.assertTrue(os.path.exists(os.path.join(self.out, "nerve_1_2.dot")))

    def test_components(self):
        code, stdout, _ = self.run_cli("components", "--system", "cantor-dust", "--k", "3", "--kmax", "3")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("components: 16", stdout)
        self.assertFalse(self.load("components_1_3.json")["connectivity"]["connected"])

    def test_gen(self):
        code, _, _ = self.run_cli("gen", "--n", "3,3", "--r", "2", "--kmax", "4", "--seed", "7")
        self.assertEqual(code, EXIT_OK)
        ifs = SystemResource.from_file(os.path.join(self.out, "system.json")).load()
        self.assertEqual(ifs.n, (3, 3))
        self.assertEqual(self.load("manifest.json")["seed"], 7)

    def test_system_file(self):
        self.run_cli("gen", "--seed", "2")
        path = os.path.join(self.out, "system.json")
        code, stdout, _ = self.run_cli("components", "--system", path)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("components: 1", stdout)

    def test_percolate(self):
        code, stdout, _ = self.run_cli("percolate", "--n", "2,2", "--r", "1", "--kmax", "3", "--trials", "2")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("connected: 1  mean betti1: 0", stdout)
        with open(os.path.join(self.out, "trials.csv"), encoding="utf-8") as f:
            self.assertEqual(len(f.read().splitlines()), 5)
        self.assertFalse(self.load("growth.json")["slope"])
        manifest = self.load("manifest.json")
        self.assertEqual(manifest["outputs"], ["growth.json", "summary.json", "trials.csv"])
        self.assertEqual(len(manifest["config_hash"]), 64)

    def test_percolate_line(self):
        code, _, stderr = self.run_cli("percolate", "--n", "3", "--r", "1", "--kmax", "3", "--trials", "2")
        self.assertEqual(code, EXIT_OK, stderr)
        with open(os.path.join(self.out, "trials.csv"), encoding="utf-8") as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], "trial,k,connected,components,betti1,cross_edges,cut_axis1,certificate")
        self.assertEqual(len(lines), 5)

    def test_render(self):
        code, _, _ = self.run_cli("render", "--system", "cantor-dust", "--m", "1", "--pixels", "9")
        self.assertEqual(code, EXIT_OK)
        with open(os.path.join(self.out, "render_1.ppm"), "rb") as f:
            self.assertEqual(f.read(), golden("cantor_dust_m1.ppm"))


class TestExitCodes(CliTestCase):
    def test_bad_arguments(self):
        code, _, stderr = self.run_cli("percolate", "--n", "2,x")
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn("--n expects comma separated integers", stderr)

    def test_missing_command(self):
        self.assertEqual(self.run_cli()[0], EXIT_CONFIG)

    def test_bad_config(self):
        code, _, stderr = self.run_cli("percolate", "--r", "9")
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn("config error", stderr)

    def test_unknown_system(self):
        self.assertEqual(self.run_cli("nerve", "--system", "menger")[0], EXIT_CONFIG)

    def test_budget(self):
        with mock.patch.dict(os.environ, {CELL_BUDGET_ENV: "10"}):
            code, _, stderr = self.run_cli("nerve", "--system", "full-2x2", "--k", "3")
        self.assertEqual(code, EXIT_BUDGET)
        self.assertIn("budget exceeded", stderr)

    def test_undecided_contacts(self):
        code, _, stderr = self.run_cli("percolate", "--tail", "truncate")
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn("verdict mode", stderr)
