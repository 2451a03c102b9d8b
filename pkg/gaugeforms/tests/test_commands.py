import json
import os
import tempfile
from io import StringIO

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from gaugeforms.builtins import builtin
from gaugeforms.cli import EXIT_INVALID, EXIT_NOT_EQUIVALENT, EXIT_PARSE, run_lift
from gaugeforms.config import parse_config
from gaugeforms.exceptions import InvalidSymbol

PAULI = """
E1 = [["0", "1"], ["1", "0"]]
E2 = [["0", "-i"], ["i", "0"]]
"""

DOCUMENT = (
    "[manifold]\ndim = 3\ngrid = 8\n\n[symbol dirac]"
    + PAULI
    + 'E3 = [["1", "0"], ["0", "-1"]]\nF = [["0", "0"], ["0", "0"]]\n\n'
    + "[symbol traced]"
    + PAULI
    + 'E3 = [["2", "0"], ["0", "0"]]\nF = [["0", "0"], ["0", "0"]]\n\n'
    + "[symbol gauged]\n"
    + 'E1 = [["0", "exp(i*x3)"], ["exp(-i*x3)", "0"]]\n'
    + 'E2 = [["0", "-i*exp(i*x3)"], ["i*exp(-i*x3)", "0"]]\n'
    + 'E3 = [["1", "0"], ["0", "-1"]]\nF = [["-1", "0"], ["0", "0"]]\n\n'
    + '[gauge twist]\ngroup = u\nR = [["exp(-i*x3)", "0"], ["0", "1"]]\n\n'
    + '[volume phase]\nc = "exp(i*x3)"\n\n[volume one]\nc = "1"\n'
)

WEYL = (
    "[manifold]\ndim = 4\ngrid = 8\n\n[symbol weyl]"
    + PAULI
    + 'E3 = [["1", "0"], ["0", "-1"]]\nE4 = [["1", "0"], ["0", "1"]]\n'
    + 'F = [["0", "0"], ["0", "0"]]\n\n[symbol scaled]\n'
    + 'E1 = [["0", "2"], ["2", "0"]]\nE2 = [["0", "-2*i"], ["2*i", "0"]]\n'
    + 'E3 = [["2", "0"], ["0", "-2"]]\nE4 = [["2", "0"], ["0", "2"]]\n'
    + 'F = [["0", "0"], ["0", "0"]]\n'
)


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        self.directory = directory.name
        self.config = self.write("symbols.cfg", DOCUMENT)

    def write(self, name, text):
        path = os.path.join(self.directory, name)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        return path

    def run_command(self, *args):
        out = StringIO()
        call_command(*args, stdout=out)
        return out.getvalue()

    def run_json(self, *args):
        return json.loads(self.run_command(*args))

    def assertExitCode(self, code, *args):
        out = StringIO()
        with self.assertRaises(CommandError) as caught:
            call_command(*args, stdout=out)
        self.assertEqual(caught.exception.returncode, code)
        return out.getvalue()


# --------------------------
# analyze
# --------------------------
class AnalyzeCommandTests(CommandTestCase):
    def test_builtin_dirac(self):
        report = self.run_json("analyze", "--builtin", "dirac3", "--grid", "8")
        self.assertEqual(report["kind"], "analyze")
        self.assertEqual(report["grid"], 8)
        self.assertTrue(report["validation"]["valid"])
        self.assertEqual(report["signature"], "riemannian")
        self.assertEqual(report["charges"]["c_top"], 1)
        self.assertIsNone(report["charges"]["c_tem"])
        self.assertTrue(report["potentials"]["massless"])
        np.testing.assert_allclose(report["metric_at_origin"], np.eye(3), atol=1e-12)

    def test_builtin_twisted(self):
        report = self.run_json("analyze", "--builtin", "twisted3", "--grid", "8")
        self.assertFalse(report["potentials"]["massless"])
        np.testing.assert_allclose(report["potentials"]["electric_range"], [0.5, 0.5], atol=1e-12)

    def test_builtin_weyl(self):
        report = self.run_json("analyze", "--builtin", "weyl4", "--grid", "8")
        self.assertEqual(report["signature"], "lorentzian")
        self.assertEqual(report["charges"]["c_tem"], 1)
        np.testing.assert_allclose(report["time_field_at_origin"], [0, 0, 0, 2], atol=1e-12)

    def test_symbol_from_config(self):
        report = self.run_json("analyze", self.config, "--symbol", "dirac")
        self.assertEqual(report["symbol"], "dirac")
        self.assertTrue(report["validation"]["valid"])

    def test_unknown_builtin_lists_known_names(self):
        with self.assertRaises(CommandError) as caught:
            call_command("analyze", "--builtin", "dirac5", stdout=StringIO())
        self.assertIn("twisted3_k101", str(caught.exception))
        self.assertIn("weyl4_twisted", str(caught.exception))

    def test_invalid_symbol(self):
        self.assertExitCode(EXIT_INVALID, "analyze", self.config, "--symbol", "traced")

    def test_allow_invalid(self):
        report = self.run_json("analyze", self.config, "--symbol", "traced", "--allow-invalid")
        self.assertFalse(report["validation"]["valid"])
        self.assertAlmostEqual(report["validation"]["max_trace"], 2.0)
        self.assertTrue(report["errors"])
        self.assertTrue(report["errors"][0].startswith("DegenerateMetric"))

    def test_output_file(self):
        path = os.path.join(self.directory, "report.json")
        self.assertEqual(self.run_command("analyze", "--builtin", "dirac3", "--grid", "8",
                                          "--output", path), "")
        with open(path, encoding="utf-8") as handle:
            self.assertEqual(json.load(handle)["symbol"], "dirac3")

    def test_parse_errors(self):
        broken = self.write("broken.cfg", DOCUMENT.replace('"exp(i*x3)"]', '"exp(i*x3"]', 1))
        for args in (
            ("analyze", os.path.join(self.directory, "missing.cfg"), "--symbol", "dirac"),
            ("analyze", broken, "--symbol", "dirac"),
            ("analyze", self.config, "--symbol", "nobody"),
            ("analyze", "--builtin", "dirac5"),
            ("analyze", "--builtin", "dirac3", "--tol", "metric"),
            ("analyze", "--builtin", "dirac3", "--tol", "nonsense=1e-3"),
            ("analyze", self.config, "--builtin", "dirac3"),
        ):
            with self.subTest(args=args):
                self.assertExitCode(EXIT_PARSE, *args)


# --------------------------
# compare
# --------------------------
class CompareCommandTests(CommandTestCase):
    def test_equivalent_builtins(self):
        report = self.run_json(
            "compare", "dirac3", "twisted3", "--builtin", "--group", "u", "--grid", "16"
        )
        self.assertEqual(report["verdict"], "equivalent")
        self.assertEqual(report["monodromy"], [1, 1, -1])
        self.assertEqual(report["lattice"], "half_period")
        self.assertEqual(report["gauge"]["step"], 4)
        self.assertEqual(len(report["gauge"]["real"]), 64)

    def test_not_equivalent(self):
        output = self.assertExitCode(
            EXIT_NOT_EQUIVALENT,
            "compare", "dirac3", "twisted3", "--builtin", "--group", "su", "--grid", "16",
        )
        report = json.loads(output)
        self.assertEqual(report["verdict"], "not_equivalent")
        self.assertEqual(report["failed_stage"], "monodromy")
        self.assertIsNone(report["gauge"])

    def test_full_mode_lattice_flag(self):
        args = ("compare", "dirac3", "twisted3", "--builtin", "--group", "u", "--grid", "16",
                "--mode", "full", "--lattice", "strict")
        report = json.loads(self.assertExitCode(EXIT_NOT_EQUIVALENT, *args))
        self.assertEqual(report["failed_stage"], "potential_class")
        np.testing.assert_allclose(report["periods"], [0, 0, np.pi], atol=1e-8)

    def test_volume_forms(self):
        report = self.run_json(
            "compare", self.config, "dirac", "gauged", "--group", "u", "--mode", "full",
            "--grid", "16", "--volume-a", "phase", "--volume-b", "one",
        )
        self.assertEqual(report["group"], "su")
        self.assertEqual(report["verdict"], "equivalent")

    def test_gauged_symbol_in_unitary_group(self):
        report = self.run_json(
            "compare", self.config, "dirac", "gauged", "--group", "u", "--mode", "full",
            "--grid", "16",
        )
        self.assertEqual(report["verdict"], "equivalent")
        self.assertEqual(report["phase_winding"], [0, 0, 0])

    def test_usage_errors(self):
        for args in (
            ("compare", "dirac3", "--builtin", "--group", "u"),
            ("compare", self.config, "dirac", "gauged", "--group", "u", "--volume-a", "phase"),
            ("compare", "dirac3", "twisted3", "--builtin", "--group", "u", "--volume-a",
             "phase", "--volume-b", "one"),
            ("compare", self.config, "dirac", "nobody", "--group", "u"),
        ):
            with self.subTest(args=args):
                self.assertExitCode(EXIT_PARSE, *args)

    def test_invalid_input(self):
        self.assertExitCode(
            EXIT_INVALID, "compare", self.config, "dirac", "traced", "--group", "u"
        )
        self.assertExitCode(
            EXIT_INVALID, "compare", "dirac3", "twisted3", "--builtin", "--group", "gl",
            "--grid", "8",
        )


# --------------------------
# lift
# --------------------------
class LiftCommandTests(CommandTestCase):
    def test_builtins(self):
        report = self.run_json("lift", "dirac3", "twisted3", "--builtin", "--grid", "16")
        self.assertEqual(report["monodromy"], [1, 1, -1])
        self.assertEqual(report["samples"], [16, 16, 16])
        np.testing.assert_allclose(report["lambda_range"], [1, 1], atol=1e-12)

    def test_sample_count(self):
        report = self.run_json(
            "lift", "dirac3", "twisted3", "--builtin", "--grid", "8", "--samples", "32"
        )
        self.assertEqual(report["samples"], [32, 32, 32])

    def test_conformal_factor(self):
        config = self.write("weyl.cfg", WEYL)
        self.assertExitCode(EXIT_INVALID, "lift", config, "weyl", "scaled")
        report = self.run_json("lift", config, "weyl", "scaled", "--conformal")
        np.testing.assert_allclose(report["lambda_range"], [2 ** (-1 / 3)] * 2, atol=1e-12)
        self.assertEqual(report["monodromy"], [1, 1, 1, 1])

    def test_run_lift(self):
        weyl = builtin("weyl4", 8)
        with self.assertRaises(InvalidSymbol):
            run_lift(weyl, parse_config(WEYL).symbol("scaled"))
        self.assertEqual(run_lift(weyl, weyl)["monodromy"], [1, 1, 1, 1])


# --------------------------
# transform
# --------------------------
class TransformCommandTests(CommandTestCase):
    def test_twist(self):
        text = self.run_command("transform", self.config, "--symbol", "dirac", "--gauge", "twist")
        document = parse_config(text)
        S = document.symbol("dirac_twist")
        samples = S.sample()
        twisted = builtin("twisted3", 8).sample()
        np.testing.assert_allclose(samples.E, twisted.E, atol=1e-12)
        expected = np.broadcast_to(np.diag([-1.0, 0.0]), samples.F.shape)
        np.testing.assert_allclose(samples.F, expected, atol=1e-12)

    def test_output_file(self):
        path = os.path.join(self.directory, "out.cfg")
        self.run_command(
            "transform", self.config, "--symbol", "dirac", "--gauge", "twist", "--output", path
        )
        with open(path, encoding="utf-8") as handle:
            self.assertIn("[symbol dirac_twist]", handle.read())

    def test_unknown_gauge(self):
        self.assertExitCode(
            EXIT_PARSE, "transform", self.config, "--symbol", "dirac", "--gauge", "nobody"
        )
