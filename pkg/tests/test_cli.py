import json
import os
import sys
import tempfile
import unittest
from unittest.mock import MagicMock, patch

import pandas as pd

# Setup path
sys.path.append(".")

from src import config
from src.main import decade_grid, main
from src.verify import CheckResult, VerifyReport


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = os.path.join(self.tmp.name, "out")
        self.cache = os.path.join(self.tmp.name, "cache")

    def tearDown(self):
        self.tmp.cleanup()

    def run_cli(self, *argv):
        return main([*argv, "--out", self.out, "--cache-dir", self.cache, "--log-level", "WARNING"])

    def read(self, name):
        with open(os.path.join(self.out, name), "rb") as f:
            return f.read()


class TestCoeffs(CliTestCase):
    def test_delta(self):
        self.assertEqual(self.run_cli("coeffs", "--form", "delta", "--limit", "5"), 0)
        self.assertEqual(self.read("coeffs_delta_5.csv").decode(),
                         "n,a_n\n1,1\n2,-24\n3,252\n4,-1472\n5,4830\n")
        self.assertTrue(os.path.exists(os.path.join(self.cache, "delta_5.tsv")))

    def test_warm_cache_is_byte_identical(self):
        self.run_cli("coeffs", "--form", "e22", "--limit", "300")
        cold = self.read("coeffs_e22_300.csv")
        with patch("src.tools.eigenforms.eta_quotient_expand") as expand:
            self.assertEqual(self.run_cli("coeffs", "--form", "e22", "--limit", "300"), 0)
            expand.assert_not_called()
        self.assertEqual(self.read("coeffs_e22_300.csv"), cold)

    def test_unknown_form(self):
        self.assertEqual(self.run_cli("coeffs", "--form", "unknown", "--limit", "5"), 2)

    def test_missing_limit(self):
        self.assertEqual(self.run_cli("coeffs", "--form", "delta"), 2)

    def test_capacity(self):
        with patch.object(config, "LEVEL1_CAPACITY", 1000):
            self.assertEqual(self.run_cli("coeffs", "--form", "delta", "--limit", "1001"), 3)

    def test_bad_flag_value(self):
        with self.assertRaises(SystemExit) as ctx:
            self.run_cli("coeffs", "--limit", "many")
        self.assertEqual(ctx.exception.code, 2)


class TestGmf(CliTestCase):
    def test_n11(self):
        self.assertEqual(self.run_cli("gmf", "--form", "n11", "--limit", "100"), 0)
        df = pd.read_csv(os.path.join(self.out, "gmf_n11_100.csv"))
        self.assertEqual(list(df.columns), ["n", "m_n", "c_n_float"])
        self.assertEqual(df.loc[1, "m_n"], 3)
        self.assertEqual(df.loc[1, "c_n_float"], 1.5)
        self.assertEqual(df.loc[3, "m_n"], -4)

    def test_level_one_rejected(self):
        self.assertEqual(self.run_cli("gmf", "--form", "delta", "--limit", "100"), 2)


class TestSignChanges(CliTestCase):
    def test_delta_windows(self):
        code = self.run_cli("signchanges", "--form", "delta", "--power", "2", "--x0", "16", "--windows", "8")
        self.assertEqual(code, 0)
        df = pd.read_csv(os.path.join(self.out, "signchanges_delta_j2_4096.csv"), keep_default_na=False)
        self.assertEqual(list(df.columns), ["x", "h", "count", "zeros_seen", "first_pair", "last_pair"])
        self.assertEqual(len(df), 8)
        self.assertTrue((df["count"] >= 1).all())
        self.assertEqual(df.loc[0, "x"], 16)
        first = df.loc[0, "first_pair"].split(":")
        self.assertTrue(16 < int(first[0]) < int(first[1]) <= 32)

    def test_cprime_windows(self):
        code = self.run_cli("signchanges", "--form", "n11", "--series", "cprime", "--x0", "8", "--windows", "10")
        self.assertEqual(code, 0)
        df = pd.read_csv(os.path.join(self.out, "signchanges_n11_8192.csv"))
        self.assertEqual(len(df), 10)

    def test_zero_windows(self):
        self.assertEqual(self.run_cli("signchanges", "--form", "delta", "--windows", "0"), 2)

    def test_beyond_capacity(self):
        with patch.object(config, "LEVEL1_CAPACITY", 2000):
            self.assertEqual(self.run_cli("signchanges", "--form", "delta", "--x0", "16", "--windows", "10"), 3)

    def test_threads_byte_identical(self):
        args = ("signchanges", "--form", "delta", "--power", "3", "--x0", "16", "--windows", "7", "--svg")
        self.run_cli(*args, "--threads", "1")
        csv1, svg1 = self.read("signchanges_delta_j3_2048.csv"), self.read("signchanges_delta_j3_2048.svg")
        self.run_cli(*args, "--threads", "8")
        self.assertEqual(self.read("signchanges_delta_j3_2048.csv"), csv1)
        self.assertEqual(self.read("signchanges_delta_j3_2048.svg"), svg1)
        self.assertIn(b"<svg", svg1)

    def test_json_format(self):
        self.run_cli("signchanges", "--form", "delta", "--x0", "16", "--windows", "2", "--format", "json")
        rows = json.loads(self.read("signchanges_delta_j2_64.json"))
        self.assertEqual([r["x"] for r in rows], [16, 32])

    def test_power_window_defaults_to_theorem_exponent(self):
        code = self.run_cli("signchanges", "--form", "delta", "--power", "2", "--x0", "64",
                            "--windows", "3", "--window-mode", "power")
        self.assertEqual(code, 0)
        files = [f for f in os.listdir(self.out) if f.startswith("signchanges_delta_j2_")]
        df = pd.read_csv(os.path.join(self.out, files[0]))
        self.assertAlmostEqual(df.loc[0, "h"], 64 ** (9 / 11), places=6)


class TestConfigFile(CliTestCase):
    def test_flags_override_file(self):
        path = os.path.join(self.tmp.name, "run.cfg")
        with open(path, "w") as f:
            f.write("form=n14\nlimit=20\nformat=json\n")
        self.assertEqual(self.run_cli("coeffs", "--config", path, "--limit", "10"), 0)
        rows = json.loads(self.read("coeffs_n14_10.json"))
        self.assertEqual(len(rows), 10)
        self.assertEqual(rows[0], {"n": 1, "a_n": 1})

    def test_unknown_key(self):
        path = os.path.join(self.tmp.name, "run.cfg")
        with open(path, "w") as f:
            f.write("colour=blue\n")
        self.assertEqual(self.run_cli("coeffs", "--config", path), 2)


class TestPrimeSumsAndFit(CliTestCase):
    def test_primesums_grid(self):
        self.assertEqual(decade_grid(1000), [10, 100, 1000])
        self.assertEqual(decade_grid(2500), [10, 100, 1000, 2500])
        self.assertEqual(self.run_cli("primesums", "--form", "n11", "--limit", "2500"), 0)
        df = pd.read_csv(os.path.join(self.out, "primesums_n11_2500.csv"))
        self.assertEqual(list(df.columns),
                         ["x", "S1", "S2", "C2", "S1_over_x", "S2_over_x", "C2_logx_over_x"])
        self.assertEqual(df["x"].tolist(), [10, 100, 1000, 2500])

    def test_fit_report(self):
        code = self.run_cli("fit", "--form", "delta", "--power", "2", "--x0", "16", "--windows", "8")
        self.assertEqual(code, 0)
        report = json.loads(self.read("fit_delta_j2_4096.json"))
        self.assertEqual(set(report), {"series", "points", "slope", "residual", "reference_exponent"})
        self.assertEqual(len(report["points"]), 8)
        self.assertAlmostEqual(report["reference_exponent"], 2 / 11)
        self.assertGreater(report["slope"], 2 / 11 - 0.05)


class TestVerify(CliTestCase):
    def test_exit_code_follows_report(self):
        failing = VerifyReport({"gmf": [CheckResult("roundtrip[n11]", False, "first failing n = 2")]})
        with patch("src.main.Verifier") as verifier:
            verifier.return_value = MagicMock(run=MagicMock(return_value=failing))
            self.assertEqual(self.run_cli("verify", "--suite", "gmf"), 1)
            verifier.return_value.run.assert_called_once_with(["gmf"])
        payload = json.loads(self.read("verify.json"))
        self.assertEqual(payload["fail_count"], 1)
        self.assertEqual(payload["suite"][0]["name"], "gmf.roundtrip[n11]")

    def test_suite_filter(self):
        self.assertEqual(self.run_cli("verify", "--suite", "numtheory"), 0)
        payload = json.loads(self.read("verify.json"))
        self.assertTrue(all(c["name"].startswith("numtheory.") for c in payload["suite"]))
        self.assertEqual(payload["fail_count"], 0)

    def test_unknown_suite(self):
        self.assertEqual(self.run_cli("verify", "--suite", "astrology"), 2)

    def test_corrupted_cache_is_reported(self):
        self.run_cli("coeffs", "--form", "delta", "--limit", "400")
        path = os.path.join(self.cache, "delta_400.tsv")
        with open(path) as f:
            text = f.read()
        with open(path, "w") as f:
            f.write(text.replace("\n6\t-6048\n", "\n6\t0\n"))
        self.assertEqual(self.run_cli("verify", "--suite", "eigenforms", "--limit", "400"), 1)
        payload = json.loads(self.read("verify.json"))
        failed = [c["name"] for c in payload["suite"] if not c["pass"]]
        self.assertIn("eigenforms.multiplicativity[delta]", failed)


if __name__ == "__main__":
    unittest.main()
