import os
import sys
import tempfile
import unittest
from unittest.mock import patch

# Setup path
sys.path.append(".")

from src.tools.cache import CoefficientCache
from src.tools.eigenforms import generate_coefficients, get_form


class TestCoefficientCache(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.cache = CoefficientCache(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_file_format(self):
        table = generate_coefficients("delta", 5)
        path = self.cache.store(table)
        self.assertEqual(path.name, "delta_5.tsv")
        with open(path) as f:
            lines = f.read().splitlines()
        self.assertEqual(lines[0], "# form=delta weight=12 level=1 limit=5")
        self.assertEqual(lines[1:], ["1\t1", "2\t-24", "3\t252", "4\t-1472", "5\t4830"])

    def test_bit_exact_roundtrip(self):
        table = generate_coefficients("e26", 3000)
        self.cache.store(table)
        loaded = self.cache.load(get_form("e26"), 3000)
        self.assertEqual(loaded.coeffs.tolist(), table.coeffs.tolist())

    def test_truncates_larger_cache(self):
        table = generate_coefficients("n15", 400)
        self.cache.store(table)
        loaded = self.cache.load(get_form("n15"), 123)
        self.assertEqual(loaded.limit, 123)
        self.assertEqual(loaded.coeffs.tolist(), table.coeffs[:124].tolist())

    def test_never_extends_beyond_header(self):
        self.cache.store(generate_coefficients("n11", 100))
        self.assertIsNone(self.cache.load(get_form("n11"), 101))

    def test_header_mismatch_is_ignored(self):
        path = self.cache.store(generate_coefficients("n11", 50))
        with open(path) as f:
            text = f.read()
        with open(path, "w") as f:
            f.write(text.replace("level=11", "level=14"))
        with self.assertLogs("src.tools.cache", level="WARNING"):
            self.assertIsNone(self.cache.load(get_form("n11"), 50))

    def test_truncated_file_is_ignored(self):
        path = self.cache.store(generate_coefficients("n11", 50))
        with open(path) as f:
            lines = f.readlines()
        with open(path, "w") as f:
            f.writelines(lines[:-3])
        self.assertIsNone(self.cache.load(get_form("n11"), 50))

    def test_failed_write_leaves_no_temp_file(self):
        table = generate_coefficients("n11", 60)
        with patch("src.tools.cache.os.replace", side_effect=OSError("disk full")):
            with self.assertRaises(OSError):
                self.cache.store(table)
        self.assertEqual(os.listdir(self.tmp.name), [])

    def test_generation_fills_cache(self):
        generate_coefficients("n14", 80, cache_dir=self.tmp.name)
        self.assertTrue(os.path.exists(os.path.join(self.tmp.name, "n14_80.tsv")))


if __name__ == "__main__":
    unittest.main()
