import math
import sys
import unittest
from fractions import Fraction
from unittest.mock import patch

import numpy as np

# Setup path
sys.path.append(".")

from src.errors import DomainError, InsufficientDataError, UnsupportedFormError, UsageError
from src.tools.eigenforms import generate_coefficients
from src.tools.gmf import (
    ExponentTable, c_value, cprime, cprime_bound_violations, cprime_from_coefficients,
    cprime_identity_violations, cprime_table, exponents_from_coefficients, roundtrip_check, sign_consistency,
)
from src.tools.numtheory import divisors, moebius, moebius_table


class TestExponents(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tables = {f: generate_coefficients(f, 10_000) for f in ("n11", "n14", "n15")}
        cls.exps = {f: exponents_from_coefficients(t) for f, t in cls.tables.items()}

    def test_n11_examples(self):
        exp = self.exps["n11"]
        self.assertEqual(exp.m_value(1), -1)
        self.assertEqual(exp.m_value(2), 3)
        self.assertEqual(c_value(exp, 2), Fraction(3, 2))
        self.assertEqual(exp.m_value(4), -4)
        self.assertEqual(c_value(exp, 4), -1)

    def test_matches_direct_inversion(self):
        for form, exp in self.exps.items():
            table = self.tables[form]
            for n in list(range(1, 200)) + [997, 2310, 9240]:
                direct = -sum(moebius(n // d) * table.a(d) for d in divisors(n))
                self.assertEqual(exp.m_value(n), direct, (form, n))

    def test_m_of_prime(self):
        for form, exp in self.exps.items():
            for p in (2, 3, 5, 7, 11, 13, 9973):
                self.assertEqual(exp.m_value(p), 1 - self.tables[form].a(p))

    def test_roundtrip(self):
        for form, exp in self.exps.items():
            self.assertEqual(tuple(roundtrip_check(exp, self.tables[form])), (True, None), form)

    def test_roundtrip_detects_fault(self):
        exp = self.exps["n11"].with_exponent(2, 4)
        result = roundtrip_check(exp, self.tables["n11"])
        self.assertFalse(result.ok)
        self.assertEqual(result.first_failure, 2)

    def test_roundtrip_paths_agree(self):
        exp = self.exps["n14"]
        self.assertEqual(exp.m.dtype, np.int64)
        wide = exp.m.astype(object)
        wide.flags.writeable = False
        as_object = ExponentTable(exp.form, exp.limit, wide)
        self.assertEqual(as_object.m.dtype, np.dtype(object))
        self.assertEqual(tuple(roundtrip_check(as_object, self.tables["n14"])), (True, None))
        huge = exp.with_exponent(6, 2**70)
        self.assertEqual(huge.m.dtype, np.dtype(object))
        self.assertEqual(tuple(roundtrip_check(huge, self.tables["n14"])), (False, 6))

    def test_prime_exponents_are_checked(self):
        table = generate_coefficients("n11", 100)
        mu = moebius_table(100).copy()
        mu[2] = 0
        with patch("src.tools.gmf.moebius_table", return_value=mu):
            with self.assertRaises(UsageError):
                exponents_from_coefficients(table)

    def test_roundtrip_rejects_mismatch(self):
        with self.assertRaises(UsageError):
            roundtrip_check(self.exps["n11"], self.tables["n14"])
        short = generate_coefficients("n11", 100)
        with self.assertRaises(UsageError):
            roundtrip_check(self.exps["n11"], short)

    def test_rejects_level_one(self):
        with self.assertRaises(UnsupportedFormError):
            exponents_from_coefficients(generate_coefficients("delta", 50))


class TestCprime(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.table = generate_coefficients("n11", 20_000)
        cls.exp = exponents_from_coefficients(cls.table)

    def test_examples(self):
        v = cprime(self.exp, 2)
        self.assertAlmostEqual(v.value, 3 / math.sqrt(2), places=12)
        self.assertEqual(v.sign, 1)
        zero = cprime(self.exp, 5)
        self.assertEqual((zero.value, zero.sign), (0.0, 0))
        neg = cprime(self.exp, 13)
        self.assertAlmostEqual(neg.value, -0.8320503, places=7)
        self.assertEqual(neg.sign, -1)

    def test_errors(self):
        with self.assertRaises(DomainError):
            cprime(self.exp, 9)
        with self.assertRaises(InsufficientDataError):
            cprime(self.exp, 20_011)

    def test_bound_and_identity(self):
        self.assertEqual(cprime_bound_violations(self.exp), [])
        self.assertEqual(cprime_identity_violations(self.exp, self.table), [])
        self.assertEqual(sign_consistency(self.exp), [])

    def test_bound_detects_fault(self):
        bad = self.exp.with_exponent(3, 6)
        self.assertEqual(cprime_bound_violations(bad), [3])

    def test_table_paths_agree(self):
        p1, v1, s1 = cprime_table(self.exp, 5000)
        p2, v2, s2 = cprime_from_coefficients(self.table, 5000)
        self.assertEqual(p1.tolist(), p2.tolist())
        self.assertEqual(v1.tolist(), v2.tolist())
        self.assertEqual(s1.tolist(), s2.tolist())

    def test_ramified_value(self):
        v = cprime(self.exp, 11)
        self.assertIn(round(abs(v.value) * math.sqrt(11), 9), (0.0, 2.0))


if __name__ == "__main__":
    unittest.main()
