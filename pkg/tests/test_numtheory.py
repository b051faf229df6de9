import math
import sys
import unittest
from unittest.mock import patch

import numpy as np
import sympy

# Setup path
sys.path.append(".")

from src import config
from src.errors import CapacityError, DomainError
from src.tools.numtheory import (
    Factorization, divisors, factorize, is_prime, moebius, moebius_table,
    prime_array, sieve_primes, sigma, sigma_table, smallest_prime_factors,
)


class TestSieve(unittest.TestCase):
    def test_small_examples(self):
        self.assertEqual(sieve_primes(10), [2, 3, 5, 7])
        self.assertEqual(sieve_primes(2), [2])
        self.assertEqual(len(sieve_primes(100)), 25)

    def test_below_two_is_empty(self):
        self.assertEqual(sieve_primes(1), [])
        self.assertEqual(sieve_primes(0), [])

    def test_matches_sympy(self):
        self.assertEqual(sieve_primes(100_000), list(sympy.primerange(2, 100_001)))

    def test_segment_size_does_not_matter(self):
        expected = prime_array(50_000, 1 << 16).tolist()
        for segment in (97, 1000, 4096):
            self.assertEqual(prime_array(50_000, segment).tolist(), expected)

    def test_result_is_read_only(self):
        primes = prime_array(1000)
        with self.assertRaises(ValueError):
            primes[0] = 4

    def test_ceiling(self):
        with patch.object(config, "SIEVE_CEILING", 1000):
            with self.assertRaises(CapacityError):
                sieve_primes(1001)


class TestFactorize(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(factorize(12).factors, ((2, 2), (3, 1)))
        self.assertEqual(factorize(1).factors, ())
        self.assertEqual(
            factorize(9699690).factors,
            ((2, 1), (3, 1), (5, 1), (7, 1), (11, 1), (13, 1), (17, 1), (19, 1)),
        )

    def test_zero_is_domain_error(self):
        with self.assertRaises(DomainError):
            factorize(0)
        with self.assertRaises(ValueError):
            moebius(0)

    def test_large_n_uses_trial_division(self):
        n = 997 * 99991
        self.assertEqual(factorize(n).factors, ((997, 1), (99991, 1)))

    def test_factorization_invariants(self):
        with self.assertRaises(DomainError):
            Factorization(12, ((3, 1), (2, 2)))
        with self.assertRaises(DomainError):
            Factorization(12, ((2, 1), (3, 1)))
        with self.assertRaises(DomainError):
            Factorization(4, ((4, 1),))
        with self.assertRaises(DomainError):
            Factorization(9 * 1_000_003, ((9, 1), (1_000_003, 1)))
        self.assertEqual(Factorization(12, ((2, 2), (3, 1))).n, 12)

    def test_is_prime(self):
        self.assertTrue(is_prime(2))
        self.assertFalse(is_prime(1))
        self.assertTrue(is_prime(999_983))
        self.assertFalse(is_prime(999_981))

    def test_spf_table_grows(self):
        spf = smallest_prime_factors(200_000)
        self.assertGreaterEqual(len(spf), 200_001)
        self.assertEqual(int(spf[199_999]), 199_999)
        self.assertEqual(int(spf[200_000]), 2)


class TestArithmeticFunctions(unittest.TestCase):
    def test_moebius_examples(self):
        self.assertEqual(moebius(1), 1)
        self.assertEqual(moebius(12), 0)
        self.assertEqual(moebius(30), -1)

    def test_divisors_examples(self):
        self.assertEqual(divisors(6), [1, 2, 3, 6])
        self.assertEqual(divisors(1), [1])
        self.assertEqual(divisors(28), [1, 2, 4, 7, 14, 28])

    def test_divisor_count_matches_factorization(self):
        for n in range(1, 2000):
            self.assertEqual(len(divisors(n)), factorize(n).num_divisors)

    def test_sigma_examples(self):
        self.assertEqual(sigma(3, 1), 1)
        self.assertEqual(sigma(3, 2), 9)
        self.assertEqual(sigma(5, 3), 244)

    def test_sigma_range(self):
        with self.assertRaises(DomainError):
            sigma(17, 2)

    def test_moebius_sum_identity(self):
        for n in range(1, 10_001):
            total = sum(moebius(d) for d in divisors(n))
            self.assertEqual(total, 1 if n == 1 else 0)

    def test_multiplicativity(self):
        for m in range(1, 120):
            for n in range(m + 1, 120):
                if math.gcd(m, n) == 1:
                    self.assertEqual(moebius(m * n), moebius(m) * moebius(n))
                    self.assertEqual(sigma(5, m * n), sigma(5, m) * sigma(5, n))

    def test_tables_match_pointwise(self):
        mu = moebius_table(3000)
        s3 = sigma_table(3, 3000)
        self.assertEqual(int(mu[0]), 0)
        for n in range(1, 3001):
            self.assertEqual(int(mu[n]), moebius(n))
            self.assertEqual(s3[n], sigma(3, n))

    def test_sigma_table_is_exact(self):
        s11 = sigma_table(11, 100)
        self.assertEqual(s11[97], 1 + 97**11)
        self.assertIsInstance(s11[97], int)
        self.assertEqual(s11.dtype, np.dtype(object))


if __name__ == "__main__":
    unittest.main()
